"""One test per acceptance criterion, at the contract tolerances.

Each test records a single PASS/FAIL line, repeated in the terminal
summary.  Criterion 3 is red against the reference span templates and
is marked as a strict expected failure; the corrected templates are
checked separately.
"""
import pytest

from wll import golden


def test_criterion_1_canonical_count(criterion):
    r = criterion(1, "canonical element count (m-1)^2, m=3..6", golden._timed("count", golden.check_canonical_count))
    assert r.passed and r.seconds < 10


def test_criterion_2_heights(criterion):
    r = criterion(2, "grading heights, m=4..6", golden._timed("heights", golden.check_heights))
    assert r.passed


@pytest.mark.xfail(strict=True, reason="reference D_3,4 / D'_3,4 templates do not span the odd part at m=5")
def test_criterion_3_nilpotent_spans(criterion):
    r = criterion(3, "nilpotent span templates, m=4,5", golden._timed("templates", golden.check_templates))
    assert r.passed


def test_criterion_3_corrected_templates():
    r = golden._timed("templates", lambda: golden.check_templates(corrected=True))
    print(r.line())
    assert r.passed


def test_criterion_4_potential_isotropy(criterion):
    r = criterion(4, "potential isotropy, builders, corruptions", golden._timed("potentials", golden.check_potentials))
    assert r.passed
    assert r.fields["corruptions_caught"] == r.fields["corruptions_total"]


def test_criterion_5_dpw_oracle(criterion):
    r = criterion(5, "DPW pipeline vs closed form, 20x20, three lambdas",
                  golden._timed("dpw", golden.check_dpw_example))
    assert r.passed
    assert min(r.fields["max_deviation"], r.fields["max_deviation_fitted"]) < 1e-8


def test_criterion_6_surface_predicates(criterion):
    r = criterion(6, "surface predicates on the example", golden._timed("surface", golden.check_surface_example))
    f = r.fields
    assert f["unit_norm"] <= 1e-12
    assert f["conformality"] <= 1e-9
    assert f["willmore"] <= 1e-6
    assert f["isotropy"] <= 1e-6
    assert f["swillmore_min"] >= 0.1
    assert f["frame_condition"] <= 1e-6
    assert f["rank2_fraction"] == 1.0
    assert f["fullness_min_sv"] > 1e-3
    assert r.passed


def test_criterion_7_structure_equations(criterion):
    r = criterion(7, "integrability identities and mis-scaled lift control",
                  golden._timed("structure", golden.check_structure_equations))
    assert all(v < 1e-6 for v in r.fields["max_residual"].values())
    assert r.fields["misscaled_gauss"] > 1e-3
    assert r.passed


def test_criterion_8_energy(criterion):
    r = criterion(8, "Willmore energy convergence and chart invariance", golden._timed("energy", golden.check_energy))
    f = r.fields
    assert abs(f["sphere"]) < 1e-10
    assert min(f["orders"]) >= 2
    assert r.passed


def test_criterion_9_loop_invariants(criterion):
    r = criterion(9, "twisting, group, reality, exact Maurer-Cartan",
                  golden._timed("loops", golden.check_loop_invariants))
    f = r.fields
    assert f["twist"] == 0.0 and f["group"] <= 1e-10 and f["reality"] <= 1e-10
    assert f["maurer_cartan_exact"]
    assert r.passed
