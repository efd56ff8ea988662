import copy

from wll.golden import compare, default_golden, golden_suite, run_checks, to_golden


def test_packaged_golden_loads():
    g = default_golden()
    assert g["fields"]["canonical_count.counts.6"]["value"] == 25


def test_compare_accepts_own_output():
    results = run_checks(["canonical_count", "energy"])
    assert compare(results, to_golden(results)) == []


def test_compare_flags_perturbed_value():
    results = run_checks(["canonical_count", "energy"])
    g = copy.deepcopy(to_golden(results))
    g["fields"]["canonical_count.counts.5"]["value"] = 15
    field = g["fields"]["energy.example"]
    field["value"] += 10 * field["tol"]
    diffs = compare(results, g)
    assert len(diffs) == 2
    assert any(d.startswith("energy.example:") for d in diffs)


def test_compare_flags_missing_field():
    results = run_checks(["canonical_count"])
    g = to_golden(results)
    g["fields"]["canonical_count.counts.7"] = {"value": 36}
    assert compare(results, g) == ["canonical_count.counts.7: missing from run"]


def test_suite_report_is_versioned(tmp_path):
    rep = golden_suite(tmp_path, names=["canonical_count"])
    assert rep.passed and rep.path.startswith(str(tmp_path / "v"))
