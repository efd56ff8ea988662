import numpy as np
import pytest

from wll.surface import (
    NonConformalError,
    SurfaceField,
    builtin,
    disk_grid,
    evaluate,
    example_map,
    fullness,
    inverse_stereo,
    isotropy_and_swillmore,
    jet_from_map,
    round_sphere,
    sampled_jet,
    willmore_energy,
    _uv,
)

GRID = disk_grid(1.5, 8)


@pytest.fixture(scope="module")
def example():
    return SurfaceField.from_map(example_map(np.exp(0.4j)), GRID)


def test_example_invariants(example):
    assert example.unit_norm.max() < 1e-12
    assert example.conformality.max() < 1e-12
    assert example.max_invariant_residual() < 1e-9


def test_example_predicates(example):
    assert example.willmore_residual().max() < 1e-6
    pred = isotropy_and_swillmore(example)
    assert pred["isotropic"] and not pred["is_swillmore"]
    assert np.median(pred["swillmore"]) > 0.1
    assert (example.b1_rank() == 2).all()
    assert example.frame_shape_residual().max() < 1e-8
    assert example.harmonicity_residual().max() < 1e-8
    for r in example.integrability_residuals().values():
        assert r.max() < 1e-8


def test_round_sphere_is_umbilic():
    f = jet_from_map(round_sphere(extra=2), GRID)
    assert np.abs(f.kappa.value).max() < 1e-12
    assert f.willmore_residual().max() < 1e-12
    assert isotropy_and_swillmore(f)["is_swillmore"]


def test_schwarzian_vanishes_in_stereographic_chart():
    # inverse stereographic projection is Moebius, so s = 0
    f = jet_from_map(round_sphere(), GRID)
    assert np.abs(f.s.value).max() < 1e-12


@pytest.mark.parametrize("name", ["minimal_graph", "clifford_torus"])
def test_willmore_controls(name):
    f = jet_from_map(builtin(name), GRID * 0.5)
    assert f.willmore_residual().max() < 1e-9
    assert f.harmonicity_residual().max() < 1e-9
    assert f.frame_condition_residual().max() < 1e-9


def test_minimal_graph_is_swillmore():
    f = jet_from_map(builtin("minimal_graph"), GRID)
    assert isotropy_and_swillmore(f)["is_swillmore"]


def test_cylinder_fires():
    f = jet_from_map(builtin("cylinder"), GRID * 0.5)
    assert f.willmore_residual().max() > 1e-3
    assert f.harmonicity_residual().max() > 1e-3
    # the algebraic frame condition holds for every conformal immersion
    assert f.frame_condition_residual().max() < 1e-9
    for r in f.integrability_residuals().values():
        assert r.max() < 1e-9


def test_misscaled_lift_breaks_gauss_equation():
    good = jet_from_map(builtin("cylinder"), GRID * 0.5)
    bad = jet_from_map(builtin("cylinder"), GRID * 0.5, lift_exponent=1.01)
    assert good.gauss_residual().max() < 1e-9
    assert bad.gauss_residual().max() > 1e-4


def test_perturbation_sensitivity():
    base = example_map()

    def wobble(z, zb):
        u, v = _uv(z, zb)
        y = base(z, zb)
        # push the surface off itself and renormalise onto the sphere
        y[3] = y[3] + 0.05 * u * u * v
        norm = sum(c * c for c in y) ** 0.5
        return [c / norm for c in y]

    # the perturbed map is not conformal; measure the raw Willmore vector anyway
    with pytest.raises(NonConformalError):
        jet_from_map(wobble, GRID)
    f = jet_from_map(wobble, GRID, conformal_tol=np.inf)
    assert f.willmore_residual().max() > 1e-4


def test_non_conformal_rejected():
    def stretched(z, zb):
        u, v = _uv(z, zb)
        return inverse_stereo([u, 2 * v])

    with pytest.raises(NonConformalError) as exc:
        jet_from_map(stretched, [0.3 + 0.1j])
    assert exc.value.residual > 0.1


def test_branch_point_quarantined():
    def branched(z, zb):
        u, v = _uv(z * z, zb * zb)
        return inverse_stereo([u, v])

    f = jet_from_map(branched, [0.0, 0.5 + 0.5j])
    assert f.n_points == 1 and f.quarantined.tolist() == [0.0]


@pytest.mark.parametrize("a, b", [(2.0, 0.0), (np.exp(0.7j) * 0.6, 0.3 - 0.2j)])
def test_predicates_are_chart_invariant(a, b):
    base = example_map(1j)
    z = GRID[::5]

    def moved(w, wb):
        return base(a * w + b, np.conj(a) * wb + np.conj(b))

    f0 = jet_from_map(base, z)
    f1 = jet_from_map(moved, (z - b) / a)
    assert np.allclose(f1.energy_density() / abs(a) ** 2, f0.energy_density(), rtol=1e-9)
    assert np.allclose(f1.swillmore_defect(), f0.swillmore_defect(), atol=1e-9)
    assert np.allclose(f1.isotropy_defect(), 0, atol=1e-9)
    # Gr is a chart-independent subspace
    g0, g1 = f0.gauss_map(), f1.gauss_map()
    I = np.diag([-1.0] + [1.0] * 7)
    for p, q in zip(g0, g1):
        proj = p @ np.linalg.inv(p.T @ I @ p) @ p.T @ I
        assert np.abs(proj @ q - q).max() < 1e-9


def test_energy_round_sphere_is_zero():
    rep = willmore_energy(round_sphere(), levels=2)
    assert abs(rep.value) < 1e-12


def test_energy_example():
    rep = willmore_energy(example_map(), levels=5)
    assert rep.value == pytest.approx(12 * np.pi, rel=1e-10)
    assert rep.errors[-1] < 1e-10
    assert min(rep.orders) > 2
    other = willmore_energy(example_map(), levels=4, scale=2.0)
    assert other.value == pytest.approx(rep.value, rel=1e-9)
    assert rep.to_json()["value"] == rep.value


def test_sampled_path_matches_exact():
    t = 0.3 + 0.02 * np.arange(-12, 13)
    zg = t[None, :] + 1j * t[:, None]
    yg = evaluate(example_map(), zg)
    jet, centres = sampled_jet(zg, yg, radius=5, order=9)
    f = SurfaceField.from_jet(jet, centres, conformal_tol=1e-6)
    exact = jet_from_map(example_map(), centres)
    assert f.max_invariant_residual() < 1e-6
    assert np.allclose(f.energy_density(), exact.energy_density(), rtol=1e-5)
    with pytest.raises(ValueError):
        sampled_jet(zg[:5, :5], yg[:5, :5])


def test_fullness_of_example():
    pts = evaluate(example_map(), disk_grid(1.5, 12))
    full = fullness(pts)
    assert full["dim"] == 7 and full["min_sv"] > 1e-2
    flat = evaluate(round_sphere(extra=4), disk_grid(1.5, 12))
    assert fullness(flat)["min_sv"] < 1e-12
