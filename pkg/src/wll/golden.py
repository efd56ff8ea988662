"""The end-to-end check suite and its golden-file regression layer."""
from __future__ import annotations

import json
import random
import time
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .canonical import brute_force_canonical, enumerate_canonical, match_template
from .dpw import (
    TAU_E2E,
    TAU_GRP,
    TAU_REAL,
    closed_form_example,
    fit_conjugation,
    integrate_potential,
    parse_grid,
    run_pipeline,
)
from .lie_algebra import grade, xi_hat
from .potentials import (
    IsotropyError,
    assemble,
    corrupt,
    example_potential,
    random_potential,
    s4_isotropic_builder,
    s4_minimal_builder,
    s5_builder,
    s6_case_builder,
)
from .rational import I_RF, ONE_RF, Z_RF, ZERO_RF
from .surface import (
    TAU_RES,
    TAU_SW,
    SurfaceField,
    example_map,
    fullness,
    minimal_graph,
    round_sphere,
    willmore_energy,
)

EXAMPLE_GRID = "polar:1.5:20:20"
EXAMPLE_LAMBDAS = (1.0, 1j, complex(np.exp(1j * np.pi / 3)))
HEIGHT_BOUNDS = {"A": (2, 2), "C": (5, 5), "C'": (5, 5), "E": (1, 2), "F": (3, 3), "F'": (3, 3),
                 "B": (1, 4), "D": (1, 8), "D'": (1, 8), "G": (1, 6), "G'": (1, 6)}


@dataclass
class CheckResult:
    name: str
    passed: bool
    fields: dict
    seconds: float = 0.0
    detail: str = ""

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _timed(name: str, fn: Callable[[], tuple[bool, dict, str]]) -> CheckResult:
    t = time.perf_counter()
    ok, fields, detail = fn()
    return CheckResult(name, bool(ok), fields, time.perf_counter() - t, detail)


# ----- individual checks -----------------------------------------------------

def check_canonical_count(ms=(3, 4, 5, 6)):
    counts, agree = {}, {}
    for m in ms:
        els = enumerate_canonical(m)
        counts[str(m)] = len(els)
        agree[str(m)] = {e.coeffs for e in els} == set(map(tuple, brute_force_canonical(m)))
    ok = all(counts[str(m)] == (m - 1) ** 2 for m in ms) and all(agree.values())
    return ok, {"counts": counts, "brute_force_agrees": agree}, f"counts {list(counts.values())}"


def check_heights(ms=(4, 5, 6)):
    heights, bad = {}, []
    for m in ms:
        for r in range(1, m + 1):
            h = grade(xi_hat(r, m)).height
            if h != 1:
                bad.append(f"xi_hat_{r} (m={m}) height {h}")
        for el in enumerate_canonical(m):
            h = el.height
            heights[f"{m}:{el.label}"] = h
            lo, hi = HEIGHT_BOUNDS[el.family_tag]
            if el.family_tag == "E" and m > 3:
                lo = 2
            if not lo <= h <= hi:
                bad.append(f"{el.label} (m={m}) height {h}")
    return not bad, {"heights": heights, "violations": bad}, "all within bounds" if not bad else "; ".join(bad)


def check_templates(ms=(4, 5), corrected=False):
    status, missing = {}, []
    for m in ms:
        for el in enumerate_canonical(m):
            t = match_template(el, corrected)
            status[f"{m}:{el.label}"] = t.status
            if not t.ok:
                missing.append(f"{el.label} (m={m})")
    detail = "all spans match" if not missing else "no match: " + ", ".join(missing)
    return not missing, {"status": status, "unmatched": missing}, detail


def _builders_ok() -> dict:
    z, i, one = Z_RF, I_RF, ONE_RF
    out = {}
    cases = {
        "s6_case1": lambda: s6_case_builder(1, h13t=z, h33t=z * z, h20=z * z, h30=one, h40=z),
        "s6_case2": lambda: s6_case_builder(2, h1=z, h2=one, h10=one, h30hat=z, h40hat=one),
        "s6_case3": lambda: s6_case_builder(3, h1=i / z, h2=ZERO_RF, h10=i * z, h30=ZERO_RF, h40=-z / 2),
        "s5": lambda: s5_builder(z, z * z, one + z, z * z * z),
        "s4_minimal": lambda: s4_minimal_builder(z, one, z * z, one),
        "s4_isotropic": lambda: s4_isotropic_builder(z, one, z * z),
    }
    for name, build in cases.items():
        try:
            build()
            out[name] = True
        except Exception as exc:  # noqa: BLE001 - reported, not swallowed
            out[name] = f"{type(exc).__name__}: {exc}"
    return out


def check_potentials(ms=(3, 4, 5), per_type=100, seed=20240611):
    rng = random.Random(seed)
    accepted, total = 0, 0
    per = {}
    for m in ms:
        for t in range(1, m):
            n = 0
            for _ in range(per_type):
                total += 1
                try:
                    random_potential(m, t, rng)
                    n += 1
                except IsotropyError:
                    pass
            per[f"{m}:{t}"] = n
            accepted += n
    builders = _builders_ok()
    # corruption: every pair of the example, every function, must be caught
    p = example_potential()
    caught, flagged = 0, []
    for k, pair in enumerate(p.pairs):
        for name in pair.functions:
            try:
                assemble(corrupt(p, k, name, 1), p.m)
                flagged.append(f"pair {k + 3} {name}: accepted")
            except IsotropyError as exc:
                caught += 1
                if k + 3 not in exc.pairs:
                    flagged.append(f"pair {k + 3} {name}: blamed {exc.pairs}")
    n_corrupt = sum(len(q.functions) for q in p.pairs)
    ok = accepted == total and all(v is True for v in builders.values()) and caught == n_corrupt and not flagged
    fields = {"random_accepted": per, "builders": builders, "corruptions_caught": caught,
              "corruptions_total": n_corrupt, "misattributed": flagged}
    return ok, fields, f"{accepted}/{total} random, {caught}/{n_corrupt} corruptions caught"


_PIPELINE_CACHE: dict = {}


def example_pipeline():
    if "example" not in _PIPELINE_CACHE:
        grid = parse_grid(EXAMPLE_GRID)
        t = time.perf_counter()
        res = run_pipeline(example_potential(), grid, EXAMPLE_LAMBDAS)
        _PIPELINE_CACHE["example"] = (res, time.perf_counter() - t)
    return _PIPELINE_CACHE["example"]


def check_dpw_example():
    res, secs = example_pipeline()
    zs, pts = res.samples()
    direct = 0.0
    fitted = 0.0
    for k, lam in enumerate(res.lambdas):
        ref = closed_form_example(zs, lam)
        direct = max(direct, float(np.abs(pts[:, k] - ref).max()))
        _, dev = fit_conjugation(pts[:, k], ref)
        fitted = max(fitted, dev)
    n_q = len(res.quarantine)
    ok = min(direct, fitted) < TAU_E2E and n_q == 0 and secs < 300
    fields = {"max_deviation": direct, "max_deviation_fitted": fitted, "points": len(zs),
              "quarantined": n_q, "grid": EXAMPLE_GRID}
    return ok, fields, f"deviation {direct:.1e} (fit {fitted:.1e}) over {len(zs)} points, {secs:.0f}s"


def check_surface_example():
    grid = parse_grid(EXAMPLE_GRID)
    f = SurfaceField.from_map(example_map(1.0), grid)
    full = min(
        fullness(SurfaceField.from_map(example_map(lam), grid, order=1).y.value.real)["min_sv"]
        for lam in EXAMPLE_LAMBDAS
    )
    fields = {
        "unit_norm": float(f.unit_norm.max()),
        "conformality": float(f.conformality.max()),
        "invariants": f.max_invariant_residual(),
        "willmore": float(f.willmore_residual().max()),
        "isotropy": float(f.isotropy_defect().max()),
        "swillmore_min": float(f.swillmore_defect().min()),
        "frame_condition": float(f.frame_condition_residual().max()),
        "frame_shape": float(f.frame_shape_residual().max()),
        "harmonicity": float(f.harmonicity_residual().max()),
        "rank2_fraction": float(np.mean(f.b1_rank() == 2)),
        "fullness_min_sv": full,
    }
    ok = (
        fields["unit_norm"] <= 1e-12
        and fields["conformality"] <= 1e-9
        and fields["willmore"] <= TAU_RES
        and fields["isotropy"] <= TAU_RES
        and fields["swillmore_min"] >= TAU_SW
        and fields["frame_condition"] <= TAU_RES
        and fields["rank2_fraction"] == 1.0
        and fields["fullness_min_sv"] > 1e-3
    )
    detail = (f"willmore {fields['willmore']:.1e}, isotropy {fields['isotropy']:.1e}, "
              f"S-Willmore min {fields['swillmore_min']:.2f}, fullness {fields['fullness_min_sv']:.1e}")
    return ok, fields, detail


def check_structure_equations():
    grid = parse_grid("polar:1.5:8:12")
    surfaces = {"example": example_map(1.0), "round_sphere": round_sphere(1), "minimal_graph": minimal_graph()}
    worst = {}
    for name, fmap in surfaces.items():
        f = SurfaceField.from_map(fmap, grid)
        worst[name] = max(float(v.max()) for v in f.integrability_residuals().values())
    bad = SurfaceField.from_map(example_map(1.0), grid, lift_exponent=1.01)
    fired = float(bad.gauss_residual().max())
    ok = all(v < TAU_RES for v in worst.values()) and fired > 1e3 * TAU_RES
    return ok, {"max_residual": worst, "misscaled_gauss": fired}, f"max {max(worst.values()):.1e}, mis-scaled lift {fired:.1e}"


def check_energy():
    sphere = willmore_energy(round_sphere(1), levels=2)
    ex1 = willmore_energy(example_map(1.0), nr=4, nt=8, levels=4)
    ex2 = willmore_energy(example_map(1.0), nr=4, nt=8, levels=4, scale=2.0)
    order = min(ex1.orders)
    drift = abs(ex1.value - ex2.value)
    quad_err = max(ex1.error_estimate, ex2.error_estimate, 1e-12)
    ok = abs(sphere.value) < 1e-10 and order >= 2 and drift <= 10 * quad_err
    fields = {"sphere": sphere.value, "example": ex1.value, "example_scaled": ex2.value,
              "orders": ex1.orders, "errors": ex1.errors, "rescale_drift": drift}
    return ok, fields, f"W(sphere) {sphere.value:.1e}, W(example) {ex1.value:.10f}, order >= {order:.1f}, drift {drift:.1e}"


def check_loop_invariants():
    res, _ = example_pipeline()
    r = res.max_residuals()
    fm = integrate_potential(example_potential())
    mc = fm.maurer_cartan_residual_exact()
    ident = fm.initial_is_identity()
    ok = r["twist"] == 0.0 and r["group"] <= TAU_GRP and r["reality"] <= TAU_REAL and mc and ident
    fields = {"twist": r["twist"], "group": r["group"], "reality": r["reality"],
              "maurer_cartan_exact": mc, "initial_identity": ident}
    return ok, fields, f"twist {r['twist']:.0e}, group {r['group']:.1e}, reality {r['reality']:.1e}, MC exact {mc}"


CHECKS: dict[str, Callable] = {
    "canonical_count": check_canonical_count,
    "heights": check_heights,
    "templates": check_templates,
    "templates_corrected": lambda: check_templates(corrected=True),
    "potentials": check_potentials,
    "dpw_example": check_dpw_example,
    "surface_example": check_surface_example,
    "structure_equations": check_structure_equations,
    "energy": check_energy,
    "loop_invariants": check_loop_invariants,
}


def run_checks(names=None) -> list[CheckResult]:
    names = list(CHECKS) if names is None else list(names)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise KeyError(f"unknown checks {unknown}; have {list(CHECKS)}")
    return [_timed(n, CHECKS[n]) for n in names]


# ----- golden comparison ------------------------------------------------------

def _tol(value) -> float:
    return max(1e-6 * abs(value), 1e-8)


def flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}.{k}" if prefix else str(k)
        if isinstance(v, dict):
            out.update(flatten(v, key))
        else:
            out[key] = v
    return out


def to_golden(results: list[CheckResult]) -> dict:
    fields = {}
    for r in results:
        fields[f"{r.name}.passed"] = {"value": r.passed}
        for k, v in flatten(r.fields, r.name).items():
            entry = {"value": v}
            if isinstance(v, float):
                entry["tol"] = _tol(v)
            elif isinstance(v, list) and v and all(isinstance(x, float) for x in v):
                continue  # convergence histories are reported, not pinned
            fields[k] = entry
    return {"version": __version__, "fields": fields}


def compare(results: list[CheckResult], golden: dict) -> list[str]:
    """Human-readable differences between a run and a golden file."""
    new = to_golden(results)["fields"]
    names = {r.name for r in results}
    diffs = []
    for key, ref in golden.get("fields", {}).items():
        if key.split(".")[0] not in names:
            continue
        if key not in new:
            diffs.append(f"{key}: missing from run")
            continue
        a, b = new[key]["value"], ref["value"]
        if "tol" in ref and isinstance(a, (int, float)) and not isinstance(a, bool):
            if not abs(a - b) <= ref["tol"]:
                diffs.append(f"{key}: {a!r} vs golden {b!r} (tol {ref['tol']:.1e})")
        elif a != b:
            diffs.append(f"{key}: {a!r} vs golden {b!r}")
    return diffs


def default_golden() -> dict:
    return json.loads(resources.files("wll").joinpath("golden/suite.json").read_text())


@dataclass
class SuiteReport:
    results: list
    diffs: list = field(default_factory=list)
    path: str = ""

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results) and not self.diffs

    def to_json(self) -> dict:
        return {
            "version": __version__,
            "passed": self.passed,
            "checks": [asdict(r) for r in self.results],
            "golden_diffs": self.diffs,
        }


def golden_suite(out_dir: str | Path | None = None, golden: dict | None = None, names=None) -> SuiteReport:
    results = run_checks(names)
    golden = default_golden() if golden is None else golden
    rep = SuiteReport(results, compare(results, golden))
    if out_dir is not None:
        d = Path(out_dir) / f"v{__version__}"
        d.mkdir(parents=True, exist_ok=True)
        p = d / "suite_report.json"
        p.write_text(json.dumps(rep.to_json(), indent=2, default=_json_default))
        rep.path = str(p)
    return rep


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not serializable: {type(o)}")
