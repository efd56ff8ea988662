"""Command line entry point: ``wll <subcommand> ...``.

Exit codes: 0 when every check passes, 1 when a check fails, 2 for usage
errors and unreadable input.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__

log = logging.getLogger("wll")

OK, FAILED, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _dump(obj) -> str:
    from .golden import _json_default

    return json.dumps(obj, indent=2, default=_json_default)


def _emit(args, payload: dict, text: str):
    print(_dump(payload) if args.json else text)


def _verdict(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


# ----- classify ----------------------------------------------------------------

def cmd_classify(args) -> int:
    from .canonical import enumerate_canonical

    if args.m < 3:
        raise UsageError("--m must be at least 3")
    rows = []
    for el in enumerate_canonical(args.m):
        g = el.grading
        rows.append({
            "label": el.label,
            "family": el.family_tag,
            "coefficients": list(el.coeffs),
            "height": g.height,
            "odd_dimension": len(g.odd_positive_part()),
            "grade_dimensions": {str(k): v for k, v in g.dimensions().items()},
        })
    if args.json or args.format == "json":
        print(_dump({"m": args.m, "count": len(rows), "elements": rows}))
        return OK
    width = max(len(r["label"]) for r in rows)
    print(f"{'label':<{width}}  {'coefficients':<{3 * args.m + 2}}  r  odd  grades(j>0)")
    for r in rows:
        pos = " ".join(f"{k}:{v}" for k, v in r["grade_dimensions"].items() if int(k) > 0)
        coeffs = "(" + ",".join(map(str, r["coefficients"])) + ")"
        print(f"{r['label']:<{width}}  {coeffs:<{3 * args.m + 2}}  {r['height']}  {r['odd_dimension']:>3}  {pos}")
    print(f"{len(rows)} canonical elements for m={args.m}")
    return OK


# ----- potential ----------------------------------------------------------------

def _load_potential(src: str):
    from .potentials import PotentialError, build_named, potential_from_json

    if src.startswith("builtin:"):
        name = src.split(":", 1)[1]
        try:
            return build_named({"builder": name})
        except PotentialError as exc:
            raise UsageError(str(exc)) from exc
    try:
        data = json.loads(Path(src).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read potential {src}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"{src}: expected a JSON object")
    return potential_from_json(data)


def cmd_potential(args) -> int:
    from .potentials import IsotropyError, PotentialError

    try:
        p = _load_potential(args.file)
    except IsotropyError as exc:
        payload = {"valid": False, "columns": exc.columns, "pairs": exc.pairs, "error": str(exc)}
        _emit(args, payload, f"FAIL {exc}")
        return FAILED
    except PotentialError as exc:
        raise UsageError(str(exc)) from exc
    info = p.describe()
    if args.action == "validate":
        _emit(args, {"valid": True, **info}, f"PASS m={p.m}: B1^t I13 B1 = 0 exactly ({len(p.pairs)} pairs)")
    elif args.action == "rank":
        _emit(args, {"rank": info["rank"]}, str(info["rank"]))
    else:
        text = (f"m={p.m} type={info['type']} kinds={','.join(info['kinds'])} rank={info['rank']} "
                f"{'S-Willmore' if info['s_willmore'] else 'not S-Willmore'}")
        _emit(args, info, text)
    return OK


# ----- dpw ----------------------------------------------------------------------

def cmd_dpw(args) -> int:
    from .dpw import TAU_E2E, closed_form_example, fit_conjugation, parse_grid, parse_lambdas, run_pipeline

    grid = parse_grid(args.grid)
    lams = parse_lambdas(args.lambdas)
    if args.action == "verify-example":
        from .potentials import example_potential

        res = run_pipeline(example_potential(), grid, lams)
        zs, pts = res.samples()
        direct = fitted = 0.0
        for k, lam in enumerate(res.lambdas):
            ref = closed_form_example(zs, lam)
            direct = max(direct, float(np.abs(pts[:, k] - ref).max()))
            fitted = max(fitted, fit_conjugation(pts[:, k], ref)[1])
        dev = min(direct, fitted)
        ok = dev < TAU_E2E and not res.quarantine
        payload = {"max_deviation": direct, "max_deviation_fitted": fitted, "tolerance": TAU_E2E,
                   "points": len(zs), "quarantined": len(res.quarantine), "grid": args.grid,
                   "lambdas": [[l.real, l.imag] for l in res.lambdas], "residuals": res.max_residuals(),
                   "passed": ok}
        _emit(args, payload, f"{_verdict(ok)} max deviation {direct:.3e} (after fit {fitted:.3e}, tol {TAU_E2E:.0e}) "
                             f"over {len(zs)} points x {len(lams)} lambdas")
        return OK if ok else FAILED
    p = _load_potential(args.potential)
    res = run_pipeline(p, grid, lams)
    rows = 0
    with (open(args.out, "w", newline="") if args.out else _stdout()) as fh:
        w = csv.writer(fh)
        dim = 2 * p.m - 1
        w.writerow(["re_z", "im_z", "lambda_index"] + [f"x{k}" for k in range(dim)] + ["reality", "group", "light"])
        for r in res.good:
            for k in range(len(lams)):
                w.writerow([r.z.real, r.z.imag, k] + [repr(float(v)) for v in r.points[k]]
                           + [r.reality, r.group, r.light])
                rows += 1
    summary = {"rows": rows, "quarantined": [[z.real, z.imag, e] for z, e in res.quarantine],
               "residuals": res.max_residuals(), "out": args.out}
    if args.out:
        _emit(args, summary, f"wrote {rows} rows to {args.out}; {len(res.quarantine)} points quarantined")
    return OK if not res.quarantine else FAILED


class _stdout:
    def __enter__(self):
        return sys.stdout

    def __exit__(self, *exc):
        return False


# ----- surface ------------------------------------------------------------------

TAU_SAMPLED_HIGH = 1e-3
SURFACE_CHECKS = ("conformal", "willmore", "isotropy", "swillmore", "energy", "structure", "frame", "fullness")


def _read_samples(path: str, lam_index: int):
    """CSV samples on a uniform rectangular grid -> (z grid, y grid)."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    if not rows or "re_z" not in rows[0]:
        raise UsageError(f"{path}: expected columns re_z, im_z, x0, x1, ...")
    if "lambda_index" in rows[0]:
        rows = [r for r in rows if int(r["lambda_index"]) == lam_index]
    xs = sorted({float(r["re_z"]) for r in rows})
    ys = sorted({float(r["im_z"]) for r in rows})
    comps = sorted((k for k in rows[0] if k.startswith("x") and k[1:].isdigit()), key=lambda k: int(k[1:]))
    if len(xs) * len(ys) != len(rows):
        raise UsageError("samples must fill a rectangular grid (use dpw run --grid rect:...)")
    hx, hy = np.diff(xs), np.diff(ys)
    if len(hx) == 0 or len(hy) == 0 or np.ptp(hx) > 1e-9 * hx[0] or abs(hx[0] - hy[0]) > 1e-9 * hx[0]:
        raise UsageError("samples must lie on a square grid with equal spacing in re and im")
    ix = {x: k for k, x in enumerate(xs)}
    iy = {y: k for k, y in enumerate(ys)}
    Z = np.array(xs)[None, :] + 1j * np.array(ys)[:, None]
    Y = np.zeros(Z.shape + (len(comps),))
    for r in rows:
        Y[iy[float(r["im_z"])], ix[float(r["re_z"])]] = [float(r[c]) for c in comps]
    return Z, Y


def cmd_surface(args) -> int:
    from .dpw import parse_grid, parse_lambdas
    from .surface import (
        TAU_RES,
        TAU_SW,
        NonConformalError,
        SurfaceField,
        builtin,
        fullness,
        sampled_jet,
        willmore_energy,
    )

    checks = [c.strip() for c in args.checks.split(",") if c.strip()]
    unknown = [c for c in checks if c not in SURFACE_CHECKS]
    if unknown:
        raise UsageError(f"unknown checks {unknown}; choose from {','.join(SURFACE_CHECKS)}")
    fmap = None
    try:
        if args.input.startswith("builtin:"):
            name = args.input.split(":", 1)[1]
            kw = {"lam": parse_lambdas(args.lambdas)[0]} if name == "example" else {}
            if name == "round_sphere":
                kw = {"extra": 1}
            fmap = builtin(name, **kw)
            grid = parse_grid(args.grid)
            f = SurfaceField.from_map(fmap, grid)
            tol_inv, tol_high, source = 1e-9, TAU_RES, "closed form, exact differentiation"
        else:
            Z, Y = _read_samples(args.input, args.lambda_index)
            jet, centres = sampled_jet(Z, Y)
            f = SurfaceField.from_jet(jet, centres, conformal_tol=1e-6)
            # fifth derivatives of double-precision samples carry ~eps/h^5 noise
            tol_inv, tol_high, source = 1e-6, TAU_SAMPLED_HIGH, "samples, local polynomial fit"
    except ValueError as exc:
        if isinstance(exc, NonConformalError):
            _emit(args, {"passed": False, "error": str(exc)}, f"FAIL {exc}")
            return FAILED
        raise UsageError(str(exc)) from exc

    report = {"input": args.input, "source": source, "points": f.n_points,
              "quarantined": [[z.real, z.imag] for z in f.quarantined], "checks": {}}

    def add(name, value, tol, ok):
        report["checks"][name] = {"max": float(value), "tolerance": tol, "passed": bool(ok)}

    for c in checks:
        if c == "conformal":
            v = max(f.conformality.max(), f.max_invariant_residual())
            add("conformal", v, tol_inv, v <= tol_inv)
            add("unit_norm", f.unit_norm.max(), 1e-12 if fmap else 1e-6, f.unit_norm.max() <= (1e-12 if fmap else 1e-6))
        elif c == "willmore":
            v = f.willmore_residual().max()
            add("willmore", v, tol_high, v <= tol_high)
        elif c == "isotropy":
            v = f.isotropy_defect().max()
            add("isotropy", v, TAU_RES, v <= TAU_RES)
        elif c == "swillmore":
            d = f.swillmore_defect()
            report["checks"]["swillmore"] = {"min": float(d.min()), "max": float(d.max()), "threshold": TAU_SW,
                                             "s_willmore": bool(d.max() < TAU_SW), "passed": True}
        elif c == "structure":
            for k, v in f.integrability_residuals().items():
                add(k, v.max(), tol_high, v.max() <= tol_high)
        elif c == "frame":
            add("frame_condition", f.frame_condition_residual().max(), TAU_RES, f.frame_condition_residual().max() <= TAU_RES)
            h = f.harmonicity_residual().max()
            add("harmonicity", h, tol_high, h <= tol_high)
            ranks = f.b1_rank()
            report["checks"]["b1_rank"] = {"values": sorted(set(int(r) for r in ranks)), "passed": True}
        elif c == "fullness":
            fl = fullness(f.y.value.real)
            report["checks"]["fullness"] = fl | {"threshold": 1e-3, "passed": fl["min_sv"] > 1e-3}
        elif c == "energy":
            if fmap is None:
                report["checks"]["energy"] = {"passed": False, "error": "energy needs a closed-form map covering S^2"}
                continue
            e = willmore_energy(fmap, levels=4)
            report["checks"]["energy"] = e.to_json() | {"passed": bool(np.isfinite(e.value))}
    ok = all(v.get("passed", True) for v in report["checks"].values())
    report["passed"] = ok
    if args.out:
        Path(args.out).write_text(_dump(report))
    lines = [f"{_verdict(v.get('passed', True))} {k}: " + ", ".join(
        f"{kk}={vv:.3e}" if isinstance(vv, float) else f"{kk}={vv}" for kk, vv in v.items() if kk != "passed")
        for k, v in report["checks"].items()]
    _emit(args, report, "\n".join(lines))
    return OK if ok else FAILED


# ----- golden ---------------------------------------------------------------------

def cmd_golden(args) -> int:
    from .golden import CHECKS, default_golden, golden_suite, run_checks, to_golden

    names = args.only.split(",") if args.only else None
    if names and any(n not in CHECKS for n in names):
        raise UsageError(f"--only takes a subset of {','.join(CHECKS)}")
    if args.update:
        results = run_checks(names)
        Path(args.update).write_text(_dump(to_golden(results)))
        for r in results:
            print(r.line())
        print(f"golden written to {args.update}")
        return OK
    golden = None
    if args.golden:
        try:
            golden = json.loads(Path(args.golden).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read golden file: {exc}") from exc
    rep = golden_suite(args.out, golden if golden is not None else default_golden(), names)
    if args.json:
        print(_dump(rep.to_json()))
    else:
        for r in rep.results:
            print(r.line())
        for d in rep.diffs:
            print(f"[DIFF] {d}")
        if rep.path:
            print(f"report: {rep.path}")
    return OK if rep.passed else FAILED


# ----- parser ---------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="wll", description="Willmore two-spheres via loop groups", parents=[common])
    p.add_argument("--version", action="version", version=f"wll {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("classify", parents=[common], help="canonical elements for a given m")
    c.add_argument("--m", type=int, required=True)
    c.add_argument("--format", choices=("table", "json"), default="table")
    c.set_defaults(func=cmd_classify)

    pp = sub.add_parser("potential", parents=[common], help="validate or classify a normalized potential")
    pp.add_argument("action", choices=("validate", "rank", "classify"))
    pp.add_argument("file", help="JSON file or builtin:<builder>")
    pp.set_defaults(func=cmd_potential)

    d = sub.add_parser("dpw", parents=[common], help="potential -> extended frame -> surface")
    d.add_argument("action", choices=("run", "verify-example"))
    d.add_argument("--potential", default="builtin:example")
    d.add_argument("--grid", default="polar:1.5:20:20")
    d.add_argument("--lambda", dest="lambdas", default="1,i,exp(i*pi/3)")
    d.add_argument("--out", help="CSV output (run); stdout if omitted")
    d.set_defaults(func=cmd_dpw)

    s = sub.add_parser("surface", parents=[common], help="geometric checks on a surface")
    s.add_argument("action", choices=("verify",))
    s.add_argument("--input", default="builtin:example", help="builtin:<name> or a CSV from 'dpw run'")
    s.add_argument("--checks", default="conformal,willmore,isotropy,swillmore,energy")
    s.add_argument("--grid", default="polar:1.5:20:20")
    s.add_argument("--lambda", dest="lambdas", default="1")
    s.add_argument("--lambda-index", type=int, default=0, help="which lambda column of a CSV to use")
    s.add_argument("--out", help="report JSON")
    s.set_defaults(func=cmd_surface)

    g = sub.add_parser("golden", parents=[common], help="full check suite against stored golden values")
    g.add_argument("action", choices=("run",))
    g.add_argument("--out", default="reports", help="report directory (a version subdirectory is created)")
    g.add_argument("--golden", help="golden JSON to compare against (default: packaged)")
    g.add_argument("--only", help="comma list of checks")
    g.add_argument("--update", metavar="PATH", help="write a fresh golden file instead of comparing")
    g.set_defaults(func=cmd_golden)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"wll: error: {exc}", file=sys.stderr)
        return USAGE
    except ValueError as exc:
        print(f"wll: error: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
