"""DPW construction: potential -> F_minus -> Iwasawa -> surface in S^{2m-2}."""
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla
from scipy.integrate import solve_ivp
from scipy.optimize import least_squares

from .minkowski import TAU_LIGHT, is_forward_lightlike, projectivize
from .potentials import NormalizedPotential
from .rational import RING, Z, RationalFunction, to_complex

log = logging.getLogger(__name__)

TAU_GRP = 1e-10
TAU_REAL = 1e-10
TAU_E2E = 1e-8


def lorentz(n: int) -> np.ndarray:
    return np.diag([-1.0] + [1.0] * (n - 1))


def twist(m: int) -> np.ndarray:
    return np.diag([-1.0] * 4 + [1.0] * (2 * m - 4))


def k_mask(m: int) -> np.ndarray:
    """True on the block-diagonal (k) positions."""
    n = 2 * m
    mask = np.zeros((n, n), bool)
    mask[:4, :4] = True
    mask[4:, 4:] = True
    return mask


# ----- loops ----------------------------------------------------------------

@dataclass
class LoopMatrix:
    """gamma(lambda) = sum_k coeffs[k] lambda^k over a finite window."""

    coeffs: dict

    def __post_init__(self):
        if not self.coeffs:
            raise ValueError("empty loop")
        shapes = {np.shape(v) for v in self.coeffs.values()}
        if len(shapes) != 1:
            raise ValueError("loop coefficients must share one shape")

    @property
    def size(self) -> int:
        return next(iter(self.coeffs.values())).shape[0]

    @property
    def m(self) -> int:
        return self.size // 2

    @property
    def window(self) -> tuple[int, int]:
        return min(self.coeffs), max(self.coeffs)

    def __call__(self, lam) -> np.ndarray:
        return sum(np.asarray(c, dtype=complex) * complex(lam) ** k for k, c in self.coeffs.items())

    def __matmul__(self, other: "LoopMatrix") -> "LoopMatrix":
        out: dict = {}
        for a, x in self.coeffs.items():
            for b, y in other.coeffs.items():
                out[a + b] = out.get(a + b, 0) + x @ y
        return LoopMatrix(out)

    def right(self, g: np.ndarray) -> "LoopMatrix":
        return LoopMatrix({k: c @ g for k, c in self.coeffs.items()})

    def twist_defect(self) -> float:
        """Largest entry that breaks sigma-equivariance; exactly zero for
        twisted loops built here."""
        mask = k_mask(self.m)
        worst = 0.0
        for k, c in self.coeffs.items():
            bad = c[~mask] if k % 2 == 0 else c[mask]
            if bad.size:
                worst = max(worst, float(np.max(np.abs(bad))))
        return worst

    def is_twisted(self) -> bool:
        return self.twist_defect() == 0.0

    def group_residual(self, lams: Sequence[complex]) -> float:
        eta = lorentz(self.size)
        return max(float(np.max(np.abs(g.T @ eta @ g - eta))) for g in (self(l) for l in lams))

    def reality_residual(self, lams: Sequence[complex]) -> float:
        return max(float(np.max(np.abs(self(l).imag))) for l in lams)


def unit_circle(n: int) -> np.ndarray:
    return np.exp(2j * np.pi * (np.arange(n) + 0.25) / n)


# ----- F_minus --------------------------------------------------------------

def _poly_integrate(p, z0) -> object:
    """Antiderivative vanishing at z0 (Gaussian rational)."""
    out = RING.zero
    for (k,), c in p.terms():
        out += RING(c / (k + 1)) * Z ** (k + 1)
    return out - RING(out(z0)) if out else out


def _matmul_poly(a, b):
    n = len(a)
    return [[sum((a[i][k] * b[k][j] for k in range(n) if a[i][k] and b[k][j]), RING.zero) for j in range(n)] for i in range(n)]


@dataclass
class MeromorphicFrame:
    """F_minus = sum_{k=0}^{K} lambda^{-k} F_k(z) with F_0 = I, F_k' = F_{k-1} N."""

    potential: NormalizedPotential
    z0: complex
    exact_terms: list | None = None  # polynomial matrices, exact backend
    _numeric_cache: dict = field(default_factory=dict, repr=False)

    @property
    def depth(self) -> int:
        if self.exact_terms is not None:
            return len(self.exact_terms) - 1
        return _nilpotent_depth(self.potential)

    def at(self, z: complex) -> LoopMatrix:
        if self.exact_terms is not None:
            coeffs = {}
            for k, term in enumerate(self.exact_terms):
                coeffs[-k] = _eval_poly_matrix(term, z)
            return LoopMatrix(coeffs)
        return _numeric_fminus(self.potential, self.z0, z, self.depth)

    def maurer_cartan_residual_exact(self) -> bool:
        """True iff F_k' = F_{k-1} N for every k and F_K N = 0, exactly."""
        if self.exact_terms is None:
            raise ValueError("exact residual needs a polynomial potential")
        n_mat = _eta_poly(self.potential)
        terms = self.exact_terms
        for k in range(1, len(terms)):
            lhs = [[p.diff(Z) for p in row] for row in terms[k]]
            rhs = _matmul_poly(terms[k - 1], n_mat)
            if any(a != b for ra, rb in zip(lhs, rhs) for a, b in zip(ra, rb)):
                return False
        tail = _matmul_poly(terms[-1], n_mat)
        return not any(p for row in tail for p in row)

    def initial_is_identity(self) -> bool:
        loop = self.at(self.z0)
        n = loop.size
        return all(np.array_equal(c, np.eye(n)) if k == 0 else not np.any(c) for k, c in loop.coeffs.items())


def _is_polynomial(p: NormalizedPotential) -> bool:
    return all(f.den.degree() == 0 for pair in p.pairs for f in pair.functions.values())


def _eta_poly(p: NormalizedPotential) -> list:
    rows = p.eta_minus1()
    return [[f.num for f in row] for row in rows]


def _eval_poly_matrix(mat, z) -> np.ndarray:
    n = len(mat)
    out = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            if mat[i][j]:
                out[i, j] = RationalFunction(mat[i][j])(z)
    return out


def _nilpotent_depth(p: NormalizedPotential, samples: int = 4) -> int:
    """Length of the longest non-vanishing product of eta at generic points."""
    rng = np.random.default_rng(7)
    n = 2 * p.m
    pts = rng.normal(size=samples) + 1j * rng.normal(size=samples)
    mats = [_eta_numeric(p, z) for z in pts]
    prods = [np.eye(n, dtype=complex)]
    for k in range(1, 4 * p.m + 2):
        prods = [a @ b for a in prods for b in mats][:64]
        if max(np.max(np.abs(x)) for x in prods) < 1e-12:
            return k - 1
    raise ArithmeticError("potential is not nilpotent: products of eta never vanish")


def _eta_numeric(p: NormalizedPotential, z: complex) -> np.ndarray:
    b = p.B1_numeric(z)
    n = 2 * p.m
    out = np.zeros((n, n), dtype=complex)
    out[:4, 4:] = b
    out[4:, :4] = -b.T @ lorentz(4)
    return out


def _numeric_fminus(p: NormalizedPotential, z0: complex, z: complex, depth: int) -> LoopMatrix:
    """Straight-path integration of F_k' = F_{k-1} N for rational potentials."""
    n = 2 * p.m
    dz = z - z0

    def rhs(t, y):
        f = y.reshape(depth + 1, n, n)
        nz = _eta_numeric(p, z0 + t * dz) * dz
        out = np.zeros_like(f)
        out[1:] = f[:-1] @ nz
        return out.ravel()

    y0 = np.zeros((depth + 1, n, n), dtype=complex)
    y0[0] = np.eye(n)
    sol = solve_ivp(rhs, (0.0, 1.0), y0.ravel(), method="DOP853", rtol=1e-13, atol=1e-14)
    if not sol.success:
        raise ArithmeticError(f"integration to z={z} failed: {sol.message}")
    f = sol.y[:, -1].reshape(depth + 1, n, n)
    return LoopMatrix({-k: f[k] for k in range(depth + 1)})


def integrate_potential(p: NormalizedPotential, z0: complex = 0) -> MeromorphicFrame:
    """Solve F^-1 dF = lambda^-1 N dz, F(z0) = I.

    Polynomial potentials are integrated exactly term by term; the series in
    lambda^-1 stops because N takes values in a nilpotent subalgebra.
    """
    for pole in p.poles:
        if abs(pole - z0) < 1e-12:
            raise ValueError(f"base point {z0} is a pole of the potential")
    if not _is_polynomial(p):
        return MeromorphicFrame(p, complex(z0))
    from .rational import parse_scalar

    z0_exact = parse_scalar([int(np.real(z0)), int(np.imag(z0))]) if complex(z0) == complex(int(np.real(z0)), int(np.imag(z0))) else None
    if z0_exact is None:
        raise ValueError("exact integration needs a Gaussian-integer base point")
    n_mat = _eta_poly(p)
    n = len(n_mat)
    ident = [[RING.one if i == j else RING.zero for j in range(n)] for i in range(n)]
    terms = [ident]
    for _ in range(4 * p.m + 2):
        prod = _matmul_poly(terms[-1], n_mat)
        nxt = [[_poly_integrate(q, z0_exact) if q else RING.zero for q in row] for row in prod]
        if not any(q for row in nxt for q in row):
            return MeromorphicFrame(p, complex(z0), terms)
        terms.append(nxt)
    raise ArithmeticError("lambda-series of F_minus does not terminate; potential is not nilpotent")


# ----- Iwasawa --------------------------------------------------------------

@dataclass
class IwasawaResult:
    F: LoopMatrix
    F_plus: LoopMatrix  # F = F_minus F_plus; a polynomial in lambda
    F_plus_inv: LoopMatrix  # Taylor coefficients up to the window size
    gap: float  # singular-value gap of the reality system (small = trouble)
    reality: float
    group: float
    reconstruction: float
    ok: bool
    message: str = ""


class IwasawaFailure(ArithmeticError):
    pass


def _plus_unknowns(m: int, top: int) -> list[tuple[int, int, int]]:
    mask = k_mask(m)
    idx = []
    for k in range(top + 1):
        sel = mask if k % 2 == 0 else ~mask
        idx.extend((k, a, b) for a, b in zip(*np.nonzero(sel)))
    return idx


def _x_operator(fm: LoopMatrix, idx, top: int):
    """Complex matrices A_j with vec(X_j) = A_j v, X = F_minus * P, P = sum B_k lambda^k."""
    n = fm.size
    js = range(min(fm.coeffs), top + 1)
    ops = {j: np.zeros((n * n, len(idx)), dtype=complex) for j in js}
    for col, (k, a, b) in enumerate(idx):
        for l, c in fm.coeffs.items():
            j = k + l
            # F_minus[l] @ E_ab places column a of F_minus[l] into column b
            ops[j][np.arange(n) * n + b, col] += c[:, a]
    return ops


def _real_system(ops: dict) -> np.ndarray:
    """Rows of X_{-j} - conj(X_j) = 0, j >= 0, as a real system in (Re v, Im v)."""
    blocks = []
    top = max(max(ops), -min(ops))
    zero = np.zeros_like(next(iter(ops.values())))
    for j in range(0, top + 1):
        a = ops.get(-j, zero)
        c = ops.get(j, zero)
        re = np.hstack([a.real - c.real, c.imag - a.imag])
        im = np.hstack([a.imag + c.imag, a.real + c.real])
        blocks += [re, im]
    return np.vstack(blocks)


def _assemble(idx, vec: np.ndarray, n: int, top: int) -> list[np.ndarray]:
    bs = [np.zeros((n, n), dtype=complex) for _ in range(top + 1)]
    for v, (k, a, b) in zip(vec, idx):
        bs[k][a, b] = v
    return bs


def _metric_factor(g: np.ndarray) -> np.ndarray:
    """M with M^t diag(signs) M = g for symmetric real g, negative directions first."""
    w, v = np.linalg.eigh(g)
    return np.diag(np.sqrt(np.abs(w))) @ v.T


def iwasawa_at_point(fm: LoopMatrix, n_lambda: int | None = None) -> IwasawaResult:
    """Split F_minus = F F_plus^-1 with F real on the unit circle.

    The unknown F_plus =: P = sum_{k<=K} B_k lambda^k is found from the
    linear condition that X = F_minus P is real on S^1.  Those solutions form
    {F M : M real in K}, so the SO(1,3) x SO(n) factor is then fixed by
    making X orthogonal for the Lorentz metric, and the remaining freedom by
    putting B_0 in exp(i k).
    """
    m, n = fm.m, fm.size
    top = -fm.window[0]
    if n_lambda is None:
        n_lambda = 4 * (2 * top + 1) + 4
    idx = _plus_unknowns(m, top)
    ops = _x_operator(fm, idx, top)
    system = _real_system(ops)
    null_dim = 16 + (n - 4) ** 2
    _, s, vt = np.linalg.svd(system)
    s_full = np.concatenate([s, np.zeros(max(0, vt.shape[0] - s.size))])
    kept = s_full[-null_dim:]
    gap_lo = float(s_full[-null_dim - 1]) if s_full.size > null_dim else float("inf")
    basis = vt[-null_dim:].T
    nu = len(idx)
    if gap_lo < 1e3 * max(float(kept.max()), 1e-300) or gap_lo < 1e-8:
        raise IwasawaFailure(f"reality system has no clean {null_dim}-dim kernel (gap {gap_lo:.2e})")

    # choose the member closest to B_0 = I
    b0_cols = []
    for c in basis.T:
        b0 = _assemble(idx, c[:nu] + 1j * c[nu:], n, top)[0]
        b0_cols.append(np.concatenate([b0.real.ravel(), b0.imag.ravel()]))
    target = np.concatenate([np.eye(n).ravel(), np.zeros(n * n)])
    coef = np.linalg.lstsq(np.array(b0_cols).T, target, rcond=None)[0]
    vec = basis @ coef
    p_coeffs = _assemble(idx, vec[:nu] + 1j * vec[nu:], n, top)
    p_loop = LoopMatrix({k: b for k, b in enumerate(p_coeffs)})
    x_loop = fm @ p_loop

    eta = lorentz(n)
    x1 = x_loop(1.0)
    g = (x1.T @ eta @ x1).real
    try:
        mfac = sla.block_diag(_metric_factor(g[:4, :4]), _metric_factor(g[4:, 4:]))
        minv = np.linalg.inv(mfac)
    except np.linalg.LinAlgError as exc:
        raise IwasawaFailure(f"metric normalization failed: {exc}") from exc
    if np.linalg.eigvalsh(g[:4, :4])[0] >= 0 or np.any(np.linalg.eigvalsh(g[4:, 4:]) <= 0):
        raise IwasawaFailure("frame metric has the wrong signature; outside the Iwasawa cell")
    p_loop = p_loop.right(minv)
    x_loop = x_loop.right(minv)

    b0 = p_loop.coeffs[0]
    try:
        s_half = sla.sqrtm(b0 @ np.linalg.inv(np.conj(b0)))
        kreal = np.linalg.solve(s_half, b0)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise IwasawaFailure(f"S-normalization failed: {exc}") from exc
    if np.max(np.abs(kreal.imag)) > 1e-6 * max(1.0, np.max(np.abs(kreal))):
        raise IwasawaFailure("S-normalization produced a non-real factor")
    kinv = np.linalg.inv(kreal.real)
    kinv = np.where(k_mask(m), kinv, 0.0)
    p_loop = p_loop.right(kinv)
    f_loop = LoopMatrix({k: c for k, c in x_loop.right(kinv).coeffs.items() if k >= -top and k <= top})
    return _finish(fm, f_loop, p_loop, gap_lo, n_lambda)


def _invert_plus(p: LoopMatrix, top: int) -> LoopMatrix:
    """Taylor coefficients of P^-1 up to lambda^top (enough for checks)."""
    n = p.size
    b = [p.coeffs.get(k, np.zeros((n, n))) for k in range(top + 1)]
    inv0 = np.linalg.inv(b[0])
    out = [inv0]
    for k in range(1, top + 1):
        acc = sum(b[j] @ out[k - j] for j in range(1, k + 1))
        out.append(-inv0 @ acc)
    return LoopMatrix({k: c for k, c in enumerate(out)})


def _finish(fm, f_loop, p_loop, gap, n_lambda) -> IwasawaResult:
    lams = unit_circle(n_lambda)
    reality = f_loop.reality_residual(lams)
    group = f_loop.group_residual(lams)
    recon = max(float(np.max(np.abs(f_loop(l) - fm(l) @ p_loop(l)))) for l in lams)
    ok = reality <= TAU_REAL and group <= TAU_GRP and f_loop.twist_defect() == 0.0
    msg = "" if ok else f"residuals reality={reality:.1e} group={group:.1e}"
    f_loop = LoopMatrix({k: (c.real if k == 0 else c) for k, c in f_loop.coeffs.items()})
    inv = _invert_plus(p_loop, max(p_loop.coeffs))
    return IwasawaResult(f_loop, p_loop, inv, gap, reality, group, recon, ok, msg)


def iwasawa_newton(fm: LoopMatrix, seed: LoopMatrix, max_iter: int = 100, tol: float = TAU_GRP) -> LoopMatrix:
    """Refine P = F_plus by least squares from a seed.

    Residuals: Im(F_minus P) on sampled lambda, Lorentz orthogonality of
    F_minus P, and conj(B_0) B_0 = I (B_0 in exp(i k)).  Returns P.
    """
    m, n = fm.m, fm.size
    top = max(seed.coeffs)
    idx = _plus_unknowns(m, top)
    nu = len(idx)
    lams = unit_circle(4 * (2 * top + 1) + 4)
    eta = lorentz(n)

    def unpack(x):
        return LoopMatrix({k: b for k, b in enumerate(_assemble(idx, x[:nu] + 1j * x[nu:], n, top))})

    def residual(x):
        p = unpack(x)
        out = []
        for l in lams:
            f = fm(l) @ p(l)
            out.append(f.imag.ravel())
            g = f.T @ eta @ f - eta
            out.append(g.real.ravel())
            out.append(g.imag.ravel())
        b0 = p.coeffs[0]
        h = np.conj(b0) @ b0 - np.eye(n)
        out += [h.real.ravel(), h.imag.ravel()]
        return np.concatenate(out)

    fms = [fm(l) for l in lams]

    def jacobian(x):
        p = unpack(x)
        b0 = p.coeffs[0]
        cols = []
        for unit in (1.0, 1j):
            for k, a, b in idx:
                parts = []
                for l, fml in zip(lams, fms):
                    f = fml @ p(l)
                    df = np.zeros((n, n), dtype=complex)
                    df[:, b] = fml[:, a] * (unit * l**k)
                    parts.append(df.imag.ravel())
                    dg = df.T @ eta @ f + f.T @ eta @ df
                    parts += [dg.real.ravel(), dg.imag.ravel()]
                dh = np.zeros((n, n), dtype=complex)
                if k == 0:
                    e = np.zeros((n, n), dtype=complex)
                    e[a, b] = unit
                    dh = np.conj(e) @ b0 + np.conj(b0) @ e
                parts += [dh.real.ravel(), dh.imag.ravel()]
                cols.append(np.concatenate(parts))
        return np.stack(cols, axis=1)

    x0 = np.array([seed.coeffs[k][a, b] for k, a, b in idx])
    x0 = np.concatenate([x0.real, x0.imag])
    sol = least_squares(residual, x0, jac=jacobian, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_iter)
    if np.max(np.abs(sol.fun)) > tol:
        raise IwasawaFailure(f"Newton refinement stalled at residual {np.max(np.abs(sol.fun)):.1e}")
    return unpack(sol.x)


# ----- projection -----------------------------------------------------------

class ProjectionError(ValueError):
    pass


def project_surface(frame: np.ndarray, tol: float = TAU_LIGHT) -> np.ndarray:
    """[phi_1 - phi_2] for a real frame whose first two columns are
    (Y+N)/sqrt2, (-Y+N)/sqrt2."""
    f = np.asarray(frame)
    if np.max(np.abs(np.imag(f))) > 1e-8:
        raise ProjectionError("frame is not real")
    v = np.real(f[:, 0] - f[:, 1])
    if v[0] < 0:
        v = -v
    if abs(v[0]) < 1e-14:
        raise ProjectionError("phi_1 - phi_2 has zero 0-th entry (point at infinity of the chart)")
    if not is_forward_lightlike(v, tol):
        raise ProjectionError("phi_1 - phi_2 is not lightlike; not a Willmore frame")
    return projectivize(v, tol)


def _rotation_to(target: np.ndarray) -> np.ndarray:
    """R in SO(3) with R(-1, 0, 0) = target (unit)."""
    a = np.array([-1.0, 0.0, 0.0])
    t = target / np.linalg.norm(target)
    v = np.cross(a, t)
    c = float(a @ t)
    if np.linalg.norm(v) < 1e-14:
        return np.eye(3) if c > 0 else np.diag([-1.0, -1.0, 1.0])
    vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + vx + vx @ vx / (1 + c)


@dataclass
class AdaptedFrame:
    frame: LoopMatrix
    c: np.ndarray  # null direction in R^{1,3}
    kernel_gap: float  # s_{n-1}/s_1; small when the null direction is not unique


def adapt_frame(res: IwasawaResult, b1hat: np.ndarray) -> AdaptedFrame:
    """Rotate the SO(1,3) factor so that phi_1 - phi_2 is the lift Y.

    The lambda^-1 part of F^-1 dF is B_0^-1 eta_{-1} B_0, so the frame's B1
    is b1^-1 B1hat b2 with b1 = B_0[:4,:4].  Y spans the real null direction
    c with c^t I13 B1 = 0.
    """
    m = res.F.m
    b0 = res.F_plus.coeffs[0]
    b1 = b0[:4, :4]
    a = b1hat.T @ lorentz(4) @ b1
    _, s, vt = np.linalg.svd(np.vstack([a.real, a.imag]))
    c = vt[-1]
    gap = float(s[-2] / s[0]) if s[0] > 0 else 0.0
    if c[0] < 0:
        c = -c
    c = c / c[0]
    kc = np.eye(4)
    kc[1:, 1:] = _rotation_to(c[1:])
    g = sla.block_diag(kc, np.eye(2 * m - 4))
    return AdaptedFrame(res.F.right(g), c, gap)


# ----- closed form ------------------------------------------------------------

def closed_form_example(z, lam) -> np.ndarray:
    """The explicit associated family x_lambda: S^2 -> S^6; vectorized in z."""
    z = np.asarray(z, dtype=complex)
    lam = complex(lam)
    zb = np.conj(z)
    r2 = (z * zb).real
    d = 1 + r2 + 5 * r2**2 / 4 + 4 * r2**3 / 9 + r2**4 / 36
    li = 1 / lam
    comps = [
        1 - r2 - 3 * r2**2 / 4 + 4 * r2**3 / 9 - r2**4 / 36,
        -1j * (z - zb) * (1 + r2**3 / 9),
        (z + zb) * (1 + r2**3 / 9),
        -1j * (li * z**2 - lam * zb**2) * (1 - r2**2 / 12),
        (li * z**2 + lam * zb**2) * (1 - r2**2 / 12),
        -1j * r2 / 2 * (li * z - lam * zb) * (1 + 4 * r2 / 3),
        r2 / 2 * (li * z + lam * zb) * (1 + 4 * r2 / 3),
    ]
    return np.stack([np.real(np.asarray(c, dtype=complex)) / d for c in comps], axis=-1)


# ----- conjugation fit --------------------------------------------------------

def fit_conjugation(points: np.ndarray, reference: np.ndarray) -> tuple[np.ndarray, float]:
    """Block-diagonal T in O(1,3) x O(n) with T (1, y_i) parallel to (1, r_i).

    Linear in T: (I - u u^t) T L_i = 0 for u = (1, r_i)/|(1, r_i)|.  The
    least-squares null vector is projected back onto the group blockwise.
    Returns T and the max deviation of the transformed points.
    """
    pts = np.asarray(points, float).reshape(-1, points.shape[-1])
    ref = np.asarray(reference, float).reshape(-1, reference.shape[-1])
    n = pts.shape[1] + 1
    lifts = np.hstack([np.ones((len(pts), 1)), pts])
    targets = np.hstack([np.ones((len(ref), 1)), ref])
    mask = k_mask(n // 2) if n % 2 == 0 else None
    free = [(a, b) for a in range(n) for b in range(n) if mask is None or mask[a, b]]
    rows = []
    for l, t in zip(lifts, targets):
        u = t / np.linalg.norm(t)
        proj = np.eye(n) - np.outer(u, u)
        # column for T_ab: proj[:, a] * l[b]
        rows.append(np.stack([proj[:, a] * l[b] for a, b in free], axis=1))
    sys_ = np.vstack(rows)
    _, _, vt = np.linalg.svd(sys_, full_matrices=False)
    t = np.zeros((n, n))
    for v, (a, b) in zip(vt[-1], free):
        t[a, b] = v
    t = _project_group(t)
    mapped = lifts @ t.T
    if np.median(mapped[:, 0]) < 0:
        mapped = -mapped
    y = mapped[:, 1:] / mapped[:, :1]
    return t, float(np.max(np.abs(y - ref)))


def _project_group(t: np.ndarray) -> np.ndarray:
    """Nearest element of O(1,3) x O(n) up to scale, block by block."""
    n = t.shape[0]
    out = np.zeros_like(t)
    a = t[:4, :4]
    # O(1,3): rescale so that a^t I a ~ I, then polar-orthogonalize in the Lorentz sense
    eta = lorentz(4)
    g = a.T @ eta @ a
    scale = np.sqrt(abs(np.linalg.det(g)) ** 0.25) if np.linalg.det(g) != 0 else 1.0
    a = a / scale
    for _ in range(20):
        a = 0.5 * (a + eta @ np.linalg.inv(a).T @ eta)
    out[:4, :4] = a
    if n > 4:
        u, _, vt = np.linalg.svd(t[4:, 4:])
        out[4:, 4:] = u @ vt
    return out


# ----- pipeline ---------------------------------------------------------------

@dataclass
class PointResult:
    z: complex
    points: np.ndarray | None  # (n_lambda, 2m-1)
    reality: float = float("nan")
    group: float = float("nan")
    light: float = float("nan")
    kernel_gap: float = float("nan")
    twist: float = float("nan")
    error: str = ""


@dataclass
class PipelineResult:
    lambdas: list
    results: list  # PointResult

    @property
    def good(self) -> list:
        return [r for r in self.results if r.points is not None]

    @property
    def quarantine(self) -> list:
        return [(r.z, r.error) for r in self.results if r.points is None]

    def samples(self) -> tuple[np.ndarray, np.ndarray]:
        g = self.good
        return np.array([r.z for r in g]), np.array([r.points for r in g])

    def max_residuals(self) -> dict:
        g = self.good
        if not g:
            return {}
        return {
            "reality": max(r.reality for r in g),
            "group": max(r.group for r in g),
            "light": max(r.light for r in g),
            "twist": max(r.twist for r in g),
            "degenerate_points": sum(r.kernel_gap < 1e-8 for r in g),
        }


def frame_at(p: NormalizedPotential, fminus: MeromorphicFrame, z: complex) -> tuple[IwasawaResult, AdaptedFrame]:
    fm = fminus.at(z)
    res = iwasawa_at_point(fm)
    b1hat = p.B1_numeric(z)
    return res, adapt_frame(res, b1hat)


def _one_point(p, fminus, z, lams) -> PointResult:
    try:
        res, ad = frame_at(p, fminus, z)
        pts = []
        light = 0.0
        for lam in lams:
            f = ad.frame(lam)
            v = np.real(f[:, 0] - f[:, 1])
            light = max(light, abs(float(v @ lorentz(len(v)) @ v)) / float(v @ v))
            pts.append(project_surface(f))
        reality = max(res.reality, ad.frame.reality_residual(lams))
        group = max(res.group, ad.frame.group_residual(lams))
        return PointResult(complex(z), np.array(pts), reality, group, light, ad.kernel_gap, ad.frame.twist_defect())
    except (IwasawaFailure, ProjectionError, ArithmeticError, np.linalg.LinAlgError) as exc:
        log.info("quarantined z=%s: %s", z, exc)
        return PointResult(complex(z), None, error=str(exc))


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("WLL_THREADS", "1")))
    except ValueError:
        return 1


def run_pipeline(p: NormalizedPotential, grid: Sequence[complex], lambdas: Sequence[complex], z0: complex = 0) -> PipelineResult:
    """integrate -> Iwasawa -> adapt -> project at each grid point."""
    fminus = integrate_potential(p, z0)
    lams = [complex(l) for l in lambdas]
    for l in lams:
        if abs(abs(l) - 1) > 1e-12:
            raise ValueError(f"lambda={l} is not on the unit circle")
    grid = [complex(z) for z in grid]
    threads = worker_count()
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            results = list(ex.map(lambda z: _one_point(p, fminus, z, lams), grid))
    else:
        results = [_one_point(p, fminus, z, lams) for z in grid]
    return PipelineResult(lams, results)


# ----- grids ------------------------------------------------------------------

def parse_grid(spec: str) -> np.ndarray:
    """'polar:R:nr:ntheta' or 'rect:x0:x1:y0:y1:nx:ny' or 'points:a+bj,...'."""
    kind, _, rest = spec.partition(":")
    try:
        if kind == "polar":
            r, nr, nt = rest.split(":")
            radii = np.linspace(float(r) / int(nr), float(r), int(nr))
            th = 2 * np.pi * (np.arange(int(nt)) + 0.5) / int(nt)
            return (radii[:, None] * np.exp(1j * th)[None, :]).ravel()
        if kind == "rect":
            x0, x1, y0, y1, nx, ny = rest.split(":")
            xs = np.linspace(float(x0), float(x1), int(nx))
            ys = np.linspace(float(y0), float(y1), int(ny))
            return (xs[None, :] + 1j * ys[:, None]).ravel()
        if kind == "points":
            return np.array([complex(s.replace(" ", "")) for s in rest.split(",") if s])
    except ValueError as exc:
        raise ValueError(f"bad grid spec {spec!r}: {exc}") from exc
    raise ValueError(f"unknown grid kind {kind!r}; use polar:, rect: or points:")


def parse_lambdas(spec: str) -> list[complex]:
    """Comma list; accepts 1, i, -i, exp(i*pi/3), e^{i pi/k} forms and angles like 'angle:0.5'."""
    out = []
    for tok in spec.split(","):
        t = tok.strip().replace(" ", "")
        if not t:
            continue
        if t in ("i", "1j"):
            out.append(1j)
        elif t in ("-i", "-1j"):
            out.append(-1j)
        elif t.startswith("angle:"):
            out.append(np.exp(1j * float(t[6:])))
        elif t.startswith("exp(i*pi/") and t.endswith(")"):
            out.append(np.exp(1j * np.pi / float(t[9:-1])))
        else:
            out.append(complex(t))
    return out
