"""Solve the two-singularity moduli for a given annulus radius and slope.

Input is (r, s) with r in (0, 1) and s in (-1, 0); the normalized slope s
prescribes the pairing value at the inner marker.  The solve runs in three
stages, each a one-dimensional root problem:

1. exponent: m in (-3, -2) from the balance
       2 log_slope(r^(-2(m+2))) = 1 + s + m,
   which fixes the marker product P = r^(-2(m+2)) = z1 z2;
2. inner split: for a candidate end marker z0, the point z2 in (-1, z0)
   with pair_slope(z0, z2) = s;
3. end marker: scan z0 over (-1, -r) for pair_slope(z0, P / z2(z0)) = s - 2,
   then refine the first sign change (the one nearest -1).

All three use plain bisection (fixed iteration budgets, so results are
deterministic bit for bit) with a secant polish where it pays.  The scan of
stage 3 performs the stage-2 bisections for all candidates in lockstep on
numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .annulus import CanonicalModuli, fit_gauss_ratio, slit_map, slit_map_deriv
from .theta import ThetaContext, ThetaPoleError, log_slope, pair_slope

SCAN_POINTS = 256
INNER_ITERS = 64
RESIDUAL_TOL = 1e-10


class BracketError(RuntimeError):
    """A root bracket could not be established or refined."""


class RangeNormalizationError(ValueError):
    """Parameters outside the normalized ranges r in (0,1), s in (-1,0)."""


@dataclass
class SolverTrace:
    """Diagnostics of one canonical solve, serializable for the CLI sidecar."""

    r: float
    s: float
    m: float = 0.0
    exponent_bracket: tuple = ()
    exponent_iterations: int = 0
    scan_points: int = 0
    outer_sign_changes: int = 0
    chosen_bracket: tuple = ()
    outer_iterations: int = 0
    residuals: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "s": self.s,
            "m": self.m,
            "exponent_bracket": list(self.exponent_bracket),
            "exponent_iterations": self.exponent_iterations,
            "scan_points": self.scan_points,
            "outer_sign_changes": self.outer_sign_changes,
            "chosen_bracket": list(self.chosen_bracket),
            "outer_iterations": self.outer_iterations,
            "residuals": self.residuals,
        }


def _check_rs(r: float, s: float):
    if not 0.0 < r < 1.0:
        raise RangeNormalizationError(f"radius r={r} outside (0, 1)")
    if not -1.0 < s < 0.0:
        raise RangeNormalizationError(f"slope s={s} outside (-1, 0)")


def bracketed_root(fn, lo, hi, flo=None, fhi=None, bisect_iters=48, secant_iters=10):
    """Root of a scalar function on a sign-changing bracket.

    Bisection with a fixed iteration budget, then a secant polish that is
    rejected whenever it steps outside the shrunken bracket.  Returns
    (root, total_iterations).
    """
    flo = fn(lo) if flo is None else flo
    fhi = fn(hi) if fhi is None else fhi
    if flo == 0.0:
        return lo, 0
    if fhi == 0.0:
        return hi, 0
    if (flo > 0) == (fhi > 0):
        raise BracketError(f"no sign change on [{lo}, {hi}]")
    n = 0
    for _ in range(bisect_iters):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        fm = fn(mid)
        n += 1
        if fm == 0.0:
            return mid, n
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    a, fa, b, fb = lo, flo, hi, fhi
    for _ in range(secant_iters):
        if fb == fa:
            break
        c = b - fb * (b - a) / (fb - fa)
        if not (lo <= c <= hi):
            break
        fc = fn(c)
        n += 1
        a, fa, b, fb = b, fb, c, fc
        if fc == 0.0 or abs(b - a) < 1e-16 * (abs(a) + abs(b)):
            break
    return b, n


def solve_exponent(ctx: ThetaContext, s: float):
    """Stage 1: the exponent m in (-3, -2) and the bracket used.

    The balance function blows up to +inf at m = -3 (marker product at r^2)
    and to -inf at m = -2 (product at 1), so a bracket always exists; the
    inset shrinks adaptively until the signs differ.
    """
    r = ctx.r

    def balance(m):
        P = r ** (-2.0 * (m + 2.0))
        return 2.0 * log_slope(ctx, complex(P)).real - 1.0 - s - m

    for k in range(3, 13):
        eps = 10.0 ** (-k)
        lo, hi = -3.0 + eps, -2.0 - eps
        flo, fhi = balance(lo), balance(hi)
        if (flo > 0) != (fhi > 0):
            m, iters = bracketed_root(balance, lo, hi, flo, fhi, bisect_iters=64)
            return m, (lo, hi), iters
    raise BracketError("exponent balance has no sign change in (-3, -2)")


def _pair_minus_s(ctx, centers, w, s):
    return pair_slope(ctx, centers * (1.0 + 0.0j), w * (1.0 + 0.0j)).real - s


def _inner_lockstep(ctx: ThetaContext, z0s, s, iters=INNER_ITERS):
    """Stage 2 for an array of candidate end markers, bisected in lockstep.

    For each z0 the target z2 lies in (-1, z0), where the pairing value
    decreases from just above s near -1 to +inf at z0.  Entries without a
    sign change come back as NaN with ok=False.
    """
    z0s = np.asarray(z0s, dtype=float)
    gap = 1.0 + z0s
    lo = -1.0 + gap * 1e-6
    hi = z0s - np.abs(z0s) * 1e-9
    flo = _pair_minus_s(ctx, z0s, lo, s)
    fhi = _pair_minus_s(ctx, z0s, hi, s)
    ok = np.isfinite(flo) & np.isfinite(fhi) & ((flo > 0) != (fhi > 0))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = _pair_minus_s(ctx, z0s, mid, s)
        to_hi = (fm > 0) == (fhi > 0)
        hi = np.where(to_hi, mid, hi)
        fhi = np.where(to_hi, fm, fhi)
        lo = np.where(to_hi, lo, mid)
        flo = np.where(to_hi, flo, fm)
    root = 0.5 * (lo + hi)
    return np.where(ok, root, np.nan), ok


def solve_inner_point(ctx: ThetaContext, z0: float, s: float) -> float:
    """Stage 2 for a single end marker: z2 in (-1, z0) with pairing value s."""
    root, ok = _inner_lockstep(ctx, np.array([z0]), s)
    if not ok[0]:
        raise BracketError(f"no inner split for z0={z0}")
    return float(root[0])


def _outer_scan(ctx: ThetaContext, s: float, P: float, n=SCAN_POINTS):
    """Stage 3 scan: residual of the outer pairing over candidate z0.

    Candidates whose inner split fails, or whose partner P/z2 would not lie
    in (z0, -r), are marked NaN.  Returns (z0 grid, residual grid).
    """
    z0s = np.linspace(-1.0 + 1e-6, -ctx.r * (1.0 + 1e-6), n)
    return z0s, _outer_values(ctx, s, P, z0s)


def _sign_changes(z0s, vals):
    """Consecutive valid pairs with a sign change, ordered as scanned."""
    out = []
    idx = np.flatnonzero(np.isfinite(vals[:-1]) & np.isfinite(vals[1:]))
    for i in idx:
        if (vals[i] > 0) != (vals[i + 1] > 0):
            out.append(i)
    return out


def _outer_values(ctx, s, P, z0s):
    """Outer pairing residual for an array of candidates (NaN when invalid)."""
    r = ctx.r
    z2s, ok = _inner_lockstep(ctx, z0s, s)
    with np.errstate(invalid="ignore", divide="ignore"):
        z1s = P / z2s
        ok &= z0s * z2s > P
        ok &= z1s < -r
    vals = np.full(z0s.shape, np.nan)
    if ok.any():
        vals[ok] = _pair_minus_s(ctx, z0s[ok], z1s[ok], s - 2.0)
    return vals


def _refine_bracket(ctx, s, P, a, b, fa, fb, rounds=14, fan=18):
    """Shrink a sign-changing bracket by repeated fan subdivision.

    Each round evaluates the outer residual at fan-2 interior points in one
    vectorized pass and keeps the first adjacent sign change, cutting the
    width by fan-1.  Returns (root, evaluation count).
    """
    n_eval = 0
    for _ in range(rounds):
        xs = np.linspace(a, b, fan)
        inner = _outer_values(ctx, s, P, xs[1:-1])
        n_eval += inner.size
        vals = np.concatenate([[fa], inner, [fb]])
        changes = _sign_changes(xs, vals)
        if not changes:
            raise BracketError("outer refinement lost the sign change")
        i = changes[0]
        a, b, fa, fb = xs[i], xs[i + 1], vals[i], vals[i + 1]
        if b - a <= 4e-16 * max(abs(a), abs(b)):
            break
    return 0.5 * (a + b), n_eval


def solve_canonical(
    r: float, s: float, ctx: ThetaContext | None = None, tol: float = RESIDUAL_TOL
):
    """Full canonical solve: (r, s) -> (CanonicalModuli, SolverTrace).

    Raises RangeNormalizationError for parameters outside the normalized
    rectangle and BracketError when a root stage fails to bracket or the
    solved configuration misses the residual tolerance.
    """
    _check_rs(r, s)
    if ctx is None:
        ctx = ThetaContext.create(r)
    trace = SolverTrace(r=r, s=s)

    try:
        m, m_bracket, m_iters = solve_exponent(ctx, s)
        P = r ** (-2.0 * (m + 2.0))
        trace.m = m
        trace.exponent_bracket = m_bracket
        trace.exponent_iterations = m_iters

        z0s, vals = _outer_scan(ctx, s, P)
        trace.scan_points = int(z0s.size)
        changes = _sign_changes(z0s, vals)
        trace.outer_sign_changes = len(changes)
        if not changes:
            raise BracketError(f"outer pairing has no sign change for r={r}, s={s}")
        i = changes[0]
        trace.chosen_bracket = (float(z0s[i]), float(z0s[i + 1]))
        z0, outer_iters = _refine_bracket(
            ctx, s, P, float(z0s[i]), float(z0s[i + 1]), float(vals[i]), float(vals[i + 1])
        )
        trace.outer_iterations = outer_iters

        z2 = solve_inner_point(ctx, z0, s)
        z1 = P / z2
        c1 = slit_map(ctx, z1, complex(z0)).real
        c2 = slit_map(ctx, z2, complex(z0)).real
        a_R, b_R = fit_gauss_ratio(ctx, z0, z1, z2)
    except ThetaPoleError as exc:
        # thin annuli compress the probe lattice onto theta zeros
        raise BracketError(f"search stepped onto a theta zero for r={r}, s={s}: {exc}") from exc
    moduli = CanonicalModuli(
        r=r, s=s, m=m, z0=z0, z1=z1, z2=z2, c1=c1, c2=c2,
        a_R=a_R, b_R=b_R, c_height=abs(z1) * r ** (m + 1.0),
    )

    res = residuals(moduli, ctx)
    trace.residuals = res
    worst = max(abs(v) for v in res.values())
    if worst > tol:
        raise BracketError(f"solved configuration fails residual check: {res}")
    return moduli, trace


def residuals(moduli: CanonicalModuli, ctx: ThetaContext | None = None) -> dict:
    """Raw closing residuals of a configuration, from scratch.

    c1_res: period balance  m + c1 z1 - z1 R'(z1) + z2 R'(z2)
    c2_res: end balance     c1 z1 - c2 z2 - 2
    c3_res: product balance z1 z2 r^(2(m+2)) - 1

    All three vanish identically for correctly solved moduli; they are
    evaluated from the stored fields only, so corrupted files show up.
    """
    if ctx is None:
        ctx = ThetaContext.create(moduli.r)
    a = moduli.a_R
    rp1 = a * slit_map_deriv(ctx, moduli.z0, complex(moduli.z1)).real
    rp2 = a * slit_map_deriv(ctx, moduli.z0, complex(moduli.z2)).real
    c1_res = moduli.m + moduli.c1 * moduli.z1 - moduli.z1 * rp1 + moduli.z2 * rp2
    c2_res = moduli.c1 * moduli.z1 - moduli.c2 * moduli.z2 - 2.0
    c3_res = moduli.z1 * moduli.z2 * moduli.r ** (2.0 * (moduli.m + 2.0)) - 1.0
    return {"c1_res": float(c1_res), "c2_res": float(c2_res), "c3_res": float(c3_res)}
