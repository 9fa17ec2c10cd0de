"""Conformal data on the annulus r < |z| < 1 built from theta products.

The moduli of a two-singularity surface are three real markers
z2 < z0 < z1 in (-1, -r) plus derived constants.  From them the module
evaluates:

* ``slit_map`` - the residue-one meromorphic map with a single simple pole
  at a marker (real on the boundary circles),
* ``gauss_ratio`` - the affine combination R = a_R * slit_map + b_R
  normalized by R(z1) = 1, R(z2) = 0, with its simple pole at z0,
* ``theta_quotient`` - the quotient theta1(marker/z) / theta1(marker z),
  unimodular on |z| = 1,
* ``gauss_map`` - g = sqrt(W) / z for W = R/(1-R) * Q1/Q2, with a
  deterministic square-root branch tracked by continued logarithms,
* ``potential`` - the harmonic function u with exp(2u) = |Q1 z^m / (1-R)|,
* ``inv_gauss_gap`` / ``second_gauss_map`` - F = R/g and g* = g - 1/F.

W is zero- and pole-free on the closed annulus: every singularity of the
building blocks cancels pairwise.  The evaluators below use fused forms so
the cancellation happens analytically, not by dividing huge by huge.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from functools import lru_cache

import numpy as np

from .theta import ThetaContext, _as_flat, _eval, _finish, log_slope, log_slope_deriv

ANNULUS_SLACK = 1e-12

# Tagged value for the second Gauss map at points where F vanishes.
AT_INFINITY = complex(np.inf, np.inf)


def is_at_infinity(w) -> bool:
    return bool(np.isinf(np.real(w)) or np.isinf(np.imag(w)))


class DegenerateConfigurationError(ValueError):
    """Marker configuration that does not pin down the ratio map."""


class RepresentationError(ValueError):
    """The square root of W cannot be tracked to a single-valued branch."""


@dataclass(frozen=True)
class CanonicalModuli:
    """Solved marker configuration for a two-singularity surface.

    Orderings: -1 < z2 < z0 < z1 < -r, with s in (-1, 0) and m in (-3, -2).
    c_height is the height |z1| r^(m+1) of the inner singular point.
    """

    r: float
    s: float
    m: float
    z0: float
    z1: float
    z2: float
    c1: float
    c2: float
    a_R: float
    b_R: float
    c_height: float

    def __post_init__(self):
        if not 0.0 < self.r < 1.0:
            raise ValueError("r must lie in (0, 1)")
        if not -1.0 < self.s < 0.0:
            raise ValueError("s must lie in (-1, 0)")
        if not (-1.0 < self.z2 < self.z0 < self.z1 < -self.r):
            raise ValueError("markers must satisfy -1 < z2 < z0 < z1 < -r")
        if not self.c_height > 0.0:
            raise ValueError("c_height must be positive")

    def context(self) -> ThetaContext:
        return _context_for(self.r)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "CanonicalModuli":
        return cls(**{f.name: float(data[f.name]) for f in fields(cls)})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CanonicalModuli":
        return cls.from_dict(json.loads(text))


@lru_cache(maxsize=64)
def _context_for(r: float) -> ThetaContext:
    return ThetaContext.create(r)


def _require_annulus(ctx: ThetaContext, flat, who: str):
    a = np.abs(flat)
    if (a < ctx.r - ANNULUS_SLACK).any() or (a > 1.0 + ANNULUS_SLACK).any():
        raise ValueError(f"{who}: argument outside the closed annulus [{ctx.r}, 1]")


def slit_map(ctx: ThetaContext, marker: float, z, on_pole: str = "raise"):
    """Meromorphic map with one simple pole (residue 1) at ``marker``.

    Maps the annulus onto the plane minus two horizontal slits; real on
    |z| = 1 and |z| = r.  Equals -(log_slope(marker/z) + log_slope(marker z))
    / marker, which doubles as a cross-check route.
    """
    flat, shape, scalar = _as_flat(z)
    _require_annulus(ctx, flat, "slit_map")
    out = -(
        log_slope(ctx, marker / flat, on_pole=on_pole)
        + log_slope(ctx, marker * flat, on_pole=on_pole)
    ) / marker
    return _finish(scalar, shape, out)


def slit_map_deriv(ctx: ThetaContext, marker: float, z, on_pole: str = "raise"):
    """d slit_map / dz."""
    flat, shape, scalar = _as_flat(z)
    _require_annulus(ctx, flat, "slit_map_deriv")
    out = log_slope_deriv(ctx, marker / flat, on_pole=on_pole) / (flat * flat) - log_slope_deriv(
        ctx, marker * flat, on_pole=on_pole
    )
    return _finish(scalar, shape, out)


def theta_quotient(ctx: ThetaContext, marker: float, z):
    """theta1(marker / z) / theta1(marker * z).

    For a marker in (-1, -r) the denominator never vanishes on the closed
    annulus, and the quotient's only zero there is z = marker (simple).
    Unimodular on |z| = 1.
    """
    flat, shape, scalar = _as_flat(z)
    _require_annulus(ctx, flat, "theta_quotient")
    num, _, _ = _eval(ctx, marker / flat, 0)
    den, _, _ = _eval(ctx, marker * flat, 0)
    return _finish(scalar, shape, num / den)


def fit_gauss_ratio(ctx: ThetaContext, z0: float, z1: float, z2: float):
    """Coefficients (a_R, b_R) with R = a_R slit_map(z0, .) + b_R, R(z1)=1, R(z2)=0."""
    q_at_1 = slit_map(ctx, z0, complex(z1))
    q_at_2 = slit_map(ctx, z0, complex(z2))
    gap = q_at_1 - q_at_2
    if abs(gap) < 1e-12 * (abs(q_at_1) + abs(q_at_2) + 1.0):
        raise DegenerateConfigurationError(
            f"slit map takes equal values at z1={z1} and z2={z2}"
        )
    if max(abs(q_at_1.imag), abs(q_at_2.imag)) > 1e-10 * (1.0 + abs(gap)):
        raise DegenerateConfigurationError("slit map not real at real markers")
    a = 1.0 / gap.real
    b = -a * q_at_2.real
    return a, b


def gauss_ratio(moduli: CanonicalModuli, ctx: ThetaContext, z, on_pole: str = "raise"):
    """R(z) = a_R * slit_map(z0, z) + b_R; simple pole at z0."""
    return moduli.a_R * slit_map(ctx, moduli.z0, z, on_pole=on_pole) + moduli.b_R


def gauss_ratio_deriv(moduli: CanonicalModuli, ctx: ThetaContext, z, on_pole: str = "raise"):
    return moduli.a_R * slit_map_deriv(ctx, moduli.z0, z, on_pole=on_pole)


@lru_cache(maxsize=128)
def _marker_ratio_derivs(moduli: CanonicalModuli, ctx: ThetaContext):
    """R'(z1) and R'(z2) as floats (cached; both are real and nonzero)."""
    d1 = gauss_ratio_deriv(moduli, ctx, complex(moduli.z1))
    d2 = gauss_ratio_deriv(moduli, ctx, complex(moduli.z2))
    return d1.real, d2.real


def _pole_times_quotient(ctx: ThetaContext, marker: float, shift: float, flat):
    """(slit_map(marker, z) - shift) * theta_quotient(marker, z), fused.

    The simple pole of the slit map at ``marker`` and the simple zero of the
    quotient cancel; this form never divides by theta1(marker / z), so it is
    regular on the whole closed annulus (the only divisions are by
    theta1(marker z), which cannot vanish there, and by z).  Returns the
    fused value together with the plain quotient theta1(marker/z) /
    theta1(marker z), which callers reuse.
    """
    w1 = marker / flat
    w2 = marker * flat
    t1, d1, _ = _eval(ctx, w1, 1)
    t2, d2, _ = _eval(ctx, w2, 1)
    quot = t1 / t2
    return -d1 / (flat * t2) - (flat * d2 / t2 + shift) * quot, quot


def gauss_map_square(moduli: CanonicalModuli, ctx: ThetaContext, z):
    """W(z) = R/(1-R) * Q1/Q2 = (z * gauss_map)^2, branch-free.

    Zero- and pole-free on the closed annulus.  Two fused forms cover the
    cancellations: the default is regular at z0 and z1; within 1e-3 of z2 a
    second form regular at z1 and z2 takes over.
    """
    flat, shape, scalar = _as_flat(z)
    _require_annulus(ctx, flat, "gauss_map_square")
    rp1, rp2 = _marker_ratio_derivs(moduli, ctx)

    fused1, q1_quot = _pole_times_quotient(ctx, moduli.z1, moduli.c1, flat)
    num2, _, _ = _eval(ctx, moduli.z2 / flat, 0)
    den2, _, _ = _eval(ctx, moduli.z2 * flat, 0)
    # num2 vanishes at z2 itself; those entries are overwritten below.
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -(q1_quot + fused1 / rp1) * (den2 / num2)

    near2 = np.abs(flat - moduli.z2) < min(1e-3, 0.25 * (moduli.z0 - moduli.z2))
    if near2.any():
        fused2, _ = _pole_times_quotient(ctx, moduli.z2, moduli.c2, flat[near2])
        out[near2] = -(rp2 / rp1) * fused1[near2] / fused2
    return _finish(scalar, shape, out)


def gauss_square_log_deriv(moduli: CanonicalModuli, ctx: ThetaContext, z, on_pole: str = "raise"):
    """W'/W = R'/(R(1-R)) + (z1 q1(z) - z2 q2(z)) / z.

    The poles at z1 and z2 cancel between the two groups; the subtraction
    loses accuracy within ~1e-6 of those markers but is exact elsewhere.
    """
    flat, shape, scalar = _as_flat(z)
    R = gauss_ratio(moduli, ctx, flat, on_pole=on_pole)
    Rp = gauss_ratio_deriv(moduli, ctx, flat, on_pole=on_pole)
    q1v = slit_map(ctx, moduli.z1, flat, on_pole=on_pole)
    q2v = slit_map(ctx, moduli.z2, flat, on_pole=on_pole)
    out = Rp / (R * (1.0 - R)) + (moduli.z1 * q1v - moduli.z2 * q2v) / flat
    return _finish(scalar, shape, out)


# --- square-root branch ------------------------------------------------

_BRANCH_CHUNK = 4096
_K_CIRC = 160
_K_RAD = 80


def gauss_square_winding(moduli: CanonicalModuli, ctx: ThetaContext, n_steps: int = 4096) -> int:
    """Winding number of W around the core circle |z| = sqrt(r)."""
    th = np.linspace(0.0, 2.0 * np.pi, n_steps + 1)
    ring = np.sqrt(moduli.r) * np.exp(1j * th)
    vals = gauss_map_square(moduli, ctx, ring)
    inc = np.log(vals[1:] / vals[:-1])
    if np.abs(inc.imag).max() > 2.0:
        raise RepresentationError("winding audit needs more steps")
    total = inc.imag.sum() / (2.0 * np.pi)
    n = int(round(total))
    if abs(total - n) > 1e-6:
        raise RepresentationError(f"winding of W did not close up: {total}")
    return n


@lru_cache(maxsize=128)
def _winding_cached(moduli: CanonicalModuli, ctx: ThetaContext) -> int:
    return gauss_square_winding(moduli, ctx)


def _refined_increments(moduli, ctx, pathfn, n_cols, K):
    """Sum of continued-log increments of W along per-column paths.

    pathfn(t, cols) returns path points, shape (len(t), len(cols)).  Steps
    whose phase jump nears the wrap limit are retried on finer grids.
    """
    t = np.linspace(0.0, 1.0, K + 1)
    cols = np.arange(n_cols)
    vals = gauss_map_square(moduli, ctx, pathfn(t, cols))
    inc = np.log(vals[1:] / vals[:-1])
    total = inc.sum(axis=0)
    bad = np.abs(inc.imag).max(axis=0) > 2.0
    if bad.any():
        sub = cols[bad]
        for factor in (8, 64):
            tf = np.linspace(0.0, 1.0, factor * K + 1)
            vf = gauss_map_square(moduli, ctx, pathfn(tf, sub))
            incf = np.log(vf[1:] / vf[:-1])
            if np.abs(incf.imag).max() <= 2.0:
                total[bad] = incf.sum(axis=0)
                break
        else:
            raise RepresentationError("branch tracking failed along evaluation path")
    return total


def _log_gauss_square_chunk(moduli, ctx, flat):
    rr = np.sqrt(moduli.r)
    base = gauss_map_square(moduli, ctx, np.array([-rr + 0.0j]))[0]
    L0 = np.log(base)
    th = np.angle(flat)
    logm = np.log(np.abs(flat))

    def circ(t, cols):
        ang = np.pi + np.multiply.outer(t, th[cols] - np.pi)
        return rr * np.exp(1j * ang)

    def rad(t, cols):
        lm = np.log(rr) + np.multiply.outer(t, logm[cols] - np.log(rr))
        return np.exp(lm + 1j * th[cols][None, :])

    total = _refined_increments(moduli, ctx, circ, flat.size, _K_CIRC)
    total = total + _refined_increments(moduli, ctx, rad, flat.size, _K_RAD)
    return L0 + total


def _log_gauss_square(moduli, ctx, flat):
    """Continued log of W along canonical paths from the base point -sqrt(r).

    Per point: a circular leg at |z| = sqrt(r) from angle pi to arg(z), then
    a radial leg to |z|.  W has even winding around the core for valid
    moduli, so exp(L/2) is independent of the wrap convention at arg = pi.
    """
    out = np.empty(flat.shape, dtype=np.complex128)
    for start in range(0, flat.size, _BRANCH_CHUNK):
        sl = slice(start, min(start + _BRANCH_CHUNK, flat.size))
        out[sl] = _log_gauss_square_chunk(moduli, ctx, flat[sl])
    return out


def gauss_map(moduli: CanonicalModuli, ctx: ThetaContext, z):
    """The hyperbolic Gauss map g = sqrt(W) / z on the closed annulus.

    Holomorphic and zero-free; the square-root branch is the continued-log
    branch based at -sqrt(r), which makes repeated evaluations consistent
    with each other.  Raises RepresentationError when the winding audit of
    W says no single-valued branch exists.
    """
    flat, shape, scalar = _as_flat(z)
    _require_annulus(ctx, flat, "gauss_map")
    w = _winding_cached(moduli, ctx)
    if w != 0:
        raise RepresentationError(f"W winds {w} times around the core; branch undefined")
    L = _log_gauss_square(moduli, ctx, flat)
    return _finish(scalar, shape, np.exp(0.5 * L) / flat)


def gauss_map_deriv(moduli: CanonicalModuli, ctx: ThetaContext, z, g_val=None):
    """g'(z) = g(z) * (W'/(2W) - 1/z)."""
    flat, shape, scalar = _as_flat(z)
    if g_val is None:
        g_val = gauss_map(moduli, ctx, flat)
    g_flat = np.asarray(g_val, dtype=np.complex128).reshape(flat.shape)
    out = g_flat * (0.5 * gauss_square_log_deriv(moduli, ctx, flat) - 1.0 / flat)
    return _finish(scalar, shape, out)


# --- potential and Gauss-map gap ----------------------------------------


def potential(moduli: CanonicalModuli, ctx: ThetaContext, z, on_pole: str = "raise"):
    """Harmonic potential u with exp(2u) = |Q1(z) z^m / (1 - R(z))|.

    Blows up logarithmically at the end z0 (where R has its pole); the
    evaluation there raises the underlying pole error.
    """
    flat, shape, scalar = _as_flat(z)
    _require_annulus(ctx, flat, "potential")
    q1 = np.abs(theta_quotient(ctx, moduli.z1, flat))
    R = gauss_ratio(moduli, ctx, flat, on_pole=on_pole)
    out = 0.5 * (np.log(q1) + moduli.m * np.log(np.abs(flat)) - np.log(np.abs(1.0 - R)))
    out = np.asarray(out.real if np.iscomplexobj(out) else out, dtype=float)
    return float(out[0]) if scalar else out.reshape(shape)


def inv_gauss_gap(moduli: CanonicalModuli, ctx: ThetaContext, z, g_val=None):
    """F = R / g = 1 / (g - g*); simple pole at z0, zero at z2."""
    flat, shape, scalar = _as_flat(z)
    if g_val is None:
        g_val = gauss_map(moduli, ctx, flat)
    g_flat = np.asarray(g_val, dtype=np.complex128).reshape(flat.shape)
    out = gauss_ratio(moduli, ctx, flat) / g_flat
    return _finish(scalar, shape, out)


def second_gauss_map(moduli: CanonicalModuli, ctx: ThetaContext, z, g_val=None):
    """g* = g (R - 1) / R; the tagged value AT_INFINITY where R = 0 (at z2)."""
    flat, shape, scalar = _as_flat(z)
    if g_val is None:
        g_val = gauss_map(moduli, ctx, flat)
    g_flat = np.asarray(g_val, dtype=np.complex128).reshape(flat.shape)
    R = gauss_ratio(moduli, ctx, flat)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = g_flat * (R - 1.0) / R
    out = np.where(np.abs(R) < 1e-300, AT_INFINITY, out)
    return _finish(scalar, shape, out)
