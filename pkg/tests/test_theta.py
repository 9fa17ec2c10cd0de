from __future__ import annotations

import numpy as np
import pytest

from flatfront import theta as T


# Frozen from a 200-term product evaluated with mpmath at 50 digits
# (tests/oracles.py regenerates them).
ORACLE_VALUES = [
    (0.25, -0.5 + 0.0j, 3.2832651213103077326 + 0.0j),
    (0.25, -0.6 + 0.0j, 2.8789964218728740109 + 0.0j),
    (0.5, 1.7 + 0.0j, 0.11408346130768146677 + 0.0j),
    (0.5, -0.9 + 0.3j, 2.4690921042439543844 + 0.43172726050204798093j),
    (0.7, 0.123 + 0.456j, -0.63374642751064652233 + 0.19297563422990953211j),
    # arguments far outside the band exercise the reduction identities
    (0.25, 17.0 - 3.0j, -0.051256000007092564636 + 0.15275567612317309044j),
    (0.25, 0.004 + 0.001j, 540.26440105428274913 + 493.72251158065927406j),
]

ORACLE_DERIV = 4.9489821943566318915  # theta1' at z = -0.5, r = 0.25
C_CUBED_R_HALF = 0.3264245884522549851  # C^3 at r = 0.5, equals theta1'(1)

RADII = [0.1, 0.25, 0.5, 0.7]


def _sample_annulus(r: float, n: int, seed: int = 7) -> np.ndarray:
    rng = np.random.default_rng(seed)
    rho = np.exp(rng.uniform(np.log(r), 0.0, n))
    ang = rng.uniform(-np.pi, np.pi, n)
    return rho * np.exp(1j * ang)


def test_context_construction() -> None:
    ctx = T.ThetaContext.create(0.25)
    assert ctx.r ** (2 * ctx.n_terms) < T.TRUNCATION_TOL
    assert 0.0 < ctx.c_const < 1.0
    with pytest.raises(ValueError):
        T.ThetaContext.create(1.5)
    with pytest.raises(ValueError):
        T.ThetaContext.create(0.0)


def test_zeros_are_exact() -> None:
    ctx = T.ThetaContext.create(0.5)
    assert T.theta1(ctx, 1.0) == 0.0
    assert T.theta1(ctx, 0.25) == 0.0  # r^2
    assert T.theta1(ctx, 4.0) == 0.0  # r^-2


def test_high_precision_product_oracle() -> None:
    for r, z, want in ORACLE_VALUES:
        ctx = T.ThetaContext.create(r)
        got = T.theta1(ctx, z)
        assert abs(got - want) <= 1e-13 * abs(want)


def test_derivative_against_oracle_and_fd() -> None:
    ctx = T.ThetaContext.create(0.25)
    got = T.dtheta1(ctx, -0.5)
    assert abs(got - ORACLE_DERIV) < 1e-12 * ORACLE_DERIV
    # centered finite difference of theta1 as an independent route
    h = 1e-6
    fd = (T.theta1(ctx, -0.5 + h) - T.theta1(ctx, -0.5 - h)) / (2 * h)
    assert abs(fd - got) < 1e-7 * abs(got)


def test_derivative_at_zero_nonzero_real() -> None:
    # zeros are simple: theta1'(1) != 0; its value is C^3
    ctx = T.ThetaContext.create(0.5)
    d = T.dtheta1(ctx, 1.0)
    assert d.imag == 0.0
    assert d.real > 0.0
    assert abs(d - C_CUBED_R_HALF) < 1e-14
    h = 1e-6
    fd = (T.theta1(ctx, 1.0 + h) - T.theta1(ctx, 1.0 - h)) / (2 * h)
    assert abs(fd - d) < 1e-8


def test_functional_equations() -> None:
    for r in RADII:
        ctx = T.ThetaContext.create(r)
        z = _sample_annulus(r, 200)
        th = T.theta1(ctx, z)
        scale = np.abs(th) + 1.0
        a = th - (-(r * r) * z * T.theta1(ctx, r * r * z))
        b = th - (-(1.0 / z) * T.theta1(ctx, 1.0 / z))
        c = T.theta1(ctx, z / (r * r)) - (-z * th)
        assert np.max(np.abs(a) / scale) < 1e-12
        assert np.max(np.abs(b) / scale) < 1e-12
        assert np.max(np.abs(c) / (scale / (r * r))) < 1e-12


def test_conjugation_symmetry() -> None:
    for r in RADII:
        ctx = T.ThetaContext.create(r)
        z = _sample_annulus(r, 100, seed=3)
        lhs = T.theta1(ctx, z)
        rhs = np.conj(T.theta1(ctx, np.conj(z)))
        assert np.array_equal(lhs, rhs)


def test_derivative_functional_equations() -> None:
    r = 0.25
    ctx = T.ThetaContext.create(r)
    z = np.array([-0.6 + 0.0j, 0.3 + 0.4j, -0.9 - 0.2j, 1.8 + 0.1j])
    d = T.dtheta1(ctx, z)
    rhs1 = -(r**2) * T.theta1(ctx, r * r * z) - r**4 * z * T.dtheta1(ctx, r * r * z)
    rhs2 = T.theta1(ctx, 1.0 / z) / z**2 + T.dtheta1(ctx, 1.0 / z) / z**3
    lhs3 = T.dtheta1(ctx, z / r**2)
    rhs3 = -(r**2) * T.theta1(ctx, z) - r**2 * z * T.dtheta1(ctx, z)
    scale = np.abs(d) + 1.0
    assert np.max(np.abs(d - rhs1) / scale) < 1e-12
    assert np.max(np.abs(d - rhs2) / scale) < 1e-12
    assert np.max(np.abs(lhs3 - rhs3) / (scale / r**2)) < 1e-12


def test_truncation_convergence() -> None:
    # doubling the number of factors moves values by less than 1e-14 relative
    for r in (0.25, 0.7):
        ctx = T.ThetaContext.create(r)
        wide = ctx.with_terms(2 * ctx.n_terms)
        z = _sample_annulus(r, 50, seed=11)
        z = np.concatenate([z, z / r, z * r])  # spans [r^2-ish, 1/r-ish] moduli
        a = T.theta1(ctx, z)
        b = T.theta1(wide, z)
        assert np.max(np.abs(a - b) / (np.abs(b) + 1e-300)) < 1e-14


def test_domain_errors() -> None:
    ctx = T.ThetaContext.create(0.25)
    with pytest.raises(ValueError):
        T.theta1(ctx, 0.0)
    with pytest.raises(T.ThetaPoleError) as err:
        T.log_slope(ctx, ctx.r**2)
    assert err.value.location == pytest.approx(ctx.r**2)
    with pytest.raises(ValueError, match="too close to 1"):
        T.ThetaContext.create(0.9999)


def test_log_slope_identities() -> None:
    for r in RADII:
        ctx = T.ThetaContext.create(r)
        assert abs(T.log_slope(ctx, r) + 1.0) < 1e-10
        z = _sample_annulus(r, 200, seed=5)
        h = T.log_slope(ctx, z)
        assert np.max(np.abs(h - 1.0 - T.log_slope(ctx, r * r * z))) < 1e-10
        assert np.max(np.abs(h + T.log_slope(ctx, 1.0 / z) + 1.0)) < 1e-10


def test_log_slope_real_interval_ranges() -> None:
    # on (r^2, r) values exceed -1; on (r, 1) they stay below -1
    r = 0.25
    ctx = T.ThetaContext.create(r)
    lo = np.linspace(r * r * 1.001, r * 0.999, 41)
    hi = np.linspace(r * 1.001, 0.999, 41)
    assert np.all(T.log_slope(ctx, lo.astype(complex)).real > -1.0)
    assert np.all(T.log_slope(ctx, hi.astype(complex)).real < -1.0)
    # blow-up toward the interval ends
    assert T.log_slope(ctx, r * r * 1.0001).real > 1e2
    assert T.log_slope(ctx, 0.99999).real < -1e3


def test_pair_slope_interval_positions() -> None:
    # center z0 = -0.5 at r = 0.25: values exceed -1 left of the center,
    # and drop below -2 between the center and -r
    ctx = T.ThetaContext.create(0.25)
    z0 = -0.5
    assert T.pair_slope(ctx, z0, -0.99).real > -1.0
    assert T.pair_slope(ctx, z0, -0.45).real < -2.0


def test_pair_slope_endpoint_value() -> None:
    # at z = -1 the two arguments are reciprocal, so the sum is exactly -1
    for r in (0.1, 0.25, 0.5):
        ctx = T.ThetaContext.create(r)
        got = T.pair_slope(ctx, -0.5 - 0.25 * r, -1.0)
        assert abs(got - (-1.0)) < 1e-11


def test_scalar_and_array_shapes() -> None:
    ctx = T.ThetaContext.create(0.25)
    val = T.theta1(ctx, -0.5)
    assert isinstance(val, complex)
    arr = T.theta1(ctx, np.full((3, 4), -0.5, dtype=complex))
    assert arr.shape == (3, 4)
    assert np.allclose(arr, val)
