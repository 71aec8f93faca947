"""Riesz-potential machinery: the F kernel, radial reduction, domain
membership, and the truncated Kato-class integral."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from rollnik_kit.errors import DomainError
from rollnik_kit.params import ModelParams
from rollnik_kit.riesz import (RadialPotential, ball_covariogram, domain_check,
                               f_beta, f_beta_at_one, f_beta_near_one_constant,
                               gamma_d, kato_truncated, omega_d, riesz_radial,
                               sigma_d)


# -- normalization constants ---------------------------------------------------

def test_gamma_d_closed_values():
    assert gamma_d(2.0, 3) == pytest.approx(4.0 * math.pi, rel=1e-14)
    assert gamma_d(1.0, 2) == pytest.approx(2.0 * math.pi, rel=1e-14)


def test_gamma_d_generic_value():
    # independent evaluation through the quadrature-based Gamma oracle
    from tests.test_specfun import gamma_oracle
    beta, d = 0.7, 1
    expected = (2.0 ** beta * math.pi ** 0.5 * gamma_oracle(beta / 2)
                / gamma_oracle((d - beta) / 2))
    assert gamma_d(beta, d) == pytest.approx(expected, rel=1e-11)


def test_gamma_d_domain():
    with pytest.raises(DomainError):
        gamma_d(3.0, 3)
    with pytest.raises(DomainError):
        gamma_d(0.0, 2)


def test_sphere_constants():
    assert sigma_d(3) == pytest.approx(4 * math.pi, rel=1e-14)
    assert sigma_d(2) == pytest.approx(2 * math.pi, rel=1e-14)
    assert sigma_d(1) == pytest.approx(2.0, rel=1e-14)
    assert omega_d(3) == pytest.approx(4 * math.pi / 3, rel=1e-14)


# -- the F kernel ---------------------------------------------------------------

def f_beta_angle_oracle(rho, beta, d):
    """Direct quadrature of the defining sphere-angle integral.

    d = 2 uses a Chebyshev-Gauss rule (exact for the (1-t^2)^{-1/2} weight),
    d = 3 plain adaptive quadrature; both independent of the library path.
    """
    c = (d - beta) / 2.0

    def core(t):
        z2 = np.maximum(1 + rho * rho - 2 * rho * t, 1e-280)
        return z2 ** (-c)

    if d == 2:
        prev = None
        for n in (512, 2048, 8192, 32768, 131072):
            k = np.arange(1, n + 1)
            t = np.cos((2 * k - 1) * math.pi / (2 * n))
            val = math.pi / n * float(np.sum(core(t)))
            if prev is not None and abs(val - prev) < 1e-9 * abs(val):
                break
            prev = val
        return sigma_d(1) * val
    val, _ = integrate.quad(core, -1, 1, limit=400,
                            points=[min(1.0, (1 + rho * rho) / (2 * rho))]
                            if rho > 0.5 else None)
    return sigma_d(d - 1) * val


@pytest.mark.parametrize("d,beta", [(3, 1.2), (3, 0.6), (2, 0.8), (2, 1.3)])
def test_f_beta_limit_at_zero(d, beta):
    assert abs(f_beta(1e-4, beta, d) / sigma_d(d) - 1.0) < 1e-3


@pytest.mark.parametrize("d,beta", [(3, 1.2), (2, 1.3)])
def test_f_beta_decay_at_infinity(d, beta):
    r = 10.0
    assert abs(f_beta(r, beta, d) / (sigma_d(d) * r ** (beta - d)) - 1.0) < 2e-2


@pytest.mark.parametrize("d,beta", [(3, 1.5), (2, 1.4)])
def test_f_beta_value_at_one(d, beta):
    # continuity point for beta > 1; value checked against the defining integral
    assert f_beta(1.0, beta, d) == pytest.approx(f_beta_at_one(beta, d), rel=1e-10)
    if d >= 2:
        # approach the continuity point: F(1) - F(1 -/+ eps) = O(eps^{beta-1})
        lim = f_beta_angle_oracle(1.0 - 1e-6, beta, d)
        assert f_beta(1.0, beta, d) == pytest.approx(lim, rel=5e-3)


@pytest.mark.parametrize("d", [2, 3])
def test_f_beta_matches_angle_oracle(d):
    beta = 0.9 if d == 2 else 1.4
    for rho in (0.2, 0.7, 1.3, 4.0):
        assert f_beta(rho, beta, d) == pytest.approx(
            f_beta_angle_oracle(rho, beta, d), rel=1e-7)


def test_f_beta_d3_closed_form_vs_quadrature():
    # the d = 3 evaluation uses an elementary antiderivative; cross-check it
    for beta, rho in [(1.2, 0.5), (1.2, 2.5), (0.7, 0.99), (1.0, 1.7)]:
        assert f_beta(rho, beta, 3) == pytest.approx(
            f_beta_angle_oracle(rho, beta, 3), rel=1e-8)


@pytest.mark.parametrize("d,beta", [(1, 0.6), (2, 0.7), (3, 0.8)])
def test_f_beta_blowup_constant_near_one(d, beta):
    # the remainder relative to the leading |rho-1|^{beta-1} term is
    # O(|rho-1|^{1-beta}); assert convergence at that rate
    c = f_beta_near_one_constant(beta, d)
    devs = []
    for eps in (1e-2, 1e-3, 1e-4):
        ratio = f_beta(1.0 - eps, beta, d) * eps ** (1.0 - beta) / c
        devs.append(abs(ratio - 1.0))
    assert devs[0] > devs[1] > devs[2]
    assert devs[2] < 3.0 * (1e-4) ** (1.0 - beta)
    # two-sided: same constant from above
    ratio_hi = f_beta(1.0 + 1e-4, beta, d) * (1e-4) ** (1.0 - beta) / c
    assert abs(ratio_hi - 1.0) < 3.0 * (1e-4) ** (1.0 - beta)


def test_f_beta_singularity_raises():
    with pytest.raises(DomainError):
        f_beta(1.0, 0.8, 3)


def test_f_beta_positive_and_continuous():
    d, beta = 3, 1.3
    rho = np.linspace(0.05, 3.0, 80)
    rho = rho[np.abs(rho - 1.0) > 1e-3]
    vals = f_beta(rho, beta, d)
    assert np.all(vals > 0)
    # crude continuity: neighbouring values close away from rho = 1
    away = np.abs(rho[:-1] - 1.0) > 0.1
    rel_jump = np.abs(np.diff(vals)) / vals[:-1]
    assert np.all(rel_jump[away] < 0.2)


# -- domain membership ----------------------------------------------------------

def test_domain_check_power_counting():
    assert domain_check(RadialPotential.coulomb_inner(1.2), 0.9, 3)
    assert not domain_check(RadialPotential.coulomb_inner(3.2), 0.9, 3)
    # outer tail: finite iff beta2 > beta
    assert domain_check(RadialPotential.coulomb_outer(1.5), 0.9, 3)
    assert not domain_check(RadialPotential.coulomb_outer(0.5), 0.9, 3)
    assert domain_check(RadialPotential.gaussian(1.0), 0.9, 3)
    assert domain_check(RadialPotential.ball_indicator(2.0), 0.9, 3)


# -- radial Riesz potential -------------------------------------------------------

def test_riesz_radial_zero_potential():
    zero = RadialPotential.tabulated([0.0, 1.0], [0.0, 0.0])
    assert riesz_radial(zero, 1.4, 0.7, 3) == pytest.approx(0.0, abs=1e-12)


def test_riesz_radial_ball_at_origin():
    d, beta, R = 3, 1.4, 1.0
    g = RadialPotential.ball_indicator(R)
    expected = sigma_d(d) * R ** beta / (gamma_d(beta, d) * beta)
    assert riesz_radial(g, beta, 0.0, d) == pytest.approx(expected, rel=1e-8)


def direct_riesz_oracle(g, beta, x, d):
    """gamma_d(beta)^{-1} int g(|y|) |x e1 - y|^{beta-d} dy by 2-d quadrature."""
    p = (d - 3) / 2.0

    def inner(r):
        def h(t):
            z2 = x * x + r * r - 2 * x * r * t
            return (1 - t * t) ** p * np.maximum(z2, 1e-300) ** ((beta - d) / 2.0)

        v, _ = integrate.quad(h, -1, 1, limit=300)
        return sigma_d(d - 1) * v * float(g.profile(r)) * r ** (d - 1)

    lo, hi = g.support_cut
    hi = min(hi, 40.0)
    v, _ = integrate.quad(inner, lo, hi, limit=300,
                          points=[x] if lo < x < hi else None)
    return v / gamma_d(beta, d)


def test_riesz_radial_convention_against_direct_convolution():
    # fixes the (field radius)/(source radius) argument convention of F;
    # the 2-d angular oracle itself is good to ~1e-4
    g = RadialPotential.gaussian(1.0)
    d, beta, x = 3, 1.4, 0.8
    assert riesz_radial(g, beta, x, d) == pytest.approx(
        direct_riesz_oracle(g, beta, x, d), rel=5e-4)


def test_riesz_radial_against_fourier_route():
    # sharper oracle: multiplier route |xi|^{-beta} ghat on the Fourier side
    from rollnik_kit.quadrature import oscillatory_radial_transform
    g = RadialPotential.gaussian(1.0)
    d, beta, x = 3, 1.4, 0.8
    f = lambda s: s ** (-beta) * (2 * math.pi) ** 1.5 * np.exp(-s * s / 2.0)
    ref, _ = oscillatory_radial_transform(f, x, d)
    assert riesz_radial(g, beta, x, d) == pytest.approx(ref, rel=1e-7)


def test_riesz_radial_ball_off_origin_against_fourier():
    # hat(1_{B_1}) in d = 3 is 4 pi (sin s - s cos s)/s^3; multiplier route
    from rollnik_kit.quadrature import oscillatory_radial_transform
    g = RadialPotential.ball_indicator(1.0)
    d, beta, x = 3, 1.1, 0.6
    f = lambda s: s ** (-beta) * 4 * math.pi * (np.sin(s) - s * np.cos(s)) / s ** 3
    ref, _ = oscillatory_radial_transform(f, x, d)
    assert riesz_radial(g, beta, x, d) == pytest.approx(ref, rel=1e-8)


def test_riesz_semigroup_property():
    # I_b1 (I_b2 g) = I_{b1+b2} g for a Gaussian, evaluated at one point
    d = 3
    b1 = b2 = 0.5
    x = 0.7
    g = RadialPotential.gaussian(1.0)
    inner_radii = np.linspace(0.0, 14.0, 141)
    inner_vals = [riesz_radial(g, b2, r, d, ) for r in inner_radii]
    g_inner = RadialPotential.tabulated(inner_radii[1:], inner_vals[1:])
    lhs = riesz_radial(g_inner, b1, x, d)
    rhs = riesz_radial(g, b1 + b2, x, d)
    assert lhs == pytest.approx(rhs, rel=1e-3)


@settings(max_examples=10, deadline=None)
@given(st.floats(min_value=0.2, max_value=2.0), st.floats(min_value=0.2, max_value=2.0))
def test_riesz_radial_linear(c1, c2):
    d, beta, x = 3, 1.3, 0.5
    g = RadialPotential.gaussian(1.0)
    v1 = riesz_radial(RadialPotential.gaussian(1.0, amplitude=c1), beta, x, d)
    v0 = riesz_radial(g, beta, x, d)
    assert v1 == pytest.approx(c1 * v0, rel=1e-9)


# -- truncated Kato integral -------------------------------------------------------

def test_kato_truncated_zero_potential():
    zero = RadialPotential.tabulated([0.0, 1.0], [0.0, 0.0])
    p = ModelParams(3, 1.5, lam=1.0)
    assert kato_truncated(zero, 0.1, 0.0, p) == pytest.approx(0.0, abs=1e-12)


def test_kato_truncated_coulomb_vanishes_with_delta():
    # subcritical local Coulomb singularity: sup_x of the truncated integral
    # is attained at the origin and vanishes as delta -> 0
    p = ModelParams(3, 1.5, lam=1.0)
    V = RadialPotential.coulomb_inner(1.0)
    vals = [kato_truncated(V, dlt, 0.0, p) for dlt in (0.1, 0.01, 0.001)]
    assert vals[0] > vals[1] > vals[2] > 0
    # decay rate is delta^{alpha - beta} = delta^{1/2} here
    assert vals[2] / vals[0] == pytest.approx(0.01 ** 0.5, rel=1e-6)


def test_kato_truncated_log_potential_diverges():
    p = ModelParams(3, 1.5, lam=1.0)
    V = RadialPotential.log_inner(0.75, p.alpha)
    assert kato_truncated(V, 0.2, 0.0, p) == math.inf
    # off-center the integral is finite (the profile is locally integrable)
    assert math.isfinite(kato_truncated(V, 0.05, 0.3, p))


def test_kato_truncated_closed_form_cross_check():
    # V = coulomb_inner(beta) at the origin: value is sigma_d * delta^(a-b)/(a-b)
    d, alpha, beta = 3, 1.5, 1.0
    p = ModelParams(d, alpha, lam=1.0)
    V = RadialPotential.coulomb_inner(beta)
    delta = 0.5
    expected = sigma_d(d) * delta ** (alpha - beta) / (alpha - beta)
    assert kato_truncated(V, delta, 0.0, p) == pytest.approx(expected, rel=1e-6)


def test_ball_covariogram_basics():
    assert ball_covariogram(0.0, 1.0, 3) == pytest.approx(4 * math.pi / 3, rel=1e-12)
    assert ball_covariogram(2.0, 1.0, 3) == 0.0
    assert ball_covariogram(0.0, 1.0, 2) == pytest.approx(math.pi, rel=1e-12)
    assert ball_covariogram(1.0, 1.0, 1) == pytest.approx(1.0, rel=1e-12)
