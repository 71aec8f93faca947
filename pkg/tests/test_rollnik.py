"""Norm routes, membership classification, closed forms, and the comparison
inequalities for radial potentials."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rollnik_kit.errors import DomainError, RegimeError
from rollnik_kit.params import ModelParams
from rollnik_kit.riesz import RadialPotential, gamma_d, omega_d, sigma_d
from rollnik_kit.rollnik import (NormResult, ball_indicator_norm_sq,
                                 classify_potential, extended_seminorm,
                                 fractional_perimeter_ball, l1l2_bound_check,
                                 mu_coefficient, probe_divergence,
                                 profile_bound_check, radial_autocorrelation,
                                 rollnik_norm, rollnik_norm_routes,
                                 scalar_product_norm)

P37 = ModelParams(3, 1.7, lam=1.0)


# -- closed forms -------------------------------------------------------------

def test_mu_coefficient_continuity_at_s_one():
    # the coefficient is analytic in s; no special value is needed at s = 1
    d = 3
    eps = 1e-7
    assert mu_coefficient(1.0, d) == pytest.approx(
        0.5 * (mu_coefficient(1.0 - eps, d) + mu_coefficient(1.0 + eps, d)),
        rel=1e-9)


def test_ball_norm_classical_corner():
    # (d, alpha) = (3, 2): classical value 4 pi^2 for the unit ball
    p = ModelParams(3, 2.0, lam=1.0)
    assert ball_indicator_norm_sq(omega_d(3), p) == pytest.approx(
        4.0 * math.pi ** 2, rel=1e-12)


def test_ball_norm_covariogram_oracle():
    # independent evaluation: iint_{BxB} |x-y|^{2a-2d} via the covariogram
    from scipy import integrate
    from rollnik_kit.riesz import ball_covariogram
    for (d, alpha) in [(3, 1.7), (2, 1.4)]:
        p = ModelParams(d, alpha, lam=1.0)
        expo = 2.0 * alpha - 2.0 * d

        def f(u):
            return u ** (expo + d - 1) * ball_covariogram(u, 1.0, d) * sigma_d(d)

        val, _ = integrate.quad(f, 0.0, 2.0, limit=200)
        assert ball_indicator_norm_sq(omega_d(d), p) == pytest.approx(val, rel=1e-9)


def test_ball_norm_scaling_exponent():
    # R^{2 alpha} volume scaling
    p = P37
    v1 = ball_indicator_norm_sq(omega_d(3), p)
    v2 = ball_indicator_norm_sq(omega_d(3) * 8.0, p)  # radius 2
    assert v2 / v1 == pytest.approx(2.0 ** (2 * 1.7), rel=1e-12)


# -- the three routes -----------------------------------------------------------

def test_zero_potential_norm():
    zero = RadialPotential.tabulated([0.0, 1.0], [0.0, 0.0])
    res = rollnik_norm(zero, P37, "direct")
    assert res.value == 0.0 and res.finite


def test_routes_agree_gaussian():
    g = RadialPotential.gaussian(1.0)
    out = rollnik_norm_routes(g, P37)
    vals = [out[r].value for r in ("direct", "radial_reduction", "plancherel")]
    for a in vals:
        for b in vals:
            assert abs(a - b) / max(vals) < 1e-3


def test_routes_agree_ball_closed_form():
    ball = RadialPotential.ball_indicator(1.0)
    closed = math.sqrt(ball_indicator_norm_sq(omega_d(3), P37))
    for route in ("direct", "radial_reduction"):
        assert rollnik_norm(ball, P37, route).value == pytest.approx(closed,
                                                                     rel=1e-6)
    assert rollnik_norm(ball, P37, "plancherel").value == pytest.approx(
        closed, rel=1e-3)


def test_norm_regime_error():
    with pytest.raises(RegimeError):
        rollnik_norm(RadialPotential.gaussian(1.0), ModelParams(3, 1.2, lam=1.0))
    with pytest.raises(RegimeError):
        rollnik_norm(RadialPotential.gaussian(1.0), ModelParams(2, 1.0, lam=1.0))


def test_amplitude_scaling():
    g1 = RadialPotential.gaussian(1.0)
    g2 = RadialPotential.gaussian(1.0, amplitude=3.0)
    n1 = rollnik_norm(g1, P37, "direct").value
    n2 = rollnik_norm(g2, P37, "direct").value
    assert n2 == pytest.approx(3.0 * n1, rel=1e-10)


# -- scalar product ---------------------------------------------------------------

def test_scalar_product_diagonal_matches_norm():
    g = RadialPotential.gaussian(1.0)
    sp = scalar_product_norm(g, g, P37)
    n = rollnik_norm(g, P37, "direct").value
    assert sp == pytest.approx(n * n, rel=1e-8)


def test_scalar_product_zero():
    g = RadialPotential.gaussian(1.0)
    zero = RadialPotential.tabulated([0.0, 1.0], [0.0, 0.0])
    assert scalar_product_norm(g, zero, P37) == pytest.approx(0.0, abs=1e-12)


def test_scalar_product_far_field_two_balls():
    # two unit balls at separation D >> 1: pair energy ~ |B|^2 D^{2a-2d}
    from rollnik_kit.rollnik import ball_pair_energy
    p = P37
    D = 50.0
    pair = ball_pair_energy(1.0, D, p)
    leading = omega_d(3) ** 2 * D ** (2 * p.alpha - 2 * p.d)
    assert abs(pair / leading - 1.0) < 0.05


# -- extended seminorm -------------------------------------------------------------

def test_extended_l2_bound_gaussian():
    # [V] <= ||H||_2 ||V||_2 (Young)
    from scipy import integrate
    from rollnik_kit.kernels import h_envelope
    p = ModelParams(3, 1.7, m=0.0, lam=1.0)
    g = RadialPotential.gaussian(1.0)
    ext = extended_seminorm(g, p)
    h_l2_sq, _ = integrate.quad(
        lambda r: sigma_d(3) * r ** 2 * h_envelope(r, p, "massless") ** 2,
        0, np.inf, limit=300)
    v_l2 = g.lp_norm(2.0, 3)
    assert ext.finite
    assert ext.value <= math.sqrt(h_l2_sq) * v_l2 * (1 + 1e-9)


def test_extended_dominated_by_plain_split_constant():
    # [V]^2 <= iint_{<=1} |x-y|^{2a-2d}|V||V| + C iint_{>1} |x-y|^{-2(d+a)}|V||V|
    # with the explicit split constant C = 2^{d+a-2} Gamma((d+a)/2)^2;
    # in particular [V] <= C' ||V|| for the ball
    from rollnik_kit.specfun import gamma_fn
    p = P37
    ball = RadialPotential.ball_indicator(1.0)
    ext = extended_seminorm(ball, p)
    plain = rollnik_norm(ball, p, "direct")
    C = 2.0 ** (p.d + p.alpha - 2.0) * gamma_fn((p.d + p.alpha) / 2.0) ** 2
    assert ext.value <= math.sqrt(max(C, 1.0)) * plain.value * (1 + 1e-9)


def test_extended_strictly_larger_class():
    # slowly decaying tails: extended finite, plain divergent, for
    # beta in (d/2, alpha)
    d, alpha = 3, 1.7
    p = ModelParams(d, alpha, m=0.0, lam=1.0)
    V = RadialPotential.coulomb_outer(1.6)   # in (1.5, 1.7)
    assert not rollnik_norm(V, p, "direct").finite
    ext = extended_seminorm(V, p)
    assert ext.finite


def test_extended_regime():
    with pytest.raises(RegimeError):
        extended_seminorm(RadialPotential.gaussian(1.0),
                          ModelParams(3, 1.4, lam=1.0))


# -- classification -----------------------------------------------------------------

def test_classifier_coulomb_pair_case():
    rep = classify_potential(RadialPotential.coulomb_pair(0.5, 1.2),
                             ModelParams(2, 1.1, lam=1.0), run_numeric=False)
    assert rep.in_plain is True


def test_classifier_log_boundary():
    p = P37
    rep = classify_potential(RadialPotential.log_inner(0.5, p.alpha), p,
                             run_numeric=False)
    assert rep.in_plain is False  # gamma = 1/2 sits outside (open condition)


def test_classifier_outer_critical():
    rep = classify_potential(RadialPotential.coulomb_outer(P37.alpha), P37,
                             run_numeric=False)
    assert rep.in_plain is False  # beta = alpha excluded (open interval)


def test_probe_divergence_power_cases():
    # clear-cut divergent and convergent Coulomb pairs
    p = P37
    div = probe_divergence(RadialPotential.coulomb_pair(1.9, 1.9), p)
    assert div["verdict"] == "divergent"
    conv = probe_divergence(RadialPotential.coulomb_pair(1.5, 1.9), p)
    assert conv["verdict"] == "finite"


def test_probe_divergence_log_ladder():
    p = P37
    fin = probe_divergence(RadialPotential.log_inner(0.6, p.alpha), p)
    assert fin["verdict"] == "finite"
    div = probe_divergence(RadialPotential.log_inner(0.4, p.alpha), p)
    assert div["verdict"] == "divergent"


def test_classifier_agreement_battery_small():
    p = P37
    for v, expect in [
        (RadialPotential.coulomb_pair(1.5, 1.9), True),
        (RadialPotential.coulomb_pair(1.9, 1.9), False),
    ]:
        rep = classify_potential(v, p)
        assert rep.in_plain is expect
        assert rep.numeric_verdict == ("finite" if expect else "divergent")


# -- inequalities --------------------------------------------------------------------

def test_l1l2_bound_gaussian():
    p = ModelParams(3, 1.8, lam=1.0)
    rec = l1l2_bound_check(RadialPotential.gaussian(1.0), p)
    assert rec["holds"]
    assert rec["lhs"] > 0 and rec["rhs"] > 0


def test_l1l2_bound_classical_corner_constant():
    from rollnik_kit.rollnik import l1l2_bound_constant
    c = l1l2_bound_constant(ModelParams(3, 2.0, lam=1.0))
    assert c == pytest.approx(math.sqrt(3.0) * (2 * math.pi) ** (1.0 / 3.0),
                              rel=1e-12)


def test_local_mass_bound():
    # ||V||_{L1(B_R)} <= 2^{d-a} ||V|| R^{d-a}
    p = P37
    for V in (RadialPotential.ball_indicator(1.0), RadialPotential.gaussian(1.0)):
        norm = rollnik_norm(V, p, "direct").value
        for R in (0.5, 1.0, 2.0):
            from rollnik_kit.quadrature import tanh_sinh
            mass, _ = tanh_sinh(
                lambda r: sigma_d(3) * np.asarray(r) ** 2 * V.profile(r), 0.0, R)
            assert mass <= 2.0 ** (p.d - p.alpha) * norm * R ** (p.d - p.alpha) \
                * (1 + 1e-9)


def test_triangle_inequality_families():
    p = P37
    pairs = [
        (RadialPotential.gaussian(1.0), RadialPotential.gaussian(2.0)),
        (RadialPotential.gaussian(0.7), RadialPotential.ball_indicator(1.0)),
    ]
    for V1, V2 in pairs:
        n1 = rollnik_norm(V1, p, "direct").value
        n2 = rollnik_norm(V2, p, "direct").value
        cross = scalar_product_norm(V1, V2, p)
        n_sum = math.sqrt(n1 * n1 + 2.0 * cross + n2 * n2)
        assert n_sum <= n1 + n2 + 1e-9


def test_monotone_domination():
    # |V1| <= |V2| pointwise implies norm ordering
    p = P37
    small = RadialPotential.gaussian(1.0, amplitude=0.5)
    big = RadialPotential.gaussian(1.0, amplitude=1.0)
    assert rollnik_norm(small, p, "direct").value <= \
        rollnik_norm(big, p, "direct").value


def test_interpolation_inclusion_split_bound():
    # ||V||^2_{alpha} <= ||V||^2_{alpha_1} + ||V||^2_{alpha_2}, a1 <= a <= a2
    d = 3
    g = RadialPotential.gaussian(1.0)
    a1, a, a2 = 1.6, 1.7, 1.8
    n = {x: rollnik_norm(g, ModelParams(d, x, lam=1.0), "direct").value
         for x in (a1, a, a2)}
    assert n[a] ** 2 <= n[a1] ** 2 + n[a2] ** 2 + 1e-9


def test_alpha_continuity_sweep():
    # alpha -> ||V||_{3,alpha} continuous on [a0, 2] for a Gaussian
    d = 3
    g = RadialPotential.gaussian(1.0)
    alphas = np.linspace(1.55, 2.0, 10)
    vals = [rollnik_norm(g, ModelParams(d, a, lam=1.0), "direct").value
            for a in alphas]
    rel_jumps = np.abs(np.diff(vals)) / np.asarray(vals[:-1])
    assert np.max(rel_jumps) < 0.02


def test_divergence_rate_near_half_d():
    # squared ball norm grows like 1/(2 alpha - d) as alpha decreases to d/2
    d = 3
    svals = np.array([0.1, 0.05, 0.025])
    norms = [ball_indicator_norm_sq(omega_d(d), ModelParams(d, (s + d) / 2, lam=1.0))
             for s in svals]
    slope = np.polyfit(np.log(svals), np.log(norms), 1)[0]
    assert abs(slope + 1.0) < 0.1


def test_plancherel_identity_direct():
    # ||V||^2 = gamma_d(2a-d) * || I_{a-d/2} |V| ||_2^2 for a smooth potential
    from scipy import integrate
    from rollnik_kit.riesz import riesz_radial
    p = P37
    g = RadialPotential.gaussian(1.0)
    target = rollnik_norm(g, p, "direct").value ** 2
    beta = p.alpha - p.d / 2.0

    def f(r):
        return riesz_radial(g, beta, r, p.d) ** 2 * r ** 2

    val, _ = integrate.quad(f, 0, 25.0, limit=200)
    approx = gamma_d(2 * p.alpha - p.d, p.d) * sigma_d(3) * val
    assert approx == pytest.approx(target, rel=1e-3)


# -- rearrangement -----------------------------------------------------------------

def test_rearrangement_translation_invariance():
    # an off-center ball has the same norm as the centered one
    # (norms are translation invariant; the centered rearrangement of a
    # single ball is a translate)
    p = ModelParams(2, 1.4, lam=1.0)
    ball = RadialPotential.ball_indicator(1.0)
    n = rollnik_norm(ball, p, "direct").value
    # pair energy of the ball with itself at distance 0 equals norm^2
    from rollnik_kit.rollnik import two_bump_norm_sq
    same = two_bump_norm_sq(1.0, 0.0, p)
    assert math.sqrt(same) == pytest.approx(n, rel=1e-8)


def test_rearrangement_strict_increase_two_bumps():
    # two disjoint unit disks vs the centered disk of the same volume
    p = ModelParams(2, 1.4, lam=1.0)
    from rollnik_kit.rollnik import two_bump_norm_sq
    D = 4.0
    sq_two = two_bump_norm_sq(1.0, D, p)
    vol = 2.0 * omega_d(2)
    sq_ball = ball_indicator_norm_sq(vol, p)
    assert math.sqrt(sq_ball) >= 1.01 * math.sqrt(sq_two)


# -- fractional perimeter ------------------------------------------------------------

def test_perimeter_classical_branch():
    assert fractional_perimeter_ball(omega_d(3), 1.0, 3) == pytest.approx(
        4.0 * math.pi, rel=1e-12)


def test_perimeter_monotone_in_volume():
    vals = [fractional_perimeter_ball(v, 0.5, 3) for v in (1.0, 2.0, 4.0)]
    assert vals[0] < vals[1] < vals[2]


def test_perimeter_value_s_half():
    v = fractional_perimeter_ball(omega_d(3), 0.5, 3)
    from rollnik_kit.specfun import gamma_fn
    expected = (gamma_fn(1.75) ** 2 * sigma_d(3)
                / (2 * math.pi * gamma_fn(0.75) * gamma_fn(2.25)))
    assert v == pytest.approx(expected, rel=1e-12)


# -- profile bound -----------------------------------------------------------------

def test_profile_bound_cases():
    p = P37
    assert profile_bound_check(RadialPotential.coulomb_inner(1.0), p)
    assert profile_bound_check(RadialPotential.ball_indicator(1.0), p)
    assert profile_bound_check(RadialPotential.log_inner(0.75, p.alpha), p)


def test_profile_bound_requires_monotone():
    p = P37
    upward = RadialPotential.tabulated([0.0, 1.0, 2.0], [0.0, 1.0, 0.0])
    with pytest.raises(DomainError):
        profile_bound_check(upward, p)


# -- autocorrelation utility ---------------------------------------------------------

def test_autocorrelation_gaussian_closed_form():
    g = RadialPotential.gaussian(1.3)
    d = 3
    s = 1.3
    for u in (0.0, 0.7, 2.0):
        closed = (math.pi * s * s) ** 1.5 * math.exp(-u * u / (4 * s * s))
        assert radial_autocorrelation(g, u, d) == pytest.approx(closed, rel=1e-12)


def test_autocorrelation_numeric_matches_closed_for_ball():
    from rollnik_kit.riesz import ball_covariogram
    b = RadialPotential.ball_indicator(1.0)
    tab = RadialPotential.tabulated(np.linspace(0, 1, 400),
                                    np.ones(400))
    for u in (0.3, 1.2):
        closed = float(ball_covariogram(u, 1.0, 3))
        num = radial_autocorrelation(tab, u, 3)
        assert num == pytest.approx(closed, rel=2e-3)


@settings(max_examples=8, deadline=None)
@given(st.floats(min_value=0.6, max_value=2.5))
def test_norm_result_invariants(sigma):
    res = rollnik_norm(RadialPotential.gaussian(sigma), P37, "direct")
    assert res.finite
    assert res.error_estimate < 0.05 * res.value or res.value == 0.0
