import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from congested_shocks.pressure_model import ModelParams, pressure
from congested_shocks.profile import (
    LimitProfile,
    ProfileError,
    RateSolution,
    TransitionAnchor,
    TravelingWave,
    ValueAtZero,
    approx_profile,
    barrier_rates,
    build_expansion,
    congested_decay_fit,
    fit_exponential,
    limit_profile,
    matching_defect,
    min_shift_distance,
    read_profile_csv,
    sandwich_check,
    shock_speed,
    solve_barriers,
    solve_corrector,
    solve_profile,
    transition_error,
    transition_params,
    write_profile_csv,
)

from conftest import cached_profile


# shock speed -------------------------------------------------------------------

def test_shock_speed_hand_value():
    p = ModelParams(0.01, 1.0, v_plus=2.0)
    assert shock_speed(p) == pytest.approx(1.0, rel=1e-14)


def test_shock_speed_tends_to_limit():
    speeds = [shock_speed(ModelParams(e, 2.0)) for e in (1e-2, 1e-4, 1e-6, 1e-8)]
    gaps = [abs(s - math.sqrt(2)) for s in speeds]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert gaps[1] < 0.05
    # |s - sbar| = O(eps**(1/gamma)): slope 1/2 in eps
    slope = np.polyfit(np.log([1e-2, 1e-4, 1e-6, 1e-8]), np.log(gaps), 1)[0]
    assert slope == pytest.approx(0.5, abs=0.05)


@settings(max_examples=50, deadline=None)
@given(st.floats(-8, -1), st.sampled_from([1.0, 1.5, 2.0, 3.0]), st.floats(1.3, 4.0))
def test_rankine_hugoniot(le, gamma, v_plus):
    assume(1 + 10 ** (le / gamma) < v_plus)
    p = ModelParams(10**le, gamma, v_plus=v_plus)
    s = shock_speed(p)
    jump = (v_plus - 1) - p.gap_minus
    res = s * s * jump + pressure(v_plus, 0, p) - 1.0
    assert abs(res) < 1e-12


# profile -----------------------------------------------------------------------

@pytest.mark.parametrize("gamma", [1.0, 2.0, 3.0])
def test_profile_monotone_and_bounded(gamma):
    w = cached_profile(1e-4, gamma)
    p = w.params
    assert np.all(np.diff(w.v) > 0)
    assert np.all(w.dv_minus > 0) and np.all(w.dv_plus > 0)
    assert w.meta["residual_max"] < 1e-8
    assert w(0.0) == pytest.approx((1 + p.v_plus) / 2, abs=1e-12)


def test_profile_far_field_reached():
    w = cached_profile(1e-4, 2.0)
    dvm, dvp = w.gaps(np.array([w.xi[0], w.xi[-1]]))
    assert dvm[0] < 1e-9 and dvp[1] < 1e-9


def test_transition_anchor_value():
    p = ModelParams(1e-6, 2.0)
    w = solve_profile(p, TransitionAnchor())
    assert w(0.0) == pytest.approx(1 + 2 ** (-1 / 6) * 1e-2, abs=1e-12)
    assert w(0.0) == pytest.approx(1.008909, abs=1e-6)


def test_value_at_zero_is_respected_and_validated():
    p = ModelParams(1e-2, 2.0)
    w = solve_profile(p, ValueAtZero(1.2))
    assert w(0.0) == pytest.approx(1.2, abs=1e-12)
    with pytest.raises(ValueError):
        solve_profile(p, ValueAtZero(1.05))  # below v_minus = 1.1


def test_derivatives_match_finite_differences(wave_g2):
    h = 1e-5
    x = np.linspace(-0.05, 2.0, 41)
    d = wave_g2.derivatives(x, order=2)
    fd1 = (wave_g2(x + h) - wave_g2(x - h)) / (2 * h)
    fd2 = (wave_g2.derivatives(x + h, 1)[1] - wave_g2.derivatives(x - h, 1)[1]) / (2 * h)
    assert np.allclose(d[1], fd1, rtol=1e-6, atol=1e-9)
    assert np.allclose(d[2], fd2, rtol=1e-5, atol=1e-7)


def test_profile_equation_holds(wave_g2):
    # integrated profile ODE: mu s v'/v = s^2 (v_+ - v) + p_+ - p(v)
    p = wave_g2.params
    s = wave_g2.s
    x = np.linspace(-0.5, 5, 200)
    v, dv = wave_g2.derivatives(x, 1)
    rhs = s * s * (p.v_plus - v) + pressure(p.v_plus, 0, p) - pressure(v, 0, p)
    assert np.allclose(p.mu * s * dv / v, rhs, atol=1e-9)


def test_csv_round_trip(tmp_path, wave_g2):
    path = tmp_path / "w.csv"
    write_profile_csv(wave_g2, path)
    head, data = read_profile_csv(path)
    assert head["params"]["epsilon"] == wave_g2.params.epsilon
    assert np.array_equal(data["v"], wave_g2.v)
    assert np.array_equal(data["xi"], wave_g2.xi)


# limit profile -----------------------------------------------------------------

def test_limit_profile_values():
    lp = LimitProfile(1.5, 1.0)
    assert limit_profile(0.0, lp) == pytest.approx(1.0)
    assert limit_profile(-5.0, lp) == 1.0
    r = 1.5 / math.sqrt(0.5)
    assert limit_profile(1.0, lp) == pytest.approx(1.5 / (1 + 0.5 * math.exp(-r)), rel=1e-12)
    assert limit_profile(1.0, lp) == pytest.approx(1.41518, abs=1e-5)


def test_min_shift_distance_identity_and_shift_invariance():
    p = ModelParams(1e-10, 1.0)
    lp = LimitProfile.from_params(p)
    xi = np.linspace(-3, 12, 3001)
    wave = TravelingWave.from_samples(p, xi, np.maximum(limit_profile(xi, lp), p.v_minus + 1e-12))
    assert min_shift_distance(wave, lp) < 1e-8
    real = cached_profile(1e-3, 2.0)
    lp2 = LimitProfile.from_params(real.params)
    a = min_shift_distance(real, lp2)
    b = min_shift_distance(real.shifted(0.3), lp2)
    assert a == pytest.approx(b, rel=1e-3, abs=1e-6)


# corrector and barriers --------------------------------------------------------

def _zeta_exact(w, rate, gamma):
    if gamma == 1:
        return (w - 2 + np.log(w - 1)) / rate
    return (w - 2 + 0.5 * np.log((w - 1) / (w + 1)) - 0.5 * np.log(1 / 3)) / rate


@pytest.mark.parametrize("gamma", [1.0, 2.0])
def test_rate_solution_matches_separable_solution(gamma):
    rate = 0.7
    sol = RateSolution(rate, gamma, (-80.0, 60.0))
    w = np.concatenate([1 + np.geomspace(1e-12, 0.5, 20), np.linspace(1.6, 30, 20)])
    z = _zeta_exact(w, rate, gamma)
    assert np.allclose(sol.gap(z), w - 1, rtol=1e-8)


def test_corrector_properties():
    p = ModelParams(1e-6, 2.0)
    c = solve_corrector(p, (-60.0, 120.0))
    assert c(0.0) == pytest.approx(2.0, abs=1e-12)
    assert c(-40.0) - 1 < 1e-10
    assert c(100.0) == pytest.approx(100 / math.sqrt(2), rel=0.05)
    z = np.linspace(-30, 100, 500)
    assert np.all(np.diff(c(z)) >= 0)
    z = np.linspace(-20, 100, 500)  # gap above underflow
    assert np.all(np.diff(c(z)) > 0)


def test_transition_params_oracles():
    p = ModelParams(1e-6, 2.0)
    omega, K, xi_star = transition_params(p)
    assert K == pytest.approx(2 ** (-1 / 6), rel=1e-12)
    assert omega == pytest.approx(10 * 2 ** (-1 / 6), rel=1e-12)
    assert xi_star < 0


def test_matching_point_approaches_leading_order():
    # xi_star / (-(mu sbar)^(g/(g+1)) eps^(1/(g+1))) -> 1, with a log correction
    ratios = []
    for e in (1e-6, 1e-8, 1e-10, 1e-12):
        ex = build_expansion(ModelParams(e, 2.0))
        lead = -(2 ** (1 / 3)) * e ** (1 / 3)
        assert ex.xi_star_asymptotic == pytest.approx(lead, rel=1e-12)
        ratios.append(ex.xi_star / lead)
    assert all(a < b < 1 for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] > 0.97


def test_approx_profile_matching_and_tails():
    p = ModelParams(1e-6, 2.0)
    lp = LimitProfile.from_params(p)
    ex = build_expansion(p)
    amp = ex.K * p.epsilon ** (1 / 3)
    assert approx_profile(-1e-15, ex, lp) == pytest.approx(1 + amp, rel=1e-12)
    dv, ds = matching_defect(ex, lp)
    assert dv < 1e-12 and ds < 1e-8
    assert approx_profile(-5.0, ex, lp) == pytest.approx(p.v_minus, abs=1e-12)
    assert approx_profile(30.0, ex, lp) == pytest.approx(limit_profile(30.0, lp), abs=1e-12)


def test_transition_error_of_the_approximation_itself():
    p = ModelParams(1e-4, 2.0)
    lp = LimitProfile.from_params(p)
    ex = build_expansion(p)
    xi = np.linspace(-3, 10, 20001)
    v = approx_profile(xi, ex, lp)
    wave = TravelingWave.from_samples(p, xi, np.clip(v, p.v_minus, p.v_plus), TransitionAnchor())
    te = transition_error(wave, ex, lp, R=1.0, M=1.0)
    assert te.sup_error < 1e-6


def test_barrier_rates_limits_and_window():
    p = ModelParams(1e-8, 2.0)
    ru, rl = barrier_rates(p, 1 + p.epsilon ** (1 / 3))
    assert abs(ru - rl) < 0.05
    assert ru == pytest.approx(1 / math.sqrt(2), abs=0.05)
    assert rl == pytest.approx((1 + p.epsilon ** (1 / 3)) / shock_speed(p), rel=1e-14)
    with pytest.raises(ValueError):
        barrier_rates(p, 1.4)


def test_barrier_pair_and_sandwich():
    w = cached_profile(1e-4, 2.0, anchor=True)
    pair = solve_barriers(w.params, w(0.0))
    assert pair.v_upper(0.0) == pytest.approx(2.0, abs=1e-12)
    assert pair.v_lower(0.0) == pytest.approx(2.0, abs=1e-12)
    assert sandwich_check(pair, w).violations == 0


def test_fit_exponential_exact():
    z = np.linspace(-20, -1, 50)
    sigma, C, r2 = fit_exponential(z, 3.0 * np.exp(0.8 * z))
    assert sigma == pytest.approx(0.8, abs=1e-6)
    assert C == pytest.approx(3.0, rel=1e-6)
    assert r2 == pytest.approx(1.0)


def test_congested_decay_fit_quality():
    w = cached_profile(1e-4, 2.0, anchor=True)
    fit = congested_decay_fit(w)
    assert fit.r_squared > 0.99
    assert fit.sigma_hat > 0


def test_profile_error_carries_last_point():
    p = ModelParams(1e-4, 2.0)
    with pytest.raises(ProfileError):
        solve_profile(p, domain=(-1e-9, 1e-9))
