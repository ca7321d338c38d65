import csv
import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from congested_shocks.diagnostics import (
    BOUND_NAMES,
    EnergyObserver,
    EnergyReport,
    SamplePlan,
    commutator_check,
    constant_spread,
    dissipation_Dk,
    energy_Ek,
    energy_identity_residual,
    lemma_bound_scan,
    mass_of,
    rate_fit,
    sine_test,
    sup_norm_decay,
    write_json,
    write_reports_csv,
    x_norm_sq,
)
from congested_shocks.pde_sim import (
    GaussianDipole,
    Grid,
    IntegratedState,
    PerturbationSpec,
    SchemeConfig,
    init_state,
    run,
)

from conftest import cached_profile


# X-norm ---------------------------------------------------------------------------

def test_x_norm_hand_values():
    assert x_norm_sq([((1, 0, 0), (0, 0, 0))]) == 1.0
    assert x_norm_sq([((1, 1, 1), (0, 0, 0))], c=0.5) == pytest.approx(1.75)
    # eps weighting: eps**(2k/gamma) with eps=0.01, gamma=2 -> 0.01**k
    assert x_norm_sq([((0, 1, 0), (0, 0, 0))], c=1.0, epsilon=0.01, gamma=2.0) == pytest.approx(0.01)


def test_x_norm_is_a_sup_over_time():
    hist = [((1, 0, 0), (0, 0, 0)), ((0.2, 0, 0), (0.5, 0, 0)), ((0.1, 0, 0), (0.3, 0, 0))]
    assert x_norm_sq(hist) == 1.0
    with pytest.raises(ValueError):
        x_norm_sq([])
    with pytest.raises(ValueError):
        x_norm_sq(hist, c=0.0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(*[st.floats(0, 10)] * 6), min_size=1, max_size=8),
       st.floats(0.01, 1.0))
def test_x_norm_monotone_in_c(rows, c):
    hist = [(r[:3], r[3:]) for r in rows]
    lo = x_norm_sq(hist, c=c / 2)
    hi = x_norm_sq(hist, c=c)
    assert lo <= hi + 1e-12
    assert hi >= max(r[0] + r[3] for r in rows) - 1e-12


# energies -------------------------------------------------------------------------

def test_plateau_energy_weight():
    # on the congested plateau -1/p'(v) = eps**(1/gamma) / gamma
    w = cached_profile(1e-2, 2.0)
    g = Grid(-1.8, -1.4, 400)
    ws = IntegratedState(g, np.ones(g.n_cells), np.zeros(g.n_cells + 1))
    E0 = energy_Ek(ws, w, w.params, 0)
    L = g.x_hi - g.x_lo - g.dx  # trapezoid over cell centres
    assert E0 == pytest.approx(L * 0.1 / 2, rel=1e-3)
    assert energy_Ek(ws, w, w.params, 1) == pytest.approx(0, abs=1e-20)


def test_dissipation_of_sine_V():
    w = cached_profile(1e-2, 2.0)
    g = Grid(0.0, 1.0, 2000)
    V = np.sin(np.pi * g.nodes)
    ws = IntegratedState(g, np.zeros(g.n_cells), V)
    assert dissipation_Dk(ws, w, w.params, 0) == pytest.approx(np.pi**2 / 2, rel=1e-4)
    assert dissipation_Dk(ws, w, w.params, 1) == pytest.approx(np.pi**4 / 2, rel=1e-3)
    assert energy_Ek(ws, w, w.params, 0) == pytest.approx(0.5, rel=1e-5)
    with pytest.raises(ValueError):
        energy_Ek(ws, w, w.params, 3)


def test_energy_observer_on_a_small_run():
    w = cached_profile(1e-2, 2.0)
    p = w.params
    g = Grid.with_spacing(-6.0, 10.0, 0.02)
    pert = PerturbationSpec(GaussianDipole(0.0, 0.2), 1e-4, ("v", "u"))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        s0 = init_state(w, pert, g)
    obs = EnergyObserver(w, p)
    r = run(s0, SchemeConfig(), p, 0.3, observers=[obs], stride=5)
    reps = r.observations[0]
    assert all(isinstance(x, EnergyReport) for x in reps)
    xs = [x.x_norm_sq for x in reps]
    assert all(a <= b for a, b in zip(xs, xs[1:]))
    assert max(abs(m) for x in reps for m in x.masses) < 1e-12
    assert all(x.min_v > 1 for x in reps)
    ints = [x.int_D[0] for x in reps]
    assert ints[0] == 0 and all(a <= b for a, b in zip(ints, ints[1:]))


def test_energy_identity_residual_sign():
    seg = {"t": np.array([0.0, 1.0]), "E0": np.array([2.0, 1.0]), "rate": np.array([0.5, 0.5])}
    assert energy_identity_residual(seg, signed=True) == pytest.approx(-0.5)
    assert energy_identity_residual(seg) == pytest.approx(0.5)


# commutators ----------------------------------------------------------------------

def test_sine_test_derivatives():
    g = sine_test(2.0, 0.4, 3.0)
    x = np.linspace(0, 1, 5)
    assert np.allclose(g(x, 1), 6.0 * np.cos(2 * x + 0.4))
    assert np.allclose(g(x, 2), -12.0 * np.sin(2 * x + 0.4))
    assert np.allclose(g(x, 3), -24.0 * np.cos(2 * x + 0.4))


def test_commutators_do_not_depend_on_f(wave_g2_coarse):
    p = wave_g2_coarse.params
    a = commutator_check(wave_g2_coarse, p, h=0.01)
    b = commutator_check(wave_g2_coarse, p, h=0.01, test_f=sine_test(5.0, 0.0, 3.0))
    assert a.first_order == pytest.approx(b.first_order, rel=1e-6)
    assert a.second_order == pytest.approx(b.second_order, rel=1e-6)


def test_commutators_converge_and_literal_form_does_not(wave_g2_coarse):
    p = wave_g2_coarse.params
    r1 = commutator_check(wave_g2_coarse, p, h=0.02)
    r2 = commutator_check(wave_g2_coarse, p, h=0.01)
    assert 3.0 < r1.first_order / r2.first_order < 5.0
    assert 3.0 < r1.second_order / r2.second_order < 5.0
    assert r2.literal_second_order > 0.5


# nonlinear bounds -----------------------------------------------------------------

def test_bound_scan_zero_samples_give_zero_constants():
    w = cached_profile(1e-2, 1.0)
    rows = lemma_bound_scan([w], SamplePlan(n_x=50, thetas=(0.0,), wavenumbers=(1.0,),
                                            phases=(0.0,), pair_split=(0.5,)))
    assert all(rows[0][k] == 0.0 for k in BOUND_NAMES)


def test_bound_scan_gamma1_F_constant_at_most_two():
    w = cached_profile(1e-2, 1.0)
    rows = lemma_bound_scan([w], SamplePlan(n_x=100))
    assert 0 < rows[0]["F"] <= 2.0 + 1e-9
    assert all(math.isfinite(rows[0][k]) for k in BOUND_NAMES)


def test_constant_spread():
    rows = [{"F": 1.0, "H": 0.0}, {"F": 3.0, "H": 0.0}]
    assert constant_spread(rows, ("F", "H")) == {"F": 3.0, "H": 1.0}


# masses, decay, rates ---------------------------------------------------------------

def test_mass_of():
    x = np.linspace(-1, 1, 201)
    assert mass_of(x**3, x[1] - x[0]) == pytest.approx(0, abs=1e-15)
    assert mass_of(np.full(101, 2.0), 0.01) == pytest.approx(2.0)


def test_sup_norm_decay():
    d = sup_norm_decay([1.0, 3.0, 2.0, 1.0])
    assert (d.peak, d.final) == (3.0, 1.0)
    assert d.ratio == pytest.approx(1 / 3)
    assert d.monotone_after_peak
    assert not sup_norm_decay([1.0, 3.0, 1.0, 2.0]).monotone_after_peak


def test_rate_fit_exact_power_laws():
    eps = [1e-2, 1e-3, 1e-4, 1e-5]
    f = rate_fit([(e, 3 * e ** (1 / 3)) for e in eps])
    assert f.slope == pytest.approx(1 / 3, abs=1e-12)
    assert f.intercept == pytest.approx(math.log(3), abs=1e-12)
    assert f.r_squared == pytest.approx(1.0)
    assert rate_fit([(e, 0.5) for e in eps]).slope == pytest.approx(0, abs=1e-12)
    with pytest.raises(ValueError):
        rate_fit([(1e-2, 1.0), (1e-3, 2.0)])
    with pytest.raises(ValueError):
        rate_fit([(1e-2, 1.0), (1e-3, 0.0), (1e-4, 1.0)])


def test_report_writers(tmp_path):
    rep = EnergyReport(0.5, (1.0, 2.0, 3.0), (0.1, 0.2, 0.3), (0.0, 0.0, 0.0), 1.25,
                       (0.0, 1e-15, -1e-15), (1e-3, 2e-3), 1.1)
    path = tmp_path / "e.csv"
    write_reports_csv([rep, rep], path)
    rows = list(csv.DictReader(open(path)))
    assert len(rows) == 2 and float(rows[0]["E1"]) == 2.0 and float(rows[1]["min_v"]) == 1.1
    jp = tmp_path / "x.json"
    write_json({"b": np.float64(1.5), "a": 1}, jp)
    assert json.loads(jp.read_text()) == {"a": 1, "b": 1.5}
