"""
Energies, dissipations, identity residuals and bound scans.

All integrals over a grid use the trapezoid rule.  Profile weights such as
``-1/p'(v_eps)`` and ``v_eps'`` are evaluated from the analytic profile, not
by differencing samples.
"""

from dataclasses import dataclass
from typing import NamedTuple, Sequence
import csv
import json
import math

import numpy as np
from scipy.integrate import trapezoid

from .pressure_model import (
    nonlinear_F_derivatives,
    nonlinear_H_derivatives,
    pressure_gap,
)
from .pde_sim import Lab, integrated_perturbation, sampled_background
from .profile import profile_derivatives

__all__ = [
    "EnergyReport",
    "energy_Ek",
    "dissipation_Dk",
    "x_norm_sq",
    "EnergyObserver",
    "energy_identity_residual",
    "sine_test",
    "CommutatorResult",
    "commutator_check",
    "SamplePlan",
    "lemma_bound_scan",
    "constant_spread",
    "mass_of",
    "DecaySummary",
    "sup_norm_decay",
    "RateFit",
    "rate_fit",
    "write_reports_csv",
    "write_json",
]

X_NORM_C = 0.25


# profile weights ----------------------------------------------------------------

def _profile_data(wave, x, order=1):
    """Gap ``v_eps - 1`` and derivatives ``[v, v', ...]`` at ``x``."""
    x = np.asarray(x, dtype=float)
    dvm, dvp = wave.gaps(x)
    p = wave.params
    gap = np.where(dvm < dvp, p.gap_minus + dvm, (p.v_plus - 1.0) - dvp)
    return gap, profile_derivatives(dvm, dvp, p, wave.s, order)


def _energy_weight(gap, params):
    # -1/p'(v) = (v-1)**(gamma+1) / (gamma eps)
    return gap ** (params.gamma + 1) / (params.gamma * params.epsilon)


def _dk(y, h, k):
    for _ in range(k):
        y = np.gradient(y, h, edge_order=2)
    return y


def _shift(ws, wave, frame):
    return wave.s * ws.t if isinstance(frame, Lab) else 0.0


def energy_Ek(ws, wave, params, k, frame=None):
    """Weighted energy ``int -|d^k W|^2 / p'(v_eps) + |d^k V|^2``.

    ``W`` lives on cell centres and ``V`` on nodes; each is differentiated
    on its own grid with second-order centred stencils.
    """
    if k not in (0, 1, 2):
        raise ValueError("k must be 0, 1 or 2")
    g = ws.grid
    h = g.dx
    sh = _shift(ws, wave, frame)
    gap, _ = _profile_data(wave, g.centers - sh, 0)
    dW = _dk(ws.W, h, k)
    dV = _dk(ws.V, h, k)
    return float(trapezoid(_energy_weight(gap, params) * dW**2, dx=h)
                 + trapezoid(dV**2, dx=h))


def dissipation_Dk(ws, wave, params, k, frame=None):
    """``int v_eps' |d^k W|^2 + int |d^(k+1) V|^2``."""
    if k not in (0, 1, 2):
        raise ValueError("k must be 0, 1 or 2")
    g = ws.grid
    h = g.dx
    sh = _shift(ws, wave, frame)
    _, der = _profile_data(wave, g.centers - sh, 1)
    dW = _dk(ws.W, h, k)
    dV = _dk(ws.V, h, k + 1)
    return float(trapezoid(der[1] * dW**2, dx=h) + trapezoid(dV**2, dx=h))


def x_norm_sq(history, c=X_NORM_C, epsilon=1.0, gamma=1.0):
    """``sup_t sum_k c**k eps**(2k/gamma) [E_k(t) + int_0^t D_k]``.

    ``history`` is a sequence of ``(E, intD)`` pairs of triples, or of
    :class:`EnergyReport` objects.
    """
    if not 0 < c <= 1:
        raise ValueError("c must lie in (0, 1]")
    rows = list(history)
    if not rows:
        raise ValueError("history is empty")
    best = -math.inf
    for row in rows:
        if isinstance(row, EnergyReport):
            E, D = row.E, row.int_D
        else:
            E, D = row
        val = sum(c**k * epsilon ** (2 * k / gamma) * (E[k] + D[k])
                  for k in range(3))
        best = max(best, val)
    return float(best)


@dataclass
class EnergyReport:
    t: float
    E: tuple
    D: tuple
    int_D: tuple
    x_norm_sq: float
    masses: tuple  # (u - u_eps, w - w_eps, v - v_eps)
    sup_norms: tuple  # (sup|u - u_eps|, sup|v - v_eps|)
    min_v: float

    def row(self):
        return {"t": self.t,
                **{f"E{k}": self.E[k] for k in range(3)},
                **{f"D{k}": self.D[k] for k in range(3)},
                **{f"intD{k}": self.int_D[k] for k in range(3)},
                "x_norm_sq": self.x_norm_sq,
                "mass_u": self.masses[0], "mass_w": self.masses[1],
                "mass_v": self.masses[2],
                "sup_u": self.sup_norms[0], "sup_v": self.sup_norms[1],
                "min_v": self.min_v}


class EnergyObserver:
    """Observer for :func:`congested_shocks.pde_sim.run`.

    Builds an :class:`EnergyReport` per call.  Dissipation integrals are
    accumulated with the trapezoid rule over the observation times, so a
    small stride gives a more accurate X-norm.
    """

    def __init__(self, wave, params, c=X_NORM_C, mass_tol=1e-10):
        self.wave = wave
        self.params = params
        self.c = c
        self.mass_tol = mass_tol
        self._last = None
        self._int = np.zeros(3)
        self._sup = -math.inf

    def __call__(self, state):
        p, wave = self.params, self.wave
        ws = integrated_perturbation(state, wave, p, tol=self.mass_tol)
        E = tuple(energy_Ek(ws, wave, p, k, state.frame) for k in range(3))
        D = tuple(dissipation_Dk(ws, wave, p, k, state.frame) for k in range(3))
        if self._last is not None:
            t0, D0 = self._last
            self._int += 0.5 * (state.t - t0) * (np.asarray(D0) + np.asarray(D))
        self._last = (state.t, D)
        val = x_norm_sq([(E, tuple(self._int))], self.c, p.epsilon, p.gamma)
        self._sup = max(self._sup, val)
        ref = state.background
        if not ref.steady:
            ref = sampled_background(wave, state.grid, state.t, state.frame)
        du = state.u - ref.u
        dv = state.v - ref.v
        h = state.dx
        return EnergyReport(
            t=float(state.t), E=E, D=D, int_D=tuple(self._int), x_norm_sq=self._sup,
            masses=(float(h * du.sum()), ws.mass_defect[0], ws.mass_defect[1]),
            sup_norms=(float(np.max(np.abs(du))), float(np.max(np.abs(dv)))),
            min_v=float(np.min(state.v)))


# linearized energy identity -----------------------------------------------------

def energy_identity_residual(segment, params=None, signed=False):
    """Residual of the linearized energy balance over a run segment.

    ``segment`` is the dict returned by
    :func:`congested_shocks.pde_sim.run_linearized`; time integrals of the
    dissipation rate use the trapezoid rule over the step levels.
    """
    E, R, t = segment["E0"], segment["rate"], segment["t"]
    res = E[-1] + trapezoid(R, t) - E[0]
    return float(res if signed else abs(res))


# commutators --------------------------------------------------------------------

def sine_test(freq=1.0, phase=0.3, amplitude=1.0):
    """Smooth test function ``g`` with exact derivatives ``g(x, k)``."""
    def g(x, k=0):
        x = np.asarray(x, dtype=float)
        arg = freq * x + phase
        return amplitude * freq**k * np.sin(arg + k * np.pi / 2)
    return g


class CommutatorResult(NamedTuple):
    first_order: float
    second_order: float
    literal_second_order: float


def _apply_L(f, g, h, p1, inv_v, mu):
    gx = np.gradient(g, h)
    fx = np.gradient(f, h)
    return p1 * gx, -fx - mu * np.gradient(gx * inv_v, h)


def commutator_check(wave, params, test_g=None, h=1e-2, domain=(-1.0, 1.0),
                     test_f=None, margin=6):
    """Finite-difference check of the commutators of ``L`` with ``d/dx``.

    ``L(f, g) = (p'(v_eps) g_x, -f_x - mu (g_x / v_eps)_x)``.  The discrete
    sides use centred differences; the closed forms use the exact
    derivatives of ``test_g`` and the analytic profile.  Returns the max
    discrepancies over interior points, which are ``O(h**2)``.

    ``literal_second_order`` evaluates the second-order formula with the
    opposite sign on the last viscous term.  A direct expansion of
    ``[L, d] d + d [L, d]`` gives ``-mu d((v'/v**2)' g_x)`` for that term;
    the flipped sign is kept as a diagnostic and does not converge.
    """
    test_g = test_g or sine_test()
    test_f = test_f or sine_test(2.0, 1.1, 0.5)
    mu = params.mu
    n = int(round((domain[1] - domain[0]) / h))
    x = domain[0] + h * np.arange(-margin, n + margin + 1)
    gap, der = _profile_data(wave, x, 3)
    v, v1, v2, v3 = der
    p1 = pressure_gap(gap, 1, params)
    p2 = pressure_gap(gap, 2, params)
    p3 = pressure_gap(gap, 3, params)
    inv_v = 1.0 / v
    f0, g0 = test_f(x, 0), test_g(x, 0)
    g1, g2, g3 = test_g(x, 1), test_g(x, 2), test_g(x, 3)

    def D(y):
        return np.gradient(y, h)

    # first order: L(Df, Dg) - D L(f, g)
    a1, a2 = _apply_L(D(f0), D(g0), h, p1, inv_v, mu)
    b1, b2 = _apply_L(f0, g0, h, p1, inv_v, mu)
    lhs1 = (a1 - D(b1), a2 - D(b2))
    B = v1 / v**2
    B1 = v2 / v**2 - 2 * v1**2 / v**3
    B2 = v3 / v**2 - 6 * v1 * v2 / v**3 + 6 * v1**3 / v**4
    c1 = -v1 * p2 * g1
    c2 = -mu * (B1 * g1 + B * g2)
    # second order: L(D2 f, D2 g) - D2 L(f, g)
    a1, a2 = _apply_L(D(D(f0)), D(D(g0)), h, p1, inv_v, mu)
    lhs2 = (a1 - D(D(b1)), a2 - D(D(b2)))
    # 2 [L, d](f_x, g_x) - (d(v' p'') g_x, +mu d(B' g_x))
    comm_x1 = -v1 * p2 * g2
    comm_x2 = -mu * (B1 * g2 + B * g3)
    dvp2 = v2 * p2 + v1**2 * p3
    e1 = 2 * comm_x1 - dvp2 * g1
    e2 = 2 * comm_x2 - mu * (B2 * g1 + B1 * g2)
    lit2 = 2 * comm_x2 + mu * (B2 * g1 + B1 * g2)
    inner = slice(2 * margin, -2 * margin)

    def err(lhs, rhs):
        # relative sup error, each component against its own scale
        out = 0.0
        for l, r in zip(lhs, rhs):
            sc = max(np.max(np.abs(r[inner])), 1e-300)
            out = max(out, float(np.max(np.abs(l[inner] - r[inner])) / sc))
        return out

    return CommutatorResult(err(lhs1, (c1, c2)), err(lhs2, (e1, e2)),
                            err(lhs2, (e1, lit2)))


# nonlinear bounds ---------------------------------------------------------------

@dataclass(frozen=True)
class SamplePlan:
    """Synthetic ``f(x) = theta * eps**(1/gamma)/2 * cos(k x + phase)``.

    The positions are ``n_x`` uniform points on the profile's resolved
    domain together with the profile's own sample points, so the congested
    plateau (where the bounds are tight) is always represented.
    """

    n_x: int = 400
    thetas: Sequence[float] = (-1.0, -0.5, 0.5, 1.0)
    wavenumbers: Sequence[float] = (0.5, 3.0, 20.0)
    phases: Sequence[float] = (0.0, 0.7, 1.9)
    pair_split: Sequence[float] = (0.2, 0.5, 0.8)


BOUND_NAMES = ("F", "dF", "d2F", "H", "dH", "d2H",
               "F_diff", "dF_diff", "d2F_diff", "H_diff", "dH_diff", "d2H_diff")


def _ratio(lhs, rhs):
    lhs = np.abs(lhs)
    ok = rhs > 0
    if np.any(~ok & (lhs > 1e-300)):
        return math.inf
    return float(np.max(np.where(ok, lhs / np.where(ok, rhs, 1.0), 0.0), initial=0.0))


def _single_bounds(f, fx, fxx, v, vx, vxx, gap, params):
    eps, gam = params.epsilon, params.gamma
    P = pressure_gap(gap, 0, params)
    P1 = np.abs(pressure_gap(gap, 1, params))
    a2 = gap**2
    F, Fx, Fxx = nonlinear_F_derivatives(f, fx, fxx, v, vx, vxx, params)
    H, Hx, Hxx = nonlinear_H_derivatives(f, fx, fxx, v, vx, vxx)
    af, afx, afxx = np.abs(f), np.abs(fx), np.abs(fxx)
    return {
        "F": _ratio(F, P * f**2 / a2),
        "dF": _ratio(Fx, vx * P1 * f**2 / a2 + P * af * afx / a2),
        "d2F": _ratio(Fxx, eps ** (-1 / gam) * vx * P1 * f**2 / a2
                      + P * fx**2 / a2 + P * af * afxx / a2),
        "H": _ratio(H, f**2),
        "dH": _ratio(Hx, af * afx + f**2),
        "d2H": _ratio(Hxx, af * afxx + (af + afx) * afx
                      + (1 + np.abs(vxx)) * f**2),
    }


def _pair_bounds(f1, f2, v, vx, vxx, gap, params):
    eps, gam = params.epsilon, params.gamma
    P = pressure_gap(gap, 0, params)
    a = gap
    F1 = nonlinear_F_derivatives(*f1, v, vx, vxx, params)
    F2 = nonlinear_F_derivatives(*f2, v, vx, vxx, params)
    H1 = nonlinear_H_derivatives(*f1, v, vx, vxx)
    H2 = nonlinear_H_derivatives(*f2, v, vx, vxx)
    d = [np.abs(f1[i] - f2[i]) for i in range(3)]
    a1 = [np.abs(c) for c in f1]
    a2 = [np.abs(c) for c in f2]
    s0 = a1[0] + a2[0]
    w = P / a**2
    avxx = np.abs(vxx)
    return {
        "F_diff": _ratio(F1[0] - F2[0], w * d[0] * s0),
        "dF_diff": _ratio(F1[1] - F2[1], w * (vx / a * d[0] * s0 + d[1] * a1[0]
                                              + a2[1] * d[0])),
        "d2F_diff": _ratio(F1[2] - F2[2], w * (
            eps ** (-1 / gam) * vx / a * d[0] * s0
            + (d[1] * a1[0] + d[0] * a1[1]) / a
            + d[1] * (a1[1] + a2[1]) + d[0] * a1[2]
            + d[2] * a2[0] + a2[1] ** 2 * d[0] / a)),
        "H_diff": _ratio(H1[0] - H2[0], d[0] * s0),
        "dH_diff": _ratio(H1[1] - H2[1], a1[0] * d[1] + a1[0] * d[0]
                          + (a2[1] + a2[0]) * d[0]),
        "d2H_diff": _ratio(H1[2] - H2[2],
                           a1[0] * ((1 + avxx) * d[0] + d[1] + d[2])
                           + ((1 + avxx) * a2[0] + a2[1] + a2[2]) * d[0]
                           + d[1] * (a1[1] + a2[1])
                           + (a2[0] ** 2 + a2[1] ** 2) * d[0]),
    }


def _synthetic(theta, k, phase, amp, x):
    arg = k * x + phase
    return (theta * amp * np.cos(arg), -theta * amp * k * np.sin(arg),
            -theta * amp * k * k * np.cos(arg))


def lemma_bound_scan(waves, plan=None):
    """Empirical constants of the pointwise bounds on ``F`` and ``H``.

    Parameters
    ----------
    waves : sequence of TravelingWave
        One profile per parameter set in the sweep.
    plan : SamplePlan

    Returns
    -------
    list of dict
        One row per wave: ``epsilon``, ``gamma`` and, for every bound, the
        largest ratio of the left side to the right side without its
        constant.
    """
    plan = plan or SamplePlan()
    rows = []
    for wave in waves:
        p = wave.params
        lim = p.gap_minus / 2
        x = np.unique(np.concatenate([
            np.linspace(wave.xi[0], wave.xi[-1], plan.n_x), wave.xi]))
        gap, (v, vx, vxx) = _profile_data(wave, x, 2)
        row = {"epsilon": p.epsilon, "gamma": p.gamma,
               **{name: 0.0 for name in BOUND_NAMES}}
        for th in plan.thetas:
            for k in plan.wavenumbers:
                for ph in plan.phases:
                    f = _synthetic(th, k, ph, lim, x)
                    if np.max(np.abs(f[0])) > lim * (1 + 1e-12):
                        raise ValueError("sample violates |f| <= eps**(1/gamma)/2")
                    for key, val in _single_bounds(*f, v, vx, vxx, gap, p).items():
                        row[key] = max(row[key], val)
                    for split in plan.pair_split:
                        f1 = _synthetic(th * split, k, ph, lim, x)
                        f2 = _synthetic(-(1 - split) * abs(th), 1.7 * k,
                                        ph + 0.4, lim, x)
                        if np.max(np.abs(f1[0]) + np.abs(f2[0])) > lim * (1 + 1e-12):
                            raise ValueError(
                                "sample violates |f1| + |f2| <= eps**(1/gamma)/2")
                        for key, val in _pair_bounds(f1, f2, v, vx, vxx, gap, p).items():
                            row[key] = max(row[key], val)
        rows.append(row)
    return rows


def constant_spread(rows, names=BOUND_NAMES):
    """Ratio max/min of each empirical constant across the rows."""
    out = {}
    for name in names:
        vals = np.array([r[name] for r in rows])
        pos = vals[vals > 0]
        out[name] = float(pos.max() / pos.min()) if pos.size else 1.0
    return out


# masses, decay, rates -----------------------------------------------------------

def mass_of(values, dx):
    """Trapezoid integral of samples with spacing ``dx``."""
    return float(trapezoid(np.asarray(values, dtype=float), dx=dx))


class DecaySummary(NamedTuple):
    peak: float
    final: float
    ratio: float
    monotone_after_peak: bool


def sup_norm_decay(series):
    s = np.asarray(series, dtype=float)
    if s.size == 0:
        raise ValueError("empty series")
    i = int(np.argmax(s))
    peak = float(s[i])
    final = float(s[-1])
    ratio = final / peak if peak > 0 else math.nan
    mono = bool(np.all(np.diff(s[i:]) <= 1e-14 * max(peak, 1e-300)))
    return DecaySummary(peak, final, ratio, mono)


class RateFit(NamedTuple):
    slope: float
    intercept: float
    r_squared: float


def rate_fit(pairs):
    """Least squares line through ``(log eps, log err)``."""
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 3:
        raise ValueError("need at least 3 (eps, err) pairs")
    if np.any(arr <= 0):
        raise ValueError("rate_fit needs positive values")
    x, y = np.log(arr[:, 0]), np.log(arr[:, 1])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss if ss > 0 else 1.0
    return RateFit(float(slope), float(intercept), float(r2))


# output -------------------------------------------------------------------------

def write_reports_csv(reports, path):
    rows = [r.row() for r in reports]
    with open(path, "w", newline="") as fh:
        wr = csv.DictWriter(fh, fieldnames=list(rows[0]))
        wr.writeheader()
        for r in rows:
            wr.writerow({k: repr(v) for k, v in r.items()})


def write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
