"""
Traveling-wave profiles and their congestion-limit description.

The profile solves ``v' = A(v) = v g(v) / (mu s)`` with
``g(v) = s**2 (v_+ - v) + p(v_+) - p(v)``.  Both half-lines are integrated
in log-gap variables:

* ``xi <= 0`` uses ``zeta = xi / eps**(1/gamma)`` and ``y = ln(vt - 1)`` with
  ``v = 1 + eps**(1/gamma) vt``.  The gap to ``v_-`` is then
  ``eps**(1/gamma) exp(y)`` and never underflows.
* ``xi >= 0`` uses ``y = ln(v_+ - v)``.

In these variables the right-hand sides are bounded and smooth, so the
exponentially thin congested layer costs nothing to resolve.
"""

from dataclasses import dataclass, field
import json
import math
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq, minimize_scalar

from .pressure_model import ModelParams, pressure, pressure_gap

__all__ = [
    "ProfileError",
    "ValueAtZero",
    "TransitionAnchor",
    "shift_value",
    "shock_speed",
    "TravelingWave",
    "solve_profile",
    "LimitProfile",
    "limit_profile",
    "limit_profile_slope",
    "RateSolution",
    "solve_corrector",
    "solve_rate_ode",
    "Cutoff",
    "default_cutoff",
    "TransitionParams",
    "TransitionExpansion",
    "transition_params",
    "build_expansion",
    "approx_profile",
    "matching_defect",
    "barrier_rates",
    "BarrierPair",
    "solve_barriers",
    "sandwich_check",
    "min_shift_distance",
    "min_shift_search",
    "DecayFit",
    "fit_exponential",
    "congested_decay_fit",
    "TransitionError",
    "transition_error",
    "write_profile_csv",
    "read_profile_csv",
]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


class ProfileError(RuntimeError):
    """Raised when a profile-related solve fails or a domain is too small.

    ``last`` holds the last coordinate reached, when known.
    """

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


# shift conventions ----------------------------------------------------------

@dataclass(frozen=True)
class ValueAtZero:
    """Fix the translation by prescribing ``v(0) = v0``."""

    v0: float

    def label(self):
        return f"ValueAtZero({self.v0!r})"


@dataclass(frozen=True)
class TransitionAnchor:
    """Fix the translation by ``v(0) = 1 + K eps**(1/(gamma+1))``."""

    def label(self):
        return "TransitionAnchor"


def _K(params):
    return (params.mu * params.s_bar) ** (-1.0 / (params.gamma + 1.0))


def shift_value(shift_spec, params):
    """Return ``v(0)`` prescribed by a shift convention."""
    if isinstance(shift_spec, ValueAtZero):
        v0 = float(shift_spec.v0)
    elif isinstance(shift_spec, TransitionAnchor):
        g = params.gamma
        v0 = 1.0 + _K(params) * params.epsilon ** (1.0 / (g + 1.0))
    else:
        raise TypeError(f"unknown shift convention {shift_spec!r}")
    if not params.v_minus < v0 < params.v_plus:
        raise ValueError(
            f"v(0) = {v0!r} is outside ({params.v_minus!r}, {params.v_plus!r})")
    return v0


# shock speed and right-hand sides --------------------------------------------

def shock_speed(params):
    """Shock speed from the Rankine-Hugoniot relation, positive root."""
    p_plus = pressure(params.v_plus, 0, params)
    p_minus = pressure_gap(params.gap_minus, 0, params)
    jump = (params.v_plus - 1.0) - params.gap_minus
    return math.sqrt((p_minus - p_plus) / jump)


def _ratio(w, gamma):
    """``(1 - (1+w)**(-gamma)) / w`` for ``w > 0``, tends to gamma at 0."""
    return -np.expm1(-gamma * np.log1p(w)) / w


def _congested_rhs(y, params, s):
    # d/dzeta of y = ln(vt - 1)
    e = params.gap_minus
    w = np.exp(y)
    return (1.0 + e * (1.0 + w)) / (params.mu * s) * (
        -s * s * e + _ratio(w, params.gamma))


def _divided_difference(h, params):
    """``(p(v_+) - p(v)) / (v_+ - v)`` with ``h = v_+ - v``."""
    ap = params.v_plus - 1.0
    r = h / ap
    g = params.gamma
    return -params.epsilon * ap ** (-g - 1.0) * np.expm1(-g * np.log1p(-r)) / r


def _free_rhs(y, params, s):
    # d/dxi of y = ln(v_+ - v)
    h = np.exp(y)
    v = params.v_plus - h
    return -(v / (params.mu * s)) * (s * s + _divided_difference(h, params))


class _Branch:
    """Dense log-gap solution on one half-line with linear tail extension."""

    def __init__(self, sol, t_end, rhs):
        self.sol = sol
        self.t_end = float(t_end)
        lo, hi = sorted((0.0, self.t_end))
        self.lo, self.hi = lo, hi
        self.y_end = float(sol(self.t_end)[0])
        self.slope_end = float(rhs(self.y_end))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t >= self.lo) & (t <= self.hi)
        tc = np.clip(t, self.lo, self.hi)
        y = np.atleast_1d(self.sol(tc.ravel())[0]).reshape(t.shape)
        y_out = self.y_end + self.slope_end * (t - self.t_end)
        return np.where(inside, y, y_out)


# traveling waves --------------------------------------------------------------

class TravelingWave:
    """Sampled traveling-wave profile with optional dense evaluation.

    Attributes
    ----------
    params : ModelParams
    s : float
        Shock speed.
    xi, v, u : ndarray
        Samples in the moving coordinate ``xi = x - s t``.
    shift_spec : ValueAtZero or TransitionAnchor
    dv_minus, dv_plus : ndarray
        Accurate gaps ``v - v_-`` and ``v_+ - v`` at the samples.
    meta : dict
        Solver settings and the maximal ODE residual.
    """

    def __init__(self, params, s, xi, dv_minus, dv_plus, shift_spec,
                 meta=None, congested=None, free=None):
        self.params = params
        self.s = float(s)
        self.shift_spec = shift_spec
        self.xi = np.asarray(xi, dtype=float)
        self.dv_minus = np.asarray(dv_minus, dtype=float)
        self.dv_plus = np.asarray(dv_plus, dtype=float)
        near_left = self.dv_minus < self.dv_plus
        self.v = np.where(near_left, params.v_minus + self.dv_minus,
                          params.v_plus - self.dv_plus)
        self.u = params.u_plus + self.s * self.dv_plus
        self.meta = dict(meta or {})
        self._congested = congested
        self._free = free
        self._pchip = None
        for arr in (self.xi, self.v, self.u, self.dv_minus, self.dv_plus):
            arr.flags.writeable = False
        if np.any(np.diff(self.xi) <= 0):
            raise ProfileError("profile grid is not strictly increasing")

    @classmethod
    def from_samples(cls, params, xi, v, shift_spec=None, s=None):
        """Wrap externally computed samples; evaluation uses PCHIP."""
        v = np.asarray(v, dtype=float)
        s = shock_speed(params) if s is None else s
        return cls(params, s, xi, v - params.v_minus, params.v_plus - v,
                   shift_spec, meta={"source": "samples"})

    @property
    def u_minus(self):
        p = self.params
        return p.u_plus + self.s * ((p.v_plus - 1.0) - p.gap_minus)

    @property
    def has_dense(self):
        return self._congested is not None

    def shifted(self, C):
        """Same samples relabelled so the new profile is ``v(xi - C)``."""
        return TravelingWave.from_samples(self.params, self.xi + C, self.v,
                                          None, self.s)

    def gaps(self, xi):
        """Return ``(v - v_-, v_+ - v)`` at arbitrary positions."""
        xi = np.asarray(xi, dtype=float)
        p = self.params
        jump = (p.v_plus - 1.0) - p.gap_minus
        if not self.has_dense:
            if self._pchip is None:
                self._pchip = PchipInterpolator(self.xi, self.v, extrapolate=True)
            v = np.clip(self._pchip(xi), p.v_minus, p.v_plus)
            return v - p.v_minus, p.v_plus - v
        e = p.gap_minus
        left = xi <= 0
        yl = self._congested(np.where(left, xi, 0.0) / e)
        yr = self._free(np.where(left, 0.0, xi))
        dvm_l = e * np.exp(yl)
        dvp_r = np.exp(yr)
        dvm = np.where(left, dvm_l, jump - dvp_r)
        dvp = np.where(left, jump - dvm_l, dvp_r)
        return dvm, dvp

    def __call__(self, xi):
        dvm, dvp = self.gaps(xi)
        p = self.params
        out = np.where(dvm < dvp, p.v_minus + dvm, p.v_plus - dvp)
        return out if out.ndim else float(out)

    def velocity(self, xi):
        _, dvp = self.gaps(xi)
        return self.params.u_plus + self.s * dvp

    def derivatives(self, xi, order=2):
        """Analytic derivatives ``[v, v', ..., v^(order)]`` from the ODE."""
        if order > 4:
            raise ValueError("derivatives available up to order 4")
        xi = np.asarray(xi, dtype=float)
        dvm, dvp = self.gaps(xi)
        return profile_derivatives(dvm, dvp, self.params, self.s, order)


def profile_derivatives(dvm, dvp, params, s, order=2):
    """Derivatives of a profile from its gaps, using ``v' = A(v)``."""
    p = params
    dvm = np.asarray(dvm, dtype=float)
    dvp = np.asarray(dvp, dtype=float)
    left = dvm < dvp
    e = p.gap_minus
    a = np.where(left, e + dvm, (p.v_plus - 1.0) - dvp)
    v = 1.0 + a
    g_left = -s * s * dvm - np.expm1(-p.gamma * np.log1p(dvm / e))
    safe = np.where(dvp > 0, dvp, 1.0)
    g_right = np.where(dvp > 0, dvp * (s * s + _divided_difference(safe, p)),
                       0.0)
    g = np.where(left, g_left, g_right)
    ms = p.mu * s
    A = v * g / ms
    out = [v, A]
    if order >= 2:
        g1 = -s * s - pressure_gap(a, 1, p)
        A1 = (g + v * g1) / ms
        out.append(A1 * A)
    if order >= 3:
        g2 = -pressure_gap(a, 2, p)
        A2 = (2 * g1 + v * g2) / ms
        out.append(A2 * A**2 + A1**2 * A)
    if order >= 4:
        g3 = -pressure_gap(a, 3, p)
        A3 = (3 * g2 + v * g3) / ms
        out.append(A3 * A**3 + 4 * A1 * A2 * A**2 + A1**3 * A)
    return out[: order + 1]


def _step_defect(sol, t0, t1, rhs):
    """Mean defect of ``v'`` over one step of the dense output.

    The defect is formed on the log variable and scaled by the largest gap
    on the step, which avoids differencing large gaps.
    """
    h = t1 - t0
    tq = t0 + h * _GL_X
    yq = sol(tq)[0]
    y0 = sol(t0)[0]
    y1 = sol(t1)[0]
    d = abs((y1 - y0) - h * np.sum(_GL_W * rhs(yq))) / abs(h)
    return d * np.exp(max(y0, y1, yq.max()))


def _integrate_branch(rhs, y0, t_bound, y_stop, method, rtol, atol):
    def fun(t, y):
        return rhs(y)

    events = None
    if y_stop is not None:
        def reached(t, y):
            return y[0] - y_stop
        reached.terminal = True
        events = reached
    # start on the natural scale of y; the default first step can be tiny
    # enough that rounding of y dominates the step residual
    first = min(abs(t_bound), 1e-3 / max(abs(float(rhs(y0))), 1e-300))
    sol = solve_ivp(fun, (0.0, t_bound), [y0], method=method, rtol=rtol,
                    atol=atol, dense_output=True, events=events,
                    first_step=first)
    if sol.status == -1:
        raise ProfileError(f"profile integration failed: {sol.message}",
                           last=float(sol.t[-1]))
    return sol


def solve_profile(params, shift_spec=None, domain=None, tol=1e-10,
                  method="DOP853", tail_tol=1e-10, fill=15):
    """Solve the traveling-wave ODE on both sides of ``xi = 0``.

    Parameters
    ----------
    params : ModelParams
    shift_spec : ValueAtZero or TransitionAnchor, optional
        Defaults to ``ValueAtZero((1 + v_+)/2)``, or to the midpoint of
        ``(v_-, v_+)`` when epsilon is so large that ``v_- >= (1 + v_+)/2``.
    domain : (float, float), optional
        ``(xi_lo, xi_hi)`` with ``xi_lo < 0 < xi_hi``.  When omitted each side
        is integrated until its gap to the far-field state drops below
        ``tail_tol``.
    tol : float
        Bound on the per-step ODE residual.
    method : str
        Any ``solve_ivp`` method.  In log-gap variables the problem is not
        stiff, so the explicit DOP853 with its 7th-order dense output is the
        default; ``"Radau"`` is available as an implicit alternative.
    fill : int
        Extra dense-output samples inserted inside every accepted step.

    Returns
    -------
    TravelingWave
    """
    if shift_spec is None:
        mid = 0.5 * (1.0 + params.v_plus)
        if mid <= params.v_minus:
            mid = 0.5 * (params.v_minus + params.v_plus)
        shift_spec = ValueAtZero(mid)
    v0 = shift_value(shift_spec, params)
    s = shock_speed(params)
    e = params.gap_minus
    rtol = min(1e-3 * tol, 1e-13)
    atol = rtol

    def crhs(y):
        return _congested_rhs(y, params, s)

    def frhs(y):
        return _free_rhs(y, params, s)

    yc0 = math.log((v0 - params.v_minus) / e)
    yf0 = math.log(params.v_plus - v0)
    if domain is None:
        yc_stop = math.log(tail_tol / e)
        yf_stop = math.log(tail_tol)
        sig = float(crhs(yc_stop))
        # the bulk of the front spans O(1) in xi, i.e. O(1/e) in zeta
        zeta_bound = -4.0 * (yc0 - yc_stop + 1.0) / sig - 100.0 / e
        rate = float(-frhs(yf_stop))
        xi_bound = 4.0 * (yf0 - yf_stop + 1.0) / rate
    else:
        lo, hi = map(float, domain)
        if not lo < 0 < hi:
            raise ValueError(f"domain must satisfy lo < 0 < hi, got {domain}")
        yc_stop = yf_stop = None
        zeta_bound, xi_bound = lo / e, hi
    if yc_stop is not None and yc0 <= yc_stop:
        raise ProfileError("v(0) is already inside the tail tolerance")

    sol_c = _integrate_branch(crhs, yc0, zeta_bound, yc_stop, method, rtol, atol)
    sol_f = _integrate_branch(frhs, yf0, xi_bound, yf_stop, method, rtol, atol)
    if yc_stop is not None and sol_c.status != 1:
        raise ProfileError("congested tail not reached", last=sol_c.t[-1] * e)
    if yf_stop is not None and sol_f.status != 1:
        raise ProfileError("free tail not reached", last=sol_f.t[-1])

    congested = _Branch(sol_c.sol, sol_c.t[-1], crhs)
    free = _Branch(sol_f.sol, sol_f.t[-1], frhs)

    res = 0.0
    nodes = []
    for sol, rhs, scale in ((sol_c, crhs, e), (sol_f, frhs, 1.0)):
        t = sol.t
        for t0, t1 in zip(t[:-1], t[1:]):
            res = max(res, _step_defect(sol.sol, t0, t1, rhs))
        frac = np.arange(fill + 1) / (fill + 1)
        pts = (t[:-1, None] + np.diff(t)[:, None] * frac).ravel()
        nodes.append(np.append(pts, t[-1]) * scale)
    xi = np.unique(np.concatenate(nodes))

    meta = {"tol": tol, "rtol": rtol, "method": method, "tail_tol": tail_tol,
            "residual_max": res, "v0": v0,
            "n_steps": int(len(sol_c.t) + len(sol_f.t) - 2),
            "domain": [float(xi[0]), float(xi[-1])]}
    dvm, dvp = _gaps_from_branches(xi, params, congested, free)
    wave = TravelingWave(params, s, xi, dvm, dvp, shift_spec, meta,
                         congested, free)
    if res > tol:
        raise ProfileError(
            f"ODE residual {res:.3e} exceeds tolerance {tol:.3e}")
    if np.any(np.diff(wave.v) <= 0):
        raise ProfileError("computed profile is not strictly increasing")
    return wave


def _gaps_from_branches(xi, params, congested, free):
    e = params.gap_minus
    jump = (params.v_plus - 1.0) - e
    left = xi <= 0
    dvm_l = e * np.exp(congested(np.where(left, xi, 0.0) / e))
    dvp_r = np.exp(free(np.where(left, 0.0, xi)))
    return (np.where(left, dvm_l, jump - dvp_r),
            np.where(left, jump - dvm_l, dvp_r))


# limit profile --------------------------------------------------------------

@dataclass(frozen=True)
class LimitProfile:
    """Logistic front of the congestion limit."""

    v_plus: float
    mu: float = 1.0

    @classmethod
    def from_params(cls, params):
        return cls(params.v_plus, params.mu)

    @property
    def s_bar(self):
        return 1.0 / math.sqrt(self.v_plus - 1.0)

    @property
    def r(self):
        return self.v_plus / (self.mu * math.sqrt(self.v_plus - 1.0))


def limit_profile(xi, lp):
    """Evaluate the limit profile, exactly 1 on ``xi <= 0``."""
    xi = np.asarray(xi, dtype=float)
    pos = np.maximum(xi, 0.0)
    out = np.where(xi > 0,
                   lp.v_plus / (1.0 + (lp.v_plus - 1.0) * np.exp(-lp.r * pos)),
                   1.0)
    return out if out.ndim else float(out)


def limit_profile_slope(xi, lp):
    """Derivative of the limit profile (right derivative at 0)."""
    xi = np.asarray(xi, dtype=float)
    vb = limit_profile(np.maximum(xi, 0.0), lp)
    out = np.where(xi >= 0, lp.r * vb * (1.0 - vb / lp.v_plus), 0.0)
    return out if out.ndim else float(out)


# autonomous rate ODE: corrector and barriers ---------------------------------

class RateSolution:
    """Solution of ``w' = rate (1 - w**(-gamma))`` with ``w(0) = 2``.

    Stored as ``y = ln(w - 1)``; outside the integration range the left tail
    continues with its exponential asymptote and the right tail linearly.
    """

    def __init__(self, rate, gamma, zeta_domain, rtol=1e-12):
        self.rate = float(rate)
        self.gamma = float(gamma)
        lo, hi = map(float, zeta_domain)
        if not lo <= 0 <= hi:
            raise ValueError("zeta domain must contain 0")
        self.lo, self.hi = lo, hi

        def fun(t, y):
            return self.rate * _ratio(np.exp(y), self.gamma)

        self._parts = []
        for bound in (lo, hi):
            if bound == 0:
                continue
            sol = solve_ivp(fun, (0.0, bound), [0.0], method="DOP853",
                            rtol=rtol, atol=rtol, dense_output=True)
            if sol.status != 0:
                raise ProfileError(f"rate ODE failed: {sol.message}",
                                   last=float(sol.t[-1]))
            self._parts.append((min(0.0, bound), max(0.0, bound), sol.sol))
        self._y_lo = self._log_gap_inside(np.array([lo]))[0]
        self._y_hi = self._log_gap_inside(np.array([hi]))[0]

    def rhs_log(self, y):
        return self.rate * _ratio(np.exp(y), self.gamma)

    def _log_gap_inside(self, z):
        out = np.zeros_like(z)
        for a, b, sol in self._parts:
            m = (z >= a) & (z <= b)
            if np.any(m):
                out[m] = sol(z[m])[0]
        return out

    def extrapolated(self, zeta):
        zeta = np.asarray(zeta, dtype=float)
        return (zeta < self.lo) | (zeta > self.hi)

    def log_gap(self, zeta):
        """``ln(w(zeta) - 1)``."""
        z = np.atleast_1d(np.asarray(zeta, dtype=float))
        out = self._log_gap_inside(np.clip(z, self.lo, self.hi))
        left = z < self.lo
        if np.any(left):
            out[left] = self._y_lo + self.rhs_log(self._y_lo) * (z[left] - self.lo)
        right = z > self.hi
        if np.any(right):
            w_hi = 1.0 + math.exp(self._y_hi)
            slope = self.rate * (1.0 - w_hi ** -self.gamma)
            out[right] = np.log(w_hi - 1.0 + slope * (z[right] - self.hi))
        return out.reshape(np.shape(zeta)) if np.ndim(zeta) else float(out[0])

    def gap(self, zeta):
        return np.exp(self.log_gap(zeta))

    def __call__(self, zeta):
        return 1.0 + self.gap(zeta)

    def derivative(self, zeta):
        w = self(zeta)
        return self.rate * (1.0 - w ** -self.gamma)

    def crossing(self, target):
        """Coordinate where ``w`` equals ``target > 1``."""
        if not target > 1:
            raise ValueError("target must exceed 1")
        y_t = math.log(target - 1.0)
        if not self._y_lo <= y_t <= self._y_hi:
            raise ProfileError(
                f"value {target!r} not bracketed on [{self.lo}, {self.hi}]; "
                "extend the domain")
        if y_t == 0.0:
            return 0.0
        a, b = (self.lo, 0.0) if y_t < 0 else (0.0, self.hi)
        return brentq(lambda z: self.log_gap(z) - y_t, a, b,
                      xtol=1e-14, rtol=4 * np.finfo(float).eps)


def solve_rate_ode(rate, gamma, zeta_domain):
    return RateSolution(rate, gamma, zeta_domain)


def solve_corrector(params, zeta_domain=(-60.0, 100.0)):
    """Inner corrector ``w' = (1 - w**(-gamma)) / (mu s_bar)``, ``w(0) = 2``."""
    return RateSolution(1.0 / (params.mu * params.s_bar), params.gamma,
                        zeta_domain)


# matched expansion --------------------------------------------------------------

@dataclass(frozen=True)
class Cutoff:
    """Compactly supported cutoff with ``chi(0) = 1`` and ``chi'(0) = -1``."""

    value: Callable
    derivative: Callable
    name: str = "custom"


def _chi(xi):
    xi = np.asarray(xi, dtype=float)
    inside = (xi >= 0) & (xi < 1)
    xs = np.where(inside, xi, 0.0)
    return np.where(inside, (1 - xs) * np.exp(-xs**2 / (1 - xs**2)), 0.0)


def _chi_prime(xi):
    xi = np.asarray(xi, dtype=float)
    inside = (xi >= 0) & (xi < 1)
    xs = np.where(inside, xi, 0.0)
    q = 1 - xs**2
    ex = np.exp(-xs**2 / q)
    d = -ex + (1 - xs) * ex * (-2 * xs / q**2)
    return np.where(inside, d, 0.0)


default_cutoff = Cutoff(_chi, _chi_prime, "bump")


class TransitionParams(NamedTuple):
    omega: float
    K: float
    xi_star: float


@dataclass(frozen=True)
class TransitionExpansion:
    """Matched approximation of a profile around the congestion front."""

    params: ModelParams
    K: float
    omega: float
    xi_star: float
    zeta_star: float
    xi_star_asymptotic: float
    corrector: RateSolution = field(repr=False)
    cutoff: Cutoff = field(default=default_cutoff, repr=False)


def build_expansion(params, cutoff=default_cutoff, zeta_lo=-60.0):
    """Compute the matching parameters and the corrector table."""
    g = params.gamma
    mus = params.mu * params.s_bar
    K = _K(params)
    omega = K * params.epsilon ** (-1.0 / (g * (g + 1.0)))
    zeta_hi = 2.0 * mus * omega + 20.0
    corrector = solve_corrector(params, (zeta_lo, zeta_hi))
    try:
        zeta_star = corrector.crossing(omega)
    except ProfileError as exc:
        raise ProfileError(f"matching point not found: {exc}") from exc
    e = params.gap_minus
    xi_star = -e * zeta_star
    asym = -mus ** (g / (g + 1.0)) * params.epsilon ** (1.0 / (g + 1.0))
    return TransitionExpansion(params, K, omega, xi_star, zeta_star, asym,
                               corrector, cutoff)


def transition_params(params):
    """Return ``(omega, K, xi_star)`` of the matched expansion."""
    ex = build_expansion(params)
    return TransitionParams(ex.omega, ex.K, ex.xi_star)


def approx_profile(xi, expansion, lp, return_flag=False):
    """Evaluate the matched approximation.

    With ``return_flag`` the second output marks points whose corrector value
    came from the tail extension rather than the tabulated solution.
    """
    xi = np.asarray(xi, dtype=float)
    p = expansion.params
    e = p.gap_minus
    g = p.gamma
    zeta = (np.minimum(xi, 0.0) - expansion.xi_star) / e
    inner = 1.0 + e * expansion.corrector(zeta)
    outer = (limit_profile(xi, lp) + expansion.K * p.epsilon ** (1 / (g + 1))
             * expansion.cutoff.value(np.maximum(xi, 0.0)))
    out = np.where(xi <= 0, inner, outer)
    out = out if out.ndim else float(out)
    if return_flag:
        flag = (xi <= 0) & expansion.corrector.extrapolated(zeta)
        return out, flag
    return out


def matching_defect(expansion, lp):
    """Value and relative slope mismatch of the approximation at 0."""
    p = expansion.params
    g = p.gamma
    amp = expansion.K * p.epsilon ** (1 / (g + 1))
    left_v = 1.0 + p.gap_minus * expansion.corrector(expansion.zeta_star)
    right_v = 1.0 + amp
    left_d = expansion.corrector.derivative(expansion.zeta_star)
    right_d = limit_profile_slope(0.0, lp) + amp * expansion.cutoff.derivative(0.0)
    return abs(left_v - right_v), abs(left_d - right_d) / abs(right_d)


# barriers ---------------------------------------------------------------------

def barrier_rates(params, v0_at_zero):
    """Rates of the upper and lower comparison ODEs for a given ``v(0)``."""
    g = params.gamma
    a0 = v0_at_zero - 1.0
    e = params.gap_minus
    if not a0 > e:
        raise ValueError(
            f"v(0) - 1 = {a0!r} must exceed eps**(1/gamma) = {e!r}")
    s = shock_speed(params)
    small = params.epsilon ** (-(g - 1.0) / g) * a0**g
    if not s * s * small / g < 1.0:
        raise ValueError(
            "v(0) - 1 too large: eps**(-(gamma-1)/gamma) (v(0)-1)**gamma "
            f"= {small!r} must stay well below 1")
    ms = params.mu * s
    rho_upper = (1.0 + e) / ms * (1.0 - s * s * small / g)
    rho_lower = v0_at_zero / ms
    return rho_upper, rho_lower


@dataclass(frozen=True)
class BarrierPair:
    rho_upper: float
    rho_lower: float
    v_upper: RateSolution = field(repr=False)
    v_lower: RateSolution = field(repr=False)
    zeta_upper: float
    zeta_lower: float
    sigma_lower: float
    v0: float
    gap_minus: float

    @property
    def sigma_upper(self):
        return self.rho_upper * self.v_upper.gamma

    @property
    def xi_eps(self):
        """Edge of the region where the exponential bounds are proven."""
        return -self.gap_minus * max(self.zeta_upper, self.zeta_lower)


def solve_barriers(params, v0_at_zero, zeta_lo=-200.0):
    """Solve both comparison ODEs and locate their crossing coordinates."""
    rho_u, rho_l = barrier_rates(params, v0_at_zero)
    target = (v0_at_zero - 1.0) / params.gap_minus
    hi = 2.0 * target / min(rho_u, rho_l) + 20.0
    vu = RateSolution(rho_u, params.gamma, (zeta_lo, hi))
    vl = RateSolution(rho_l, params.gamma, (zeta_lo, hi))
    return BarrierPair(rho_u, rho_l, vu, vl, vu.crossing(target),
                       vl.crossing(target), rho_l * params.gamma,
                       float(v0_at_zero), params.gap_minus)


class SandwichResult(NamedTuple):
    violations: int
    n_points: int
    min_margin_lower: float
    min_margin_upper: float


def sandwich_check(pair, wave, n=1000, zeta_min=None, slack=1e-9):
    """Count points where the rescaled profile leaves the barrier corridor.

    Comparison is made on ``ln(w - 1)``; ``slack`` absorbs solver error near
    ``zeta = 0`` where all three curves meet.
    """
    e = wave.params.gap_minus
    if zeta_min is None:
        zeta_min = wave.xi[0] / e
    zeta = np.linspace(zeta_min, 0.0, n + 1)[:-1]
    dvm, _ = wave.gaps(zeta * e)
    y = np.log(dvm / e)
    yl = pair.v_lower.log_gap(zeta + pair.zeta_lower)
    yu = pair.v_upper.log_gap(zeta + pair.zeta_upper)
    m_low = y - yl
    m_up = yu - y
    bad = (m_low < -slack) | (m_up < -slack)
    return SandwichResult(int(np.sum(bad)), n, float(m_low.min()),
                          float(m_up.min()))


# convergence to the limit --------------------------------------------------------

def min_shift_distance(wave, lp, c_range=None, n_scan=401):
    """``inf_C sup_xi |v(xi + C) - vbar(xi)|`` over wave samples.

    The sup runs over the wave nodes (where ``v`` is known exactly) plus the
    kink of the limit profile, where the wave is interpolated by PCHIP.
    Returns the distance; the minimizing shift is in ``.shift`` of the
    attached result via :func:`min_shift_search`.
    """
    return min_shift_search(wave, lp, c_range, n_scan)[0]


def min_shift_search(wave, lp, c_range=None, n_scan=401):
    xi, v = wave.xi, wave.v
    p = wave.params
    if xi[0] > -1e-3 or lp.v_plus - v[-1] > 1e-3 * (lp.v_plus - 1.0):
        raise ProfileError("profile domain too narrow: tails unresolved")
    pchip = PchipInterpolator(xi, v)

    def J(C):
        body = np.max(np.abs(v - limit_profile(xi - C, lp)))
        kink = abs(float(pchip(C)) - 1.0) if xi[0] <= C <= xi[-1] else np.inf
        return max(body, kink)

    if c_range is None:
        c_range = (xi[0], xi[-1])
    cs = np.linspace(c_range[0], c_range[1], n_scan)
    js = np.array([J(c) for c in cs])
    k = int(np.argmin(js))
    lo = cs[max(k - 1, 0)]
    hi = cs[min(k + 1, n_scan - 1)]
    finite = js[np.isfinite(js)]
    steps = np.sign(np.diff(finite))
    unimodal = np.count_nonzero(np.diff(steps[steps != 0]) != 0) <= 1
    if unimodal and 0 < k < n_scan - 1:
        res = minimize_scalar(J, bracket=(lo, cs[k], hi), method="golden",
                              tol=1e-10)
        best_c, best = float(res.x), float(res.fun)
    else:
        best_c, best = float(cs[k]), float(js[k])
        for _ in range(4):
            cs2 = np.linspace(lo, hi, 101)
            js2 = np.array([J(c) for c in cs2])
            k2 = int(np.argmin(js2))
            best_c, best = float(cs2[k2]), float(js2[k2])
            w = (hi - lo) / 100
            lo, hi = best_c - w, best_c + w
    if js[k] < best:
        best_c, best = float(cs[k]), float(js[k])
    return best, best_c, bool(unimodal)


# congested decay ------------------------------------------------------------------

class DecayFit(NamedTuple):
    sigma_hat: float
    C_hat: float
    r_squared: float
    sigma_lower: float
    sigma_upper: float
    window: tuple
    window_shrunk: bool


def fit_exponential(zeta, gap):
    """Least-squares fit ``ln gap = ln C + sigma zeta``.

    Returns ``(sigma, C, r_squared)``.
    """
    zeta = np.asarray(zeta, dtype=float)
    lg = np.log(np.asarray(gap, dtype=float))
    A = np.vstack([zeta, np.ones_like(zeta)]).T
    coef, *_ = np.linalg.lstsq(A, lg, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((lg - pred) ** 2))
    ss_tot = float(np.sum((lg - lg.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), float(np.exp(coef[1])), r2


def congested_decay_fit(wave, barriers=None, n=400):
    """Fit the exponential approach to ``v_-`` on ``xi < xi_eps``.

    The fit uses the rescaled coordinate ``zeta = xi / eps**(1/gamma)`` and
    the gap ``v - v_-``.  ``C_hat`` is reported in units of ``eps**(1/gamma)``.
    """
    p = wave.params
    e = p.gap_minus
    v0 = float(wave(0.0))
    if barriers is None:
        barriers = solve_barriers(p, v0)
    z_hi = barriers.xi_eps / e
    z_lo = wave.xi[0] / e
    if not z_lo < z_hi:
        raise ProfileError("congested window is empty; widen the domain")
    zeta = np.linspace(z_lo, z_hi, n)
    dvm, _ = wave.gaps(zeta * e)
    # gaps that would not survive in v itself
    floor = 64 * np.finfo(float).eps * p.v_minus
    below = dvm < floor
    shrunk = bool(np.mean(below) > 0.5)
    if shrunk:
        zeta, dvm = zeta[~below], dvm[~below]
    sigma, C, r2 = fit_exponential(zeta, dvm / e)
    return DecayFit(sigma, C, r2, barriers.sigma_lower, barriers.sigma_upper,
                    (float(zeta[0] * e), float(zeta[-1] * e)), shrunk)


# transition error ---------------------------------------------------------------

class TransitionError(NamedTuple):
    sup_error: float
    weighted_error: float
    xi_min: float
    window_empty: bool


def transition_error(wave, expansion, lp, R=1.0, M=100.0, n=4001):
    """Sup error on ``[-R, R]`` and weighted error on ``[xi_min, 0]``.

    ``xi_min = xi_star + M eps**(1/gamma)``.  When ``xi_min >= 0`` the
    weighted error is NaN and ``window_empty`` is set.
    """
    if not isinstance(wave.shift_spec, TransitionAnchor):
        raise ValueError("transition errors need a TransitionAnchor profile")
    p = wave.params
    e = p.gap_minus
    xs = expansion.xi_star
    inner = xs + e * np.linspace(-60.0, max(expansion.zeta_star, 1.0), n)
    grid = np.unique(np.concatenate([
        np.linspace(-R, R, n),
        inner[(inner >= -R) & (inner <= R)],
        np.linspace(max(-R, 20 * xs), min(R, -20 * xs), n),
    ]))
    err = np.abs(wave(grid) - approx_profile(grid, expansion, lp))
    sup_err = float(err.max())

    xi_min = xs + M * e
    if xi_min >= 0:
        return TransitionError(sup_err, float("nan"), xi_min, True)
    w = np.linspace(xi_min, 0.0, n)[:-1]
    w = np.unique(np.concatenate([w, -np.geomspace(1e-12, -xi_min, n // 4)]))
    werr = np.abs(wave(w) - approx_profile(w, expansion, lp)) / np.abs(w)
    return TransitionError(sup_err, float(werr.max()), xi_min, False)


# file I/O --------------------------------------------------------------------

def write_profile_csv(wave, path):
    """Write ``xi, v, u`` with a JSON header block of ``#`` lines."""
    spec = wave.shift_spec
    header = {
        "params": wave.params.as_dict(),
        "s": wave.s,
        "shift_spec": spec.label() if spec is not None else None,
        "tolerances": {k: wave.meta.get(k) for k in ("tol", "rtol", "tail_tol")},
        "residual_max": wave.meta.get("residual_max"),
        "method": wave.meta.get("method"),
    }
    lines = json.dumps(header, indent=1, sort_keys=True).splitlines()
    with open(path, "w") as fh:
        for line in lines:
            fh.write("# " + line + "\n")
        fh.write("xi,v,u\n")
        for row in zip(wave.xi, wave.v, wave.u):
            fh.write("%.17g,%.17g,%.17g\n" % row)


def read_profile_csv(path):
    """Return ``(header, data)`` where data has keys ``xi``, ``v``, ``u``."""
    head, body = [], []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                head.append(line[2:])
            else:
                body.append(line)
    header = json.loads("".join(head)) if head else {}
    arr = np.loadtxt(body[1:], delimiter=",", ndmin=2)
    return header, {"xi": arr[:, 0], "v": arr[:, 1], "u": arr[:, 2]}
