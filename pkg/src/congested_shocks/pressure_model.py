"""
Singular pressure law and the nonlinear remainders built on it.

The pressure is

.. math::

    p_\\varepsilon(v) = \\varepsilon (v - 1)^{-\\gamma},

which blows up at the congestion threshold ``v = 1``.  The left far-field
state is fixed at ``v_- = 1 + eps**(1/gamma)`` so that ``p(v_-) = 1``.

Several helpers accept the gap ``a = v - 1`` directly.  Near congestion the
gap is tiny and forming ``v`` first would throw away most of its digits.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CongestionError",
    "ModelParams",
    "pressure",
    "pressure_gap",
    "binomial_remainder",
    "nonlinear_F",
    "nonlinear_F_diff",
    "nonlinear_H",
    "nonlinear_H_diff",
    "nonlinear_F_derivatives",
    "nonlinear_H_derivatives",
]

# 16-point Gauss-Legendre rule mapped to [0, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W

# beyond this |f/(v-1)| the direct formulas are accurate enough
_SMALL = 0.5


class CongestionError(ValueError):
    """Raised when a specific volume reaches the congestion threshold."""

    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the singular-pressure model.

    Parameters
    ----------
    epsilon : float
        Intensity of the singular pressure.
    gamma : float
        Pressure exponent, at least 1.
    mu : float
        Viscosity.
    v_plus : float
        Right far-field specific volume.
    u_plus : float
        Right far-field velocity.
    """

    epsilon: float
    gamma: float
    mu: float = 1.0
    v_plus: float = 1.5
    u_plus: float = 0.0
    gap_minus: float = field(init=False, repr=False)
    v_minus: float = field(init=False)

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.gamma >= 1:
            raise ValueError(f"gamma must be >= 1, got {self.gamma}")
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not self.v_plus > 1:
            raise ValueError(f"v_plus must exceed 1, got {self.v_plus}")
        gap = float(self.epsilon) ** (1.0 / self.gamma)
        object.__setattr__(self, "gap_minus", gap)
        object.__setattr__(self, "v_minus", 1.0 + gap)
        if not self.v_minus < self.v_plus:
            raise ValueError(
                f"v_minus = {self.v_minus:.6g} is not below v_plus = "
                f"{self.v_plus:.6g}; decrease epsilon")

    @property
    def s_bar(self):
        """Shock speed of the congestion limit."""
        return 1.0 / np.sqrt(self.v_plus - 1.0)

    def as_dict(self):
        return {"epsilon": self.epsilon, "gamma": self.gamma, "mu": self.mu,
                "v_plus": self.v_plus, "u_plus": self.u_plus,
                "v_minus": self.v_minus}


def _pochhammer(g, k):
    out = 1.0
    for j in range(k):
        out *= g + j
    return out


def _check_order(k):
    if k not in (0, 1, 2, 3, 4):
        raise ValueError(f"derivative order must be in 0..4, got {k!r}")


def pressure_gap(a, k, params):
    """k-th derivative of the pressure written in terms of the gap a = v - 1."""
    _check_order(k)
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0):
        bad = float(np.min(a)) + 1.0
        raise CongestionError(f"congestion reached: v = {bad!r} <= 1", bad)
    g = params.gamma
    coef = (-1) ** k * _pochhammer(g, k) * params.epsilon
    out = coef * a ** (-g - k)
    return out if out.ndim else float(out)


def _gap(v, params):
    v = np.asarray(v, dtype=float)
    # the cached left state keeps its exact gap
    return np.where(v == params.v_minus, params.gap_minus, v - 1.0)


def pressure(v, k, params):
    """Evaluate the k-th derivative of the singular pressure.

    Parameters
    ----------
    v : float or array_like
        Specific volume, strictly above 1.
    k : int
        Derivative order, 0 to 4.
    params : ModelParams

    Returns
    -------
    float or ndarray
        ``(-1)**k eps gamma (gamma+1)...(gamma+k-1) (v-1)**(-gamma-k)``.
    """
    _check_order(k)
    v = np.asarray(v, dtype=float)
    if np.any(v <= 1):
        bad = float(np.min(v))
        raise CongestionError(f"congestion reached: v = {bad!r} <= 1", bad)
    return pressure_gap(_gap(v, params), k, params)


def binomial_remainder(alpha, t, m):
    """Taylor remainder ``(1+t)**(-alpha) - sum_{j<m} binom(-alpha, j) t**j``.

    For ``|t| <= 1/2`` the integral form of the remainder is used, so the
    result keeps full relative accuracy as ``t -> 0``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= -1):
        raise CongestionError("argument of the binomial remainder is <= -1")
    small = np.abs(t) <= _SMALL
    ts = np.where(small, t, 0.0)[..., None]
    coef = (-1) ** m * _pochhammer(alpha, m)
    for j in range(1, m):
        coef /= j
    integral = np.sum(_GL_W * (1 - _GL_X) ** (m - 1)
                      * (1 + _GL_X * ts) ** (-alpha - m), axis=-1)
    quad = coef * np.where(small, t, 0.0) ** m * integral

    tb = np.where(small, 0.0, t)
    direct = (1 + tb) ** (-alpha)
    term = np.ones_like(tb)
    for j in range(m):
        direct = direct - term
        term = term * (-alpha - j) / (j + 1) * tb
    out = np.where(small, quad, direct)
    return out if out.ndim else float(out)


def _shifted_gaps(f, v_base, params):
    f = np.asarray(f, dtype=float)
    a = _gap(v_base, params)
    if np.any(np.asarray(v_base) <= 1):
        raise CongestionError("base volume must exceed 1",
                              float(np.min(v_base)))
    if np.any(a + f <= 0):
        bad = float(np.min(1.0 + a + f))
        raise CongestionError(f"congestion reached: v_base + f = {bad!r}", bad)
    return f, a


def nonlinear_F(f, v_base, params):
    """Negative second-order Taylor remainder of the pressure.

    ``F(f) = -[p(v+f) - p(v) - p'(v) f]``, computed without the three-term
    cancellation.  Closed forms are used for gamma 1 and 2.
    """
    f, a = _shifted_gaps(f, v_base, params)
    eps, g = params.epsilon, params.gamma
    if g == 1:
        out = -eps * f**2 / (a**2 * (a + f))
    elif g == 2:
        out = -eps * f**2 * (3 * a + 2 * f) / (a**3 * (a + f) ** 2)
    else:
        out = -eps * a ** (-g) * binomial_remainder(g, f / a, 2)
    out = np.asarray(out, dtype=float)
    return out if out.ndim else float(out)


def nonlinear_F_diff(f1, f2, v_base, params):
    """``F(f1) - F(f2)`` with the difference factored out first."""
    f1, a = _shifted_gaps(f1, v_base, params)
    f2, _ = _shifted_gaps(f2, v_base, params)
    eps, g = params.epsilon, params.gamma
    if g == 1:
        out = (-eps * (f1 - f2) * (a * (f1 + f2) + f1 * f2)
               / (a**2 * (a + f1) * (a + f2)))
    else:
        # F(f1) - F(f2) = -int_{f2}^{f1} [p'(v+r) - p'(v)] dr
        t1, t2 = f1 / a, f2 / a
        small = (np.abs(t1) <= _SMALL) & (np.abs(t2) <= _SMALL)
        d = np.where(small, t1 - t2, 0.0)[..., None]
        r = np.where(small, t2, 0.0)[..., None] + _GL_X * d
        inner = np.expm1(-(g + 1) * np.log1p(r))
        quad = -(-g * eps * a ** (-g)) * np.sum(_GL_W * inner * d, axis=-1)
        direct = (nonlinear_F(np.where(small, 0.0, f1), v_base, params)
                  - nonlinear_F(np.where(small, 0.0, f2), v_base, params))
        out = np.where(small, quad, direct)
    out = np.asarray(out, dtype=float)
    return out if out.ndim else float(out)


def _ratios(f, v_base):
    f = np.asarray(f, dtype=float)
    v_base = np.asarray(v_base, dtype=float)
    if np.any(v_base <= 0):
        raise CongestionError("base volume must be positive")
    q = f / v_base
    if np.any(q <= -1):
        raise CongestionError("1 + f/v_base must be positive",
                              float(np.min(v_base + f)))
    return q


def nonlinear_H(f, v_base, params=None):
    """``H(f) = ln(1 + f/v) - f/v``, accurate down to ``f -> 0``."""
    q = _ratios(f, v_base)
    small = np.abs(q) <= _SMALL
    qs = np.where(small, q, 0.0)
    # ln(1+q) - q = -q**2 int_0^1 x / (1 + q x) dx
    quad = -qs**2 * np.sum(_GL_W * _GL_X / (1 + _GL_X * qs[..., None]), axis=-1)
    qb = np.where(small, 0.0, q)
    out = np.where(small, quad, np.log1p(qb) - qb)
    return out if out.ndim else float(out)


def nonlinear_H_diff(f1, f2, v_base, params=None):
    """``H(f1) - H(f2)`` as ``-int_{q2}^{q1} r/(1+r) dr``."""
    q1 = _ratios(f1, v_base)
    q2 = _ratios(f2, v_base)
    small = (np.abs(q1) <= _SMALL) & (np.abs(q2) <= _SMALL)
    d = np.where(small, q1 - q2, 0.0)[..., None]
    r = np.where(small, q2, 0.0)[..., None] + _GL_X * d
    quad = -np.sum(_GL_W * d * r / (1 + r), axis=-1)
    direct = (nonlinear_H(np.where(small, 0.0, f1), v_base)
              - nonlinear_H(np.where(small, 0.0, f2), v_base))
    out = np.where(small, quad, direct)
    return out if out.ndim else float(out)


def nonlinear_F_derivatives(f, fx, fxx, v, vx, vxx, params):
    """Return ``(F, dF/dx, d2F/dx2)`` for ``f(x)`` on top of a base ``v(x)``.

    All inputs are pointwise samples of the functions and their first two
    derivatives.  Differences of pressure derivatives are formed through
    binomial remainders, so the result stays accurate for small ``f``.
    """
    f, a = _shifted_gaps(f, v, params)
    g = params.gamma
    t = f / a
    P1 = pressure_gap(a, 1, params)
    P2 = pressure_gap(a, 2, params)
    P3 = pressure_gap(a, 3, params)
    dP1 = P1 * binomial_remainder(g + 1, t, 1)   # p'(v+f) - p'(v)
    dP1b = P1 * binomial_remainder(g + 1, t, 2)  # ... - p''(v) f
    dP2 = P2 * binomial_remainder(g + 2, t, 1)
    dP2b = P2 * binomial_remainder(g + 2, t, 2)
    P2f = P2 + dP2
    F = nonlinear_F(f, v, params)
    Fx = -vx * dP1b - fx * dP1
    Fxx = (-vxx * dP1b - vx**2 * dP2b - 2 * vx * fx * dP2
           - fx**2 * P2f - fxx * dP1)
    return F, Fx, Fxx


def nonlinear_H_derivatives(f, fx, fxx, v, vx, vxx):
    """Return ``(H, dH/dx, d2H/dx2)`` for ``f(x)`` on top of ``v(x)``."""
    q = _ratios(f, v)
    qx = fx / v - f * vx / v**2
    qxx = fxx / v - 2 * fx * vx / v**2 - f * vxx / v**2 + 2 * f * vx**2 / v**3
    H = nonlinear_H(f, v)
    Hx = -q * qx / (1 + q)
    Hxx = -(qx**2 + q * qxx) / (1 + q) + q * qx**2 / (1 + q) ** 2
    return H, Hx, Hxx
