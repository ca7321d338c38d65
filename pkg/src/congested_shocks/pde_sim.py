"""
Time integration of the Navier-Stokes system around a traveling wave.

Lagrangian mass coordinates, staggered grid:

* ``v`` lives on the ``N`` cells, with one fixed ghost cell at each end,
* ``u`` lives on the ``N + 1`` nodes, with Dirichlet values at both ends.

One step first solves the momentum equation with explicit pressure,
explicit upwind frame advection and backward-Euler viscosity (a tridiagonal
solve), then advances ``v`` conservatively with the new velocity.  In the
co-moving frame the reference state is the exact steady state of the
discrete scheme, so an unperturbed run does not drift at all.

The integrated perturbations ``W`` (cells) and ``V`` (nodes) are cumulative
sums of the pointwise perturbations, so their discrete derivatives give
back ``w - w_eps`` and ``v - v_eps`` exactly.
"""

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence
import math
import warnings

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from .pressure_model import CongestionError, pressure

__all__ = [
    "Lab",
    "CoMoving",
    "Grid",
    "Fixed",
    "CFL",
    "SchemeConfig",
    "Background",
    "discrete_background",
    "sampled_background",
    "GaussianDipole",
    "CompactBump",
    "Custom",
    "PerturbationSpec",
    "SimState",
    "IntegratedState",
    "MassDefectError",
    "SimulationAborted",
    "init_state",
    "time_step",
    "step",
    "effective_velocity",
    "integrated_perturbation",
    "LinearizedSystem",
    "step_linearized",
    "run",
    "RunResult",
    "run_linearized",
]


# frames, grids and scheme settings -----------------------------------------------

@dataclass(frozen=True)
class Lab:
    """Lagrangian frame at rest; the wave travels at speed ``s``."""

    speed: float = 0.0


@dataclass(frozen=True)
class CoMoving:
    """Frame moving with the wave, ``xi = x - s t``."""

    speed: float


@dataclass(frozen=True)
class Grid:
    """Uniform grid of ``n_cells`` cells on ``[x_lo, x_hi]``."""

    x_lo: float
    x_hi: float
    n_cells: int

    @classmethod
    def with_spacing(cls, x_lo, x_hi, dx):
        n = int(round((x_hi - x_lo) / dx))
        return cls(x_lo, x_lo + n * dx, n)

    @property
    def dx(self):
        return (self.x_hi - self.x_lo) / self.n_cells

    @property
    def nodes(self):
        return self.x_lo + self.dx * np.arange(self.n_cells + 1)

    @property
    def centers(self):
        return self.x_lo + self.dx * (np.arange(self.n_cells) + 0.5)


@dataclass(frozen=True)
class Fixed:
    dt: float


@dataclass(frozen=True)
class CFL:
    safety: float = 0.5

    def __post_init__(self):
        if not 0 < self.safety <= 1:
            raise ValueError(f"CFL safety must be in (0, 1], got {self.safety}")


@dataclass(frozen=True)
class SchemeConfig:
    """Time-step control.  Viscosity is always implicit, pressure explicit,
    and the far-field values are imposed as Dirichlet data."""

    dt_control: object = field(default_factory=CFL)
    viscous_treatment: str = "implicit"
    pressure_treatment: str = "explicit"
    boundary: str = "dirichlet"


# reference states ---------------------------------------------------------------

@dataclass(frozen=True)
class Background:
    """Reference state on a grid, ghost cells included in ``v_full``."""

    v_full: np.ndarray  # N + 2 values: ghost, cells, ghost
    u: np.ndarray       # N + 1 nodes
    steady: bool

    @property
    def v(self):
        return self.v_full[1:-1]


def sampled_background(wave, grid, t=0.0, frame=None):
    """Continuous profile sampled at cell centres and nodes."""
    shift = wave.s * t if isinstance(frame, Lab) else 0.0
    h = grid.dx
    xc = np.concatenate([[grid.x_lo - 0.5 * h], grid.centers,
                         [grid.x_hi + 0.5 * h]])
    return Background(np.asarray(wave(xc - shift), dtype=float),
                      np.asarray(wave.velocity(grid.nodes - shift), dtype=float),
                      steady=False)


def discrete_background(wave, grid):
    """Exact steady state of the co-moving scheme.

    Steadiness of the cell update gives ``u_i + s v_i = const``.  Summing the
    node update then gives, for every cell ``k``,

        mu s (v_{k+1} - v_k) / (h v_k) = s**2 (v_+ - v_{k+1}) + p(v_+) - p(v_k),

    which is marched right explicitly and left by a bracketed root solve,
    starting from the profile value in the cell closest to ``xi = 0``.
    """
    p = wave.params
    s = wave.s
    h = grid.dx
    n = grid.n_cells
    mu = p.mu
    p_plus = pressure(p.v_plus, 0, p)
    xc = np.concatenate([[grid.x_lo - 0.5 * h], grid.centers,
                         [grid.x_hi + 0.5 * h]])
    k0 = int(np.argmin(np.abs(xc)))
    vb = np.empty(n + 2)
    vb[k0] = float(wave(xc[k0]))
    c = mu * s / h
    for k in range(k0, n + 1):
        vk = vb[k]
        vb[k + 1] = ((c + s * s * p.v_plus + p_plus - pressure(vk, 0, p))
                     / (c / vk + s * s))
    lo_floor = 1.0 + 0.5 * p.gap_minus
    for k in range(k0 - 1, -1, -1):
        nxt = vb[k + 1]

        def f(v):
            return c * (nxt - v) / v - s * s * (p.v_plus - nxt) - p_plus + pressure(v, 0, p)

        if nxt <= p.v_minus or f(nxt) >= 0:
            vb[k] = nxt
            continue
        if f(lo_floor) <= 0:
            vb[k] = p.v_minus
            continue
        vb[k] = brentq(f, lo_floor, nxt, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    C1 = p.u_plus + s * p.v_plus
    u = C1 - s * vb[1:]
    return Background(vb, u, steady=True)


# perturbations ------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianDipole:
    """Potential ``exp(-((x - center)/width)**2)``, cut at 8 widths."""

    center: float = 0.0
    width: float = 0.2

    def potential(self, x):
        r = (np.asarray(x) - self.center) / self.width
        return np.where(np.abs(r) < 8.0, np.exp(-r * r), 0.0)


@dataclass(frozen=True)
class CompactBump:
    """Potential ``exp(1 - 1/(1 - r**2))`` on ``|r| < 1``, peak 1."""

    center: float = 0.0
    width: float = 0.5

    def potential(self, x):
        r = (np.asarray(x) - self.center) / self.width
        inside = np.abs(r) < 1
        rs = np.where(inside, r, 0.0)
        return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - rs * rs)), 0.0)


@dataclass(frozen=True)
class Custom:
    """Raw pointwise perturbations: ``v`` on cells and/or ``u`` on nodes.

    The samples are multiplied by the perturbation amplitude.
    """

    v: Optional[np.ndarray] = None
    u: Optional[np.ndarray] = None


@dataclass(frozen=True)
class PerturbationSpec:
    """Zero-mass perturbation built from a compactly supported potential.

    For potential shapes, ``v - v_eps`` is the exact discrete derivative of
    ``amplitude * potential`` sampled on nodes, and ``u - u_eps`` the one of
    the potential sampled on cell centres.  ``amplitude`` is the peak of the
    potential.
    """

    shape: object
    amplitude: float = 0.0
    target: Sequence[str] = ("v",)


# states -------------------------------------------------------------------------

@dataclass(frozen=True)
class SimState:
    grid: Grid
    v: np.ndarray
    u: np.ndarray
    t: float
    frame: object
    background: Background
    v_ghost: tuple

    @property
    def x(self):
        return self.grid.nodes

    @property
    def dx(self):
        return self.grid.dx

    def v_full(self):
        return np.concatenate([[self.v_ghost[0]], self.v, [self.v_ghost[1]]])


@dataclass(frozen=True)
class IntegratedState:
    """``W`` on cell centres and ``V`` on nodes of ``grid``."""

    grid: Grid
    W: np.ndarray
    V: np.ndarray
    t: float = 0.0
    mass_defect: tuple = (0.0, 0.0)


class MassDefectError(ValueError):
    """The perturbation does not have zero mass."""


class SimulationAborted(RuntimeError):
    """Raised when a run violates an invariant; carries the last good state."""

    def __init__(self, message, state, cause=None):
        super().__init__(message)
        self.state = state
        self.cause = cause


def _frame_speed(frame):
    return frame.speed if isinstance(frame, CoMoving) else 0.0


def _realize(pert, grid):
    n = grid.n_cells
    dv = np.zeros(n)
    du = np.zeros(n + 1)
    if pert is None or pert.amplitude == 0:
        return dv, du
    shape = pert.shape
    if isinstance(shape, Custom):
        if shape.v is not None:
            dv = np.asarray(shape.v, dtype=float) * pert.amplitude
        if shape.u is not None:
            du = np.asarray(shape.u, dtype=float) * pert.amplitude
        return dv, du
    h = grid.dx
    a = pert.amplitude
    if "v" in pert.target:
        B = a * shape.potential(grid.nodes)
        dv = np.diff(B) / h
    if "u" in pert.target:
        xc = np.concatenate([[grid.x_lo - 0.5 * h], grid.centers,
                             [grid.x_hi + 0.5 * h]])
        B = a * shape.potential(xc)
        du = np.diff(B) / h
        du[0] = du[-1] = 0.0
    return dv, du


def init_state(wave, pert, grid, frame=None, background=None,
               allow_nonzero_mass=False):
    """Profile plus a realized perturbation.

    Parameters
    ----------
    wave : TravelingWave
    pert : PerturbationSpec or None
    grid : Grid
    frame : Lab or CoMoving
        Defaults to the co-moving frame.
    background : Background, optional
        Defaults to the discrete steady state in the co-moving frame and to
        the sampled profile in the lab frame.
    allow_nonzero_mass : bool
        Admit perturbations with nonzero mass (out-of-theory experiments).
    """
    p = wave.params
    if frame is None:
        frame = CoMoving(wave.s)
    if grid.x_lo > wave.xi[0] or grid.x_hi < wave.xi[-1]:
        warnings.warn("grid does not cover the resolved profile domain; "
                      "far-field values come from the tail extension")
    if background is None:
        if isinstance(frame, CoMoving):
            background = discrete_background(wave, grid)
        else:
            background = sampled_background(wave, grid)
    dv, du = _realize(pert, grid)
    h = grid.dx
    scale = max(np.max(np.abs(dv)), np.max(np.abs(du)), 1e-300)
    mv = h * dv.sum()
    mu_ = h * du.sum()
    if not allow_nonzero_mass and max(abs(mv), abs(mu_)) > 1e-14 * scale * (
            grid.x_hi - grid.x_lo):
        raise MassDefectError(
            f"perturbation has nonzero mass (v: {mv:.3e}, u: {mu_:.3e})")
    if pert is not None and pert.amplitude > 0 and not isinstance(
            pert.shape, Custom):
        budget = p.epsilon ** (5.0 / (2.0 * p.gamma))
        if pert.amplitude > budget:
            warnings.warn(
                f"amplitude {pert.amplitude:.3e} exceeds eps**(5/(2 gamma)) = "
                f"{budget:.3e}; outside the small-data regime")
    v = background.v + dv
    u = background.u + du
    if np.min(v) <= 1.0:
        worst = float(np.min(v))
        raise CongestionError(
            f"perturbation pushes v to {worst!r} <= 1 "
            f"(max violation {1.0 - worst:.3e})", worst)
    ghosts = (float(background.v_full[0]), float(background.v_full[-1]))
    return SimState(grid, v, u, 0.0, frame, background, ghosts)


# nonlinear scheme ---------------------------------------------------------------

def time_step(state, config, params):
    """Step size from the configured control."""
    ctl = config.dt_control
    if isinstance(ctl, Fixed):
        return float(ctl.dt)
    vf = state.v_full()
    dp = np.max(np.abs(pressure(vf, 1, params)))
    c = math.sqrt(dp * np.max(vf)) + abs(_frame_speed(state.frame))
    return ctl.safety * state.dx / c


class _Stepper:
    """Reusable work arrays for repeated steps on one grid."""

    def __init__(self, state, params):
        self.params = params
        self.h = state.dx
        self.c = _frame_speed(state.frame)
        self.n = state.grid.n_cells
        self.ab = np.zeros((3, self.n - 1))

    def __call__(self, state, dt):
        p = self.params
        h, c, n, mu = self.h, self.c, self.n, p.mu
        v, u = state.v, state.u
        vf = state.v_full()
        try:
            pr = pressure(v, 0, p)
        except CongestionError as exc:
            raise CongestionError(f"congestion violation at t={state.t}: {exc}",
                                  exc.value) from exc
        # momentum on interior nodes 1..n-1
        r = dt / h
        k = mu * dt / h**2
        inv = 1.0 / v
        rhs = u[1:-1] + r * c * (u[2:] - u[1:-1]) - r * (pr[1:] - pr[:-1])
        rhs[0] += k * inv[0] * u[0]
        rhs[-1] += k * inv[-1] * u[-1]
        ab = self.ab
        ab[1] = 1.0 + k * (inv[1:] + inv[:-1])
        ab[0, 1:] = -k * inv[1:-1]
        ab[2, :-1] = -k * inv[1:-1]
        try:
            inner = solve_banded((1, 1), ab, rhs, check_finite=True)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise FloatingPointError(f"tridiagonal solve failed: {exc}") from exc
        u_new = np.empty_like(u)
        u_new[0], u_new[-1] = u[0], u[-1]
        u_new[1:-1] = inner
        # conservative volume update, upwind frame advection
        v_new = v + r * (u_new[1:] - u_new[:-1]) + r * c * (vf[2:] - vf[1:-1])
        if np.min(v_new) <= 1.0:
            worst = float(np.min(v_new))
            raise CongestionError(
                f"congestion violation at t={state.t + dt}: min v = {worst!r}; "
                "reduce dt or the perturbation amplitude", worst)
        return replace(state, v=v_new, u=u_new, t=state.t + dt)


def step(state, config, params, dt=None):
    """Advance one step; returns a new :class:`SimState`."""
    if dt is None:
        dt = time_step(state, config, params)
    return _Stepper(state, params)(state, dt)


def effective_velocity(state, params):
    """``w = u - mu d_x ln v`` on nodes, with the ghost cells at the ends."""
    lv = np.log(state.v_full())
    return state.u - params.mu * np.diff(lv) / state.dx


def _reference(state, wave):
    if state.background.steady:
        return state.background
    return sampled_background(wave, state.grid, state.t, state.frame)


def integrated_perturbation(state, wave, params, tol=1e-10):
    """Cumulative integrals ``W`` (cells) and ``V`` (nodes) of the perturbation.

    Raises
    ------
    MassDefectError
        If ``w - w_eps`` or ``v - v_eps`` has mass above ``tol``.
    """
    ref = _reference(state, wave)
    h = state.dx
    lv_ref = np.log(ref.v_full)
    w_ref = ref.u - params.mu * np.diff(lv_ref) / h
    dw = effective_velocity(state, params) - w_ref
    dv = state.v - ref.v
    W_full = h * np.cumsum(dw)
    V = np.concatenate([[0.0], h * np.cumsum(dv)])
    defect = (float(W_full[-1]), float(V[-1]))
    if max(abs(defect[0]), abs(defect[1])) > tol:
        raise MassDefectError(
            f"perturbation mass defect (w: {defect[0]:.3e}, v: {defect[1]:.3e}) "
            f"exceeds {tol:.1e}; integrated variables are not defined")
    return IntegratedState(state.grid, W_full[:-1], V, state.t, defect)


@dataclass
class RunResult:
    state: SimState
    observations: list
    n_steps: int
    boundary_contact: bool
    times: list


def run(state, config, params, T, observers=(), stride=1, wave=None,
        boundary_cells=5, boundary_tol=1e-12):
    """Advance to time ``T``, calling each observer every ``stride`` steps.

    Observers receive the current state and return any value; the values are
    collected per observer.  A perturbation reaching the outermost
    ``boundary_cells`` cells is flagged in the result.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    stepper = _Stepper(state, params)
    obs = [[ob(state)] for ob in observers]
    times = [state.t]
    n = 0
    contact = False
    t_end = state.t + T
    ref = state.background
    while state.t < t_end * (1 - 1e-14):
        dt = min(time_step(state, config, params), t_end - state.t)
        try:
            state = stepper(state, dt)
        except (CongestionError, FloatingPointError) as exc:
            raise SimulationAborted(str(exc), state, exc) from exc
        n += 1
        if ref.steady:
            dv = np.abs(state.v - ref.v)
            b = boundary_cells
            if max(dv[:b].max(), dv[-b:].max()) > boundary_tol:
                contact = True
        if n % stride == 0 or state.t >= t_end * (1 - 1e-14):
            for lst, ob in zip(obs, observers):
                lst.append(ob(state))
            times.append(state.t)
    return RunResult(state, obs, n, contact, times)


# linearized system --------------------------------------------------------------

class LinearizedSystem:
    """Linearized ``(W, V)`` system with weights from the analytic profile.

    ``dW/dt + p'(v_eps) dV/dx = 0`` and
    ``dV/dt - dW/dx - mu d/dx(dV/dx / v_eps) = 0``, plus ``-s d/dx`` on both
    in the co-moving frame.  The spatial operator satisfies summation by
    parts, so its semi-discrete energy balance is exact; the time step is
    first-order (implicit advection and viscosity, explicit coupling in
    ``W``, ``V`` then sees the new ``W``).
    """

    def __init__(self, wave, grid, frame=None):
        self.wave = wave
        self.params = wave.params
        self.grid = grid
        self.frame = CoMoving(wave.s) if frame is None else frame
        self.c = _frame_speed(self.frame)
        self.h = grid.dx
        self._cache = None

    def weights(self, t):
        """Profile data at cells and nodes for time ``t``."""
        if not isinstance(self.frame, Lab):
            if self._cache is None:
                self._cache = self._weights(0.0)
            return self._cache
        return self._weights(t)

    def _weights(self, t):
        shift = self.wave.s * t if isinstance(self.frame, Lab) else 0.0
        p = self.params
        wc = self.wave.derivatives(self.grid.centers - shift, order=1)
        wn = self.wave.derivatives(self.grid.nodes - shift, order=1)
        vc, vn, dvn = wc[0], wn[0], wn[1]
        p1c = pressure(vc, 1, p)
        p1n = pressure(vn, 1, p)
        p2n = pressure(vn, 2, p)
        return {
            "p1_cells": p1c,
            "a_cells": -1.0 / p1c,
            "inv_v_cells": 1.0 / vc,
            # d/dx of -1/p'(v_eps) at nodes
            "da_nodes": p2n / p1n**2 * dvn,
        }

    def step(self, ws, dt):
        h, c, mu = self.h, self.c, self.params.mu
        wts = self.weights(ws.t)
        W, V = ws.W, ws.V
        n = W.size
        # W: implicit centred advection, explicit coupling
        rhs = W - dt * wts["p1_cells"] * np.diff(V) / h
        ab = np.zeros((3, n))
        ab[1] = 1.0
        ab[0, 1:] = -dt * c / (2 * h)
        ab[2, :-1] = dt * c / (2 * h)
        W_new = solve_banded((1, 1), ab, rhs) if c else rhs
        # V on interior nodes: implicit viscosity and advection
        wts1 = self.weights(ws.t + dt) if isinstance(self.frame, Lab) else wts
        b = wts1["inv_v_cells"]
        k = mu * dt / h**2
        rhsV = V[1:-1] + dt * np.diff(W_new) / h
        m = n - 1
        ab = np.zeros((3, m))
        ab[1] = 1.0 + k * (b[1:] + b[:-1])
        ab[0, 1:] = -k * b[1:-1] - dt * c / (2 * h)
        ab[2, :-1] = -k * b[1:-1] + dt * c / (2 * h)
        V_new = np.zeros_like(V)
        V_new[1:-1] = solve_banded((1, 1), ab, rhsV)
        return IntegratedState(ws.grid, W_new, V_new, ws.t + dt)

    def energy(self, ws):
        """Discrete ``E_0``; W and V vanish at the ends so this is the
        trapezoid rule on either grid."""
        wts = self.weights(ws.t)
        return self.h * (np.sum(wts["a_cells"] * ws.W**2) + np.sum(ws.V**2))

    def dissipation_rate(self, ws):
        """Discrete ``s int (p''/p'^2) v_eps' W^2 + 2 mu int (V_x)^2 / v_eps``.

        The first term pairs neighbouring cells around each interior node,
        which is what the centred advection produces under summation by
        parts.  In the lab frame the same term comes from the time
        dependence of the weight.
        """
        wts = self.weights(ws.t)
        s = self.wave.s
        W, V, h = ws.W, ws.V, self.h
        adv = s * h * np.sum(wts["da_nodes"][1:-1] * W[:-1] * W[1:])
        visc = 2 * self.params.mu * h * np.sum(
            wts["inv_v_cells"] * (np.diff(V) / h) ** 2)
        return adv + visc


def step_linearized(ws, wave, config, params, dt=None, system=None):
    """One step of the linearized system; see :class:`LinearizedSystem`."""
    system = system or LinearizedSystem(wave, ws.grid)
    if dt is None:
        ctl = config.dt_control
        if isinstance(ctl, Fixed):
            dt = ctl.dt
        else:
            wts = system.weights(ws.t)
            vmax = 1.0 / float(np.min(wts["inv_v_cells"]))
            dp = float(np.max(np.abs(wts["p1_cells"])))
            dt = ctl.safety * system.h / (math.sqrt(dp * vmax) + abs(system.c))
    return system.step(ws, dt)


def run_linearized(ws, wave, dt, T, frame=None):
    """March the linearized system and record energies and dissipation rates.

    Returns a dict with arrays ``t``, ``E0`` and ``rate`` (one entry per
    time level, initial level included) for the energy-identity check.
    """
    system = LinearizedSystem(wave, ws.grid, frame)
    n = int(round(T / dt))
    if not math.isclose(n * dt, T, rel_tol=1e-9):
        raise ValueError("T must be an integer multiple of dt")
    t = [ws.t]
    E = [system.energy(ws)]
    R = [system.dissipation_rate(ws)]
    for _ in range(n):
        ws = system.step(ws, dt)
        t.append(ws.t)
        E.append(system.energy(ws))
        R.append(system.dissipation_rate(ws))
    return {"t": np.array(t), "E0": np.array(E), "rate": np.array(R),
            "final": ws, "dt": dt}
