"""
Command-line experiments.

Every command reads a flat ``key = value`` config (dotted namespaces such as
``model.epsilon`` or ``pert.amplitude``), applies ``--set`` overrides, writes
its data files under ``--out`` and finishes by writing ``manifest.json``.

Exit codes: 0 when every gate of the command passed, 1 when a gate failed
or a solver raised, 2 when the config was rejected.
"""

import argparse
import concurrent.futures as cf
import json
import math
import os
import sys
import time
import traceback
import warnings

import numpy as np

from . import __version__
from .pressure_model import ModelParams
from .profile import (
    LimitProfile,
    TransitionAnchor,
    ValueAtZero,
    build_expansion,
    limit_profile,
    matching_defect,
    sandwich_check,
    solve_barriers,
    solve_profile,
    transition_error,
    write_profile_csv,
)
from .pde_sim import (
    CFL,
    CoMoving,
    CompactBump,
    Custom,
    Fixed,
    GaussianDipole,
    Grid,
    IntegratedState,
    Lab,
    PerturbationSpec,
    SchemeConfig,
    SimulationAborted,
    effective_velocity,
    init_state,
    integrated_perturbation,
    run,
    run_linearized,
)
from .diagnostics import (
    EnergyObserver,
    energy_identity_residual,
    rate_fit,
    sup_norm_decay,
    write_json,
    write_reports_csv,
)

COMMANDS = ("profile", "expansion", "barriers", "simulate",
            "linearized-check", "sweep", "report")

DEFAULTS = {
    "model.epsilon": 1e-3,
    "model.gamma": 2.0,
    "model.mu": 1.0,
    "model.v_plus": 1.5,
    "model.u_plus": 0.0,
    "profile.tol": 1e-10,
    "profile.shift": "figure",
    "profile.eps_list": "",
    "profile.n_limit": 2001,
    "expansion.eps_list": "1e-3,1e-4,1e-5,1e-6,1e-7",
    "expansion.R": 1.0,
    "expansion.M": 100.0,
    "barriers.eps_list": "1e-3,1e-4",
    "barriers.n": 1000,
    "barriers.crossing_tol": 0.15,
    "grid.x_lo": -30.0,
    "grid.x_hi": 8.0,
    "grid.dx": 0.01,
    "scheme.frame": "comoving",
    "scheme.safety": 0.5,
    "scheme.dt": 0.0,
    "pert.shape": "dipole",
    "pert.center": 0.0,
    "pert.width": 0.2,
    "pert.amplitude": -1.0,
    "pert.delta": 0.1,
    "pert.target": "v,u",
    "pert.allow_nonzero_mass": False,
    "run.T": 3.0,
    "run.stride": 10,
    "run.snapshots": 4,
    "run.decay_ratio": 0.1,
    "run.xnorm_factor": 10.0,
    "run.mass_tol": 1e-10,
    "run.drift_tol": 1e-10,
    "energy.c": 0.25,
    "lin.T": 0.4,
    "lin.dt": 4e-3,
    "lin.levels": 4,
    "lin.x_lo": -4.0,
    "lin.x_hi": 4.0,
    "lin.dx": 0.01,
    "lin.center": 0.0,
    "lin.width": 1.0,
    "lin.amplitude": 0.1,
    "lin.ratio_lo": 1.6,
    "lin.ratio_hi": 2.4,
    "sweep.command": "profile",
    "sweep.key": "model.epsilon",
    "sweep.values": "1e-2,1e-3",
    "report.inputs": "",
}


class ConfigError(ValueError):
    """Invalid configuration; maps to exit code 2."""


# config handling ----------------------------------------------------------------

def _coerce(key, raw):
    default = DEFAULTS[key]
    if isinstance(raw, str):
        raw = raw.strip()
    if isinstance(default, bool):
        if isinstance(raw, bool):
            return raw
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if isinstance(default, int):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    if isinstance(default, float):
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
    return str(raw)


def parse_config_text(text):
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        key, val = (part.strip() for part in line.split("=", 1))
        out[key] = val
    return out


def resolve_config(path=None, overrides=()):
    """Defaults, then the config file, then ``key=value`` overrides."""
    raw = {}
    if path:
        try:
            with open(path) as fh:
                raw.update(parse_config_text(fh.read()))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        raw[k.strip()] = v
    unknown = sorted(set(raw) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    cfg = dict(DEFAULTS)
    for k, v in raw.items():
        cfg[k] = _coerce(k, v)
    return cfg


def _float_list(cfg, key, fallback=None):
    text = cfg[key]
    if not text:
        return list(fallback or [])
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated numbers") from None


def model_params(cfg, epsilon=None):
    try:
        return ModelParams(
            epsilon=cfg["model.epsilon"] if epsilon is None else epsilon,
            gamma=cfg["model.gamma"], mu=cfg["model.mu"],
            v_plus=cfg["model.v_plus"], u_plus=cfg["model.u_plus"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _shift_spec(cfg, params):
    mode = cfg["profile.shift"]
    if mode == "figure":
        return ValueAtZero(1.0 + params.epsilon ** (1.0 / (params.gamma + 1.0)))
    if mode == "transition":
        return TransitionAnchor()
    if mode == "default":
        return None
    try:
        return ValueAtZero(float(mode))
    except ValueError:
        raise ConfigError(
            "profile.shift must be figure, transition, default or a number") from None


# output helpers -----------------------------------------------------------------

class Outputs:
    def __init__(self, out_dir):
        self.dir = out_dir
        os.makedirs(out_dir, exist_ok=True)
        self.files = []

    def path(self, name):
        p = os.path.join(self.dir, name)
        self.files.append(name)
        return p


def _write_table(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return "%.17g" % x
    return str(x)


def _write_dat(path, cols, comment):
    with open(path, "w") as fh:
        fh.write(f"# {comment}\n")
        for row in zip(*cols):
            fh.write(" ".join("%.17g" % c for c in row) + "\n")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_manifest(out, command, cfg, gates, started, residuals=None,
                   error=None, extra=None):
    """Write ``manifest.json`` atomically; it is always the last file."""
    manifest = {
        "command": command,
        "config": cfg,
        "version": __version__,
        "outputs": list(out.files),
        "wall_clock_s": time.time() - started,
        "max_residuals": residuals or {},
        "gates": gates,
        "passed": error is None and all(gates.values()),
        "error": error,
        "note": "deterministic: no random numbers are drawn",
    }
    if extra:
        manifest.update(extra)
    tmp = os.path.join(out.dir, ".manifest.json.tmp")
    with open(tmp, "w") as fh:
        json.dump(_clean(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, os.path.join(out.dir, "manifest.json"))
    return manifest


# commands -----------------------------------------------------------------------

def cmd_profile(cfg, out):
    base = model_params(cfg)
    eps_list = _float_list(cfg, "profile.eps_list", [base.epsilon])
    gates, resid, table = {}, {}, []
    for eps in eps_list:
        p = model_params(cfg, eps)
        wave = solve_profile(p, _shift_spec(cfg, p), tol=cfg["profile.tol"])
        name = f"profile_eps{eps:g}.csv"
        write_profile_csv(wave, out.path(name))
        _write_dat(out.path(f"profile_eps{eps:g}.dat"), (wave.xi, wave.v),
                   f"xi v  epsilon={eps:g} gamma={p.gamma:g}")
        r = wave.meta["residual_max"]
        resid[name] = r
        gates[f"residual[{eps:g}]"] = r < 1e-8
        table.append((eps, wave.s, float(wave(0.0)), r, len(wave.xi)))
    lp = LimitProfile.from_params(base)
    # wide enough for the limit profile to come within 1e-8 of v_+
    half = max(2.0, math.log(1e8) / lp.r)
    xi = np.linspace(-half, half, cfg["profile.n_limit"])
    _write_dat(out.path("limit.dat"), (xi, limit_profile(xi, lp)),
               f"xi vbar  v_plus={base.v_plus:g} mu={base.mu:g}")
    _write_table(out.path("profiles.csv"),
                 ["epsilon", "s", "v_at_0", "residual_max", "n_samples"], table)
    return gates, resid


def cmd_expansion(cfg, out):
    base = model_params(cfg)
    eps_list = _float_list(cfg, "expansion.eps_list")
    lp = LimitProfile.from_params(base)
    rows, pairs, gates, resid = [], [], {}, {}
    for eps in eps_list:
        p = model_params(cfg, eps)
        ex = build_expansion(p)
        wave = solve_profile(p, TransitionAnchor())
        te = transition_error(wave, ex, lp, R=cfg["expansion.R"],
                              M=cfg["expansion.M"])
        dv, dd = matching_defect(ex, lp)
        resid[f"matching[{eps:g}]"] = max(dv, dd)
        gates[f"matching[{eps:g}]"] = max(dv, dd) < 1e-8
        rows.append((eps, ex.omega, ex.K, ex.xi_star, te.sup_error,
                     te.weighted_error, te.xi_min, te.window_empty, dv, dd))
        pairs.append((eps, te.sup_error))
    _write_table(out.path("transition_errors.csv"),
                 ["epsilon", "omega", "K", "xi_star", "sup_error",
                  "weighted_error", "xi_min", "window_empty",
                  "matching_value", "matching_slope"], rows)
    target = 1.0 / (base.gamma + 1.0)
    fit = None
    if len(pairs) >= 3:
        fit = rate_fit(pairs)
        gates["rate_slope"] = abs(fit.slope - target) <= 0.15
    write_json({"gamma": base.gamma, "target_slope": target,
                "fit": fit._asdict() if fit else None},
               out.path("rate_fit.json"))
    return gates, resid


def cmd_barriers(cfg, out):
    base = model_params(cfg)
    rows, gates = [], {}
    tol = cfg["barriers.crossing_tol"]
    for eps in _float_list(cfg, "barriers.eps_list"):
        p = model_params(cfg, eps)
        wave = solve_profile(p, TransitionAnchor())
        v0 = float(wave(0.0))
        pair = solve_barriers(p, v0)
        sw = sandwich_check(pair, wave, n=cfg["barriers.n"])
        pred = p.mu * p.s_bar * (v0 - 1.0) / p.gap_minus
        eu = pair.zeta_upper / pred - 1.0
        el = pair.zeta_lower / pred - 1.0
        gates[f"sandwich[{eps:g}]"] = sw.violations == 0
        rows.append((eps, v0, pair.rho_upper, pair.rho_lower, pair.zeta_upper,
                     pair.zeta_lower, pred, eu, el, abs(eu) <= tol and abs(el) <= tol,
                     sw.violations, sw.min_margin_lower, sw.min_margin_upper))
    _write_table(out.path("barriers.csv"),
                 ["epsilon", "v0", "rho_upper", "rho_lower", "zeta_upper",
                  "zeta_lower", "zeta_predicted", "rel_err_upper",
                  "rel_err_lower", "crossing_within_tol", "violations",
                  "min_margin_lower", "min_margin_upper"], rows)
    return gates, {}


def _perturbation(cfg, params, grid=None):
    shape = cfg["pert.shape"]
    if shape == "none":
        return None
    if shape == "gaussian":
        # plain bump on v: nonzero mass, only for out-of-theory runs
        r = (grid.centers - cfg["pert.center"]) / cfg["pert.width"]
        amp = cfg["pert.amplitude"]
        if amp < 0:
            amp = cfg["pert.delta"] * params.epsilon ** (5.0 / (2.0 * params.gamma))
        return PerturbationSpec(Custom(v=np.exp(-r * r)), amp, ("v",))
    cls = {"dipole": GaussianDipole, "bump": CompactBump}.get(shape)
    if cls is None:
        raise ConfigError("pert.shape must be dipole, bump, gaussian or none")
    amp = cfg["pert.amplitude"]
    if amp < 0:
        amp = cfg["pert.delta"] * params.epsilon ** (5.0 / (2.0 * params.gamma))
    target = tuple(t.strip() for t in cfg["pert.target"].split(",") if t.strip())
    if not set(target) <= {"u", "v"} or not target:
        raise ConfigError("pert.target must list u and/or v")
    return PerturbationSpec(cls(cfg["pert.center"], cfg["pert.width"]), amp, target)


def _scheme(cfg):
    if cfg["scheme.dt"] > 0:
        return SchemeConfig(Fixed(cfg["scheme.dt"]))
    try:
        return SchemeConfig(CFL(cfg["scheme.safety"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _snapshot(path, state, wave, params):
    w = effective_velocity(state, params)
    try:
        ws = integrated_perturbation(state, wave, params, tol=math.inf)
        W, V = ws.W, ws.V
    except Exception:  # pragma: no cover - defensive
        W = np.full(state.v.size, np.nan)
        V = np.full(state.u.size, np.nan)
    g = state.grid
    with open(path, "w") as fh:
        fh.write(f"# t={state.t!r}; node columns x,u,w,V; cell columns x_cell,v,W\n")
        fh.write("x,u,w,V,x_cell,v,W\n")
        xc = g.centers
        for i, x in enumerate(g.nodes):
            cell = (f"{xc[i]:.17g},{state.v[i]:.17g},{W[i]:.17g}"
                    if i < state.v.size else ",,")
            fh.write(f"{x:.17g},{state.u[i]:.17g},{w[i]:.17g},{V[i]:.17g},{cell}\n")


def cmd_simulate(cfg, out):
    p = model_params(cfg)
    try:
        grid = Grid.with_spacing(cfg["grid.x_lo"], cfg["grid.x_hi"], cfg["grid.dx"])
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad grid: {exc}") from exc
    if grid.n_cells < 4:
        raise ConfigError("grid needs at least 4 cells")
    pert = _perturbation(cfg, p, grid)
    wave = solve_profile(p)
    frame = {"comoving": CoMoving(wave.s), "lab": Lab()}.get(cfg["scheme.frame"])
    if frame is None:
        raise ConfigError("scheme.frame must be comoving or lab")
    state = init_state(wave, pert, grid, frame,
                       allow_nonzero_mass=cfg["pert.allow_nonzero_mass"])
    scheme = _scheme(cfg)
    observer = EnergyObserver(wave, p, c=cfg["energy.c"], mass_tol=cfg["run.mass_tol"])
    T = cfg["run.T"]
    n_snap = max(cfg["run.snapshots"], 1)
    _snapshot(out.path("snapshot_000.csv"), state, wave, p)
    seg_T = T / n_snap
    reports = []
    aborted = None
    for k in range(n_snap):
        try:
            res = run(state, scheme, p, seg_T, [observer], stride=cfg["run.stride"])
        except SimulationAborted as exc:
            _snapshot(out.path("abort_state.csv"), exc.state, wave, p)
            aborted = str(exc)
            break
        reps = res.observations[0]
        reports.extend(reps if k == 0 else reps[1:])
        state = res.state
        _snapshot(out.path(f"snapshot_{k + 1:03d}.csv"), state, wave, p)
    if reports:
        write_reports_csv(reports, out.path("energy.csv"))
    if aborted:
        raise RuntimeError(aborted)
    sup_u = sup_norm_decay([r.sup_norms[0] for r in reports])
    sup_v = sup_norm_decay([r.sup_norms[1] for r in reports])
    masses = max(max(abs(m) for m in r.masses) for r in reports)
    x0 = reports[0].x_norm_sq
    xmax = max(r.x_norm_sq for r in reports)
    gates = {
        "min_v_above_1": min(r.min_v for r in reports) > 1.0,
        "mass_conserved": masses <= cfg["run.mass_tol"],
    }
    if pert is None or pert.amplitude == 0:
        drift = max(sup_u.peak, sup_v.peak)
        gates["drift"] = drift <= cfg["run.drift_tol"]
        decay = {"ratio": "n/a", "drift": drift}
    else:
        gates["decay_u"] = sup_u.ratio <= cfg["run.decay_ratio"]
        gates["decay_v"] = sup_v.ratio <= cfg["run.decay_ratio"]
        gates["x_norm_bounded"] = xmax <= cfg["run.xnorm_factor"] * x0
        decay = {"u": sup_u._asdict(), "v": sup_v._asdict(),
                 "x_norm_ratio": xmax / x0 if x0 > 0 else None}
    write_json({"decay": decay, "max_mass": masses,
                "amplitude": pert.amplitude if pert else 0.0},
               out.path("summary.json"))
    return gates, {"mass": masses}


def cmd_linearized_check(cfg, out):
    p = model_params(cfg)
    wave = solve_profile(p)
    grid = Grid.with_spacing(cfg["lin.x_lo"], cfg["lin.x_hi"], cfg["lin.dx"])
    bump = CompactBump(cfg["lin.center"], cfg["lin.width"])
    a = cfg["lin.amplitude"]
    ws = IntegratedState(grid, a * bump.potential(grid.centers),
                         a * bump.potential(grid.nodes))
    rows, res = [], []
    dt = cfg["lin.dt"]
    for _ in range(cfg["lin.levels"]):
        seg = run_linearized(ws, wave, dt, cfg["lin.T"])
        r = energy_identity_residual(seg, p)
        res.append(r)
        rows.append((dt, seg["E0"][0], seg["E0"][-1], r))
        dt /= 2
    ratios = [res[i] / res[i + 1] for i in range(len(res) - 1)]
    _write_table(out.path("energy_residuals.csv"),
                 ["dt", "E0_initial", "E0_final", "residual"], rows)
    write_json({"residuals": res, "ratios": ratios}, out.path("ratios.json"))
    gates = {f"ratio[{i}]": cfg["lin.ratio_lo"] <= r <= cfg["lin.ratio_hi"]
             for i, r in enumerate(ratios)}
    return gates, {"residual_finest": res[-1]}


HANDLERS = {
    "profile": cmd_profile,
    "expansion": cmd_expansion,
    "barriers": cmd_barriers,
    "simulate": cmd_simulate,
    "linearized-check": cmd_linearized_check,
}


def execute(command, cfg, out_dir):
    """Run one command; returns ``(exit_code, manifest)``."""
    started = time.time()
    out = Outputs(out_dir)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            if command == "sweep":
                gates, resid = cmd_sweep(cfg, out)
            elif command == "report":
                gates, resid = cmd_report(cfg, out)
            else:
                gates, resid = HANDLERS[command](cfg, out)
        extra = {"warnings": sorted({str(w.message) for w in caught})}
    except ConfigError as exc:
        m = write_manifest(out, command, cfg, {}, started, error=f"config: {exc}")
        return 2, m
    except Exception as exc:
        m = write_manifest(out, command, cfg, {}, started,
                           error=f"{type(exc).__name__}: {exc}",
                           extra={"traceback": traceback.format_exc()})
        return 1, m
    m = write_manifest(out, command, cfg, gates, started, resid, extra=extra)
    return (0 if m["passed"] else 1), m


def _sweep_job(args):
    command, cfg, out_dir = args
    code, m = execute(command, cfg, out_dir)
    return code, m["passed"]


def cmd_sweep(cfg, out, jobs=1):
    command = cfg["sweep.command"]
    if command not in HANDLERS:
        raise ConfigError(f"sweep.command must be one of {sorted(HANDLERS)}")
    key = cfg["sweep.key"]
    if key not in DEFAULTS or key.startswith("sweep."):
        raise ConfigError(f"sweep.key {key!r} is not a sweepable config key")
    values = [v.strip() for v in cfg["sweep.values"].split(",") if v.strip()]
    if not values:
        raise ConfigError("sweep.values is empty")
    tasks = []
    for i, val in enumerate(values):
        sub = {k: v for k, v in cfg.items() if k != "_jobs"}
        sub[key] = _coerce(key, val)
        tasks.append((command, sub, os.path.join(out.dir, f"run_{i:03d}")))
    jobs = max(1, int(cfg.get("_jobs", jobs)))
    if jobs == 1:
        results = [_sweep_job(t) for t in tasks]
    else:
        with cf.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_job, tasks))
    rows = [(f"run_{i:03d}", val, code, passed)
            for i, (val, (code, passed)) in enumerate(zip(values, results))]
    for i in range(len(values)):
        out.files.append(f"run_{i:03d}/manifest.json")
    _write_table(out.path("sweep.csv"), ["run", key, "exit_code", "passed"], rows)
    gates = {f"{key}={val}": passed for _, val, _, passed in rows}
    return gates, {}


def cmd_report(cfg, out):
    inputs = [s.strip() for s in cfg["report.inputs"].split(",") if s.strip()]
    if not inputs:
        raise ConfigError("report.inputs lists no run directories")
    summary, gates, lines = {}, {}, []
    for d in inputs:
        path = os.path.join(d, "manifest.json")
        if not os.path.exists(path):
            summary[d] = {"missing": True}
            gates[f"{d}:present"] = False
            lines.append(f"MISSING {d}")
            continue
        with open(path) as fh:
            m = json.load(fh)
        summary[d] = {"command": m.get("command"), "passed": m.get("passed"),
                      "gates": m.get("gates"), "error": m.get("error")}
        for g, ok in (m.get("gates") or {}).items():
            gates[f"{d}:{g}"] = bool(ok)
            lines.append(f"{'PASS' if ok else 'FAIL'} {d} {m.get('command')} {g}")
        if m.get("error"):
            gates[f"{d}:error"] = False
            lines.append(f"FAIL {d} {m.get('command')} error: {m['error']}")
    write_json(summary, out.path("summary.json"))
    with open(out.path("summary.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return gates, {}


# entry point --------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(
        prog="congested-shocks",
        description="Traveling fronts of a singular-pressure Navier-Stokes "
                    "model: profiles, asymptotics, barriers and PDE runs.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="flat key = value config file")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config key (repeatable)")
    ap.add_argument("--jobs", type=int, default=1,
                    help="parallel runs for the sweep command")
    ap.add_argument("inputs", nargs="*",
                    help="run directories for the report command")
    return ap


def main(argv=None):
    args = build_parser().parse_intermixed_args(argv)
    try:
        cfg = resolve_config(args.config, args.set)
        if args.inputs:
            cfg["report.inputs"] = ",".join(args.inputs)
    except ConfigError as exc:
        out = Outputs(args.out)
        write_manifest(out, args.command, {}, {}, time.time(),
                       error=f"config: {exc}")
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.command == "sweep":
        cfg["_jobs"] = args.jobs
    code, m = execute(args.command, cfg, args.out)
    cfg.pop("_jobs", None)
    status = "passed" if code == 0 else ("config rejected" if code == 2 else "failed")
    print(f"{args.command}: {status}; manifest at {os.path.join(args.out, 'manifest.json')}")
    if m.get("error"):
        print(m["error"], file=sys.stderr)
    for g, ok in sorted((m.get("gates") or {}).items()):
        print(f"  {'PASS' if ok else 'FAIL'} {g}")
    return code


if __name__ == "__main__":
    sys.exit(main())
