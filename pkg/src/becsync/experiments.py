"""Experiment runners and the parameter-sweep engine behind the CLI.

Each experiment turns a resolved :class:`~becsync.config.ExperimentConfig`
into a :class:`RunResult` (named columns plus scalar summaries) without
touching the filesystem; :func:`write_result` then emits the CSV and its JSON
sidecar.  Sweeps evaluate one experiment per grid point, in worker processes
if asked, and always emit rows in row-major grid order.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import focksector, fullspace, meanfield, syncmeasures
from .config import (INFO_VARIANTS, SCHEMA_VERSION, SCHEMAS, ConfigError, Entry,
                     ExperimentConfig, resolve, _stringify)
from .focksector import FockStateN, QuantumParams
from .husimi import q_snapshot
from .io import write_csv, write_sidecar
from .numerics import PolarGrid

__all__ = ["RunResult", "SweepAxis", "run", "write_result", "metric_value",
           "available_metrics", "parse_axis", "evaluate_grid", "sweep", "SWEEPABLE"]

log = logging.getLogger(__name__)

SUFFIXES = ("amplitude", "max", "min", "mean", "final")
SWEEPABLE = ("meanfield-run", "fock-evolve", "coherent-evolve", "measures")
MAX_GRID_POINTS = 10_000_000


@dataclass
class RunResult:
    columns: dict  # name -> 1-D array, all the same length
    scalars: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def header(self):
        return list(self.columns)

    def rows(self):
        return np.column_stack([np.asarray(v, dtype=float) for v in self.columns.values()])


# --- mean field -----------------------------------------------------------

def _mf_params(p):
    return meanfield.ModelParams(p.get("delta_bar", 0.0), p["g_bar"], p.get("chi", 0.0))


def _mf_state(p):
    a = complex(p["alpha0_re"], p["alpha0_im"])
    b = complex(p["beta0_re"], p["beta0_im"])
    if p["normalize"]:
        return meanfield.ClassicalState.normalized(a, b)
    return meanfield.ClassicalState(a, b)


def _analysis_span(p, t_end):
    transient = p["transient"] if p["transient"] >= 0 else 0.2 * t_end
    window = p["window"] if p["window"] >= 0 else t_end - transient
    if transient + window > t_end * (1 + 1e-12):
        raise ValueError(f"transient {transient:g} plus window {window:g} exceed the run length {t_end:g}")
    return transient, window


def _slice(traj, t0, t1):
    keep = (traj.times >= t0 - 1e-12) & (traj.times <= t1 + 1e-12)
    return meanfield.Trajectory(traj.times[keep], traj.alpha[keep], traj.beta[keep])


def _run_meanfield(cfg):
    p = cfg.params
    mp = _mf_params(p)
    traj = meanfield.evolve(_mf_state(p), mp, p["t_max"], p["samples"], p["rel_tol"])
    R, phi, valid = meanfield.imbalance_phase(traj)
    _, phi_u, _ = meanfield.imbalance_phase(traj, unwrap=True)
    xm, pm = meanfield.quadrature_errors(traj)
    e = meanfield.trajectory_energy(traj, mp)
    norm = traj.norm()
    transient, window = _analysis_span(p, p["t_max"])
    seg = _slice(traj, transient, transient + window)
    s_a, s_b = meanfield.covering_areas(seg)
    phase_seg = phi_u[(traj.times >= transient - 1e-12) & (traj.times <= transient + window + 1e-12)]
    phase_seg = phase_seg[np.isfinite(phase_seg)]
    e0 = e[0]
    scalars = {
        "s_a": s_a, "s_b": s_b, "s_diff": abs(s_a - s_b),
        "d_ab": meanfield.trajectory_distance(seg),
        "phi_minus_amplitude": 0.5 * float(np.ptp(phase_seg)) if phase_seg.size else math.nan,
        "norm_drift": float(np.max(np.abs(norm - 1.0))),
        "energy_drift": float(np.max(np.abs(e - e0)) / (abs(e0) if e0 != 0 else 1.0)),
    }
    cols = {
        "time": traj.times,
        "alpha_re": traj.alpha.real, "alpha_im": traj.alpha.imag,
        "beta_re": traj.beta.real, "beta_im": traj.beta.imag,
        "r_a": traj.r_a, "r_b": traj.r_b,
        "r_minus": R, "phi_minus": phi, "phi_minus_unwrapped": phi_u,
        "x_minus": xm, "p_minus": pm, "norm": norm, "energy": e,
    }
    return RunResult(cols, scalars, {"analysis_window": [transient, transient + window]})


def _run_phase_portrait(cfg):
    p = cfg.params
    orbits = meanfield.phase_portrait(_mf_params(p), p["n_orbits"], p["rng_seed"], p["t_max"],
                                      p["samples"], p["separatrix"])
    parts = {k: [] for k in ("orbit", "seed_r_minus", "seed_phi_minus", "time",
                             "r_minus", "phi_minus", "phi_minus_unwrapped")}
    for i, o in enumerate(orbits):
        n = o["times"].size
        parts["orbit"].append(np.full(n, i))
        parts["seed_r_minus"].append(np.full(n, o["seed"][0]))
        parts["seed_phi_minus"].append(np.full(n, o["seed"][1]))
        parts["time"].append(o["times"])
        parts["r_minus"].append(o["R"])
        parts["phi_minus"].append(o["phi"])
        parts["phi_minus_unwrapped"].append(o["phi_unwrapped"])
    cols = {k: np.concatenate(v) for k, v in parts.items()}
    return RunResult(cols, {}, {"n_orbits_total": len(orbits)})


def _mf_point_config(cfg, **updates):
    """The meanfield-run config behind one point of a built-in scan."""
    keep = SCHEMAS["meanfield-run"]
    params = {k: v for k, v in cfg.params.items() if k in keep and k not in ("experiment", "output")}
    params.update(updates)
    params["experiment"] = "meanfield-run"
    return resolve({k: Entry(_stringify(v)) for k, v in params.items()})


def _run_builtin_scan(cfg, axes, metrics):
    base = _mf_point_config(cfg, chi=0.0, delta_bar=cfg.params.get("delta_bar", 0.0))
    rows = evaluate_grid(base, axes, metrics, cfg.params["workers"])
    cols = {a.name: np.array([r[0][i] for r in rows]) for i, a in enumerate(axes)}
    for j, m in enumerate(metrics):
        cols[m] = np.array([r[1][j] for r in rows])
    errors = [r[2] for r in rows]
    return RunResult(cols, {}, {"failed_points": sum(1 for e in errors if e)}), errors


def _linspace_axis(name, start, stop, n):
    vals = np.linspace(start, stop, n) if n > 1 else np.array([start])
    step = (stop - start) / (n - 1) if n > 1 else 1.0
    return SweepAxis(name, start, stop, step, tuple(float(v) for v in vals))


def _run_ms_scan(cfg):
    p = cfg.params
    axes = [_linspace_axis("chi", p["chi_start"], p["chi_stop"], p["n_chi"])]
    return _run_builtin_scan(cfg, axes, ("s_a", "s_b", "s_diff", "d_ab", "r_minus_amplitude"))


def _run_amplitude_map(cfg):
    p = cfg.params
    axes = [_linspace_axis("delta_bar", p["delta_start"], p["delta_stop"], p["n_delta"]),
            _linspace_axis("chi", p["chi_start"], p["chi_stop"], p["n_chi"])]
    return _run_builtin_scan(cfg, axes, ("r_minus_amplitude", "phi_minus_amplitude"))


# --- quantum --------------------------------------------------------------

def _qparams(p, N):
    return QuantumParams(p["delta"], p["g"], p["chi"], N)


def _times(p, qp: QuantumParams | None, t_max_key="t_max"):
    unit = 1.0
    if p.get("time_unit", "natural") == "paper":
        unit = _paper_unit(qp)
    scaled = np.linspace(0.0, p[t_max_key], p["samples"])
    return scaled * unit, scaled


def _paper_unit(qp):
    if 1.0 + (qp.N - 1) * qp.chi / qp.g <= 0:
        raise ValueError(f"paper time unit pi/(1+(N-1)chi/g) is undefined or negative "
                         f"for N={qp.N}, chi={qp.chi}, g={qp.g}; use time_unit = natural")
    return focksector.time_unit(qp)


def _state_kind(cfg):
    if cfg.experiment == "fock-evolve":
        return "fock"
    if cfg.experiment == "coherent-evolve":
        return "coherent"
    return cfg.params["state"]


def _initial(cfg):
    p = cfg.params
    if _state_kind(cfg) == "fock":
        N = p["N"]
        j0 = N if p["j0"] < 0 else p["j0"]
        return FockStateN.number_state(N, j0), N
    alpha0 = complex(p["alpha0_re"], p["alpha0_im"])
    return fullspace.coherent_initial(alpha0, p["n_trunc"], max_deficit=p["max_deficit"]), p["n_trunc"]


def _evolve(cfg, times):
    """States at natural times; also returns an energy function."""
    p = cfg.params
    s0, n = _initial(cfg)
    if isinstance(s0, FockStateN):
        qp = _qparams(p, n)
        return focksector.evolve_fock(s0, qp, times), (lambda s: focksector.energy_expectation(s, qp))
    blocks = fullspace.build_blocks(n, p["delta"], p["g"], p["chi"])
    return fullspace.evolve_full(s0, blocks, times), (lambda s: fullspace.energy_expectation(s, blocks))


def _grid_for(p, n, prefix=""):
    if prefix + "n_r" not in p:
        return None
    shape = dict(n_r=p[prefix + "n_r"], n_theta=p[prefix + "n_theta"])
    if p["r_max"] > 0:
        return PolarGrid(p["r_max"], **shape)
    return PolarGrid.for_occupation(n, **shape)


def _info(variant, states, grid, kl_grid):
    if variant == "von_neumann":
        return np.array([syncmeasures.von_neumann_mutual(s) for s in states])
    if variant == "direct":
        return np.array([syncmeasures.mutual_information_direct(s, kl_grid) for s in states])
    if variant == "wehrl":
        return np.array([syncmeasures.mutual_information_wehrl(s, grid) for s in states])
    return np.array([syncmeasures.mutual_information_paper_fixedN(s) if isinstance(s, FockStateN)
                     else syncmeasures.mutual_information_paper_full(s, grid) for s in states])


def _observable_columns(states, name, energy_fn, grids, moments):
    """Columns for one observable; some expand to several columns."""
    if name.startswith("i_ab_"):
        return {name: _info(name[5:], states, *grids)}
    if name == "energy":
        return {name: np.array([energy_fn(s) for s in states])}
    if name == "norm":
        return {name: np.array([float(np.vdot(s.c, s.c).real) for s in states])}
    if name == "populations":
        pops = np.array([s.populations for s in states])
        return {f"p_{j}": pops[:, j] for j in range(pops.shape[1])}
    if name == "coefficients":
        c = np.array([s.c for s in states])
        out = {}
        for j in range(c.shape[1]):
            out[f"c_{j}_re"] = c[:, j].real
            out[f"c_{j}_im"] = c[:, j].imag
        return out
    mom = moments()
    if name in ("s_c", "s_c_bound"):
        vx = np.array([m.var_x_minus for m in mom])
        vp = np.array([m.var_p_minus for m in mom])
        sc, bound = syncmeasures.mari_measure(vx, vp)
        return {name: sc if name == "s_c" else bound}
    if name == "s_c_paper":
        var = np.array([syncmeasures.error_variances(s, "paper") for s in states])
        return {name: syncmeasures.mari_measure(var[:, 0], var[:, 1])[0]}
    if name in ("a_A", "a_B"):
        v = np.array([getattr(m, f"{name}_mean") for m in mom])
        return {f"{name}_re": v.real, f"{name}_im": v.imag}
    return {name: np.array([float(getattr(m, name)) for m in mom])}


def _run_quantum_series(cfg):
    p = cfg.params
    s0, n = _initial(cfg)
    qp = _qparams(p, n) if isinstance(s0, FockStateN) else None
    times, scaled = _times(p, qp)
    states, energy_fn = _evolve(cfg, times)
    grid, kl_grid = _grid_for(p, n), _grid_for(p, n, "kl_")
    cols = {"time": times, "time_scaled": scaled}
    if cfg.experiment == "measures":
        series = syncmeasures.measure_series(states, times, p["info_variants"], p["variance"],
                                             grid, kl_grid)
        cols.update({k: v for k, v in series.columns().items() if k != "time"})
        return RunResult(cols, {}, {"columns": series.variants})
    cache = []

    def moments():
        if not cache:
            fock = isinstance(states[0], FockStateN)
            cache.extend(focksector.sector_moments(s) if fock else fullspace.full_moments(s)
                         for s in states)
        return cache

    for name in p["observables"]:
        cols.update(_observable_columns(states, name, energy_fn, (grid, kl_grid), moments))
    return RunResult(cols, {}, {})


def _run_spectrum(cfg):
    p = cfg.params
    n = p["n_chi"]
    chis = np.linspace(p["chi_start"], p["chi_stop"], n) if n > 1 else np.array([p["chi_start"]])
    chis, levels = focksector.spectrum_vs_chi(p["N"], p["delta"], p["g"], chis)
    cols = {"chi": chis}
    cols.update({f"E_{i}": levels[:, i] for i in range(levels.shape[1])})
    return RunResult(cols, {}, {"levels": "ascending eigenvalues, units of g"})


def _run_q_snapshot(cfg):
    p = cfg.params
    s0, n = _initial(cfg)
    qp = _qparams(p, n) if isinstance(s0, FockStateN) else None
    unit = 1.0
    if p["time_unit"] == "paper":
        unit = _paper_unit(qp)
    t = p["time"] * unit
    state = _evolve(cfg, [t])[0][0] if t != 0 else s0
    grid = _grid_for(p, n).with_measure(p["convention"])
    qg = q_snapshot(state, grid, p["mode"], p["convention"])
    rows = qg.rows()
    cols = {"r": rows[:, 0], "theta": rows[:, 1], "q": rows[:, 2]}
    meta = {"grid": grid.describe(), "integral": qg.integral(), "boundary_max": qg.boundary_max(),
            "time_natural": t}
    return RunResult(cols, {}, meta)


_RUNNERS = {
    "meanfield-run": _run_meanfield,
    "phase-portrait": _run_phase_portrait,
    "ms-scan": _run_ms_scan,
    "amplitude-map": _run_amplitude_map,
    "spectrum": _run_spectrum,
    "fock-evolve": _run_quantum_series,
    "coherent-evolve": _run_quantum_series,
    "q-snapshot": _run_q_snapshot,
    "measures": _run_quantum_series,
}


def run(cfg: ExperimentConfig):
    """Run one experiment in memory.

    Returns ``(RunResult, errors)`` where ``errors`` is a per-row list of
    failure messages for the built-in scans and None otherwise.
    """
    out = _RUNNERS[cfg.experiment](cfg)
    if isinstance(out, tuple):
        return out
    return out, None


def write_result(cfg: ExperimentConfig, result: RunResult, errors=None, elapsed=0.0, path=None):
    path = path or cfg.output_path()
    header = result.header()
    rows = result.rows()
    if errors is not None:
        header = header + ["error"]
        rows = [list(r) + [_clean_error(e)] for r, e in zip(rows, errors)]
    write_csv(path, header, rows)
    meta = {
        "config": cfg.echo(),
        "schema_version": cfg.schema_version,
        "elapsed_seconds": elapsed,
        "experiment": cfg.experiment,
        "columns": header,
        "scalars": result.scalars,
    }
    meta.update(result.meta)
    return path, write_sidecar(path, meta)


# --- metrics --------------------------------------------------------------

def _series_metric(y, times, suffix, transient):
    y = np.asarray(y, dtype=float)
    if suffix == "amplitude":
        return meanfield.oscillation_amplitude(y, times, transient)
    if suffix == "max":
        return float(np.nanmax(y))
    if suffix == "min":
        return float(np.nanmin(y))
    if suffix == "mean":
        return float(np.nanmean(y))
    return float(y[-1])


def _split_metric(name):
    for suf in SUFFIXES:
        if name.endswith("_" + suf):
            return name[: -len(suf) - 1], suf
    return None, None


def available_metrics(cfg: ExperimentConfig):
    """Metric names a sweep over this experiment can extract."""
    if cfg.experiment == "meanfield-run":
        scalars = ("s_a", "s_b", "s_diff", "d_ab", "phi_minus_amplitude", "norm_drift", "energy_drift")
        bases = ("r_a", "r_b", "r_minus", "x_minus", "p_minus", "norm", "energy")
    elif cfg.experiment == "measures":
        scalars = ()
        bases = ("s_c", "s_c_bound") + tuple(f"i_ab_{v}" for v in INFO_VARIANTS)
    elif cfg.experiment in ("fock-evolve", "coherent-evolve"):
        scalars = ()
        skip = {"populations", "coefficients", "a_A", "a_B"}
        bases = tuple(o for o in SCHEMAS[cfg.experiment]["observables"].choices if o not in skip)
    else:
        return ()
    return scalars + tuple(f"{b}_{s}" for b in bases for s in SUFFIXES if f"{b}_{s}" not in scalars)


def _config_for_metric(cfg, metric):
    """Make sure the column a metric reads is computed."""
    base, _ = _split_metric(metric)
    if cfg.experiment in ("fock-evolve", "coherent-evolve") and base not in cfg.params["observables"]:
        return cfg.with_values(observables=tuple(cfg.params["observables"]) + (base,))
    if cfg.experiment == "measures" and base and base.startswith("i_ab_") \
            and base[5:] not in cfg.params["info_variants"]:
        return cfg.with_values(info_variants=tuple(cfg.params["info_variants"]) + (base[5:],))
    return cfg


def metric_value(cfg: ExperimentConfig, result: RunResult, metric: str) -> float:
    if metric in result.scalars:
        return float(result.scalars[metric])
    base, suffix = _split_metric(metric)
    if base is None or base not in result.columns:
        raise ConfigError(f"unknown metric {metric!r} for {cfg.experiment}", key="metric")
    p = cfg.params
    times = result.columns.get("time")
    transient = p.get("transient", -1.0)
    if transient < 0:
        transient = None
    return _series_metric(result.columns[base], times, suffix, transient)


# --- sweeps ---------------------------------------------------------------

@dataclass(frozen=True)
class SweepAxis:
    name: str
    start: float
    stop: float
    step: float
    values: tuple

    def describe(self):
        return {"name": self.name, "start": self.start, "stop": self.stop,
                "step": self.step, "count": len(self.values)}


def parse_axis(text: str, cfg: ExperimentConfig) -> SweepAxis:
    """``name=start:stop:step`` (inclusive of ``stop`` when it lies on the grid)."""
    if "=" not in text:
        raise ConfigError(f"axis {text!r} is not name=start:stop:step", key="axis")
    name, spec = (s.strip() for s in text.split("=", 1))
    schema = SCHEMAS[cfg.experiment]
    if name not in schema or schema[name].kind not in ("real", "int"):
        raise ConfigError(f"cannot sweep over {name!r} in {cfg.experiment}", key="axis")
    parts = spec.split(":")
    try:
        nums = [float(x) for x in parts]
    except ValueError:
        raise ConfigError(f"axis {text!r}: bounds must be numbers", key="axis") from None
    if len(nums) == 1:
        nums = [nums[0], nums[0], 1.0]
    if len(nums) != 3 or not all(math.isfinite(x) for x in nums):
        raise ConfigError(f"axis {text!r} is not name=start:stop:step", key="axis")
    start, stop, step = nums
    if not step > 0:
        raise ConfigError(f"axis {name}: step must be positive", key="axis")
    if stop < start:
        raise ConfigError(f"axis {name}: stop lies below start", key="axis")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    if count > MAX_GRID_POINTS:
        raise ConfigError(f"axis {name} has {count} points, above {MAX_GRID_POINTS}", key="axis")
    if schema[name].kind == "int":
        if start != int(start) or step != int(step):
            raise ConfigError(f"axis {name} takes integer values", key="axis")
        values = tuple(int(start) + i * int(step) for i in range(count))
    else:
        # index times step (no accumulation), rounded so 0.1-style grids print cleanly
        values = tuple(float(round(start + i * step, 12)) for i in range(count))
    return SweepAxis(name, start, stop, step, values)


def _clean_error(msg):
    return " ".join(str(msg).replace(",", ";").split()) if msg else ""


def _eval_point(task):
    experiment, params, updates, metrics = task
    try:
        cfg = resolve({k: Entry(_stringify(v)) for k, v in {**params, **updates}.items()}, experiment)
        for m in metrics:
            cfg = _config_for_metric(cfg, m)
        result, _ = run(cfg)
        return tuple(metric_value(cfg, result, m) for m in metrics), ""
    except Exception as exc:  # a failed point becomes a NaN row, never aborts the sweep
        return tuple(math.nan for _ in metrics), f"{type(exc).__name__}: {exc}"


def evaluate_grid(base: ExperimentConfig, axes, metrics, workers=1):
    """``[(axis values, metric values, error)]`` in row-major order (first axis outermost)."""
    points = list(itertools.product(*(a.values for a in axes)))
    params = {k: v for k, v in base.params.items() if k != "output"}
    tasks = [(base.experiment, params, dict(zip((a.name for a in axes), pt)), tuple(metrics))
             for pt in points]
    if workers <= 1 or len(tasks) <= 1:
        results = [_eval_point(t) for t in tasks]
    else:
        chunk = max(1, len(tasks) // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_eval_point, tasks, chunksize=chunk))
    return [(pt, vals, err) for pt, (vals, err) in zip(points, results)]


def sweep(cfg: ExperimentConfig, axis_specs, metric: str, workers=1, path=None):
    """Evaluate ``metric`` over a 1- or 2-axis grid and write the grid CSV."""
    if cfg.experiment not in SWEEPABLE:
        raise ConfigError(f"experiment {cfg.experiment!r} cannot be swept; use one of "
                          f"{', '.join(SWEEPABLE)}", key="experiment")
    if not 1 <= len(axis_specs) <= 2:
        raise ConfigError("a sweep takes one or two --axis options", key="axis")
    if workers < 1:
        raise ConfigError("must be at least 1", key="workers")
    if metric not in available_metrics(cfg):
        raise ConfigError(f"unknown metric {metric!r} for {cfg.experiment}; try one of "
                          f"{', '.join(available_metrics(cfg)[:8])}, ...", key="metric")
    axes = [parse_axis(a, cfg) for a in axis_specs]
    if len({a.name for a in axes}) != len(axes):
        raise ConfigError("axes must name different keys", key="axis")
    total = math.prod(len(a.values) for a in axes)
    if total > MAX_GRID_POINTS:
        raise ConfigError(f"grid has {total} points, above {MAX_GRID_POINTS}", key="axis")
    t0 = time.perf_counter()
    rows = evaluate_grid(cfg, axes, (metric,), workers)
    elapsed = time.perf_counter() - t0
    path = path or cfg.params.get("output") or f"sweep_{metric}.csv"
    header = [a.name for a in axes] + [metric, "error"]
    write_csv(path, header, [list(pt) + list(vals) + [_clean_error(err)] for pt, vals, err in rows])
    failed = sum(1 for r in rows if r[2])
    if failed:
        log.warning("%d of %d sweep points failed", failed, len(rows))
    meta = {
        "config": cfg.echo(), "schema_version": SCHEMA_VERSION, "elapsed_seconds": elapsed,
        "experiment": cfg.experiment, "columns": header,
        "sweep": {"axes": [a.describe() for a in axes], "metric": metric, "workers": workers,
                  "points": len(rows), "failed_points": failed},
    }
    return path, write_sidecar(path, meta)
