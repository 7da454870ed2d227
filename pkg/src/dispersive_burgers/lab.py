"""Running experiments and epsilon sweeps, and writing their artifacts.

A run directory holds ``config.txt`` (the rendered configuration),
``diagnostics.csv``, ``snapshot_t<time>.csv`` files, ``final.csv`` (plus
``last_reliable.csv`` when a stop criterion fired), ``fits.json`` and
``manifest.json``.
"""

from __future__ import annotations

import json
import logging
import math
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import scipy

from . import __version__
from . import analysis as an
from . import evolution as ev
from . import solitons as so
from . import spectral as sp
from .config import ConfigError, ExperimentConfig, load_config, render_config
from .registry import NAMES, preset

log = logging.getLogger(__name__)


class NumericalFailure(RuntimeError):
    """A run or sweep that could not produce its result."""


@dataclass
class ExperimentResult:
    directory: Path
    config: ExperimentConfig
    fits: dict = field(default_factory=dict)
    manifest: dict = field(default_factory=dict)
    diagnostics: Optional[ev.RunDiagnostics] = None


def _json_safe(v):
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_json_safe(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def versions() -> dict:
    return {"package": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def resolve(name_or_path: Union[str, ExperimentConfig], scale: str = "full") -> ExperimentConfig:
    if isinstance(name_or_path, ExperimentConfig):
        return name_or_path
    if name_or_path in NAMES:
        return preset(name_or_path, scale)
    if os.path.isfile(name_or_path):
        return load_config(name_or_path)
    raise ConfigError(f"{name_or_path!r} is neither a preset nor a config file")


# building blocks ---------------------------------------------------------------


def model_of(cfg: ExperimentConfig) -> ev.ModelSpec:
    if cfg.model == "fkdv":
        return ev.ModelSpec.fkdv(cfg.alpha, eps_disp=cfg.eps_disp, eps_nl=cfg.eps_nl)
    if cfg.model == "fbbm":
        return ev.ModelSpec.fbbm(cfg.alpha, bbm_eps=cfg.bbm_eps, eps_nl=cfg.eps_nl, transport=cfg.transport)
    return ev.ModelSpec.whitham(cfg.beta_st, eps_nl=cfg.eps_nl)


def exact_solution(cfg: ExperimentConfig, grid: sp.Grid, t: float) -> np.ndarray:
    """Closed-form travelling wave of a soliton datum at time ``t``, periodically wrapped."""
    c = cfg.beta
    if cfg.initial == "bo_soliton":
        z = (grid.x - c * t + grid.length / 2) % grid.length - grid.length / 2
        return so.bo_soliton(c)(z)
    if cfg.initial == "fbbm_soliton":
        z = (grid.x - c * t + grid.length / 2) % grid.length - grid.length / 2
        return so.fbbm_bo_soliton(c)(z)
    if cfg.initial == "kdv_soliton":
        return so.kdv_soliton(c)(grid.x)
    raise ConfigError(f"no closed form for initial={cfg.initial}")


def initial_field(cfg: ExperimentConfig, grid: sp.Grid) -> sp.SpectralField:
    if cfg.initial == "sech2":
        return sp.analyze(sp.sech2(grid.x, cfg.beta), grid)
    return sp.analyze(exact_solution(cfg, grid, 0.0), grid)


def evolve_config(cfg: ExperimentConfig) -> ev.EvolveConfig:
    return ev.EvolveConfig(dt=cfg.dt, n_steps=cfg.n_steps, diag_stride=cfg.stride(),
                           snapshot_times=cfg.snapshot_times, newton_tol=cfg.newton_tol,
                           newton_max_iter=cfg.newton_max_iter, energy_stop=cfg.energy_stop,
                           dealias=cfg.dealias, fourier_fit=cfg.fourier_fit,
                           delta_stop=cfg.delta_stop or None, floor_limit=cfg.floor_limit)


def simulate(cfg: ExperimentConfig) -> ev.RunDiagnostics:
    grid = sp.Grid(cfg.n, cfg.w)
    u0 = initial_field(cfg, grid)
    ecfg = evolve_config(cfg)
    if cfg.frame == "commoving":
        if cfg.model != "fbbm":
            raise ConfigError("the commoving frame is only available for fbbm")
        return ev.evolve_commoving_fbbm(cfg.alpha, cfg.bbm_eps, u0, ecfg, cfg.eps_nl, cfg.transport)
    return ev.evolve(model_of(cfg), u0, ecfg)


def _try(fn, *args, **kw) -> dict:
    try:
        out = fn(*args, **kw)
    except (an.AnalysisError, so.SolitonError, ev.StepError) as exc:
        return {"error": str(exc)}
    return out.report() if hasattr(out, "report") else out


def reliable_times(diag: ev.RunDiagnostics, energy_stop: float, floor_limit: float = 0.0) -> np.ndarray:
    """Mask of samples with bounded energy drift, taken before resolution was first lost."""
    ok = np.asarray(diag.energy_drift) <= energy_stop
    if floor_limit > 0:
        ok &= np.maximum.accumulate(np.asarray(diag.floor)) <= floor_limit
    return ok


def norm_fits(cfg: ExperimentConfig, diag: ev.RunDiagnostics) -> dict:
    ok = reliable_times(diag, cfg.energy_stop, cfg.floor_limit)
    t = np.asarray(diag.times)[ok]
    sup = np.asarray(diag.sup_norm)[ok]
    grad2 = np.asarray(diag.grad_l2)[ok] ** 2
    out = {}
    if cfg.fit_tail > 0:
        win_sup = win_grad = (t[-1] - cfg.fit_tail, t[-1])
    else:
        win_sup, win_grad = cfg.fit_sup_window, cfg.fit_grad_window
    if win_sup:
        out["sup_norm"] = _try(an.fit_blowup_norms, t, sup, win_sup)
    if win_grad:
        out["grad_l2_sq"] = _try(an.fit_blowup_norms, t, grad2, win_grad)
    return out


def tstar(cfg: ExperimentConfig, diag: ev.RunDiagnostics) -> float:
    """Blow-up time of a run under the configured rule."""
    if cfg.tstar_rule == "divergence":
        if diag.stop_reason == "completed":
            raise NumericalFailure("run completed without the stage iteration failing")
        return float(diag.stop_time)
    if cfg.tstar_rule == "delta_crossing":
        thr = cfg.delta_stop or 1e-6
        try:
            return an.singularity_time_from_delta(diag.times, diag.delta, thr)
        except an.AnalysisError as exc:
            raise NumericalFailure(str(exc)) from exc
    fits = norm_fits(cfg, diag)
    fit = fits.get("sup_norm", {})
    if "t_star" not in fit:
        raise NumericalFailure(fit.get("error", "no sup-norm fit window configured"))
    return float(fit["t_star"])


def reference_soliton(alpha: float, scale: str = "desk") -> so.SolitonProfile:
    """c=1 profile on the standard soliton grid (``n = 2^16`` below alpha=0.6 at desk scale)."""
    if alpha == 1:
        g = sp.Grid(2**14, 100.0)
        return so.analytic_profile(1.0, g)
    return so.continue_in_alpha(alpha, scale=scale)


# tasks ---------------------------------------------------------------------------


def _task_evolve(cfg: ExperimentConfig, out: Path, scale: str) -> tuple:
    diag = simulate(cfg)
    diag.write_csv(out / "diagnostics.csv")
    for t, f in sorted(diag.snapshots.items()):
        ev.write_snapshot_csv(out / f"snapshot_t{t:g}.csv", f)
    if diag.final is not None:
        ev.write_snapshot_csv(out / "final.csv", diag.final)
    fits = {"stop_reason": diag.stop_reason, "stop_time": diag.stop_time}
    fits.update(norm_fits(cfg, diag))
    if diag.final is not None:
        fits["fourier_final"] = _try(an.fit_fourier_asymptotics, diag.final)
        fits["sup_final"] = float(np.max(np.abs(diag.final.physical)))
    if diag.last_reliable is not None and diag.stop_reason != "completed":
        ev.write_snapshot_csv(out / "last_reliable.csv", diag.last_reliable)
        fits["fourier_last_reliable"] = _try(an.fit_fourier_asymptotics, diag.last_reliable)
        fits["last_reliable_time"] = diag.last_reliable_time
    if diag.delta:
        fits["delta_series"] = {"t": list(diag.times), "delta": list(diag.delta),
                                "mu_plus_1": list(diag.mu_plus_1), "caveat": an.MU_CAVEAT}
        try:
            fits["t_star_delta"] = an.singularity_time_from_delta(diag.times, diag.delta,
                                                                  cfg.delta_stop or 1e-6)
        except an.AnalysisError as exc:
            fits["t_star_delta"] = {"error": str(exc)}
    if cfg.tstar_rule == "divergence" and diag.stop_reason != "completed":
        fits["t_star_divergence"] = diag.stop_time
    if cfg.model in ("fbbm", "whitham") or cfg.initial == "sech2":
        fits["t_c"] = ev.burgers_breakup_time(cfg.beta, cfg.eps_nl)
    if (cfg.hump_fit or cfg.profile_fit) and diag.final is not None:
        Q1 = reference_soliton(cfg.alpha, scale)
        if cfg.hump_fit:
            fam = so.SolitonFamily(Q1, "fbbm" if cfg.model == "fbbm" else "fkdv")
            fits["humps"] = _try(lambda: [h.__dict__ for h in so.fit_solitons_to_humps(diag.final, fam)])
        if cfg.profile_fit:
            fits["profile"] = _try(lambda: an.blowup_profile_fit(diag.final, Q1, cfg.alpha).__dict__)
    return diag, fits


def _task_soliton_test(cfg: ExperimentConfig, out: Path, scale: str) -> tuple:
    diag = simulate(cfg)
    diag.write_csv(out / "diagnostics.csv")
    grid = sp.Grid(cfg.n, cfg.w)
    exact = exact_solution(cfg, grid, diag.stop_time)
    err = float(np.max(np.abs(diag.final.physical - exact)))
    ev.write_snapshot_csv(out / "final.csv", diag.final)
    fits = {"stop_reason": diag.stop_reason, "stop_time": diag.stop_time, "max_error": err,
            "max_energy_drift": float(np.max(diag.energy_drift)),
            "resolution_floor": float(diag.floor[0])}
    return diag, fits


def _task_soliton_family(cfg: ExperimentConfig, out: Path, scale: str) -> tuple:
    grid = sp.Grid(cfg.n, cfg.w)
    rows = []

    def keep(p):
        rows.append((p.alpha, p.peak, p.mass(), math.sqrt(p.mass()), p.energy()))

    prof = so.continue_in_alpha(cfg.alpha, grid, c=cfg.beta, callback=keep)
    if not rows or rows[-1][0] != prof.alpha:
        keep(prof)
    bo = so.analytic_profile(cfg.beta, grid)
    rows.insert(0, (1.0, bo.peak, bo.mass(), math.sqrt(bo.mass()), bo.energy()))
    rows = sorted({r[0]: r for r in rows}.values())
    with open(out / "family.csv", "w", newline="") as fh:
        fh.write("alpha,max,mass,l2_norm,energy\n")
        for r in rows:
            fh.write(",".join(ev.fmt17(v) for v in r) + "\n")
    so.write_profile(out / "profile.csv", out / "profile.meta", prof)
    fits = {"rows": [dict(zip(("alpha", "max", "mass", "l2_norm", "energy"), r)) for r in rows],
            "monotone": so.family_is_monotone([(r[0], r[1], r[2], r[4]) for r in rows]),
            "residual_norm": prof.residual_norm}
    return None, fits


_TASKS = {"evolve": _task_evolve, "soliton_test": _task_soliton_test,
          "soliton_family": _task_soliton_family}


def run_experiment(name_or_config, scale: str = "full", out: Optional[str] = None) -> ExperimentResult:
    """Run a preset, a config file or an ExperimentConfig; returns the artifact directory and fits."""
    cfg = resolve(name_or_config, scale)
    if cfg.task == "sweep":
        raise ConfigError("sweep presets run through run_sweep")
    root = Path(out or cfg.out_dir)
    directory = root / cfg.name
    directory.mkdir(parents=True, exist_ok=True)
    if not os.access(directory, os.W_OK):
        raise ConfigError(f"output directory {directory} is not writable")
    (directory / "config.txt").write_text(render_config(cfg), encoding="utf-8")
    t0 = time.perf_counter()
    manifest = {"name": cfg.name, "figure": cfg.figure, "scale": scale, "config": cfg.__dict__,
                "dt_derivation": f"dt = t_end / N_t with N_t = {cfg.n_steps}", "versions": versions()}
    diag = None
    try:
        diag, fits = _TASKS[cfg.task](cfg, directory, scale)
        manifest["status"] = "ok"
    except (ev.ModelError, sp.SpectralError, ConfigError):
        raise
    except (so.SolitonError, an.AnalysisError, ev.StepError, NumericalFailure) as exc:
        fits = {"error": str(exc)}
        manifest["status"] = "failed"
        manifest["error"] = f"{type(exc).__name__}: {exc}"
    if diag is not None:
        manifest["stop_reason"] = diag.stop_reason
        manifest["stop_time"] = diag.stop_time
        manifest["stop_message"] = diag.stop_message
    manifest["wall_seconds"] = round(time.perf_counter() - t0, 3)
    _write_json(directory / "fits.json", fits)
    _write_json(directory / "manifest.json", manifest)
    result = ExperimentResult(directory, cfg, fits, manifest, diag)
    if manifest["status"] == "failed":
        raise NumericalFailure(manifest["error"])
    return result


# sweeps ------------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    base: ExperimentConfig
    values: tuple
    parameter: str = "eps"
    max_parallel: int = 1

    def __post_init__(self):
        if self.parameter != "eps":
            raise ConfigError("only eps sweeps are supported")
        v = tuple(float(x) for x in self.values)
        if not v or any(x <= 0 for x in v) or list(v) != sorted(v):
            raise ConfigError("sweep values must be positive and sorted")
        if self.max_parallel < 1:
            raise ConfigError("max_parallel must be >= 1")
        object.__setattr__(self, "values", v)


@dataclass
class SweepResult:
    directory: Path
    eps: list
    t_star: list
    t_c: list
    failures: dict
    regression: Optional[an.Regression]


def _sweep_member(cfg: ExperimentConfig) -> tuple:
    try:
        diag = simulate(cfg)
        return tstar(cfg, diag), diag.stop_reason, None
    except (NumericalFailure, ev.StepError, an.AnalysisError) as exc:
        return math.nan, "failed", str(exc)


def run_sweep(spec: Union[SweepSpec, str], scale: str = "full", eps: Optional[Sequence[float]] = None,
              out: Optional[str] = None) -> SweepResult:
    """Run each epsilon independently, extract t*, and regress log10 t* on log10 eps."""
    if not isinstance(spec, SweepSpec):
        base = resolve(spec, scale)
        spec = SweepSpec(base, tuple(eps) if eps else base.eps_list, max_parallel=base.max_parallel)
    base = spec.base
    directory = Path(out or base.out_dir) / base.name
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "config.txt").write_text(render_config(replace(base, eps_list=spec.values)), encoding="utf-8")
    members = [base.with_eps(e) for e in spec.values]
    t0 = time.perf_counter()
    if spec.max_parallel > 1:
        with ProcessPoolExecutor(max_workers=spec.max_parallel) as pool:
            results = list(pool.map(_sweep_member, members))
    else:
        results = [_sweep_member(m) for m in members]
    ts = [r[0] for r in results]
    tcs = [ev.burgers_breakup_time(base.beta, e) for e in spec.values]
    failures = {e: r[2] for e, r in zip(spec.values, results) if r[2]}
    with open(directory / "sweep.csv", "w", newline="") as fh:
        fh.write("epsilon,t_star\n")
        for e, t in zip(spec.values, ts):
            fh.write(f"{ev.fmt17(e)},{ev.fmt17(t)}\n")
    good = [(e, t) for e, t in zip(spec.values, ts) if math.isfinite(t)]
    reg = None
    record = {"rule": base.tstar_rule, "failures": {str(k): v for k, v in failures.items()},
              "t_c": dict(zip(map(str, spec.values), tcs)), "versions": versions(),
              "figure": base.figure, "wall_seconds": None}
    try:
        reg = an.loglog_regression(*zip(*good)) if len(good) >= 3 else None
        if reg is None:
            raise an.AnalysisError(f"only {len(good)} successful runs; regression needs 3")
        record.update(a=reg.a, b=reg.b, sigma_a=reg.sigma_a, r=reg.r, residual=reg.rms_residual)
    except an.AnalysisError as exc:
        record["error"] = str(exc)
    record["wall_seconds"] = round(time.perf_counter() - t0, 3)
    _write_json(directory / "regression.json", record)
    result = SweepResult(directory, list(spec.values), ts, tcs, failures, reg)
    if reg is None:
        raise NumericalFailure(record["error"])
    return result
