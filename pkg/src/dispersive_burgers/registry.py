"""Named experiments.

Each preset is stated at full resolution.  ``scale="desk"`` divides ``n`` by
four and multiplies ``dt`` by four unless the preset overrides that: the
fixed-point stage solve of a blow-up run stops converging once the time
step is too large for the peak height, so those presets keep their step.
"""

from __future__ import annotations

from dataclasses import replace

from .config import ConfigError, ExperimentConfig

SCALES = ("full", "desk")

_EPS = (0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.1)

# name -> (fields, desk overrides)
_PRESETS = {
    "fkdv-soliton-test": (dict(
        model="fkdv", alpha=1.0, beta=2.0, task="soliton_test", initial="bo_soliton",
        n=2**14, w=100.0, dt=1e-4, t_end=1.0,
        figure="Benjamin-Ono soliton c=2 propagated to t=1; error against the exact translate"), {}),
    "fbbm-soliton-test": (dict(
        model="fbbm", alpha=1.0, beta=2.0, task="soliton_test", initial="fbbm_soliton",
        n=2**14, w=100.0, dt=1e-4, t_end=1.0,
        figure="fBBM alpha=1 travelling wave c=2 propagated to t=1"), {}),
    "fkdv-decompose-a06": (dict(
        model="fkdv", alpha=0.6, beta=5.0, n=2**14, w=7.0, dt=5e-4, t_end=5.0,
        snapshot_times=(0.0, 1.0, 2.5, 5.0), newton_max_iter=100,
        figure="fKdV alpha=0.6, 5 sech^2: decomposition into solitons, humps fitted at t=5"),
        dict(dt=5e-4)),
    "fkdv-radiation-a05": (dict(
        model="fkdv", alpha=0.5, beta=1.0, n=2**14, w=10.0, dt=1e-2, t_end=10.0,
        snapshot_times=(0.0, 2.5, 5.0, 10.0),
        figure="fKdV alpha=0.5, sech^2 (positive energy, sub-soliton mass): radiation"), {}),
    "fkdv-critical-blowup": (dict(
        model="fkdv", alpha=0.5, beta=3.0, n=2**16, w=20.0, dt=1e-3, t_end=10.0,
        newton_max_iter=400, diag_stride=5, fit_sup_window=(4.1993, 7.0), fit_grad_window=(4.1993, 7.0),
        snapshot_times=(0.0, 2.0, 4.0, 6.0), profile_fit=True,
        figure="fKdV alpha=0.5, 3 sech^2: L2-critical blow-up, norm fits and rescaled-soliton profile"),
        dict(dt=1e-3)),
    "fkdv-super-blowup-a045": (dict(
        model="fkdv", alpha=0.45, beta=3.0, n=2**16, w=10.0, dt=2e-4, t_end=2.2,
        newton_max_iter=400, diag_stride=1, fit_tail=0.2, profile_fit=True,
        snapshot_times=(0.0, 0.5, 1.0, 1.5),
        figure="fKdV alpha=0.45, 3 sech^2: L2-supercritical blow-up, fits over the last 1000 steps"),
        dict(dt=2e-4)),
    "fkdv-esuper-blowup-a02": (dict(
        model="fkdv", alpha=0.2, beta=1.0, n=2**16, w=20.0, dt=4e-4, t_end=4.0,
        newton_max_iter=400, diag_stride=1, fit_sup_window=(2.4497, 3.045),
        fit_grad_window=(2.4497, 3.045), snapshot_times=(0.0, 1.0, 2.0, 3.0),
        figure="fKdV alpha=0.2, sech^2: energy-supercritical blow-up, norm and Fourier fits"),
        dict(dt=4e-4)),
    "fkdv-small-a02": (dict(
        model="fkdv", alpha=0.2, beta=0.1, n=2**14, w=20.0, dt=2e-3, t_end=20.0,
        snapshot_times=(0.0, 10.0, 20.0),
        figure="fKdV alpha=0.2, 0.1 sech^2: small data radiate, sup norm decreasing"), {}),
    "fbbm-solitons-a05": (dict(
        model="fbbm", alpha=0.5, beta=20.0, n=2**14, w=20.0, dt=5e-4, t_end=10.0,
        snapshot_times=(0.0, 5.0, 10.0), hump_fit=True,
        figure="fBBM alpha=0.5, 20 sech^2: humps at t=10 fitted by rescaled fBBM solitons"), {}),
    "fbbm-cusp-a02": (dict(
        model="fbbm", alpha=0.2, beta=1.0, n=2**16, w=3.0, dt=3e-4, t_end=6.0, newton_max_iter=400,
        diag_stride=10, fourier_fit=True, snapshot_times=(0.0, 2.0, 4.0, 5.8),
        figure="fBBM alpha=0.2, sech^2: cusp formation, Fourier fit at the last reliable time"),
        dict(dt=3e-4)),
    "fbbm-small-a02": (dict(
        model="fbbm", alpha=0.2, beta=0.1, n=2**14, w=20.0, dt=1e-2, t_end=100.0,
        snapshot_times=(0.0, 10.0, 100.0),
        figure="fBBM alpha=0.2, 0.1 sech^2: radiation up to t=100"), {}),
    "whitham-neg-small": (dict(
        model="whitham", alpha=0.0, beta=-0.1, n=2**14, w=20.0, dt=2e-3, t_end=20.0,
        snapshot_times=(0.0, 13.0, 20.0),
        figure="Whitham, -0.1 sech^2: radiation beyond the Burgers break-up time"), {}),
    "whitham-neg-cusp": (dict(
        model="whitham", alpha=0.0, beta=-1.0, n=2**16, w=5.0, dt=1.05e-4, t_end=2.1,
        diag_stride=10, fourier_fit=True, delta_stop=1e-6, tstar_rule="delta_crossing",
        snapshot_times=(0.0, 1.0, 1.5),
        figure="Whitham, -sech^2: cusp after the Burgers break-up time, singularity tracing"),
        dict(dt=1.05e-4)),
    "whitham-pos-cusp": (dict(
        model="whitham", alpha=0.0, beta=1.0, n=2**16, w=5.0, dt=6.5e-5, t_end=1.3,
        diag_stride=10, dealias=True, fourier_fit=True, delta_stop=1e-6, tstar_rule="delta_crossing",
        snapshot_times=(0.0, 0.6, 1.2),
        figure="Whitham, sech^2 with 2/3 dealiasing: cusp before the Burgers break-up time"),
        dict(dt=6.5e-5)),
    "fkdv-neg-alpha-cusp": (dict(
        model="fkdv", alpha=-0.5, beta=-1.0, n=2**16, w=5.0, dt=1.05e-4, t_end=2.1,
        diag_stride=10, fourier_fit=True, delta_stop=1e-6, tstar_rule="delta_crossing",
        snapshot_times=(0.0, 1.0, 1.5),
        figure="fKdV alpha=-1/2, -sech^2: same high-wavenumber dispersion as Whitham"),
        dict(dt=1.05e-4)),
    "soliton-family": (dict(
        model="fkdv", alpha=0.45, beta=1.0, task="soliton_family", n=2**18, w=100.0, dt=1.0, t_end=1.0,
        figure="c=1 solitary waves continued from alpha=1 to 0.45: maximum, mass, energy"),
        dict(dt=1.0)),
    "eps-sweep-fkdv": (dict(
        model="fkdv", alpha=0.2, beta=1.0, task="sweep", n=2**16, w=20.0, dt=4e-4, t_end=4.0,
        newton_max_iter=30, tstar_rule="divergence", eps_list=_EPS, max_parallel=1,
        figure="fKdV alpha=0.2, eps sech^2 with eps-scaled dispersion: t* against eps"), {}),
    "eps-sweep-fbbm": (dict(
        model="fbbm", alpha=0.2, beta=1.0, task="sweep", frame="commoving", n=2**15, w=10.0,
        dt=2.5e-4, t_end=5.0, diag_stride=10, fourier_fit=True, delta_stop=1e-6,
        tstar_rule="delta_crossing", eps_list=_EPS, max_parallel=1,
        figure="fBBM alpha=0.2, eps sech^2 in the frame of the maximum: t* against eps"), {}),
}

NAMES = tuple(_PRESETS)


def preset(name: str, scale: str = "full") -> ExperimentConfig:
    if name not in _PRESETS:
        raise ConfigError(f"unknown preset {name!r}; known: {', '.join(NAMES)}")
    if scale not in SCALES:
        raise ConfigError(f"scale must be one of {SCALES}")
    fields_, desk = _PRESETS[name]
    cfg = ExperimentConfig(name=name, **fields_)
    if scale == "desk":
        over = {"n": max(8, cfg.n // 4), "dt": cfg.dt * 4}
        over.update(desk)
        cfg = replace(cfg, **over)
    return cfg
