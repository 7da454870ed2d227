"""Experiment configuration: a flat ``key = value`` text format.

Lines starting with ``#`` are comments.  Lists are comma separated, windows
are written ``lo,hi`` and booleans as ``true``/``false``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Optional

MODELS = ("fkdv", "fbbm", "whitham")
TASKS = ("evolve", "soliton_test", "soliton_family", "sweep")
INITIAL = ("sech2", "bo_soliton", "fbbm_soliton", "kdv_soliton")
FRAMES = ("lab", "commoving")
TSTAR_RULES = ("norm_fit", "delta_crossing", "divergence")
REQUIRED = ("model", "alpha", "beta", "n", "w", "dt", "t_end")


class ConfigError(ValueError):
    def __init__(self, msg: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line else msg)


@dataclass(frozen=True)
class ExperimentConfig:
    """One run.  ``beta`` is the amplitude of ``beta sech^2 x`` or the speed of a soliton datum."""

    model: str
    alpha: float
    beta: float
    n: int
    w: float
    dt: float
    t_end: float
    name: str = "custom"
    figure: str = ""
    task: str = "evolve"
    initial: str = "sech2"
    eps_nl: float = 1.0
    eps_disp: float = 1.0
    bbm_eps: float = 1.0
    beta_st: float = 0.0
    transport: int = 1
    frame: str = "lab"
    diag_stride: int = 0  # 0 picks a stride giving about 1000 samples
    dealias: bool = False
    snapshot_times: tuple = ()
    newton_tol: float = 1e-12
    newton_max_iter: int = 30
    energy_stop: float = 1e-3
    floor_limit: float = 1e-4  # states with a larger resolution floor are not fitted; 0 disables
    fourier_fit: bool = False
    delta_stop: float = 0.0  # 0 disables the singularity-width stop
    fit_sup_window: tuple = ()
    fit_grad_window: tuple = ()
    fit_tail: float = 0.0  # > 0: fit both norms over [t_last - fit_tail, t_last] instead
    hump_fit: bool = False
    profile_fit: bool = False
    tstar_rule: str = "norm_fit"
    eps_list: tuple = ()
    max_parallel: int = 1
    out_dir: str = "runs"

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")
        for name, allowed in (("task", TASKS), ("initial", INITIAL), ("frame", FRAMES),
                              ("tstar_rule", TSTAR_RULES)):
            if getattr(self, name) not in allowed:
                raise ConfigError(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")
        for f in fields(self):
            v = getattr(self, f.name)
            vals = v if isinstance(v, tuple) else (v,)
            for x in vals:
                if isinstance(x, float) and not math.isfinite(x):
                    raise ConfigError(f"{f.name} must be finite")
        if not self.t_end > 0:
            raise ConfigError("t_end must be positive")
        if not self.dt > 0 or not self.w > 0:
            raise ConfigError("dt and w must be positive")
        if self.n < 8 or self.n & (self.n - 1):
            raise ConfigError("n must be a power of two >= 8")
        if self.fit_tail < 0 or self.floor_limit < 0:
            raise ConfigError("fit_tail and floor_limit must be >= 0")
        if self.diag_stride < 0 or self.newton_max_iter < 1 or self.max_parallel < 1:
            raise ConfigError("diag_stride, newton_max_iter and max_parallel out of range")
        for wname in ("fit_sup_window", "fit_grad_window"):
            win = getattr(self, wname)
            if win and (len(win) != 2 or not win[0] < win[1]):
                raise ConfigError(f"{wname} must be 'lo,hi' with lo < hi")
        if self.eps_list:
            if any(e <= 0 for e in self.eps_list) or list(self.eps_list) != sorted(self.eps_list):
                raise ConfigError("eps_list must be positive and sorted")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_end / self.dt)))

    def stride(self) -> int:
        if self.diag_stride:
            s = self.diag_stride
        else:
            s = max(1, self.n_steps // 1000)
        while self.n_steps % s:
            s -= 1
        return s

    def with_eps(self, eps: float) -> "ExperimentConfig":
        """The run of an epsilon sweep: data ``eps beta sech^2``, time span scaled by ``1/eps``."""
        base = {"fkdv": {"eps_disp": eps}, "fbbm": {"bbm_eps": eps}}.get(self.model, {})
        return replace(self, task="evolve", eps_list=(), t_end=self.t_end / eps, dt=self.dt / eps,
                       beta=self.beta * eps, name=f"{self.name}-eps{eps:g}", **base)


_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _parse_value(key: str, raw: str, line: int):
    t = _TYPES[key]
    try:
        if t == "float":
            return float(raw)
        if t == "int":
            v = float(raw)
            if v != int(v):
                raise ValueError
            return int(v)
        if t == "bool":
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError
            return low in ("true", "1", "yes")
        if t == "tuple":
            return tuple(float(p) for p in raw.split(",") if p.strip())
        return raw
    except ValueError:
        raise ConfigError(f"cannot parse {key} = {raw!r}", line) from None


def parse_config(text: str) -> ExperimentConfig:
    values = {}
    for i, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw_line.strip()!r}", i)
        key, _, raw = (p.strip() for p in line.partition("="))
        if key not in _TYPES:
            raise ConfigError(f"unknown key {key!r}", i)
        values[key] = _parse_value(key, raw, i)
    missing = [k for k in REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    return ExperimentConfig(**values)


def _render_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ",".join(repr(float(x)) for x in v)
    return str(v)


def render_config(cfg: ExperimentConfig) -> str:
    lines = [f"{f.name} = {_render_value(getattr(cfg, f.name))}" for f in fields(cfg)]
    return "\n".join(lines) + "\n"


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
