"""Time evolution of fKdV, fBBM and Whitham equations in Fourier space.

All three models are written as ``uhat_t = Lin(xi) uhat + N(u)`` with a
diagonal, purely imaginary ``Lin``.  Time stepping uses the two-stage Gauss
(IRK4) scheme; the stage equations are solved by the simplified Newton
(fixed point) iteration in which only the diagonal linear part is inverted,
mode by mode, in closed form.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import spectral as sp
from .spectral import Grid, SpectralField

log = logging.getLogger(__name__)

SQ3 = math.sqrt(3.0)
A11 = A22 = 0.25
A12 = 0.25 - SQ3 / 6
A21 = 0.25 + SQ3 / 6
C1 = 0.5 - SQ3 / 6
C2 = 0.5 + SQ3 / 6

KINDS = ("fkdv", "fbbm", "whitham")
STOP_REASONS = ("completed", "energy_drift_exceeded", "newton_divergence", "non_finite", "delta_threshold")


class ModelError(ValueError):
    pass


class StepError(RuntimeError):
    """A time step could not be completed; ``reason`` is a stop reason."""

    def __init__(self, reason: str, msg: str):
        super().__init__(msg)
        self.reason = reason


class DegeneratePeakError(StepError):
    def __init__(self, msg: str):
        super().__init__("degenerate_peak", msg)


@dataclass(frozen=True)
class ModelSpec:
    """Which equation is integrated and with which coefficients.

    fkdv:    u_t + eps_nl u u_x - eps_disp D^alpha u_x = 0
    whitham: u_t + eps_nl u u_x - L u_x = 0,  L has symbol p_S(xi)
    fbbm:    (1 + bbm_eps D^alpha) u_t + transport u_x + eps_nl u u_x = 0
    """

    kind: str
    alpha: float = 1.0
    beta_st: float = 0.0
    eps_disp: float = 1.0
    eps_nl: float = 1.0
    transport: int = 1
    bbm_eps: float = 1.0

    def __post_init__(self):
        kind = self.kind.lower()
        object.__setattr__(self, "kind", kind)
        if kind not in KINDS:
            raise ModelError(f"unknown model kind {self.kind!r}")
        if kind == "fkdv" and not (-1 < self.alpha <= 2):
            raise ModelError(f"fKdV needs alpha in (-1, 2], got {self.alpha}")
        if kind == "fbbm":
            if not (0 < self.alpha <= 2):
                raise ModelError(f"fBBM needs alpha in (0, 2], got {self.alpha}")
            if self.bbm_eps <= 0:
                raise ModelError("bbm_eps must be positive")
            if self.transport not in (0, 1):
                raise ModelError("transport must be 0 or 1")
        if kind == "whitham" and self.beta_st < 0:
            raise ModelError("surface tension must be nonnegative")

    @classmethod
    def fkdv(cls, alpha, eps_disp=1.0, eps_nl=1.0):
        return cls("fkdv", alpha=alpha, eps_disp=eps_disp, eps_nl=eps_nl)

    @classmethod
    def fbbm(cls, alpha, bbm_eps=1.0, eps_nl=1.0, transport=1):
        return cls("fbbm", alpha=alpha, bbm_eps=bbm_eps, eps_nl=eps_nl, transport=transport)

    @classmethod
    def whitham(cls, beta_st=0.0, eps_nl=1.0):
        return cls("whitham", beta_st=beta_st, eps_nl=eps_nl)

    def bbm_prefactor(self) -> sp.FourierSymbol:
        return sp.symbol_bbm_prefactor(self.alpha, self.bbm_eps)


def linear_multiplier(model: ModelSpec, grid: Optional[Grid] = None) -> sp.FourierSymbol:
    """The linear symbol of the model (``grid`` is accepted for interface symmetry)."""
    if model.kind == "fkdv":
        base = sp.symbol_fkdv_dispersion(model.alpha)
        e = model.eps_disp
        return sp.FourierSymbol(lambda xi: e * base(xi), "odd", f"{e}*{base.name}", {"alpha": model.alpha})
    if model.kind == "whitham":
        return sp.symbol_whitham(model.beta_st)
    pref = model.bbm_prefactor()
    tr = model.transport
    return sp.FourierSymbol(lambda xi: -1j * xi * tr * pref(xi), "odd", "-i xi tr/(1+eps|xi|^a)")


def _nonlinear_symbol(model: ModelSpec) -> sp.FourierSymbol:
    """Multiplier applied to the transform of ``u^2``."""
    e = model.eps_nl
    if model.kind == "fbbm":
        pref = model.bbm_prefactor()
        return sp.FourierSymbol(lambda xi: -0.5j * e * xi * pref(xi), "odd", "nl")
    return sp.FourierSymbol(lambda xi: -0.5j * e * xi, "odd", "nl")


def nonlinear_term(model: ModelSpec, f: SpectralField, dealias: bool = False) -> SpectralField:
    sq = sp.analyze(f.physical**2, f.grid)
    out = sq.spectral * _nonlinear_symbol(model).on_grid(f.grid)
    if dealias:
        out = out * sp.two_thirds_mask(f.grid)
    return SpectralField.from_spectral(f.grid, out)


# energies ----------------------------------------------------------------


def hamiltonian(model: ModelSpec, f: SpectralField, which: str = "energy") -> float:
    """Conserved functional of the model.

    fkdv/whitham: ``int (1/2) u (P u) - eps_nl u^3/6`` with ``P`` the dispersive
    multiplier (``eps_disp |xi|^alpha`` or ``p_S``).
    fbbm: ``which="energy"`` gives ``int u^2 + bbm_eps |D^(alpha/2) u|^2``;
    ``which="hamiltonian"`` gives ``(1/2) int u^2 + eps_nl u^3/3``.
    """
    g = f.grid
    cubic = float(np.sum(f.physical**3) * g.dx)
    if model.kind == "fbbm":
        if which == "hamiltonian":
            return 0.5 * (sp.l2_norm(f) ** 2 + model.eps_nl * cubic / 3.0)
        w = 1.0 + model.bbm_eps * sp._abs_pow(g.xi, model.alpha)
        return sp.multiplier_quadratic_form(f, w)
    if model.kind == "fkdv" and 0 <= model.alpha < 1.0 / 3:
        log.debug("Hamiltonian evaluated in the energy-supercritical range alpha=%s", model.alpha)
    w = _dispersion_weight(model, g.xi)
    return 0.5 * sp.multiplier_quadratic_form(f, w) - model.eps_nl * cubic / 6.0


def _dispersion_weight(model: ModelSpec, xi: np.ndarray) -> np.ndarray:
    if model.kind == "whitham":
        return sp.whitham_phase_speed(xi, model.beta_st)
    if model.alpha < 0:
        a = np.abs(xi)
        out = np.zeros_like(a)
        out[a > 0] = a[a > 0] ** model.alpha
        return model.eps_disp * out
    return model.eps_disp * sp._abs_pow(xi, model.alpha)


class _EnergyEval:
    """Fast evaluation of the conserved energy from rfft coefficients."""

    def __init__(self, model: ModelSpec, grid: Grid):
        self.model, self.grid = model, grid
        wr = np.full(grid.n // 2 + 1, 2.0)
        wr[0] = wr[-1] = 1.0
        xi = grid.xi_r
        if model.kind == "fbbm":
            q = 1.0 + model.bbm_eps * sp._abs_pow(xi, model.alpha)
            self.quad, self.cubic = q, 0.0
        else:
            self.quad, self.cubic = 0.5 * _dispersion_weight(model, xi), -model.eps_nl / 6.0
        self.weights = wr * self.quad * grid.length / grid.n**2

    def __call__(self, v: np.ndarray, u: np.ndarray) -> float:
        e = float(np.sum(self.weights * (v.real**2 + v.imag**2)))
        if self.cubic:
            e += self.cubic * float(np.sum(u**3)) * self.grid.dx
        return e


def burgers_breakup_time(beta: float, eps: float = 1.0) -> float:
    """Gradient-catastrophe time of Burgers for ``eps * beta * sech^2 x`` data."""
    if eps <= 0:
        raise ModelError("eps must be positive")
    if beta == 0:
        return math.inf
    return 3**1.5 / (4 * abs(beta) * eps)


# stepper -------------------------------------------------------------------


@dataclass
class EvolveConfig:
    dt: float
    n_steps: int
    diag_stride: int = 1
    snapshot_times: Sequence[float] = ()
    newton_tol: float = 1e-12
    newton_max_iter: int = 30
    energy_stop: float = 1e-3
    dealias: bool = False
    fourier_fit: bool = False
    delta_stop: Optional[float] = None
    floor_limit: float = 0.0  # > 0: states with a larger resolution floor are not reliable

    def __post_init__(self):
        if not self.dt > 0:
            raise ModelError("dt must be positive")
        if self.n_steps < 0 or self.diag_stride < 1:
            raise ModelError("n_steps must be >= 0 and diag_stride >= 1")
        if self.n_steps % self.diag_stride:
            raise ModelError("diag_stride must divide n_steps")
        self.snapshot_times = tuple(sorted(self.snapshot_times))

    @property
    def t_end(self) -> float:
        return self.dt * self.n_steps


class _IRK4:
    """Gauss-2 stepper acting on unnormalised rfft coefficients."""

    def __init__(self, model: ModelSpec, grid: Grid, dt: float, tol=1e-12, max_iter=30, dealias=False,
                 anderson=0):
        self.model, self.grid, self.n = model, grid, grid.n
        self.anderson = anderson
        self.tol, self.max_iter = tol, max_iter
        self.lin = linear_multiplier(model).on_grid(grid, real_fft=True)
        self.nl = _nonlinear_symbol(model).on_grid(grid, real_fft=True)
        if dealias:
            self.nl = self.nl * sp.two_thirds_mask(grid, real_fft=True)
        self.dealias = dealias
        self.last_iterations = 0
        self.set_dt(dt, self.lin)

    def set_dt(self, h: float, lin: np.ndarray):
        self.h = h
        self.cur_lin = lin
        hl = h * lin
        det = 1 - hl / 2 + hl**2 / 12
        self.i11 = (1 - A22 * hl) / det
        self.i12 = (A12 * hl) / det
        self.i21 = (A21 * hl) / det
        self.i22 = (1 - A11 * hl) / det

    def F(self, v: np.ndarray) -> np.ndarray:
        u = np.fft.irfft(v, self.n, axis=-1)
        return self.nl * np.fft.rfft(u * u, axis=-1)

    def _stage_map(self, v, Lv, K, y):
        h = self.h
        y[0] = v + h * (A11 * K[0] + A12 * K[1])
        y[1] = v + h * (A21 * K[0] + A22 * K[1])
        r = self.F(y)
        r += Lv
        G = np.empty_like(K)
        G[0] = self.i11 * r[0] + self.i12 * r[1]
        G[1] = self.i21 * r[0] + self.i22 * r[1]
        return G

    def step(self, v: np.ndarray) -> np.ndarray:
        """One Gauss step; stage slopes from the fixed-point form of the stage equations.

        With ``anderson > 0`` the fixed-point iterates are mixed (Anderson
        acceleration with that memory); the converged stages are unchanged.
        """
        h = self.h
        Lv = self.cur_lin * v
        K = np.empty((2, v.size), dtype=complex)
        K[0] = K[1] = self.F(v) + Lv
        y = np.empty_like(K)
        scale_n = 1.0 / self.n
        m = self.anderson
        dF, dG = [], []
        f_old = g_old = None
        prev = math.inf
        for it in range(1, self.max_iter + 1):
            G = self._stage_map(v, Lv, K, y)
            f = G - K
            change = float(np.max(np.abs(f))) * scale_n
            if not np.isfinite(change):
                raise StepError("non_finite", "stage iteration produced non-finite values")
            size = float(np.max(np.abs(G))) * scale_n
            if change <= self.tol * max(1.0, size):
                K = G
                self.last_iterations = it
                break
            # roundoff plateau: the increment stopped shrinking at a tiny relative level
            if it > 3 and change >= prev and change <= 1e3 * self.tol * max(1.0, size):
                K = G
                self.last_iterations = it
                break
            prev = change
            if m and f_old is not None:
                dF.append((f - f_old).ravel().view(float))
                dG.append((G - g_old).ravel().view(float))
                if len(dF) > m:
                    dF.pop(0)
                    dG.pop(0)
            f_old, g_old = f, G
            if m and dF:
                A = np.stack(dF, axis=1)
                gamma = np.linalg.lstsq(A, f.ravel().view(float), rcond=None)[0]
                K = (G.ravel().view(float) - np.stack(dG, axis=1) @ gamma).view(complex).reshape(K.shape)
            else:
                K = G
        else:
            raise StepError("newton_divergence", f"stage iteration did not converge in {self.max_iter} steps")
        out = v + 0.5 * h * (K[0] + K[1])
        if not np.all(np.isfinite(out)):
            raise StepError("non_finite", "step produced non-finite coefficients")
        return out


def _to_rfft(f: SpectralField) -> np.ndarray:
    return np.fft.rfft(f.physical)


def _from_rfft(grid: Grid, v: np.ndarray) -> SpectralField:
    return sp.analyze(np.fft.irfft(v, grid.n), grid)


def irk4_step(model: ModelSpec, f: SpectralField, dt: float, newton_tol=1e-12, newton_max_iter=30,
              dealias=False) -> SpectralField:
    if not dt > 0:
        raise ModelError("dt must be positive")
    st = _IRK4(model, f.grid, dt, newton_tol, newton_max_iter, dealias)
    return _from_rfft(f.grid, st.step(_to_rfft(f)))


# diagnostics ---------------------------------------------------------------


@dataclass
class RunDiagnostics:
    times: list = field(default_factory=list)
    sup_norm: list = field(default_factory=list)
    grad_l2: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    integral: list = field(default_factory=list)
    hamiltonian: list = field(default_factory=list)
    energy_drift: list = field(default_factory=list)
    floor: list = field(default_factory=list)
    delta: list = field(default_factory=list)
    mu_plus_1: list = field(default_factory=list)
    peak_position: list = field(default_factory=list)
    frame_speed: list = field(default_factory=list)
    iterations: list = field(default_factory=list)
    stop_reason: str = "completed"
    stop_time: float = 0.0
    stop_message: str = ""
    snapshots: dict = field(default_factory=dict)
    final: Optional[SpectralField] = None
    last_reliable: Optional[SpectralField] = None  # last state with drift and floor in bounds
    last_reliable_time: float = 0.0

    CSV_COLUMNS = ("t", "sup_norm", "grad_l2", "mass", "hamiltonian", "energy_drift", "floor")

    def as_arrays(self) -> dict:
        return {k: np.asarray(getattr(self, k)) for k in (
            "times", "sup_norm", "grad_l2", "mass", "integral", "hamiltonian", "energy_drift", "floor")}

    def write_csv(self, path) -> None:
        cols = [self.times, self.sup_norm, self.grad_l2, self.mass, self.hamiltonian,
                self.energy_drift, self.floor]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.CSV_COLUMNS)
            for row in zip(*cols):
                w.writerow([fmt17(v) for v in row])


def fmt17(v: float) -> str:
    return format(float(v), ".17g")


def read_diagnostics_csv(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return {k: np.array([float(r[k]) for r in rows]) for k in rows[0]}


def write_snapshot_csv(path, f: SpectralField, column: str = "u") -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", column])
        for x, u in zip(f.grid.x, f.physical):
            w.writerow([fmt17(x), fmt17(u)])


def read_snapshot_csv(path, w: float) -> SpectralField:
    """Read an ``x,u`` (or ``x,Q``) file written on ``Grid(len, w)``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    grid = Grid(data.shape[0], w)
    if not np.allclose(data[:, 0], grid.x, rtol=0, atol=1e-12 * max(1.0, w)):
        raise ValueError(f"{path}: nodes do not match Grid(n={grid.n}, w={w})")
    return sp.analyze(data[:, 1], grid)


def _record(diag: RunDiagnostics, model: ModelSpec, f: SpectralField, t: float, e0: float,
            energy: float, fourier_fit: bool, iterations: int):
    diag.times.append(t)
    diag.sup_norm.append(float(np.max(np.abs(f.physical))))
    diag.grad_l2.append(sp.grad_l2_norm(f))
    diag.mass.append(sp.l2_norm(f) ** 2)
    diag.integral.append(sp.integrate(f))
    diag.hamiltonian.append(energy)
    diag.energy_drift.append(energy_drift(energy, e0))
    diag.floor.append(sp.resolution_floor(f) if np.any(f.spectral) else 0.0)
    diag.iterations.append(iterations)
    if fourier_fit:
        from .analysis import fit_fourier_asymptotics, AnalysisError
        try:
            fit = fit_fourier_asymptotics(f)
            diag.delta.append(fit.delta)
            diag.mu_plus_1.append(fit.mu_plus_1)
        except AnalysisError:
            diag.delta.append(math.nan)
            diag.mu_plus_1.append(math.nan)


def _rfft_floor(v: np.ndarray, n: int) -> float:
    # resolution_floor on the half spectrum; the Nyquist entry stands for k = -n/2
    a = np.abs(v)
    top = a.max()
    return float(a[int(np.ceil(0.9 * (n // 2))):].max() / top) if top > 0 else 0.0


class _Reliability:
    """Keeps the last state with bounded energy drift and, once lost, no more resolution."""

    def __init__(self, cfg: EvolveConfig, n: int, v: np.ndarray):
        self.cfg, self.n, self.resolved = cfg, n, True
        self.good = (v, 0.0)

    def update(self, v: np.ndarray, t: float, e: float, drift: float):
        if self.resolved and self.cfg.floor_limit > 0:
            self.resolved = _rfft_floor(v, self.n) <= self.cfg.floor_limit
        if self.resolved and drift <= self.cfg.energy_stop and np.isfinite(e):
            self.good = (v, t)


def energy_drift(e: float, e0: float) -> float:
    if e0 == 0:
        return abs(e - e0)
    return abs(e / e0 - 1.0)


def _snapshot_steps(cfg: EvolveConfig) -> dict:
    out = {}
    for t in cfg.snapshot_times:
        m = int(round(t / cfg.dt))
        if 0 <= m <= cfg.n_steps:
            out[m] = t
    return out


def evolve(model: ModelSpec, u0: SpectralField, cfg: EvolveConfig) -> RunDiagnostics:
    """Integrate ``u0`` for ``cfg.n_steps`` steps or until a stop criterion fires.

    The stop time is where the solution ceased to be trustworthy; it is not a
    blow-up time estimate.
    """
    grid = u0.grid
    st = _IRK4(model, grid, cfg.dt, cfg.newton_tol, cfg.newton_max_iter, cfg.dealias)
    energy = _EnergyEval(model, grid)
    diag = RunDiagnostics()
    snaps = _snapshot_steps(cfg)
    v = _to_rfft(u0)
    f = u0
    e0 = energy(v, u0.physical)
    _record(diag, model, f, 0.0, e0, e0, cfg.fourier_fit, 0)
    if 0 in snaps:
        diag.snapshots[snaps[0]] = f
    step = 0
    rel = _Reliability(cfg, grid.n, v)
    for step in range(1, cfg.n_steps + 1):
        try:
            v_new = st.step(v)
        except StepError as exc:
            _stop(diag, exc.reason, (step - 1) * cfg.dt, str(exc))
            break
        u = np.fft.irfft(v_new, grid.n)
        e = energy(v_new, u)
        t = step * cfg.dt
        v = v_new
        drift = energy_drift(e, e0)
        rel.update(v, t, e, drift)
        recording = step % cfg.diag_stride == 0 or step == cfg.n_steps
        if recording or drift > cfg.energy_stop or step in snaps:
            f = sp.analyze(u, grid)
        if recording or drift > cfg.energy_stop:
            _record(diag, model, f, t, e0, e, cfg.fourier_fit, st.last_iterations)
        if step in snaps:
            diag.snapshots[snaps[step]] = f
        if drift > cfg.energy_stop:
            _stop(diag, "energy_drift_exceeded", t, f"relative energy drift {drift:.3e}")
            break
        if cfg.delta_stop is not None and diag.delta and diag.times[-1] == t:
            d = diag.delta[-1]
            if np.isfinite(d) and d < cfg.delta_stop:
                _stop(diag, "delta_threshold", t, f"singularity width {d:.3e}")
                break
    else:
        diag.stop_time = cfg.n_steps * cfg.dt
    f = _from_rfft(grid, v)
    diag.final = f
    diag.last_reliable, diag.last_reliable_time = _from_rfft(grid, rel.good[0]), rel.good[1]
    if diag.times[-1] != diag.stop_time:
        _record(diag, model, f, diag.stop_time, e0, energy(v, f.physical), cfg.fourier_fit, st.last_iterations)
    return diag


def _stop(diag: RunDiagnostics, reason: str, t: float, msg: str):
    diag.stop_reason = reason
    diag.stop_time = t
    diag.stop_message = msg
    log.info("stopped at t=%.6g: %s (%s)", t, reason, msg)


# commoving fBBM -----------------------------------------------------------


def _peak_location(grid: Grid, u: np.ndarray) -> float:
    """Grid node of the global maximum refined by a parabola through its neighbours."""
    j = int(np.argmax(u))
    um, u0, up = u[j - 1], u[j], u[(j + 1) % grid.n]
    denom = um - 2 * u0 + up
    off = 0.0 if denom == 0 else 0.5 * (um - up) / denom
    return float(grid.x[j] + off * grid.dx)


def _eval_rfft(grid: Grid, v: np.ndarray, y: float) -> float:
    """Value at ``y`` of the real function with unnormalised rfft ``v`` (nodes start at -pi w)."""
    n = grid.n
    c = v / n
    ph = np.exp(1j * grid.xi_r * (y + np.pi * grid.w))
    wts = np.full(c.size, 2.0)
    wts[0] = 1.0
    wts[-1] = 1.0
    s = np.sum(wts * c * ph)
    return float(s.real)


def commoving_speed(model: ModelSpec, grid: Grid, v: np.ndarray, y_m: float) -> float:
    """Speed of the maximum: ``d/dy[B(U_y + U U_y)] / U_yy`` at ``y_m``."""
    xi = grid.xi_r
    pref = model.bbm_prefactor().on_grid(grid, real_fft=True).real
    u = np.fft.irfft(v, grid.n)
    flux = pref * (model.transport * v + 0.5 * model.eps_nl * np.fft.rfft(u * u))
    dflux = -(xi**2) * flux
    uyy = -(xi**2) * v
    uyy[-1] = 0.0
    dflux[-1] = 0.0
    den = _eval_rfft(grid, uyy, y_m)
    if abs(den) < 1e-12:
        raise DegeneratePeakError(f"U_yy at the peak is {den:.3e}")
    return _eval_rfft(grid, dflux, y_m) / den


def evolve_commoving_fbbm(alpha: float, eps: float, u0: SpectralField, cfg: EvolveConfig,
                          eps_nl: float = 1.0, transport: int = 1) -> RunDiagnostics:
    """fBBM in a frame following the maximum of the solution.

    Solves ``U_t - V U_y + (1 + eps D^alpha)^{-1}(U_y + U U_y) = 0``; the frame
    speed ``V`` is recomputed from the current state at the start of each step
    and held fixed during the step.
    """
    if not (0 < alpha < 1) and alpha != 1:
        raise ModelError(f"commoving fBBM expects 0 < alpha <= 1, got {alpha}")
    model = ModelSpec.fbbm(alpha, bbm_eps=eps, eps_nl=eps_nl, transport=transport)
    grid = u0.grid
    st = _IRK4(model, grid, cfg.dt, cfg.newton_tol, cfg.newton_max_iter, cfg.dealias)
    energy = _EnergyEval(model, grid)
    ixi = 1j * grid.xi_r.copy()
    ixi[-1] = 0.0
    diag = RunDiagnostics()
    snaps = _snapshot_steps(cfg)
    v = _to_rfft(u0)
    f = u0
    e0 = energy(v, u0.physical)
    pos = 0.0

    def track(v, f, t, e, it):
        nonlocal pos
        y_m = _peak_location(grid, f.physical)
        V = commoving_speed(model, grid, v, y_m)
        _record(diag, model, f, t, e0, e, cfg.fourier_fit, it)
        diag.peak_position.append(y_m + pos)
        diag.frame_speed.append(V)
        return V

    V = track(v, f, 0.0, e0, 0)
    if 0 in snaps:
        diag.snapshots[snaps[0]] = f
    rel = _Reliability(cfg, grid.n, v)
    for step in range(1, cfg.n_steps + 1):
        st.set_dt(cfg.dt, st.lin + V * ixi)
        try:
            v_new = st.step(v)
        except StepError as exc:
            _stop(diag, exc.reason, (step - 1) * cfg.dt, str(exc))
            break
        pos += V * cfg.dt
        t = step * cfg.dt
        u = np.fft.irfft(v_new, grid.n)
        e = energy(v_new, u)
        v = v_new
        drift = energy_drift(e, e0)
        rel.update(v, t, e, drift)
        recording = step % cfg.diag_stride == 0 or step == cfg.n_steps or drift > cfg.energy_stop
        if recording or step in snaps:
            f = sp.analyze(u, grid)
        try:
            if recording:
                V = track(v, f, t, e, st.last_iterations)
            else:
                V = commoving_speed(model, grid, v, _peak_location(grid, u))
        except DegeneratePeakError as exc:
            _stop(diag, exc.reason, t, str(exc))
            break
        if step in snaps:
            diag.snapshots[snaps[step]] = f
        if drift > cfg.energy_stop:
            _stop(diag, "energy_drift_exceeded", t, f"relative energy drift {drift:.3e}")
            break
        if cfg.delta_stop is not None and recording and diag.delta:
            d = diag.delta[-1]
            if np.isfinite(d) and d < cfg.delta_stop:
                _stop(diag, "delta_threshold", t, f"singularity width {d:.3e}")
                break
    else:
        diag.stop_time = cfg.n_steps * cfg.dt
    diag.final = _from_rfft(grid, v)
    diag.last_reliable, diag.last_reliable_time = _from_rfft(grid, rel.good[0]), rel.good[1]
    return diag
