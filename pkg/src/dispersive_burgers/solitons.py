"""Solitary waves: closed forms, Newton-GMRES construction and continuation in alpha.

A solitary wave ``u = Q(x - c t)`` of the fKdV family solves

    P Q + c Q - Q^2 / 2 = 0,

where ``P`` is the dispersive multiplier (``|xi|^alpha`` or the Whitham
``p_S``).  For ``c = 1`` the fKdV profile generates all speeds by
``Q_c(z) = c Q_1(z c^(1/alpha))``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.signal import find_peaks
from scipy.sparse.linalg import LinearOperator, gmres

from . import spectral as sp
from .spectral import FourierSymbol, Grid, SpectralField

log = logging.getLogger(__name__)

GMRES_RTOL = 1e-10
GMRES_RESTART = 50
GMRES_MAXITER = 400


class SolitonError(RuntimeError):
    """Base class for solitary-wave construction failures."""


class NewtonStall(SolitonError):
    pass


class GMRESBreakdown(SolitonError):
    pass


class ConvergenceToZero(SolitonError):
    pass


class ContinuationError(SolitonError):
    def __init__(self, alpha: float, cause: Exception):
        super().__init__(f"continuation failed at alpha={alpha:.4f}: {cause}")
        self.alpha = alpha
        self.cause = cause


class NoHumpsFound(SolitonError):
    pass


@dataclass
class SolitonProfile:
    alpha: float
    c: float
    grid: Grid
    values: SpectralField
    residual_norm: float = 0.0
    provenance: str = "analytic"
    history: list = field(default_factory=list)

    @property
    def peak(self) -> float:
        return float(self.values.physical.max())

    def __call__(self, z) -> np.ndarray:
        """Spectral interpolation of the profile at arbitrary points."""
        return sp.evaluate_at(self.values, z)

    def mass(self) -> float:
        return sp.l2_norm(self.values) ** 2

    def energy(self) -> float:
        """``int (1/2)|D^(alpha/2) Q|^2 - Q^3/6``."""
        f = self.values
        quad = sp.h_alpha_seminorm(f, self.alpha) ** 2
        return 0.5 * quad - float(np.sum(f.physical**3)) * f.grid.dx / 6.0


# closed forms -------------------------------------------------------------


def bo_soliton(c: float) -> Callable[[np.ndarray], np.ndarray]:
    """Benjamin-Ono solitary wave ``4c / (1 + (c x)^2)``."""
    if not c > 0:
        raise ValueError("BO soliton needs c > 0")
    return lambda x: 4 * c / (1 + (c * np.asarray(x)) ** 2)


def fbbm_bo_soliton(c: float) -> Callable[..., np.ndarray]:
    """fBBM (alpha = 1) travelling wave ``4(c-1) / (1 + ct^2 (x - c t)^2)``, ``ct = 1 - 1/c``."""
    if not c > 1:
        raise ValueError("fBBM soliton needs c > 1")
    ct = 1 - 1 / c
    return lambda x, t=0.0: 4 * (c - 1) / (1 + ct**2 * (np.asarray(x) - c * t) ** 2)


def kdv_soliton(c: float) -> Callable[[np.ndarray], np.ndarray]:
    """Long-wave (KdV) approximation of the Whitham solitary wave, ``c + 1 < 0``."""
    if not c + 1 < 0:
        raise ValueError("KdV soliton of the Whitham scaling needs c + 1 < 0")
    k = math.sqrt(-1.5 * (c + 1))
    return lambda x: 3 * (c + 1) / np.cosh(k * np.asarray(x)) ** 2


def analytic_profile(c: float, grid: Grid) -> SolitonProfile:
    return SolitonProfile(1.0, c, grid, sp.analyze(bo_soliton(c)(grid.x), grid))


# residual and Newton ------------------------------------------------------


def dispersion_symbol(alpha: Optional[float] = None, whitham_beta: Optional[float] = None) -> FourierSymbol:
    if whitham_beta is not None:
        return sp.symbol_whitham_p(whitham_beta)
    return sp.symbol_fractional(alpha)


def soliton_residual(Q: SpectralField, p: FourierSymbol, c: float) -> SpectralField:
    """``(p + c) Q - Q^2/2`` as a field."""
    lin = (p.on_grid(Q.grid).real + c) * Q.spectral
    sq = sp.analyze(Q.physical**2, Q.grid).spectral
    return SpectralField.from_spectral(Q.grid, lin - 0.5 * sq)


class _Operators:
    """Residual, Jacobian action and diagonal preconditioner in physical space."""

    def __init__(self, grid: Grid, p: FourierSymbol, c: float):
        self.n = grid.n
        self.d = p.on_grid(grid, real_fft=True).real + c
        if np.any(self.d == 0):
            raise SolitonError("p(xi) + c vanishes on the grid; linear part is singular")

    def lin(self, q):
        return np.fft.irfft(self.d * np.fft.rfft(q), self.n)

    def residual(self, q):
        return self.lin(q) - 0.5 * q * q

    def jac(self, q):
        return lambda x: self.lin(x) - q * x

    def precond(self, x):
        return np.fft.irfft(np.fft.rfft(x) / self.d, self.n)


def newton_gmres_soliton(initial: SpectralField, p: FourierSymbol, c: float, tol: float = 1e-8,
                         max_iter: int = 30, alpha: Optional[float] = None,
                         provenance: str = "newton") -> SolitonProfile:
    """Solve ``(p + c) Q - Q^2/2 = 0`` by Newton's method with GMRES inner solves.

    The Jacobian is only applied, never formed:
    ``Jac X = (p + c) X - Q X``.  GMRES runs right-preconditioned by
    ``1/(p + c)`` so its residual is the true one.
    """
    grid = initial.grid
    ops = _Operators(grid, p, c)
    q = np.array(initial.physical, dtype=float)
    if not np.any(q):
        raise ConvergenceToZero("initial iterate is identically zero")
    n = grid.n
    history = []
    r = ops.residual(q)
    rn = float(np.max(np.abs(r)))
    history.append(rn)
    best, since_best = rn, 0
    it = 0
    while rn >= tol:
        if it >= max_iter:
            raise NewtonStall(f"no convergence in {max_iter} Newton steps (|F|={rn:.3e})")
        J = ops.jac(q)
        A = LinearOperator((n, n), matvec=lambda y: J(ops.precond(y)), dtype=float)
        y, info = gmres(A, r, rtol=GMRES_RTOL, atol=0.0, restart=GMRES_RESTART,
                        maxiter=max(1, GMRES_MAXITER // GMRES_RESTART))
        if info < 0 or not np.all(np.isfinite(y)):
            raise GMRESBreakdown(f"GMRES failed (info={info})")
        if info > 0:
            log.debug("GMRES reached its iteration limit; taking the inexact step")
        q = q - ops.precond(y)
        it += 1
        r = ops.residual(q)
        rn = float(np.max(np.abs(r)))
        history.append(rn)
        if not np.isfinite(rn):
            raise NewtonStall("Newton iterate became non-finite")
        if rn < best:
            best, since_best = rn, 0
        else:
            since_best += 1
            if since_best >= 3:
                raise NewtonStall(f"residual did not decrease in 3 iterations (|F|={rn:.3e})")
    if np.max(np.abs(q)) < 1e-6:
        raise ConvergenceToZero("Newton converged to the trivial solution")
    a = alpha if alpha is not None else p.params.get("s", math.nan)
    return SolitonProfile(a, c, grid, sp.analyze(q, grid), rn, provenance, history)


# continuation ---------------------------------------------------------------


def default_soliton_grid(alpha: float, scale: str = "full") -> Grid:
    n = 2**14 if alpha >= 0.6 else 2**18
    if scale == "desk" and alpha < 0.6:
        n = 2**16
    return Grid(n, 100.0)


def alpha_path(alpha_target: float, coarse: float = 0.1, fine: float = 0.01) -> list:
    """Continuation stations from 1 down to ``alpha_target``."""
    if not (0.4 - 1e-12 <= alpha_target <= 1.0):
        raise ValueError("continuation is only supported for 0.4 <= alpha <= 1")
    path = [1.0]
    a = 1.0
    while a - coarse >= max(0.6, alpha_target) - 1e-9:
        a = round(a - coarse, 10)
        path.append(a)
    while a - fine >= alpha_target - 1e-9:
        a = round(a - fine, 10)
        path.append(a)
    if abs(path[-1] - alpha_target) > 1e-9:
        path.append(alpha_target)
    return path


def _regrid(f: SpectralField, grid: Grid) -> SpectralField:
    """Spectral zero-padding/truncation onto a grid with the same ``w``."""
    if grid.w != f.grid.w:
        raise ValueError("regridding requires equal domain scales")
    if grid.n == f.grid.n:
        return f
    v = np.fft.rfft(f.physical) / f.grid.n
    m = grid.n // 2 + 1
    out = np.zeros(m, dtype=complex)
    k = min(m, v.size)
    out[:k] = v[:k]
    if grid.n < f.grid.n:
        out[-1] = out[-1].real
    return sp.analyze(np.fft.irfft(out * grid.n, grid.n), grid)


def continue_in_alpha(alpha_target: float, grid: Optional[Grid] = None, c: float = 1.0,
                      tol: float = 1e-8, min_step: float = 1e-3, scale: str = "full",
                      callback: Optional[Callable[[SolitonProfile], None]] = None) -> SolitonProfile:
    """Follow the c = 1 solitary wave from the BO soliton down to ``alpha_target``.

    Steps of 0.1 down to 0.6 and 0.01 below that; a failed solve halves the
    step and retries, down to ``min_step``.
    """
    path = alpha_path(alpha_target)
    g = grid or default_soliton_grid(alpha_target, scale)
    prof = SolitonProfile(1.0, c, g, sp.analyze(bo_soliton(c)(g.x), g))
    if len(path) == 1:
        return prof
    prof = newton_gmres_soliton(prof.values, sp.symbol_fractional(1.0), c, tol, alpha=1.0,
                                provenance="continuation")
    a_cur = 1.0
    for a_next in path[1:]:
        step = a_cur - a_next
        while a_cur - a_next > 1e-12:
            a_try = max(a_next, round(a_cur - step, 12))
            try:
                new = newton_gmres_soliton(prof.values, sp.symbol_fractional(a_try), c, tol,
                                           alpha=a_try, provenance="continuation")
            except SolitonError as exc:
                step /= 2
                if step < min_step:
                    raise ContinuationError(a_try, exc) from exc
                log.info("continuation: refining step to %.4g at alpha=%.4f", step, a_cur)
                continue
            prof, a_cur = new, a_try
            if callback:
                callback(prof)
    return prof


def rescale_soliton(Q1: SolitonProfile, c: float, grid: Optional[Grid] = None,
                    x0: float = 0.0) -> SpectralField:
    """``Q_c(z) = c Q_1(c^(1/alpha) (z - x0))`` sampled on ``grid``."""
    if not c > 0:
        raise ValueError("rescaling needs c > 0")
    g = grid or Q1.grid
    if c == 1 and g == Q1.grid and x0 == 0:
        return Q1.values
    z = _wrap(g.x - x0, g) * c ** (1.0 / Q1.alpha)
    vals = c * profile_at(Q1, z)
    return sp.analyze(vals, g)


def soliton_family_scan(alphas: Sequence[float], c: float = 1.0, grid: Optional[Grid] = None,
                        tol: float = 1e-8, scale: str = "full") -> list:
    """Rows ``(alpha, max, mass, energy)`` along a single continuation path."""
    alphas = sorted(alphas, reverse=True)
    rows = []
    wanted = {round(a, 10) for a in alphas}
    target = min(alphas)
    g = grid or default_soliton_grid(target, scale)
    if 1.0 in wanted:
        bo = analytic_profile(c, g) if len(alphas) == 1 else newton_gmres_soliton(
            sp.analyze(bo_soliton(c)(g.x), g), sp.symbol_fractional(1.0), c, tol, alpha=1.0)
        rows.append((1.0, bo.peak, bo.mass(), bo.energy()))
    if target < 1.0:
        extra = [a for a in alphas if a < 1.0]

        def cb(prof):
            a = round(prof.alpha, 10)
            if a in wanted and a in {round(e, 10) for e in extra}:
                rows.append((prof.alpha, prof.peak, prof.mass(), prof.energy()))

        # make sure every requested alpha is a station of the path
        _continue_through(extra, g, c, tol, cb)
    rows.sort(key=lambda r: r[0])
    return rows


def _continue_through(alphas, grid, c, tol, cb):
    stations = sorted(set(alpha_path(min(alphas))) | {round(a, 10) for a in alphas}, reverse=True)
    prof = newton_gmres_soliton(sp.analyze(bo_soliton(c)(grid.x), grid), sp.symbol_fractional(1.0),
                                c, tol, alpha=1.0)
    for a in stations[1:]:
        prof = newton_gmres_soliton(prof.values, sp.symbol_fractional(a), c, tol, alpha=a,
                                    provenance="continuation")
        cb(prof)


def family_is_monotone(rows) -> dict:
    rows = sorted(rows, key=lambda r: r[0])
    mass = [r[2] for r in rows]
    energy = [r[3] for r in rows]
    return {
        "mass_increasing": all(b > a for a, b in zip(mass, mass[1:])),
        "energy_decreasing": all(b < a for a, b in zip(energy, energy[1:])),
    }


# hump fitting -------------------------------------------------------------------


@dataclass
class SolitonFamily:
    """Map a speed to a profile centred at ``x0``, and a hump height to a speed."""

    base: SolitonProfile
    kind: str = "fkdv"

    def speed_for_peak(self, peak: float) -> float:
        q0 = self.base.peak
        if self.kind == "fbbm":
            # u = c Q_{1-1/c}  =>  peak = (c - 1) Q_1(0)
            return 1.0 + peak / q0
        return peak / q0

    def profile(self, c: float, x: np.ndarray, x0: float = 0.0) -> np.ndarray:
        a = self.base.alpha
        if self.kind == "fbbm":
            ct = 1 - 1 / c
            return c * ct * self._base_at((x - x0) * ct ** (1 / a))
        return c * self._base_at((x - x0) * c ** (1 / a))

    def _base_at(self, z):
        return profile_at(self.base, z)


def profile_at(prof: SolitonProfile, z) -> np.ndarray:
    """Evaluate a profile anywhere, continuing it by its algebraic tail off its own domain."""
    z = np.asarray(z, dtype=float)
    edge = prof.grid.w * np.pi
    out = np.empty_like(z)
    inside = np.abs(z) < edge
    out[inside] = prof(z[inside])
    if np.any(~inside):
        q_edge = float(prof(np.array([edge * (1 - 1e-9)]))[0])
        out[~inside] = q_edge * (edge / np.abs(z[~inside])) ** (1 + prof.alpha)
    return out


@dataclass
class HumpFit:
    location: float
    c_fit: float
    misfit: float
    peak: float


def detect_humps(u: np.ndarray, rel_height: float = 0.1, min_separation: int = 32) -> np.ndarray:
    top = float(np.max(u))
    if top <= 0:
        return np.array([], dtype=int)
    idx, _ = find_peaks(u, height=rel_height * top, distance=min_separation)
    return idx


def fit_solitons_to_humps(f: SpectralField, family: SolitonFamily, rel_height: float = 0.1,
                          min_separation: int = 32, window_widths: float = 10.0) -> list:
    """Match a rescaled, shifted soliton to every isolated hump of ``f``."""
    g = f.grid
    idx = detect_humps(f.physical, rel_height, min_separation)
    if idx.size == 0:
        raise NoHumpsFound("no local maxima above the prominence threshold")
    out = []
    for j in idx:
        loc = _local_peak(g, f.physical, j)
        peak = float(sp.evaluate_at(f, [loc])[0])
        c = family.speed_for_peak(peak)
        width = _width(family, c)
        sel = np.abs(_wrap(g.x - loc, g)) <= 0.5 * window_widths * width
        if not np.any(sel):
            sel = np.abs(_wrap(g.x - loc, g)) <= g.dx
        xs = loc + _wrap(g.x[sel] - loc, g)
        model = family.profile(c, xs, loc)
        misfit = float(np.max(np.abs(f.physical[sel] - model)))
        out.append(HumpFit(loc, c, misfit, peak))
    return out


def _width(family: SolitonFamily, c: float) -> float:
    a = family.base.alpha
    if family.kind == "fbbm":
        return (1 - 1 / c) ** (-1 / a)
    return c ** (-1 / a)


def _wrap(d: np.ndarray, g: Grid) -> np.ndarray:
    L = g.length
    return (d + L / 2) % L - L / 2


def _local_peak(g: Grid, u: np.ndarray, j: int) -> float:
    um, u0, up = u[j - 1], u[j], u[(j + 1) % g.n]
    den = um - 2 * u0 + up
    off = 0.0 if den == 0 else 0.5 * (um - up) / den
    return float(g.x[j] + off * g.dx)


def write_profile(path_csv, path_meta, prof: SolitonProfile) -> None:
    from .evolution import write_snapshot_csv
    write_snapshot_csv(path_csv, prof.values, column="Q")
    with open(path_meta, "w") as fh:
        fh.write(f"alpha={prof.alpha!r}\nc={prof.c!r}\nresidual_norm={prof.residual_norm!r}\n"
                 f"w={prof.grid.w!r}\nn={prof.grid.n}\nprovenance={prof.provenance}\n")


def read_profile(path_csv, path_meta) -> SolitonProfile:
    from .evolution import read_snapshot_csv
    meta = {}
    with open(path_meta) as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                k, _, v = line.partition("=")
                meta[k.strip()] = v.strip()
    f = read_snapshot_csv(path_csv, float(meta["w"]))
    return SolitonProfile(float(meta["alpha"]), float(meta["c"]), f.grid, f,
                          float(meta["residual_norm"]), meta.get("provenance", "newton"))
