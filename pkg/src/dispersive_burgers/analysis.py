"""Blow-up diagnostics.

Fits of Fourier coefficients to ``|u_k| ~ xi^-(mu+1) exp(-delta xi)``
(singularity tracing), fits of norms to ``kappa1 ln(t* - t) + kappa2`` with
unknown ``t*``, the self-similar scaling predictions, postprocessing of the
dynamic rescaling, and the log-log regression of blow-up times against the
small parameter.

The exponent ``mu`` is much less reliable than ``delta``; reports carry a
caveat to that effect.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import optimize, stats

from . import spectral as sp
from .spectral import SpectralField

LOG_AMP_FLOOR = 1e-8  # model uncertainty of ln|u_k| far above the roundoff level
MU_CAVEAT = "mu+1 is less reliable than delta; treat it as indicative only"


class AnalysisError(ValueError):
    pass


# singularity tracing -------------------------------------------------------


@dataclass(frozen=True)
class AsymptoticFit:
    delta: float
    mu_plus_1: float
    offset: float
    k_window: tuple
    rms_residual: float

    def report(self) -> dict:
        return {"delta": self.delta, "mu_plus_1": self.mu_plus_1, "offset": self.offset,
                "window": list(self.k_window), "residual": self.rms_residual, "caveat": MU_CAVEAT}


def fit_fourier_asymptotics(f: SpectralField, noise_floor: float = 1e-13,
                            min_modes: int = 32) -> AsymptoticFit:
    """Least-squares fit of ``ln|u_k|`` to ``offset - (mu+1) ln xi - delta xi``.

    Only positive wavenumbers between the median resolved index and the last
    index above ``noise_floor`` enter the fit.  Each mode is weighted by the
    inverse uncertainty of its logarithm, ``sqrt(s0^2 + (e/|u_k|)^2)`` with
    ``e`` the FFT roundoff level, so coefficients just above the floor do not
    dominate.
    """
    g = f.grid
    half = g.n // 2
    amp = np.abs(f.spectral[1:half])
    k = np.arange(1, half)
    above = np.nonzero(amp > noise_floor)[0]
    if above.size == 0:
        raise AnalysisError("no Fourier coefficients above the noise floor")
    k_last = int(k[above[-1]])
    k_first = max(1, int(np.median(k[:k_last])))
    sel = (k >= k_first) & (k <= k_last) & (amp > noise_floor)
    if np.count_nonzero(sel) < min_modes:
        raise AnalysisError(f"only {np.count_nonzero(sel)} usable modes in the fit window (need {min_modes})")
    xi = k[sel] / g.w
    y = np.log(amp[sel])
    roundoff = np.finfo(float).eps * float(np.sqrt(np.mean(f.physical**2)))
    wt = 1.0 / np.sqrt(LOG_AMP_FLOOR**2 + (roundoff / amp[sel]) ** 2)
    A = np.column_stack([np.ones_like(xi), np.log(xi), xi])
    coef, *_ = np.linalg.lstsq(A * wt[:, None], y * wt, rcond=None)
    rms = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return AsymptoticFit(delta=float(-coef[2]), mu_plus_1=float(-coef[1]), offset=float(coef[0]),
                         k_window=(k_first, k_last), rms_residual=rms)


def synthetic_field(grid: sp.Grid, delta: float, mu_plus_1: float, amplitude: float = 1.0) -> SpectralField:
    """Field whose coefficients follow the asymptotic model exactly for k >= 1."""
    xi = np.abs(grid.xi)
    c = np.zeros(grid.n, dtype=complex)
    nz = xi > 0
    c[nz] = amplitude * xi[nz] ** (-mu_plus_1) * np.exp(-delta * xi[nz])
    c[grid.n // 2] = 0.0  # drop the unpaired Nyquist mode
    return SpectralField.from_spectral(grid, c)


def singularity_time_from_delta(times: Sequence[float], deltas, threshold: float = 1e-6) -> float:
    """Time where ``delta(t)`` first falls to ``threshold``, linearly interpolated."""
    t = np.asarray(times, dtype=float)
    d = np.array([getattr(x, "delta", x) for x in deltas], dtype=float)
    if t.shape != d.shape:
        raise AnalysisError("times and deltas differ in length")
    for j in range(1, t.size):
        if not (np.isfinite(d[j - 1]) and np.isfinite(d[j])):
            continue
        if d[j - 1] > threshold >= d[j]:
            return float(t[j - 1] + (threshold - d[j - 1]) * (t[j] - t[j - 1]) / (d[j] - d[j - 1]))
    raise AnalysisError(f"delta never crosses {threshold:g} from above")


# norm fits -------------------------------------------------------------------


@dataclass(frozen=True)
class BlowupFit:
    t_star: float
    kappa1: float
    kappa2: float
    window: tuple
    rms_residual: float
    at_boundary: bool = False

    def report(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        d["residual"] = d.pop("rms_residual")
        return d


def _linear_fit(lt: np.ndarray, y: np.ndarray):
    A = np.column_stack([lt, np.ones_like(lt)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    r = A @ coef - y
    return coef, float(np.sqrt(np.mean(r * r)))


def _check_increasing(v: np.ndarray, slack: float, block: int = 10) -> None:
    # compare medians of consecutive blocks so that sample noise does not count as a dip
    m = v.size // block
    trend = np.median(v[: m * block].reshape(m, block), axis=1) if m >= 2 else v
    run_max = np.maximum.accumulate(trend)
    if np.any(trend < (1 - slack) * run_max) or v[-1] <= v[0]:
        raise AnalysisError("values are not increasing over the fit window")


def fit_blowup_norms(times: Sequence[float], values: Sequence[float], window: Sequence[float],
                     min_samples: int = 20, monotone_slack: float = 0.05) -> BlowupFit:
    """Fit ``ln v = kappa1 ln(t* - t) + kappa2`` over ``window``.

    For fixed ``t*`` the coefficients follow from linear least squares, so the
    residual is minimised over ``t*`` alone, on ``(t_hi, t_hi + 10 (t_hi - t_lo)]``.
    Growth is checked on medians of blocks of 10 samples; a relative dip of up
    to ``monotone_slack`` below their running maximum is tolerated as noise.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    lo, hi = float(window[0]), float(window[1])
    sel = (t >= lo) & (t <= hi)
    ts, vs = t[sel], v[sel]
    if ts.size < min_samples:
        raise AnalysisError(f"fit window holds {ts.size} samples (need {min_samples})")
    if np.any(vs <= 0) or not np.all(np.isfinite(vs)):
        raise AnalysisError("values must be positive and finite")
    _check_increasing(vs, monotone_slack)
    t_lo, t_hi = float(ts[0]), float(ts[-1])
    span = t_hi - t_lo
    y = np.log(vs)

    def resid(s):
        # s = log(t* - t_hi)
        return _linear_fit(np.log(t_hi + math.exp(s) - ts), y)[1]

    s_lo, s_hi = math.log(span * 1e-6), math.log(10 * span)
    grid = np.linspace(s_lo, s_hi, 121)
    r = np.array([resid(s) for s in grid])
    j = int(np.argmin(r))
    a, b = grid[max(j - 1, 0)], grid[min(j + 1, grid.size - 1)]
    if a == b:
        s_best = a
    else:
        res = optimize.minimize_scalar(resid, bounds=(a, b), method="bounded",
                                       options={"xatol": 1e-12, "maxiter": 500})
        s_best = res.x if res.fun <= r[j] else grid[j]
    t_star = t_hi + math.exp(s_best)
    coef, rms = _linear_fit(np.log(t_star - ts), y)
    at_boundary = j == 0 or j == grid.size - 1
    return BlowupFit(float(t_star), float(coef[0]), float(coef[1]), (t_lo, t_hi), rms, at_boundary)


# scaling predictions -----------------------------------------------------------


@dataclass(frozen=True)
class ScalingPrediction:
    regime: str
    exponent_grad_l2_sq: float
    exponent_sup: float
    gamma: Optional[float] = None


def predicted_exponents(alpha: float, regime: str = "supercritical_exponential",
                        gamma: Optional[float] = None) -> ScalingPrediction:
    """Blow-up rates: ``||u_x||^2 ~ (t*-t)^-e_grad`` and ``||u||_inf ~ (t*-t)^-e_sup``."""
    if not 0 < alpha < 1:
        raise AnalysisError("scaling predictions need 0 < alpha < 1")
    if regime == "critical":
        if gamma is None or not gamma > 1 / (1 + alpha):
            raise AnalysisError("critical regime needs gamma > 1/(1 + alpha)")
        d = 1 + alpha - 1 / gamma
    elif regime == "supercritical_exponential":
        d = 1 + alpha
    else:
        raise AnalysisError(f"unknown regime {regime!r}")
    return ScalingPrediction(regime, (2 * alpha + 1) / d, alpha / d, gamma)


# rescaling postprocessing -------------------------------------------------------


def scaling_factor_L(run, alpha: float) -> np.ndarray:
    """``L(t) = (||u_x(0)|| / ||u_x(t)||)^(1/(alpha + 1/2))``.

    ``run`` is a RunDiagnostics or a sequence of gradient norms.
    """
    g = np.asarray(getattr(run, "grad_l2", run), dtype=float)
    if g.size == 0 or np.any(g <= 0):
        raise AnalysisError("gradient norms must be positive")
    return (g[0] / g) ** (1.0 / (alpha + 0.5))


def rescaling_rate_a(f: SpectralField, alpha: float) -> float:
    """``a = int U^2 U_yyy dy / ((2 alpha + 1) ||U_y||^2)``."""
    g = f.grid
    gy = sp.grad_l2_norm(f) ** 2
    if gy == 0:
        raise AnalysisError("field has zero gradient")
    v = np.fft.rfft(f.physical)
    v[-1] = 0.0
    xi = np.arange(v.size) / g.w
    u3 = np.fft.irfft((1j * xi) ** 3 * v, g.n)
    num = float(np.sum(f.physical**2 * u3)) * g.dx
    return num / ((2 * alpha + 1) * gy)


def refine_peak(f: SpectralField, iters: int = 8) -> tuple:
    """Location and value of the global maximum via Newton on the spectral derivative."""
    g = f.grid
    from .evolution import _peak_location
    x = _peak_location(g, f.physical)
    c = f.spectral.copy()
    c[g.n // 2] = 0.0
    d1, d2 = 1j * g.xi * c, -(g.xi**2) * c
    for _ in range(iters):
        a = sp.fourier_series_eval(g, d1, np.array([x]))[0]
        b = sp.fourier_series_eval(g, d2, np.array([x]))[0]
        if b >= 0:
            break
        step = a / b
        if abs(step) > g.dx:
            break
        x -= step
        if abs(step) < 1e-15 * max(1.0, abs(x)):
            break
    val = float(sp.fourier_series_eval(g, f.spectral, np.array([x]))[0])
    return float(x), val


def peak_speed_v(f: SpectralField, alpha: float, U0: float, degenerate_tol: float = 1e-12) -> float:
    """``v = U0 + (D^alpha U_y)(y_m) / U_yy(y_m)`` at the tracked maximum ``y_m``."""
    g = f.grid
    y_m, _ = refine_peak(f)
    c = f.spectral.copy()
    c[g.n // 2] = 0.0
    xi = g.xi
    num = sp._abs_pow(xi, alpha) * 1j * xi * c
    den = -(xi**2) * c
    a = sp.fourier_series_eval(g, num, np.array([y_m]))[0]
    b = sp.fourier_series_eval(g, den, np.array([y_m]))[0]
    scale = max(1.0, float(np.max(np.abs(f.physical))))
    if abs(b) < degenerate_tol * scale:
        raise AnalysisError(f"degenerate peak: U_yy = {b:.3e}")
    return float(U0 + a / b)


@dataclass(frozen=True)
class ProfileFit:
    L: float
    x_m: float
    misfit: float


def blowup_profile_fit(f: SpectralField, soliton, alpha: float, dominance: float = 0.5) -> ProfileFit:
    """Compare ``f`` with ``L^-alpha Q1((x - x_m)/L)``, ``L`` read off the maximum."""
    from .solitons import detect_humps, profile_at
    u = f.physical
    if not np.max(u) > 0:
        raise AnalysisError("no positive peak")
    humps = detect_humps(u)
    if humps.size > 1:
        h = np.sort(u[humps])
        if h[-2] > dominance * h[-1]:
            raise AnalysisError("no dominant peak")
    x_m, top = refine_peak(f)
    q0 = refine_peak(soliton.values)[1]
    L = (q0 / top) ** (1.0 / alpha)
    g = f.grid
    d = (g.x - x_m + g.length / 2) % g.length - g.length / 2
    sel = np.abs(d) <= 10 * L
    if not np.any(sel):
        sel = np.abs(d) <= g.dx
    model = L ** (-alpha) * profile_at(soliton, d[sel] / L)
    return ProfileFit(float(L), float(x_m), float(np.max(np.abs(u[sel] - model))))


# epsilon regression -------------------------------------------------------------


@dataclass(frozen=True)
class Regression:
    a: float
    b: float
    sigma_a: float
    r: float
    rms_residual: float


def loglog_regression(eps_list: Sequence[float], tstar_list: Sequence[float]) -> Regression:
    """OLS fit of ``log10 t* = a log10 eps + b``; ``r`` is the Pearson coefficient."""
    e = np.asarray(eps_list, dtype=float)
    t = np.asarray(tstar_list, dtype=float)
    if e.size < 3 or e.size != t.size:
        raise AnalysisError("regression needs at least 3 (eps, t*) pairs")
    if np.any(e <= 0) or np.any(t <= 0):
        raise AnalysisError("eps and t* must be positive")
    x, y = np.log10(e), np.log10(t)
    res = stats.linregress(x, y)
    rms = float(np.sqrt(np.mean((res.slope * x + res.intercept - y) ** 2)))
    r = res.rvalue if np.isfinite(res.rvalue) else math.copysign(1.0, res.slope)
    return Regression(float(res.slope), float(res.intercept), float(res.stderr), float(r), rms)
