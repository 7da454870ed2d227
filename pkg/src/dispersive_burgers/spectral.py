"""Periodic Fourier grids, transforms, multipliers and spectral quadrature.

A field on ``Grid(n, w)`` lives on ``x in w*[-pi, pi)``.  Coefficients are
stored in FFT ordering and normalised so that

    u(x) = sum_k uhat_k exp(i xi_k x),     xi_k = k / w,

i.e. ``uhat_k ~ (1 / (2 pi w)) * int u(x) exp(-i xi_k x) dx``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

REAL_TOL = 1e-10


class SpectralError(ValueError):
    """Invalid grid, transform or symbol input."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with ``n`` nodes on ``w*[-pi, pi)``."""

    n: int
    w: float

    def __post_init__(self):
        n = self.n
        if int(n) != n or n < 8 or (int(n) & (int(n) - 1)) != 0:
            raise SpectralError(f"n must be a power of two >= 8, got {n!r}")
        if not (np.isfinite(self.w) and self.w > 0):
            raise SpectralError(f"domain scale w must be positive, got {self.w!r}")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "w", float(self.w))

    @property
    def length(self) -> float:
        return 2 * np.pi * self.w

    @property
    def dx(self) -> float:
        return self.length / self.n

    @cached_property
    def x(self) -> np.ndarray:
        return self.w * (-np.pi + 2 * np.pi * np.arange(self.n) / self.n)

    @cached_property
    def k(self) -> np.ndarray:
        """Integer mode numbers in FFT ordering (0, 1, ..., n/2-1, -n/2, ..., -1)."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n).astype(int)

    @cached_property
    def xi(self) -> np.ndarray:
        return self.k / self.w

    @cached_property
    def xi_r(self) -> np.ndarray:
        """Nonnegative wavenumbers matching ``numpy.fft.rfft`` output."""
        return np.arange(self.n // 2 + 1) / self.w

    @cached_property
    def _phase(self) -> np.ndarray:
        # exp(-i xi_k x_0) with x_0 = -pi w
        return np.where(self.k % 2 == 0, 1.0, -1.0)

    def nyquist_index(self) -> int:
        return self.n // 2


def make_grid(n: int, w: float) -> Grid:
    return Grid(n, w)


@dataclass(frozen=True)
class SpectralField:
    """Real samples on a grid together with their Fourier coefficients."""

    grid: Grid
    physical: np.ndarray
    spectral: np.ndarray

    def __post_init__(self):
        self.physical.setflags(write=False)
        self.spectral.setflags(write=False)

    @classmethod
    def from_spectral(cls, grid: Grid, coeffs) -> "SpectralField":
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != (grid.n,):
            raise SpectralError(f"expected {grid.n} coefficients, got {coeffs.shape}")
        return cls(grid, _synthesize(coeffs * grid._phase), coeffs.copy())

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return analyze(self.physical + other.physical, self.grid)

    def __mul__(self, s: float) -> "SpectralField":
        return SpectralField(self.grid, self.physical * s, self.spectral * s)

    __rmul__ = __mul__

    def max_norm(self) -> float:
        return float(np.max(np.abs(self.physical)))


def _synthesize(d: np.ndarray, tol: float = REAL_TOL) -> np.ndarray:
    """Inverse DFT of coefficients that must be Hermitian.

    Roundoff breaks the symmetry slightly, and a derivative symbol amplifies
    that noise at high wavenumbers; the skew part is checked per coefficient
    against the largest coefficient and then dropped.
    """
    partner = np.conj(d[(-np.arange(d.size)) % d.size])
    skew = 0.5 * np.max(np.abs(d - partner)) if d.size else 0.0
    top = float(np.max(np.abs(d))) if d.size else 0.0
    if skew > tol * max(top, 1.0):
        raise SpectralError(f"coefficients are not Hermitian (skew {skew:.3e}); symbol breaks realness")
    return np.ascontiguousarray((d.size * np.fft.ifft(0.5 * (d + partner))).real)


def analyze(samples, grid: Grid) -> SpectralField:
    u = np.asarray(samples, dtype=float)
    if u.shape != (grid.n,):
        raise SpectralError(f"expected {grid.n} samples, got shape {u.shape}")
    uhat = np.fft.fft(u) * grid._phase / grid.n
    return SpectralField(grid, u.copy(), uhat)


def synthesize(f: SpectralField) -> np.ndarray:
    return _synthesize(f.spectral * f.grid._phase)


@dataclass(frozen=True)
class FourierSymbol:
    """A Fourier multiplier ``xi -> m(xi)``.

    ``parity`` is ``"odd"`` or ``"even"`` (or ``None`` if neither); it decides
    how the unpaired Nyquist mode is treated on a grid.
    """

    func: Callable[[np.ndarray], np.ndarray]
    parity: Optional[str] = None
    name: str = ""
    params: dict = field(default_factory=dict)

    def __call__(self, xi) -> np.ndarray:
        return self.func(np.asarray(xi, dtype=float))

    def on_grid(self, grid: Grid, real_fft: bool = False) -> np.ndarray:
        xi = grid.xi_r if real_fft else grid.xi
        m = np.asarray(self(xi), dtype=complex)
        if not np.all(np.isfinite(m)):
            raise SpectralError(f"symbol {self.name or '?'} is not finite on the grid")
        nyq = grid.n // 2
        if self.parity == "odd":
            m[nyq] = 0.0
        elif self.parity == "even" and not real_fft:
            # -n/2 sits at index n/2; evaluate at +n/(2w) instead
            m[nyq] = self(np.array([nyq / grid.w]))[0]
        return m

    def __mul__(self, other: "FourierSymbol") -> "FourierSymbol":
        parity = None
        if self.parity and other.parity:
            parity = "even" if self.parity == other.parity else "odd"
        return FourierSymbol(lambda xi: self(xi) * other(xi), parity, f"{self.name}*{other.name}")


def apply_symbol(f: SpectralField, symbol: FourierSymbol) -> SpectralField:
    return SpectralField.from_spectral(f.grid, f.spectral * symbol.on_grid(f.grid))


def _abs_pow(xi: np.ndarray, p: float) -> np.ndarray:
    a = np.abs(xi)
    out = np.zeros_like(a)
    nz = a > 0
    out[nz] = a[nz] ** p
    if p == 0:
        out[~nz] = 1.0
    return out


def symbol_derivative() -> FourierSymbol:
    return FourierSymbol(lambda xi: 1j * xi, "odd", "d/dx")


def symbol_fractional(s: float) -> FourierSymbol:
    """``D^s``: multiplier ``|xi|^s`` (value 0 at the origin for s > 0)."""
    if s < 0:
        raise SpectralError("D^s needs s >= 0 on a periodic grid")
    return FourierSymbol(lambda xi: _abs_pow(xi, s), "even", f"|xi|^{s}", {"s": s})


def symbol_fkdv_dispersion(alpha: float) -> FourierSymbol:
    """``i xi |xi|^alpha``, continuous at 0 for ``alpha > -1``."""
    if not alpha > -1:
        raise SpectralError(f"alpha must exceed -1, got {alpha}")

    def m(xi):
        a = np.abs(xi)
        out = np.zeros(xi.shape, dtype=complex)
        nz = a > 0
        out[nz] = 1j * np.sign(xi[nz]) * a[nz] ** (1.0 + alpha)
        return out

    return FourierSymbol(m, "odd", f"i xi |xi|^{alpha}", {"alpha": alpha})


def whitham_phase_speed(xi, beta: float = 0.0) -> np.ndarray:
    """``p(xi) = (1 + beta xi^2)^(1/2) (tanh(xi)/xi)^(1/2)`` with ``p(0) = 1``."""
    xi = np.asarray(xi, dtype=float)
    ratio = np.ones_like(xi)
    nz = xi != 0
    ratio[nz] = np.tanh(xi[nz]) / xi[nz]
    return np.sqrt((1.0 + beta * xi**2) * ratio)


def symbol_whitham_p(beta: float = 0.0) -> FourierSymbol:
    if beta < 0:
        raise SpectralError(f"surface tension must be nonnegative, got {beta}")
    return FourierSymbol(lambda xi: whitham_phase_speed(xi, beta), "even", "p_S", {"beta": beta})


def symbol_whitham(beta: float = 0.0) -> FourierSymbol:
    """Dispersive multiplier ``i xi p_S(xi)`` of the Whitham equation."""
    if beta < 0:
        raise SpectralError(f"surface tension must be nonnegative, got {beta}")
    return FourierSymbol(
        lambda xi: 1j * xi * whitham_phase_speed(xi, beta), "odd", "i xi p_S", {"beta": beta}
    )


def symbol_bbm_prefactor(alpha: float, eps: float = 1.0) -> FourierSymbol:
    """``1 / (1 + eps |xi|^alpha)``."""
    if not alpha > 0:
        raise SpectralError(f"BBM prefactor needs alpha > 0, got {alpha}")
    if not eps > 0:
        raise SpectralError(f"BBM prefactor needs eps > 0, got {eps}")
    return FourierSymbol(
        lambda xi: 1.0 / (1.0 + eps * _abs_pow(xi, alpha)),
        "even",
        f"1/(1+{eps}|xi|^{alpha})",
        {"alpha": alpha, "eps": eps},
    )


def dealias_two_thirds(f: SpectralField) -> SpectralField:
    """Zero every mode with ``|k| >= n/3``."""
    return SpectralField.from_spectral(f.grid, f.spectral * two_thirds_mask(f.grid))


def two_thirds_mask(grid: Grid, real_fft: bool = False) -> np.ndarray:
    k = np.arange(grid.n // 2 + 1) if real_fft else grid.k
    return (3 * np.abs(k) < grid.n).astype(float)


def resolution_floor(f: SpectralField) -> float:
    """Largest coefficient among the top 10% of wavenumbers, relative to the largest one."""
    a = np.abs(f.spectral)
    top = a.max()
    if top == 0:
        raise SpectralError("resolution floor undefined for the zero field")
    high = np.abs(f.grid.k) >= 0.9 * (f.grid.n // 2)
    return float(a[high].max() / top)


# spectral quadrature ----------------------------------------------------


def integrate(f: SpectralField) -> float:
    return float(f.spectral[0].real * f.grid.length)


def _parseval(f: SpectralField, weight) -> float:
    return float(f.grid.length * np.sum(weight * np.abs(f.spectral) ** 2))


def l2_norm(f: SpectralField) -> float:
    return np.sqrt(_parseval(f, 1.0))


def grad_l2_norm(f: SpectralField) -> float:
    return np.sqrt(_parseval(f, f.grid.xi**2))


def h_alpha_seminorm(f: SpectralField, alpha: float) -> float:
    """``||D^(alpha/2) u||_2``."""
    return np.sqrt(_parseval(f, _abs_pow(f.grid.xi, alpha)))


def multiplier_quadratic_form(f: SpectralField, weight: np.ndarray) -> float:
    """``int u (M u) dx`` for a real even multiplier ``M`` given on the grid."""
    return _parseval(f, np.real(weight))


def evaluate_at(f: SpectralField, points) -> np.ndarray:
    """Trigonometric interpolation of ``f`` at arbitrary points."""
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    return fourier_series_eval(f.grid, f.spectral, pts)


def fourier_series_eval(grid: Grid, coeffs: np.ndarray, pts: np.ndarray, chunk: int = 256) -> np.ndarray:
    n = grid.n
    c = np.array(coeffs, dtype=complex)
    nyq = n // 2
    # split the unpaired Nyquist coefficient symmetrically so real data stays real
    kpos = np.arange(nyq + 1)
    cpos = c[:nyq + 1].copy()
    cpos[1:nyq] *= 2.0
    cpos[nyq] = c[nyq]
    xi = kpos / grid.w
    out = np.empty(pts.shape, dtype=float)
    for s in range(0, pts.size, chunk):
        p = pts[s:s + chunk]
        e = np.exp(1j * np.outer(p, xi))
        vals = e[:, :nyq] @ cpos[:nyq]
        vals = vals.real + (c[nyq] * np.cos(xi[nyq] * p)).real
        out[s:s + chunk] = vals
    return out


def sech2(x, amplitude: float = 1.0) -> np.ndarray:
    return amplitude / np.cosh(x) ** 2
