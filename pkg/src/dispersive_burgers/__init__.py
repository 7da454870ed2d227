"""Spectral solvers and blow-up diagnostics for dispersive perturbations of Burgers' equation."""

from .spectral import Grid, SpectralField, FourierSymbol, make_grid, analyze, synthesize
from .evolution import ModelSpec, EvolveConfig, RunDiagnostics, evolve, evolve_commoving_fbbm, irk4_step
from .solitons import SolitonProfile, newton_gmres_soliton, continue_in_alpha
from .analysis import AsymptoticFit, BlowupFit, fit_fourier_asymptotics, fit_blowup_norms, loglog_regression

__version__ = "0.1.0"
