"""Entanglement averages for the theta-interpolating random density-matrix ensemble.

The ensemble joins the Bures-Hall (theta = 1) and Hilbert-Schmidt
(theta = 2) spectral measures.  The package evaluates exact average purity
and von Neumann entropy, the Pfaffian correlation kernels behind them, and
samplers to cross-check both.
"""
from .ensembles import EnsembleParams
from .errors import ConvergenceError, DomainError, QuadratureWarning
from .moments import mean_purity, mean_vn

__all__ = ["EnsembleParams", "ConvergenceError", "DomainError", "QuadratureWarning",
           "mean_purity", "mean_vn"]
__version__ = "0.1.0"
