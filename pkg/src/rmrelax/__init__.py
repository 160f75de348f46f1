"""Two-level system relaxing against an n-level random-matrix reservoir.

The package computes the limiting spectral data of the coupled model, the
exact n -> infinity reduced dynamics via contour integrals, weak-coupling
relaxation asymptotics, and finite-n Monte Carlo reference ensembles.
"""

from .config import ExperimentConfig, GridSpec, load_config
from .dynamics import ContourSpec, evolve, rho_limit, two_point, u_E, u_mean
from .errors import RelaxError
from .measures import (
    Atoms,
    GaussianTrunc,
    Semicircle,
    SpectralMeasure,
    Tabulated,
    Uniform,
    fourier_l1_bound,
    fourier_transform,
    make_measure,
    quantile_eigenvalues,
    stieltjes_boundary,
    stieltjes_transform,
)
from .montecarlo import (
    FiniteModel,
    EnsembleStats,
    empirical_measure,
    ensemble_run,
    reduced_density,
    resolvent_trace,
    sample_gue,
)
from .selfconsistent import (
    ModelParams,
    equilibrium_canonical,
    equilibrium_micro,
    solve_on_grid,
    solve_pair,
    spectral_density,
)
from .state import TwoLevelState, Trajectory
from .vanhove import (
    VanHoveParams,
    diagonal_relaxation,
    offdiagonal_evolution,
    relaxation,
    relaxation_rate,
    stationary_diag,
    time_window_average,
)

__version__ = "0.1.0"

__all__ = [
    "Atoms",
    "ContourSpec",
    "EnsembleStats",
    "ExperimentConfig",
    "FiniteModel",
    "GaussianTrunc",
    "GridSpec",
    "ModelParams",
    "RelaxError",
    "Semicircle",
    "SpectralMeasure",
    "Tabulated",
    "Trajectory",
    "TwoLevelState",
    "Uniform",
    "VanHoveParams",
    "__version__",
    "diagonal_relaxation",
    "empirical_measure",
    "ensemble_run",
    "equilibrium_canonical",
    "equilibrium_micro",
    "evolve",
    "fourier_l1_bound",
    "fourier_transform",
    "load_config",
    "make_measure",
    "offdiagonal_evolution",
    "quantile_eigenvalues",
    "reduced_density",
    "relaxation",
    "relaxation_rate",
    "resolvent_trace",
    "rho_limit",
    "sample_gue",
    "solve_on_grid",
    "solve_pair",
    "spectral_density",
    "stationary_diag",
    "stieltjes_boundary",
    "stieltjes_transform",
    "time_window_average",
    "two_point",
    "u_E",
    "u_mean",
]
