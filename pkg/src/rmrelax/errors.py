"""Exception hierarchy shared across the package.

Every error carries an ``exit_code`` so the command line front end can map
failures to distinct process exit statuses without a lookup table.
"""

from __future__ import annotations


class RelaxError(Exception):
    """Base class for all package errors."""

    exit_code = 1


# --- measure construction and evaluation ---

class MeasureDefinitionError(RelaxError):
    """Invalid parameters for a spectral measure."""

    exit_code = 2


class NonNormalizableError(MeasureDefinitionError):
    """Total mass is zero, negative, or not finite."""

    exit_code = 5


class NonMonotoneGridError(MeasureDefinitionError):
    """Tabulated grid is not strictly increasing."""

    exit_code = 5


class NegativeDensityError(MeasureDefinitionError):
    """Density values or atom weights are negative."""

    exit_code = 5


class RealAxisError(RelaxError):
    """Stieltjes transform requested at a point with Im z = 0."""

    exit_code = 6


class AtomicMeasureError(RelaxError):
    """Operation requires a density but the measure is purely atomic."""

    exit_code = 6


class DivergentTailError(RelaxError):
    """Fourier transform decays too slowly for an integrable bound."""

    exit_code = 6


# --- self-consistent solver ---

class NoConvergenceError(RelaxError):
    """Fixed-point iteration exhausted its budget."""

    exit_code = 3

    def __init__(self, message: str, z: complex | None = None,
                 residual: float | None = None):
        super().__init__(message)
        self.z = z
        self.residual = residual


class MassDeficitError(RelaxError):
    """Recovered spectral density integrates to the wrong total mass."""

    exit_code = 7


class EmptyWindowError(RelaxError):
    """Microcanonical window contains no spectral weight."""

    exit_code = 7


class TailOverflowError(RelaxError):
    """Canonical weights overflow even after max-shift normalization."""

    exit_code = 7


# --- contour dynamics ---

class QuadratureBudgetError(RelaxError):
    """Contour quadrature failed to meet tolerance within its budget."""

    exit_code = 3


class DenominatorNearZeroError(RelaxError):
    """Two-point denominator approached zero on the contour."""

    exit_code = 8


# --- finite-n ensemble ---

class SpectrumRangeError(RelaxError):
    """Eigenvalues fall outside the requested histogram range."""

    exit_code = 9


class EigendecompositionError(RelaxError):
    """Eigendecomposition failed or produced an invalid reduced state."""

    exit_code = 9


# --- weak-coupling limit ---

class ZeroRateError(RelaxError):
    """Both relaxation rates vanish; stationary state is degenerate."""

    exit_code = 10


class WindowRangeError(RelaxError):
    """Averaging window extends beyond the available trajectory."""

    exit_code = 10


# --- command line front end ---

class ConfigParseError(RelaxError):
    """Configuration file could not be parsed."""

    exit_code = 2


class ConfigValidationError(RelaxError):
    """Configuration parsed but failed validation."""

    exit_code = 2


class MissingColumnError(RelaxError):
    """Plot specification references a column absent from the data."""

    exit_code = 2


class CompareThresholdError(RelaxError):
    """Limit-versus-ensemble deviation exceeded the configured threshold."""

    exit_code = 4
