"""Two-level density matrices and time-indexed collections of them.

Matrix indices follow the level order (+, -): row/column 0 is the upper
level, row/column 1 the lower one. Helper accessors take the signs
+1 / -1 directly so calling code can stay close to the physics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigValidationError

LEVEL_SIGNS = (1, -1)


def level_index(alpha):
    """Map a level sign (+1 or -1) to its matrix index."""
    if alpha == 1:
        return 0
    if alpha == -1:
        return 1
    raise ValueError(f"level sign must be +1 or -1, got {alpha!r}")


def _as_matrix(value):
    mat = np.array(value, dtype=complex)
    if mat.shape != (2, 2):
        raise ConfigValidationError(
            f"density matrix must be 2x2, got shape {mat.shape}")
    mat.setflags(write=False)
    return mat


@dataclass(frozen=True, eq=False)
class TwoLevelState:
    """Density matrix of the two-level subsystem."""

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", _as_matrix(self.matrix))

    @classmethod
    def diagonal(cls, p_plus, p_minus):
        return cls(np.diag([complex(p_plus), complex(p_minus)]))

    @classmethod
    def from_entries(cls, pp, pm, mp, mm):
        return cls([[pp, pm], [mp, mm]])

    @property
    def pp(self):
        return complex(self.matrix[0, 0])

    @property
    def pm(self):
        return complex(self.matrix[0, 1])

    @property
    def mp(self):
        return complex(self.matrix[1, 0])

    @property
    def mm(self):
        return complex(self.matrix[1, 1])

    def entry(self, alpha, delta):
        return complex(self.matrix[level_index(alpha), level_index(delta)])

    def trace(self):
        return complex(self.matrix[0, 0] + self.matrix[1, 1])

    def trace_error(self):
        return abs(self.trace() - 1.0)

    def hermiticity_error(self):
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def min_eigenvalue(self):
        sym = 0.5 * (self.matrix + self.matrix.conj().T)
        return float(np.linalg.eigvalsh(sym)[0])

    def validate(self, tol=1e-8):
        """Check the density-matrix axioms, raising on the first failure."""
        herm = self.hermiticity_error()
        if herm > tol:
            raise ConfigValidationError(
                f"initial state is not Hermitian (deviation {herm:.3g})")
        tr = self.trace_error()
        if tr > tol:
            raise ConfigValidationError(
                f"initial state trace is {self.trace().real:.6g}, expected 1")
        low = self.min_eigenvalue()
        if low < -tol:
            raise ConfigValidationError(
                f"initial state has negative eigenvalue {low:.6g}")
        return self

    def __repr__(self):
        m = self.matrix
        return (f"TwoLevelState(pp={m[0, 0]:.6g}, pm={m[0, 1]:.6g}, "
                f"mp={m[1, 0]:.6g}, mm={m[1, 1]:.6g})")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Reduced density matrices sampled on a time grid.

    ``states`` has shape (T, 2, 2); ``variances`` (same shape, real) is
    filled by ensemble runs and left None for deterministic evolutions.
    """

    times: np.ndarray
    states: np.ndarray
    variances: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=complex)
        if states.shape != (len(times), 2, 2):
            raise ValueError(
                f"states shape {states.shape} does not match {len(times)} times")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        if self.variances is not None:
            var = np.asarray(self.variances, dtype=float)
            if var.shape != states.shape:
                raise ValueError("variances shape does not match states")
            object.__setattr__(self, "variances", var)

    def __len__(self):
        return len(self.times)

    def state(self, i):
        return TwoLevelState(self.states[i])

    def trace_errors(self):
        return np.abs(np.trace(self.states, axis1=1, axis2=2) - 1.0)

    def hermiticity_errors(self):
        gap = self.states - np.conj(np.swapaxes(self.states, 1, 2))
        return np.max(np.abs(gap), axis=(1, 2))
