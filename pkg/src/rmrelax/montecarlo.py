"""Finite-reservoir Monte Carlo: the brute-force route to everything.

A sample is one Hermitian 2n x 2n Hamiltonian built from the fixed
reservoir spectrum and a random GUE coupling block. Each sample is
diagonalized once; propagation to any time is then two matrix-vector
products. Ensembles use counter-based per-sample streams derived from
the base seed, so results are reproducible and independent of execution
order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (ConfigValidationError, EigendecompositionError,
                     SpectrumRangeError)
from .measures import quantile_eigenvalues
from .selfconsistent import ModelParams
from .state import Trajectory, TwoLevelState

_PSD_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class FiniteModel:
    """Reservoir of dimension n with a deterministic spectrum.

    ``k`` is the 1-based reservoir level occupied at t=0; random
    coupling blocks are drawn from streams spawned off ``seed``.
    """

    params: ModelParams
    n: int
    k: int
    seed: int = 0
    eigenvalues: np.ndarray | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ConfigValidationError("reservoir dimension must be >= 1")
        if not 1 <= self.k <= self.n:
            raise ConfigValidationError(
                f"initial reservoir index {self.k} outside 1..{self.n}")
        if self.eigenvalues is None:
            eigs = quantile_eigenvalues(self.params.measure, self.n)
        else:
            eigs = np.asarray(self.eigenvalues, dtype=float)
            if eigs.shape != (self.n,):
                raise ConfigValidationError(
                    "eigenvalue list does not match the reservoir dimension")
            if np.any(np.diff(eigs) < 0):
                raise ConfigValidationError(
                    "reservoir eigenvalues must be sorted")
        object.__setattr__(self, "eigenvalues", eigs)

    @classmethod
    def at_energy(cls, params, n, energy, seed=0):
        """Pick the initial level whose eigenvalue is nearest ``energy``."""
        eigs = quantile_eigenvalues(params.measure, n)
        k = int(np.argmin(np.abs(eigs - energy))) + 1
        return cls(params=params, n=n, k=k, seed=seed, eigenvalues=eigs)

    def initial_energy(self):
        return float(self.eigenvalues[self.k - 1])

    def sample_rng(self, index):
        """Independent stream for sample ``index``, order-insensitive."""
        seq = np.random.SeedSequence(entropy=self.seed,
                                     spawn_key=(int(index),))
        return np.random.Generator(np.random.Philox(seq))


def sample_gue(n, rng):
    """Hermitian matrix with unit-variance diagonal and half-variance
    real/imaginary off-diagonal parts."""
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (m + m.conj().T)


def assemble_h(fm, w):
    """Composite Hamiltonian: level blocks on the diagonal, scaled GUE
    coupling off it. Rows 0..n-1 are the upper level, n..2n-1 the lower."""
    n = fm.n
    w = np.asarray(w, dtype=complex)
    if w.shape != (n, n):
        raise ValueError(f"coupling block must be {n}x{n}, got {w.shape}")
    h = np.zeros((2 * n, 2 * n), dtype=complex)
    idx = np.arange(n)
    s = fm.params.splitting
    h[idx, idx] = fm.eigenvalues + s
    h[n + idx, n + idx] = fm.eigenvalues - s
    off = (fm.params.coupling / math.sqrt(n)) * w
    h[:n, n:] = off
    h[n:, :n] = off.conj().T
    return h


@dataclass(frozen=True, eq=False)
class SamplePropagator:
    """One diagonalized sample; shares its eigenbasis across times."""

    fm: FiniteModel
    eigvals: np.ndarray
    eigvecs: np.ndarray

    @classmethod
    def build(cls, fm, w):
        hmat = assemble_h(fm, w)
        try:
            lam, q = np.linalg.eigh(hmat)
        except np.linalg.LinAlgError as exc:
            raise EigendecompositionError(
                f"eigendecomposition failed for n={fm.n}: {exc}") from exc
        return cls(fm=fm, eigvals=lam, eigvecs=q)

    def initial_columns(self, k=None):
        """Eigenbasis coordinates of the two basis states (alpha, k)."""
        k = self.fm.k if k is None else k
        rows = (k - 1, self.fm.n + k - 1)
        return self.eigvecs[rows, :].conj()

    def reduced_many(self, rho0, times, k_weights=None):
        """Reduced density matrices at all times, shape (T, 2, 2).

        ``k_weights`` mixes initial reservoir levels; None means the pure
        level of the model.
        """
        times = np.asarray(times, dtype=float)
        n = self.fm.n
        if k_weights is None:
            members = [(1.0, self.fm.k)]
        else:
            k_weights = np.asarray(k_weights, dtype=float)
            if k_weights.shape != (n,):
                raise ConfigValidationError(
                    "initial weights must have one entry per reservoir level")
            members = [(float(wk), k + 1)
                       for k, wk in enumerate(k_weights) if wk > 1e-14]
        out = np.zeros((len(times), 2, 2), dtype=complex)
        phases = np.exp(-1j * np.outer(times, self.eigvals))
        for weight, k in members:
            coords = self.initial_columns(k)
            # both initial states at once: rotate, phase, rotate back
            psi = phases[:, None, :] * coords[None, :, :]
            psi = psi @ self.eigvecs.T
            blocks = psi.reshape(len(times), 2, 2, n)
            out += weight * np.einsum("tajn,ab,tbkn->tjk", blocks,
                                      np.asarray(rho0, dtype=complex),
                                      blocks.conj())
        return out


def _check_density(mat, n, t):
    state = TwoLevelState(mat)
    herm = state.hermiticity_error()
    tr = state.trace_error()
    low = state.min_eigenvalue()
    if herm > _PSD_TOL or tr > _PSD_TOL or low < -_PSD_TOL:
        raise EigendecompositionError(
            f"sample reduced matrix violates density axioms at t={t}: "
            f"hermiticity {herm:.3g}, trace error {tr:.3g}, "
            f"lowest eigenvalue {low:.3g} (n={n})")
    return state


def reduced_density(fm, w, rho0, t):
    """Exact reduced density matrix of one sample at one time."""
    state0 = rho0 if isinstance(rho0, TwoLevelState) else TwoLevelState(rho0)
    state0.validate(tol=1e-10)
    prop = SamplePropagator.build(fm, w)
    mat = prop.reduced_many(state0.matrix, np.array([float(t)]))[0]
    return _check_density(mat, fm.n, t)


@dataclass(frozen=True, eq=False)
class EnsembleStats:
    """Entrywise sample mean and unbiased variance over GUE draws."""

    times: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    samples: int
    meta: dict = field(default_factory=dict)

    def trajectory(self):
        return Trajectory(times=self.times, states=self.mean,
                          variances=self.variance, meta=dict(self.meta))

    def variance_bound(self):
        """The loose self-averaging envelope 8 v^2 t^2 / n."""
        p = self.meta.get("coupling", 0.0)
        n = self.meta.get("n", 1)
        return 8.0 * p ** 2 * self.times ** 2 / n


def ensemble_run(fm, rho0, times, samples, k_weights=None):
    """Mean and variance of the reduced density matrix over GUE draws."""
    if samples < 2:
        raise ConfigValidationError("need at least 2 samples for a variance")
    state0 = rho0 if isinstance(rho0, TwoLevelState) else TwoLevelState(rho0)
    state0.validate(tol=1e-10)
    times = np.asarray(times, dtype=float)
    # accumulate deviations from the first sample: identical samples
    # (the coupling-free case) then give a variance of exactly zero
    ref = None
    acc = np.zeros((len(times), 2, 2), dtype=complex)
    acc_sq = np.zeros((len(times), 2, 2), dtype=float)
    for i in range(samples):
        w = sample_gue(fm.n, fm.sample_rng(i))
        prop = SamplePropagator.build(fm, w)
        stack = prop.reduced_many(state0.matrix, times, k_weights)
        if ref is None:
            ref = stack
            continue
        delta = stack - ref
        acc += delta
        acc_sq += np.abs(delta) ** 2
    mean = ref + acc / samples
    var = (acc_sq - np.abs(acc) ** 2 / samples) / (samples - 1)
    np.clip(var, 0.0, None, out=var)
    meta = {"n": fm.n, "k": fm.k, "seed": fm.seed, "samples": samples,
            "coupling": fm.params.coupling, "splitting": fm.params.splitting}
    return EnsembleStats(times=times, mean=mean, variance=var,
                         samples=samples, meta=meta)


def spectral_weights(fm, w):
    """Eigenvalues and per-eigenvector 2x2 level weights of one sample.

    The weight of eigenvector m is W[m, a, b] = sum_j Q[aj, m] conj(Q[bj, m]),
    the ingredient shared by empirical measures and resolvent traces.
    """
    prop = SamplePropagator.build(fm, w)
    qb = prop.eigvecs.reshape(2, fm.n, 2 * fm.n)
    weights = np.einsum("ajm,bjm->mab", qb, qb.conj())
    return prop.eigvals, weights


def empirical_measure(fm, w, bins):
    """Level-resolved spectral histogram of one sample.

    Returns shape (2, 2, len(bins)-1); diagonal entries are real
    nonnegative histograms summing to 1 each.
    """
    bins = np.asarray(bins, dtype=float)
    if bins.ndim != 1 or len(bins) < 2 or np.any(np.diff(bins) <= 0):
        raise ConfigValidationError("bins must be increasing edges")
    lam, weights = spectral_weights(fm, w)
    if lam[0] < bins[0] or lam[-1] > bins[-1]:
        raise SpectrumRangeError(
            f"sample spectrum [{lam[0]:.4g}, {lam[-1]:.4g}] leaves the "
            f"binned range [{bins[0]:.4g}, {bins[-1]:.4g}]")
    idx = np.clip(np.searchsorted(bins, lam, side="right") - 1,
                  0, len(bins) - 2)
    hist = np.zeros((2, 2, len(bins) - 1), dtype=complex)
    for a in range(2):
        for b in range(2):
            np.add.at(hist[a, b], idx, weights[:, a, b])
    return hist / fm.n


def resolvent_trace(fm, w, z):
    """Block-traced resolvent g[a, b] = n^{-1} sum_j (H - z)^{-1}_{aj, bj}."""
    z = complex(z)
    if z.imag == 0:
        raise ValueError("resolvent argument must be off the real axis")
    lam, weights = spectral_weights(fm, w)
    return np.einsum("mab,m->ab", weights, 1.0 / (lam - z)) / fm.n


def canonical_initial_weights(fm, beta):
    """Gibbs weights over reservoir levels, overflow-safe via max shift."""
    x = -float(beta) * fm.eigenvalues
    x -= x.max()
    w = np.exp(x)
    return w / w.sum()
