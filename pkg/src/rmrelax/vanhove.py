"""Weak-coupling relaxation laws in rescaled time.

In the joint limit of vanishing coupling and growing time with
tau = t v^2 held fixed, the diagonal entries relax exponentially at
rates set by the reservoir density at the level-resolved energies,
and each off-diagonal entry factors into a fast bare oscillation and
a slow phase/decay built from boundary values of the base transform.
Everything here is closed-form in the measure's boundary values; the
contour machinery is only needed to check these laws at finite coupling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import WindowRangeError, ZeroRateError
from .measures import SpectralMeasure, stieltjes_boundary
from .state import Trajectory, TwoLevelState, level_index

_SIGNS = (1, -1)


@dataclass(frozen=True, eq=False)
class VanHoveParams:
    """Reservoir density, level splitting, and the probed energy.

    ``taus`` is the rescaled-time grid used by trajectory builders;
    ``display_time`` sets the bare time entering the fast off-diagonal
    phase, which is independent of tau.
    """

    measure: SpectralMeasure
    splitting: float
    energy: float
    taus: np.ndarray | None = None
    display_time: float = 0.0

    def __post_init__(self):
        # probing one boundary value rejects atomic measures up front
        stieltjes_boundary(self.measure, self.energy)
        if self.taus is not None:
            taus = np.asarray(self.taus, dtype=float)
            if taus.ndim != 1 or np.any(taus < 0):
                raise ValueError("taus must be a 1d nonnegative grid")
            object.__setattr__(self, "taus", taus)

    def density(self, lam):
        val = stieltjes_boundary(self.measure, float(lam)).imag / math.pi
        return max(val, 0.0)

    def principal_value(self, lam):
        return stieltjes_boundary(self.measure, float(lam)).real


def relaxation_rate(p, alpha):
    """Decay rate of level alpha: 2 pi times the density at the probed
    energy plus the density at the partner energy E + 2 alpha s."""
    return 2.0 * math.pi * (p.density(p.energy)
                            + p.density(p.energy + 2.0 * alpha * p.splitting))


def _coerce_state(rho0):
    state = rho0 if isinstance(rho0, TwoLevelState) else TwoLevelState(rho0)
    return state.validate()


def diagonal_relaxation(p, tau, rho0):
    """Diagonal entries over rescaled time, shape tau.shape + (2,).

    Per level: an own-channel pair that decays from 1 toward its
    stationary share, plus a cross-channel feed from the other level.
    Rates of zero short-circuit to the removable limits (no decay in,
    no feed out), keeping the trace identity exact.
    """
    state = _coerce_state(rho0)
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("rescaled times must be >= 0")
    dens_e = p.density(p.energy)
    out = np.empty(tau.shape + (2,))
    for alpha in _SIGNS:
        up = p.density(p.energy + 2.0 * alpha * p.splitting)
        down = p.density(p.energy - 2.0 * alpha * p.splitting)
        g_own = 2.0 * math.pi * (dens_e + up)
        g_other = 2.0 * math.pi * (dens_e + down)
        if g_own > 0.0:
            own = 2.0 * math.pi * (dens_e + np.exp(-tau * g_own) * up) / g_own
        else:
            own = np.ones_like(tau)
        if g_other > 0.0:
            cross = 2.0 * math.pi * down * (1.0 - np.exp(-tau * g_other)) \
                / g_other
        else:
            cross = np.zeros_like(tau)
        out[..., level_index(alpha)] = \
            own * state.entry(alpha, alpha).real \
            + cross * state.entry(-alpha, -alpha).real
    return out


def stationary_diag(p, rho0):
    """Long-rescaled-time diagonal pair (the non-decaying terms)."""
    state = _coerce_state(rho0)
    dens_e = p.density(p.energy)
    rates = {alpha: relaxation_rate(p, alpha) for alpha in _SIGNS}
    if rates[1] == 0.0 and rates[-1] == 0.0:
        raise ZeroRateError(
            "no relaxation channel: the density vanishes at the probed "
            "energy and both partner energies")
    out = np.empty(2)
    for alpha in _SIGNS:
        down = p.density(p.energy - 2.0 * alpha * p.splitting)
        own = 2.0 * math.pi * dens_e / rates[alpha] \
            if rates[alpha] > 0.0 else 1.0
        cross = 2.0 * math.pi * down / rates[-alpha] \
            if rates[-alpha] > 0.0 else 0.0
        out[level_index(alpha)] = own * state.entry(alpha, alpha).real \
            + cross * state.entry(-alpha, -alpha).real
    return out


@dataclass(frozen=True, eq=False)
class OffDiagonalLaw:
    """Modulus/phase split of one off-diagonal entry over rescaled time.

    ``fast_phase`` carries the bare oscillation -2 alpha s t at the
    display time; ``slow_phase`` carries the initial argument plus the
    principal-value drift in tau. The split keeps the two time scales
    separate in outputs.
    """

    alpha: int
    modulus: np.ndarray
    slow_phase: np.ndarray
    fast_phase: float

    def value(self):
        return self.modulus * np.exp(1j * (self.slow_phase
                                           + self.fast_phase))


def offdiagonal_evolution(p, alpha, tau, rho0):
    """Off-diagonal entry rho_{alpha, -alpha} as an OffDiagonalLaw.

    The modulus decays at pi times the density sum at the two partner
    energies; outside the support there is no decay and the entry only
    oscillates.
    """
    state = _coerce_state(rho0)
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("rescaled times must be >= 0")
    initial = state.entry(alpha, -alpha)
    e_up = p.energy + 2.0 * alpha * p.splitting
    e_dn = p.energy - 2.0 * alpha * p.splitting
    decay = math.pi * (p.density(e_up) + p.density(e_dn))
    drift = p.principal_value(e_up) - p.principal_value(e_dn)
    modulus = abs(initial) * np.exp(-tau * decay)
    slow = np.angle(initial) + tau * drift if initial != 0 \
        else np.zeros_like(tau)
    fast = -2.0 * alpha * p.splitting * p.display_time
    return OffDiagonalLaw(alpha=alpha, modulus=modulus, slow_phase=slow,
                          fast_phase=fast)


@dataclass(frozen=True, eq=False)
class VanHoveResult:
    """Rates, stationary diagonal, and the full trajectory over tau."""

    gamma_plus: float
    gamma_minus: float
    stationary: np.ndarray
    trajectory: Trajectory
    offdiag: OffDiagonalLaw


def relaxation(p, rho0, taus=None):
    """Assemble the complete weak-coupling picture on a tau grid."""
    taus = p.taus if taus is None else np.asarray(taus, dtype=float)
    if taus is None:
        raise ValueError("no tau grid given")
    state = _coerce_state(rho0)
    diag = diagonal_relaxation(p, taus, state)
    law = offdiagonal_evolution(p, 1, taus, state)
    states = np.zeros((len(taus), 2, 2), dtype=complex)
    states[:, 0, 0] = diag[:, 0]
    states[:, 1, 1] = diag[:, 1]
    states[:, 0, 1] = law.value()
    states[:, 1, 0] = np.conj(states[:, 0, 1])
    meta = {"energy": p.energy, "splitting": p.splitting,
            "display_time": p.display_time}
    return VanHoveResult(
        gamma_plus=relaxation_rate(p, 1),
        gamma_minus=relaxation_rate(p, -1),
        stationary=stationary_diag(p, state),
        trajectory=Trajectory(times=taus, states=states, meta=meta),
        offdiag=law)


def time_window_average(traj, center, half_width):
    """Average the trajectory entries over [center - h, center + h].

    Window endpoints are linearly interpolated; interior samples enter
    a trapezoid rule. The window must lie inside the sampled range.
    """
    if half_width <= 0:
        raise ValueError("window half-width must be positive")
    lo, hi = center - half_width, center + half_width
    times = traj.times
    if lo < times[0] - 1e-12 or hi > times[-1] + 1e-12:
        raise WindowRangeError(
            f"window [{lo:.4g}, {hi:.4g}] leaves the sampled range "
            f"[{times[0]:.4g}, {times[-1]:.4g}]")
    inner = (times > lo) & (times < hi)
    grid = np.concatenate([[lo], times[inner], [hi]])
    avg = np.empty((2, 2), dtype=complex)
    for j in range(2):
        for k in range(2):
            vals = traj.states[:, j, k]
            ends_re = np.interp([lo, hi], times, vals.real)
            ends_im = np.interp([lo, hi], times, vals.imag)
            win = np.concatenate([[ends_re[0] + 1j * ends_im[0]],
                                  vals[inner],
                                  [ends_re[1] + 1j * ends_im[1]]])
            avg[j, k] = np.trapezoid(win, grid) / (2.0 * half_width)
    return TwoLevelState(avg)
