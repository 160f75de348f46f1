"""Coupled resolvent equations of the two-level system against the reservoir.

The pair f_+(z), f_-(z) solves

    f_a(z) = stieltjes_transform(m, z - a*s + v^2 f_{-a}(z)),

which is the fixed point of a damped iteration, accelerated by a 2x2
Newton step once the iterates are close. The limiting spectral measures
of the two levels follow by Stieltjes inversion just above the real
axis, and the equilibrium reduced states are window / Gibbs averages of
those densities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyWindowError,
    MassDeficitError,
    NoConvergenceError,
    TailOverflowError,
)
from .measures import SpectralMeasure
from .state import TwoLevelState

_MAX_ITER = 10_000


@dataclass(frozen=True)
class ModelParams:
    """Reservoir measure plus the two model constants.

    ``splitting`` is the level half-spacing s (level energies sit at
    E +/- s) and ``coupling`` is the overall coupling strength v.
    """

    measure: SpectralMeasure
    splitting: float = 0.0
    coupling: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "splitting", float(self.splitting))
        object.__setattr__(self, "coupling", float(self.coupling))
        if self.splitting < 0:
            raise ValueError(f"splitting must be >= 0, got {self.splitting}")
        if self.coupling < 0:
            raise ValueError(f"coupling must be >= 0, got {self.coupling}")

    def describe(self):
        return {"measure": self.measure.describe(),
                "splitting": self.splitting, "coupling": self.coupling}


@dataclass(frozen=True)
class StieltjesPair:
    """Solution of the coupled equations at one evaluation point."""

    z: complex
    f_plus: complex
    f_minus: complex
    residual: float

    def f(self, alpha):
        return self.f_plus if alpha > 0 else self.f_minus


@dataclass(frozen=True, eq=False)
class PairGrid:
    """Vectorized solutions along a z array; behaves as a pair sequence."""

    z: np.ndarray
    f_plus: np.ndarray
    f_minus: np.ndarray
    residual: np.ndarray

    def __len__(self):
        return len(self.z)

    def __getitem__(self, i):
        if isinstance(i, (slice, np.ndarray, list)):
            return PairGrid(self.z[i], self.f_plus[i], self.f_minus[i],
                            self.residual[i])
        return StieltjesPair(complex(self.z[i]), complex(self.f_plus[i]),
                             complex(self.f_minus[i]), float(self.residual[i]))

    def __iter__(self):
        for i in range(len(self.z)):
            yield self[i]

    @property
    def lam(self):
        return self.z.real

    def f(self, alpha):
        return self.f_plus if alpha > 0 else self.f_minus


def _rhs(p, z, f_plus, f_minus):
    m, s, v2 = p.measure, p.splitting, p.coupling ** 2
    target_plus = m.stieltjes(z - s + v2 * f_minus)
    target_minus = m.stieltjes(z + s + v2 * f_plus)
    return target_plus, target_minus


def pair_residual(p, z, f_plus, f_minus):
    """Re-substitution defect max_a |f_a - RHS_a| of a candidate pair."""
    tp, tm = _rhs(p, z, f_plus, f_minus)
    return np.maximum(np.abs(f_plus - tp), np.abs(f_minus - tm))


def _project_herglotz(z, f, rhs):
    # the RHS of the fixed point is Herglotz whenever f is plausible; if
    # an update leaves the half plane, fall back to that safe value
    bad = f.imag * np.sign(z.imag) <= 0
    if np.any(bad):
        f = np.where(bad, rhs, f)
    return f


def _solve_vector(p, z, f_plus, f_minus, tol, max_iter=_MAX_ITER):
    """Damped fixed point with Newton acceleration, elementwise over z.

    Returns (f_plus, f_minus, residual). Points converge independently;
    a NoConvergence error reports the worst remaining point.
    """
    m, s, v2 = p.measure, p.splitting, p.coupling ** 2
    z = np.asarray(z, dtype=complex)
    f_plus = np.array(np.broadcast_to(f_plus, z.shape), dtype=complex)
    f_minus = np.array(np.broadcast_to(f_minus, z.shape), dtype=complex)

    gamma = np.full(z.shape, 0.5)
    tp, tm = _rhs(p, z, f_plus, f_minus)
    res = np.maximum(np.abs(f_plus - tp), np.abs(f_minus - tm))
    for _ in range(max_iter):
        live = res > tol
        if not np.any(live):
            return f_plus, f_minus, res
        zl = z[live]
        fp, fm = f_plus[live], f_minus[live]
        tpl, tml = tp[live], tm[live]
        res_l = res[live]

        # Newton step for the residual map (F_plus, F_minus)
        w_plus = zl - s + v2 * fm
        w_minus = zl + s + v2 * fp
        a = v2 * m.stieltjes_deriv(w_plus)
        b = v2 * m.stieltjes_deriv(w_minus)
        det = 1.0 - a * b
        big = np.abs(det) > 1e-12
        F1, F2 = fp - tpl, fm - tml
        with np.errstate(divide="ignore", invalid="ignore"):
            dp = np.where(big, -(F1 + a * F2) / det, 0.0)
            dm = np.where(big, -(b * F1 + F2) / det, 0.0)
        cand_p, cand_m = fp + dp, fm + dm
        cand_tp, cand_tm = _rhs(p, zl, cand_p, cand_m)
        cand_res = np.maximum(np.abs(cand_p - cand_tp),
                              np.abs(cand_m - cand_tm))
        take = big & (cand_res < res_l)

        # damped fallback elsewhere, halving the step on a residual increase
        g = gamma[live]
        damp_p = fp + g * (tpl - fp)
        damp_m = fm + g * (tml - fm)
        damp_tp, damp_tm = _rhs(p, zl, damp_p, damp_m)
        damp_res = np.maximum(np.abs(damp_p - damp_tp),
                              np.abs(damp_m - damp_tm))
        g = np.where(damp_res > res_l, np.maximum(g * 0.5, 1e-3),
                     np.minimum(g * 1.2, 1.0))

        new_p = np.where(take, cand_p, damp_p)
        new_m = np.where(take, cand_m, damp_m)
        new_tp = np.where(take, cand_tp, damp_tp)
        new_tm = np.where(take, cand_tm, damp_tm)
        new_res = np.where(take, cand_res, damp_res)

        proj_p = _project_herglotz(zl, new_p, new_tp)
        proj_m = _project_herglotz(zl, new_m, new_tm)
        moved = (proj_p != new_p) | (proj_m != new_m)
        if np.any(moved):
            mtp, mtm = _rhs(p, zl[moved], proj_p[moved], proj_m[moved])
            new_tp[moved], new_tm[moved] = mtp, mtm
            new_res[moved] = np.maximum(np.abs(proj_p[moved] - mtp),
                                        np.abs(proj_m[moved] - mtm))

        f_plus[live], f_minus[live] = proj_p, proj_m
        tp[live], tm[live] = new_tp, new_tm
        res[live] = new_res
        gamma[live] = g

    worst = int(np.argmax(res))
    raise NoConvergenceError(
        f"fixed point stalled at z={complex(z.flat[worst]):.6g} with "
        f"residual {float(res.flat[worst]):.3g} after {max_iter} iterations",
        z=complex(z.flat[worst]), residual=float(res.flat[worst]))


def _free_guess(p, z):
    return (p.measure.stieltjes(z - p.splitting),
            p.measure.stieltjes(z + p.splitting))


def solve_pair(p, z, tol=1e-10, warm=None, max_iter=_MAX_ITER):
    """Solve the coupled pair at a single complex z off the real axis.

    Points below the axis are handled through the conjugation symmetry
    f_a(conj z) = conj f_a(z).
    """
    z = complex(z)
    if tol <= 0:
        raise ValueError(f"tolerance must be > 0, got {tol}")
    if z.imag < 0:
        flipped = solve_pair(p, z.conjugate(), tol=tol,
                             warm=_conj_pair(warm), max_iter=max_iter)
        return StieltjesPair(z, flipped.f_plus.conjugate(),
                             flipped.f_minus.conjugate(), flipped.residual)
    arr = np.array([z])
    if warm is not None:
        fp0, fm0 = np.array([warm.f_plus]), np.array([warm.f_minus])
    else:
        fp0, fm0 = _free_guess(p, arr)
    fp, fm, res = _solve_vector(p, arr, fp0, fm0, tol, max_iter=max_iter)
    return StieltjesPair(z, complex(fp[0]), complex(fm[0]), float(res[0]))


def _conj_pair(pair):
    if pair is None:
        return None
    return StieltjesPair(pair.z.conjugate(), pair.f_plus.conjugate(),
                         pair.f_minus.conjugate(), pair.residual)


def continuation_levels(p, eta):
    """Geometric ladder from the contraction region down to eta."""
    eta0 = max(2.0 * p.coupling, 1.0)
    if eta >= eta0:
        return [eta]
    levels = [eta0]
    while levels[-1] * 0.7 > eta:
        levels.append(levels[-1] * 0.7)
    levels.append(eta)
    return levels


def solve_line(p, z, tol=1e-10, warm=None):
    """Vectorized solve along an arbitrary z array with common Im sign.

    All points must lie strictly on one side of the real axis. Used for
    contour lines; grid continuation wraps this per eta level.
    """
    z = np.asarray(z, dtype=complex)
    sign = np.sign(z.imag)
    if np.any(sign == 0) or len(np.unique(sign)) > 1:
        raise ValueError("solve_line needs z strictly on one side of the axis")
    if sign[0] < 0:
        grid = solve_line(p, z.conj(), tol=tol,
                          warm=None if warm is None else
                          PairGrid(warm.z.conj(), warm.f_plus.conj(),
                                   warm.f_minus.conj(), warm.residual))
        return PairGrid(z, grid.f_plus.conj(), grid.f_minus.conj(),
                        grid.residual)
    if warm is not None:
        fp0, fm0 = warm.f_plus, warm.f_minus
    else:
        fp0, fm0 = _free_guess(p, z)
    fp, fm, res = _solve_vector(p, z, fp0, fm0, tol)
    return PairGrid(z, fp, fm, res)


def solve_on_grid(p, grid, eta, tol=1e-10):
    """Pairs at z = lam + i*eta for every lam, warm-started in eta.

    The solve starts at eta0 = max(2v, 1), where the fixed-point map is
    a contraction, and walks down by factors of 0.7 reusing the previous
    level as the initial guess.
    """
    grid = np.asarray(grid, dtype=float)
    if eta <= 0:
        raise ValueError(f"eta must be > 0, got {eta}")
    warm = None
    for level in continuation_levels(p, eta):
        z = grid + 1j * level
        if warm is None:
            fp0, fm0 = _free_guess(p, z)
        else:
            fp0, fm0 = warm
        try:
            fp, fm, res = _solve_vector(p, z, fp0, fm0, tol)
        except NoConvergenceError as exc:
            raise NoConvergenceError(
                f"continuation failed at lam={exc.z.real:.6g}, "
                f"eta={level:.6g}: {exc}", z=exc.z,
                residual=exc.residual) from exc
        warm = (fp, fm)
    return PairGrid(grid + 1j * eta, fp, fm, res)


# ----------------------------------------------------------------------
# Stieltjes inversion


@dataclass(frozen=True, eq=False)
class SpectralDensities:
    """Level-resolved spectral densities on a common grid."""

    grid: np.ndarray
    nu_plus: np.ndarray
    nu_minus: np.ndarray
    eta: float
    bound_excess: float  # max over levels of (density - sup nu0') diagnostic

    def component(self, alpha):
        return self.nu_plus if alpha > 0 else self.nu_minus

    def mass(self, alpha):
        return float(np.trapezoid(self.component(alpha), self.grid))

    def window_mean(self, alpha, lo, hi):
        """Average of the density over [lo, hi] by exact trapezoid rule."""
        if hi <= lo:
            raise ValueError("window must have positive width")
        pts = self.grid[(self.grid > lo) & (self.grid < hi)]
        edges = np.concatenate([[lo], pts, [hi]])
        vals = np.interp(edges, self.grid, self.component(alpha),
                         left=0.0, right=0.0)
        return float(np.trapezoid(vals, edges)) / (hi - lo)


def invert_density(p, coarse, fine, mass_tol=1e-3, clamp=1e-8):
    """Richardson-extrapolated inversion of two pair grids to densities.

    ``coarse`` and ``fine`` must share the lambda grid with the fine eta
    exactly half the coarse one; the 2*fine - coarse combination cancels
    the O(eta) smoothing bias and the Lorentzian tails of any atoms.
    """
    lam = coarse.lam
    if not np.allclose(lam, fine.lam, rtol=0, atol=0):
        raise ValueError("pair grids must share the lambda grid")
    eta1 = float(coarse.z.imag[0])
    eta2 = float(fine.z.imag[0])
    if not math.isclose(eta2, 0.5 * eta1, rel_tol=1e-12):
        raise ValueError(f"fine eta {eta2} must be half of coarse {eta1}")

    out = {}
    for alpha in (1, -1):
        dens = (2.0 * fine.f(alpha).imag - coarse.f(alpha).imag) / math.pi
        low = float(dens.min())
        if low < -clamp:
            raise MassDeficitError(
                f"inversion produced density {low:.3g} below -{clamp:.0e} "
                f"at lam={lam[np.argmin(dens)]:.6g}")
        out[alpha] = np.clip(dens, 0.0, None)
    excess = max(float(out[a].max()) for a in out) - p.measure.sup_density()
    result = SpectralDensities(lam, out[1], out[-1], eta=eta2,
                               bound_excess=excess)
    for alpha in (1, -1):
        mass = result.mass(alpha)
        if abs(mass - 1.0) > mass_tol:
            raise MassDeficitError(
                f"level {'+' if alpha > 0 else '-'} density integrates to "
                f"{mass:.6f}; grid [{lam[0]:.3g}, {lam[-1]:.3g}] too narrow "
                "or eta too coarse")
    return result


def density_grid(p, pad=0.5, spacing=None, eta=1e-3):
    """Default lambda grid covering both shifted-and-broadened supports."""
    lo, hi = p.measure.support
    reach = p.splitting + 2.0 * p.coupling + pad
    if spacing is None:
        spacing = 0.5 * eta
    n = int(math.ceil((hi - lo + 2 * reach) / spacing)) + 1
    return np.linspace(lo - reach, hi + reach, n)


def spectral_density(p, grid=None, eta=1e-3, tol=1e-10, mass_tol=1e-3):
    """Grid solve at eta and eta/2 followed by extrapolated inversion."""
    if grid is None:
        grid = density_grid(p, eta=eta)
    coarse = solve_on_grid(p, grid, eta, tol=tol)
    fine = solve_on_grid(p, grid, 0.5 * eta, tol=tol)
    return invert_density(p, coarse, fine, mass_tol=mass_tol)


# ----------------------------------------------------------------------
# equilibrium reduced states


@dataclass(frozen=True)
class EquilibriumState:
    """Microcanonical reduced state at energy lam with window eps."""

    lam: float
    eps: float
    omega: TwoLevelState


def default_window(p):
    lo, hi = p.measure.support
    return 0.05 * (hi - lo)


def equilibrium_micro(p, lam, eps=None, densities=None):
    """Window-averaged level weights, normalized to a diagonal state."""
    if eps is None:
        eps = default_window(p)
    if eps <= 0:
        raise ValueError(f"window half-width must be > 0, got {eps}")
    if densities is None:
        densities = spectral_density(p)
    means = {alpha: densities.window_mean(alpha, lam - eps, lam + eps)
             for alpha in (1, -1)}
    total = means[1] + means[-1]
    if total < 1e-14:
        raise EmptyWindowError(
            f"no spectral mass in [{lam - eps:.6g}, {lam + eps:.6g}]")
    omega = TwoLevelState.diagonal(means[1] / total, means[-1] / total)
    return EquilibriumState(lam=float(lam), eps=float(eps), omega=omega)


def equilibrium_canonical(p, beta, densities=None):
    """Gibbs-weighted level masses, normalized to a diagonal state.

    Weights are exp(-beta*lam) integrated against each density, using a
    max-shift so large |beta| cannot overflow. The grid must reach far
    enough that the boundary weight is negligible.
    """
    beta = float(beta)
    if densities is None:
        densities = spectral_density(p)
    lam = densities.grid
    shift = float(np.max(-beta * lam))
    weight = np.exp(-beta * lam - shift)
    dens_floor = 1e-6 * max(float(densities.nu_plus.max()),
                            float(densities.nu_minus.max()))
    masses = {}
    peak = 0.0
    edge = 0.0
    for alpha in (1, -1):
        nu = densities.component(alpha)
        profile = weight * nu
        masses[alpha] = float(np.trapezoid(profile, lam))
        peak = max(peak, float(profile.max()))
        # only a genuinely truncated density signals missing tail mass;
        # the inversion noise floor at the boundary is not evidence
        for end in (0, -1):
            if nu[end] > dens_floor:
                edge = max(edge, float(profile[end]))
    if edge > 1e-9 * peak:
        raise TailOverflowError(
            f"Gibbs weight at the grid boundary is {edge:.3g} against peak "
            f"{peak:.3g}; extend the grid for beta={beta:.6g}")
    total = masses[1] + masses[-1]
    return TwoLevelState.diagonal(masses[1] / total, masses[-1] / total)
