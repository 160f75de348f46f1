"""Infinite-reservoir dynamics via contour quadrature.

The reduced density matrix in the large-reservoir limit is a double
contour integral over two horizontal lines bracketing the real axis.
Every integrand factor is built from the solved transform pair, so each
line is solved once and shared by all times, entries, and reservoir
energies. The free (uncoupled) poles are taken out analytically: their
residues carry the bare phases exactly, and the remaining kernels decay
like |z|^{-2} or faster, which keeps truncated lines honest. Truncation
and panel resolution are certified by doubling/halving until the result
stops moving at the requested tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DenominatorNearZeroError, QuadratureBudgetError
from .quadrature import PanelQuadrature, panel_edges
from .selfconsistent import ModelParams, solve_on_grid
from .state import Trajectory, TwoLevelState, level_index

_SIGNS = (1, -1)
_DENOM_FLOOR = 1e-6


@dataclass(frozen=True)
class ContourSpec:
    """Geometry and budget of the two quadrature lines.

    ``eta1`` is the offset of the upper line, ``eta2`` of the lower one,
    ``x`` the initial truncation half-width. ``fine_width`` is the panel
    width used over the spectral region (defaults to half the smaller
    offset); outside it panels grow geometrically.
    """

    eta1: float
    eta2: float
    x: float
    tol: float = 1e-5
    fine_width: float | None = None
    # the oscillatory weights are exact per panel, so far-field panels
    # are limited only by how well polynomials track the smooth tails
    max_width: float = 16.0
    growth: float = 1.4
    order: int = 8

    def __post_init__(self):
        if self.eta1 <= 0 or self.eta2 <= 0:
            raise ValueError("contour offsets must be positive")
        if self.x <= 0 or self.tol <= 0:
            raise ValueError("truncation and tolerance must be positive")

    def start_width(self):
        if self.fine_width is not None:
            return self.fine_width
        return 0.5 * min(self.eta1, self.eta2)


def default_eta(t):
    """Offset schedule keeping the growth factor e^{t eta} below e."""
    return min(0.5, 1.0 / (1.0 + float(t)))


def default_contour(p, t, tol=1e-5):
    eta = default_eta(t)
    return ContourSpec(eta1=eta, eta2=eta,
                       x=p.measure.support_radius + 10.0, tol=tol)


@dataclass(frozen=True, eq=False)
class _Line:
    """One solved horizontal line: nodes, transforms, shifted arguments."""

    quad: PanelQuadrature
    z: np.ndarray
    f_plus: np.ndarray
    f_minus: np.ndarray
    w_plus: np.ndarray
    w_minus: np.ndarray
    eta: float
    side: int

    def f(self, alpha):
        return self.f_plus if alpha > 0 else self.f_minus

    def w(self, alpha):
        return self.w_plus if alpha > 0 else self.w_minus


def _fine_region(p, energy=None):
    lo, hi = p.measure.support
    reach = p.splitting + 2.0 * p.coupling + 0.5
    fine_lo, fine_hi = lo - reach, hi + reach
    if energy is not None:
        fine_lo = min(fine_lo, energy - p.splitting - 1.0)
        fine_hi = max(fine_hi, energy + p.splitting + 1.0)
    return fine_lo, fine_hi


def _build_line(p, side, eta, x, width, spec, energy, solver_tol):
    fine_lo, fine_hi = _fine_region(p, energy)
    edges = panel_edges(-x, x, fine_lo, fine_hi, width,
                        max_width=spec.max_width, growth=spec.growth)
    quad = PanelQuadrature(edges, spec.order)
    pairs = solve_on_grid(p, quad.nodes, eta, tol=solver_tol)
    fp, fm = pairs.f_plus, pairs.f_minus
    if side < 0:
        fp, fm = np.conj(fp), np.conj(fm)
    z = quad.nodes + 1j * side * eta
    v2 = p.coupling ** 2
    s = p.splitting
    return _Line(quad=quad, z=z, f_plus=fp, f_minus=fm,
                 w_plus=z - s + v2 * fm, w_minus=z + s + v2 * fp,
                 eta=eta, side=side)


# ----------------------------------------------------------------------
# pointwise kernels


def f_E(p, E, z, pair):
    """Diagonal resolvent kernel 1/(E + alpha*s - z - v^2 f_{-alpha}(z))."""
    v2 = p.coupling ** 2
    s = p.splitting
    up = 1.0 / (E + s - z - v2 * pair.f_minus)
    down = 1.0 / (E - s - z - v2 * pair.f_plus)
    return np.diag([up, down])


def two_point(p, beta, gamma, z1, z2, pairs):
    """Reservoir average of the product of two resolvent kernels.

    Partial fractions reduce the energy integral to a difference
    quotient of the solved transforms; the removable z1 -> z2 limit is
    the derivative of the base transform.
    """
    pair1, pair2 = pairs
    v2 = p.coupling ** 2
    s = p.splitting
    w1 = z1 - beta * s + v2 * pair1.f(-beta)
    w2 = z2 - gamma * s + v2 * pair2.f(-gamma)
    den = w1 - w2
    if abs(den) < 1e-8:
        return complex(p.measure.stieltjes_deriv(0.5 * (w1 + w2)))
    return (pair1.f(beta) - pair2.f(gamma)) / den


# ----------------------------------------------------------------------
# certification driver


def _certify(evaluate, x0, width0, tol, label, max_doublings=6):
    """Double the truncation, then halve the panels, until stationary."""
    width = width0
    for _ in range(2):
        x = x0
        val = evaluate(x, width)
        accepted = False
        for _ in range(max_doublings):
            nxt = evaluate(2.0 * x, width)
            delta = float(np.max(np.abs(nxt - val)))
            val, x = nxt, 2.0 * x
            if delta < 0.5 * tol:
                accepted = True
                break
        if not accepted:
            raise QuadratureBudgetError(
                f"{label}: truncation at half-width {x:.3g} still moves the "
                f"result by {delta:.3g} (target {0.5 * tol:.3g})")
        fine = evaluate(x, 0.5 * width)
        if float(np.max(np.abs(fine - val))) < 0.5 * tol:
            return fine
        width *= 0.5
    raise QuadratureBudgetError(
        f"{label}: panel refinement at width {width:.3g} did not settle "
        f"within {tol:.3g}")


# ----------------------------------------------------------------------
# one-point propagators


def _phase_factors(line, t):
    """Quadrature weights and growth factor for e^{izt} along the line.

    On the upper line the propagator carries e^{-izt}; on the lower one
    e^{+izt}. Both reduce to a real frequency on the nodes and a bounded
    factor e^{t eta}.
    """
    theta = -t if line.side > 0 else t
    return line.quad.weights(theta), math.exp(t * line.eta)


def _free_energies(p, E):
    return {alpha: E + alpha * p.splitting for alpha in _SIGNS}


def _resolvent_corrections(p, E, line):
    """The kernels v^2 f_{-a}(z) f_a(E,z)/(E_a - z), decaying as |z|^-3."""
    v2 = p.coupling ** 2
    out = {}
    for alpha in _SIGNS:
        e_free = E + alpha * p.splitting
        kernel = 1.0 / (E - line.w(alpha))
        out[alpha] = v2 * line.f(-alpha) * kernel / (e_free - line.z)
    return out


def u_E(p, E, t, contour=None, tol=1e-6, solver_tol=1e-10):
    """Diagonal propagator at fixed reservoir energy E.

    The free pole contributes e^{i E_a t} exactly; the coupling
    correction is a line integral below the real axis.
    """
    t = float(t)
    if t < 0:
        raise ValueError("time must be >= 0")
    free = _free_energies(p, E)
    if p.coupling == 0.0:
        return np.diag([np.exp(1j * free[1] * t), np.exp(1j * free[-1] * t)])
    spec = contour if contour is not None else default_contour(p, t, tol)

    def evaluate(x, width):
        line = _build_line(p, -1, spec.eta2, x, width, spec, E, solver_tol)
        weights, grow = _phase_factors(line, t)
        kernels = _resolvent_corrections(p, E, line)
        vals = [np.exp(1j * free[a] * t)
                + 1j * grow / (2.0 * math.pi) * np.sum(weights * kernels[a])
                for a in _SIGNS]
        return np.array(vals)

    entries = _certify(evaluate, spec.x, spec.start_width(), tol,
                       "propagator quadrature")
    return np.diag(entries)


def u_mean(p, t, contour=None, tol=1e-6, solver_tol=1e-10):
    """Reservoir-averaged diagonal propagator, equal to the transform of
    the level-resolved spectral measures.

    The pole at the shifted mean is removed analytically, leaving a
    kernel that decays like |z|^{-3}.
    """
    t = float(t)
    if t < 0:
        raise ValueError("time must be >= 0")
    m = p.measure
    if p.coupling == 0.0:
        base = complex(m.fourier(-t))
        return np.diag([np.exp(1j * p.splitting * t) * base,
                        np.exp(-1j * p.splitting * t) * base])
    spec = contour if contour is not None else default_contour(p, t, tol)
    centers = {alpha: m.mean() + alpha * p.splitting for alpha in _SIGNS}

    def evaluate(x, width):
        line = _build_line(p, -1, spec.eta2, x, width, spec, None, solver_tol)
        weights, grow = _phase_factors(line, t)
        vals = []
        for alpha in _SIGNS:
            kernel = line.f(alpha) - 1.0 / (centers[alpha] - line.z)
            vals.append(np.exp(1j * centers[alpha] * t)
                        + 1j * grow / (2.0 * math.pi)
                        * np.sum(weights * kernel))
        return np.array(vals)

    entries = _certify(evaluate, spec.x, spec.start_width(), tol,
                       "mean propagator quadrature")
    return np.diag(entries)


# ----------------------------------------------------------------------
# reduced density matrix


def _free_evolution(p, times, rho0):
    states = np.empty((len(times), 2, 2), dtype=complex)
    s = p.splitting
    for a, alpha in enumerate(_SIGNS):
        for d, delta in enumerate(_SIGNS):
            phase = np.exp(-1j * np.asarray(times) * s * (alpha - delta))
            states[:, a, d] = phase * rho0[a, d]
    return states


def _reduced_stack(p, E, times, rho0, spec, x, width, solver_tol,
                   chunk=128):
    """All requested times at one contour geometry.

    Returns the (T, 2, 2) stack and the smallest two-point denominator
    seen on the product grid.
    """
    line1 = _build_line(p, +1, spec.eta1, x, width, spec, E, solver_tol)
    line2 = _build_line(p, -1, spec.eta2, x, width, spec, E, solver_tol)
    times = np.asarray(times, dtype=float)
    v2 = p.coupling ** 2
    v4 = v2 * v2
    free = _free_energies(p, E)

    omega1 = np.stack([_phase_factors(line1, t)[0] for t in times])
    omega2 = np.stack([_phase_factors(line2, t)[0] for t in times])
    grow1 = np.exp(times * line1.eta)
    grow2 = np.exp(times * line2.eta)

    kern1 = {a: 1.0 / (E - line1.w(a)) for a in _SIGNS}
    kern2 = {a: 1.0 / (E - line2.w(a)) for a in _SIGNS}
    corr1 = _resolvent_corrections(p, E, line1)
    corr2 = _resolvent_corrections(p, E, line2)

    # separable part: the two line factors, free residues plus corrections
    p1 = {a: 1j * np.exp(-1j * free[a] * times)
          + grow1 / (2.0 * math.pi) * (omega1 @ corr1[a])
          for a in _SIGNS}
    p2 = {d: -1j * np.exp(1j * free[d] * times)
          + grow2 / (2.0 * math.pi) * (omega2 @ corr2[d])
          for d in _SIGNS}

    acc = {(a, d): np.zeros(len(times), dtype=complex)
           for a in _SIGNS for d in _SIGNS}
    min_denom = np.inf
    n2 = len(line2.z)
    for start in range(0, n2, chunk):
        sel = slice(start, min(start + chunk, n2))
        g = {}
        for beta in _SIGNS:
            for gamma in _SIGNS:
                num = line1.f(beta)[:, None] - line2.f(gamma)[None, sel]
                den = line1.w(beta)[:, None] - line2.w(gamma)[None, sel]
                g[beta, gamma] = num / den
        denom = {1: 1.0 - v4 * g[1, 1] * g[-1, -1],
                 -1: 1.0 - v4 * g[1, -1] * g[-1, 1]}
        min_denom = min(min_denom, float(np.abs(denom[1]).min()),
                        float(np.abs(denom[-1]).min()))
        for a in _SIGNS:
            for d in _SIGNS:
                dmat = denom[1] if a == d else denom[-1]
                own = kern1[a][:, None] * kern2[d][None, sel] \
                    * rho0[level_index(a), level_index(d)]
                cross = v2 * kern1[-a][:, None] * kern2[-d][None, sel] \
                    * rho0[level_index(-a), level_index(-d)]
                remainder = own * (1.0 / dmat - 1.0) + cross * g[a, d] / dmat
                partial = omega1 @ remainder
                acc[a, d] += np.einsum("tj,tj->t", partial, omega2[:, sel])

    if min_denom < _DENOM_FLOOR:
        raise DenominatorNearZeroError(
            f"two-point denominator reached {min_denom:.3g} on the contour "
            f"(offsets {spec.eta1:.3g}/{spec.eta2:.3g})")

    states = np.empty((len(times), 2, 2), dtype=complex)
    scale = grow1 * grow2 / (2.0 * math.pi) ** 2
    for a in _SIGNS:
        for d in _SIGNS:
            sep = p1[a] * p2[d] * rho0[level_index(a), level_index(d)]
            states[:, level_index(a), level_index(d)] = sep + scale * acc[a, d]
    return states, min_denom


def evolve(p, E, times, rho0, contour=None, tol=1e-5, solver_tol=1e-10):
    """Reduced density matrix trajectory in the infinite-reservoir limit.

    One contour geometry is shared by all times (the offsets follow the
    largest time), so the transform solves and the two-point grid are
    amortized across the trajectory.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0:
        raise ValueError("times must be a non-empty 1d array")
    if np.any(times < 0) or np.any(np.diff(times) <= 0):
        raise ValueError("times must be nonnegative and strictly increasing")
    state0 = rho0 if isinstance(rho0, TwoLevelState) else TwoLevelState(rho0)
    state0.validate(tol=1e-10)
    rho_mat = state0.matrix
    lo, hi = p.measure.support
    meta = {"reservoir_energy": float(E),
            "energy_in_support": bool(lo <= E <= hi),
            "splitting": p.splitting, "coupling": p.coupling,
            "tolerance": float(tol)}

    if p.coupling == 0.0:
        states = _free_evolution(p, times, rho_mat)
        meta["method"] = "free"
        return Trajectory(times=times, states=states, meta=meta)

    spec = contour if contour is not None else \
        default_contour(p, float(times[-1]), tol)
    info = {}

    def evaluate(x, width):
        stack, min_denom = _reduced_stack(p, E, times, rho_mat, spec, x,
                                          width, solver_tol)
        info["min_denominator"] = min_denom
        return stack

    try:
        states = _certify(evaluate, spec.x, spec.start_width(), tol,
                          "density quadrature")
    except DenominatorNearZeroError:
        # one automatic retry with doubled offsets before giving up
        spec = replace(spec, eta1=2.0 * spec.eta1, eta2=2.0 * spec.eta2)
        states = _certify(evaluate, spec.x, spec.start_width(), tol,
                          "density quadrature")

    traj = Trajectory(times=times, states=states, meta=meta)
    worst_trace = float(traj.trace_errors().max())
    worst_herm = float(traj.hermiticity_errors().max())
    if worst_trace > 10.0 * tol or worst_herm > 10.0 * tol:
        raise QuadratureBudgetError(
            f"density quadrature internally inconsistent: trace error "
            f"{worst_trace:.3g}, hermiticity error {worst_herm:.3g} "
            f"exceed 10*tol={10.0 * tol:.3g}")
    meta.update(method="contour", eta1=spec.eta1, eta2=spec.eta2,
                min_denominator=info.get("min_denominator"),
                trace_error=worst_trace, herm_error=worst_herm)
    return traj


def rho_limit(p, E, t, rho0, contour=None, tol=1e-5, solver_tol=1e-10):
    """Reduced density matrix at a single time."""
    traj = evolve(p, E, np.array([float(t)]), rho0, contour=contour,
                  tol=tol, solver_tol=solver_tol)
    return traj.state(0)
