"""Reservoir spectral measures and their integral transforms.

A reservoir is described by a probability measure on the real line.  Five
variants are supported: finite atom lists, the semicircle law, uniform
boxes, truncated Gaussians, and tabulated piecewise-linear densities.
Every variant exposes the same surface:

* ``stieltjes(z)``      -- integral of 1/(E - z) against the measure,
* ``stieltjes_deriv(z)``-- integral of 1/(E - z)^2,
* ``boundary(lam)``     -- principal value plus half-plane limit on the axis,
* ``fourier(u)``        -- integral of exp(-i u E),
* ``cdf(x)``            -- cumulative distribution,
* ``quantiles(n)``      -- deterministic reservoir levels for finite models.

Closed forms are used wherever the variant admits one; the truncated
Gaussian falls back to adaptive quadrature.  All evaluations accept numpy
arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

from .errors import (
    AtomicMeasureError,
    DivergentTailError,
    MeasureDefinitionError,
    NegativeDensityError,
    NonMonotoneGridError,
    NonNormalizableError,
    RealAxisError,
)

_MASS_TOL = 1e-12
_QUAD_EPS = 1e-12


def _as_complex_array(z):
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag == 0.0):
        raise RealAxisError(
            "Stieltjes transform is defined off the real axis; got Im z = 0")
    return z


def _stable_sinc(x):
    """sin(x)/x with a series fallback near zero."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    xs = np.where(small, 1.0, x)
    out = np.sin(xs) / xs
    return np.where(small, 1.0 - x * x / 6.0, out)


def _stable_sinc1(x):
    """(sin x - x cos x)/x^2, the first-order Fourier moment on [-1, 1]."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    xs = np.where(small, 1.0, x)
    out = (np.sin(xs) - xs * np.cos(xs)) / (xs * xs)
    return np.where(small, x / 3.0 - x ** 3 / 30.0, out)


@dataclass(frozen=True)
class BoundaryValue:
    """Boundary value f(lam + i*0*side) of a Stieltjes transform.

    ``real`` is the principal-value integral, ``imag`` equals
    side * pi * density(lam).
    """

    real: float
    imag: float
    side: int

    @property
    def value(self) -> complex:
        return complex(self.real, self.imag)


@dataclass(frozen=True)
class FourierL1Bound:
    """Numerical L1 bound for the Fourier transform of a measure."""

    value: float
    tail: float
    exponent: float
    cap: float


class SpectralMeasure:
    """Common interface; concrete variants override the numeric kernels."""

    atomic = False

    # -- support and pointwise data -------------------------------------
    @property
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    @property
    def support_radius(self) -> float:
        lo, hi = self.support
        return max(abs(lo), abs(hi))

    def mean(self) -> float:
        raise NotImplementedError

    def density(self, x):
        raise AtomicMeasureError(
            f"{type(self).__name__} has no density component")

    def sup_density(self) -> float:
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    # -- transforms -----------------------------------------------------
    def stieltjes(self, z):
        raise NotImplementedError

    def stieltjes_deriv(self, z):
        raise NotImplementedError

    def fourier(self, u):
        raise NotImplementedError

    def boundary(self, lam: float, side: int = 1) -> BoundaryValue:
        raise NotImplementedError

    # -- quantiles ------------------------------------------------------
    def quantiles(self, n: int) -> np.ndarray:
        """Deterministic levels E_j = F^{-1}((j - 1/2)/n), ascending."""
        if n < 1:
            raise MeasureDefinitionError("quantile count must be >= 1")
        lo, hi = self.support
        qs = (np.arange(n) + 0.5) / n
        out = np.empty(n)
        for i, q in enumerate(qs):
            out[i] = optimize.brentq(
                lambda x, q=q: self.cdf(x) - q, lo, hi, xtol=1e-13)
        return out

    def describe(self) -> dict:
        raise NotImplementedError


# ----------------------------------------------------------------------
# atoms


@dataclass(frozen=True, eq=False)
class Atoms(SpectralMeasure):
    locations: np.ndarray
    weights: np.ndarray

    atomic = True

    def __init__(self, locations, weights):
        locations = np.atleast_1d(np.asarray(locations, dtype=float))
        weights = np.atleast_1d(np.asarray(weights, dtype=float))
        if locations.shape != weights.shape or locations.ndim != 1:
            raise MeasureDefinitionError(
                "atom locations and weights must be 1-d arrays of equal length")
        if locations.size == 0:
            raise NonNormalizableError("an atomic measure needs at least one atom")
        if np.any(weights < 0):
            raise NegativeDensityError("atom weights must be nonnegative")
        total = weights.sum()
        if not np.isfinite(total) or total <= 0:
            raise NonNormalizableError(f"atom weights sum to {total}")
        order = np.argsort(locations, kind="stable")
        object.__setattr__(self, "locations", locations[order])
        object.__setattr__(self, "weights", weights[order] / total)

    @property
    def support(self):
        return float(self.locations[0]), float(self.locations[-1])

    def mean(self):
        return float(self.weights @ self.locations)

    def sup_density(self):
        return math.inf

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return (self.weights[:, None] *
                (self.locations[:, None] <= x.ravel()[None, :])
                ).sum(axis=0).reshape(x.shape)

    def stieltjes(self, z):
        z = _as_complex_array(z)
        flat = z.ravel()
        out = (self.weights[:, None] /
               (self.locations[:, None] - flat[None, :])).sum(axis=0)
        return out.reshape(z.shape)

    def stieltjes_deriv(self, z):
        z = _as_complex_array(z)
        flat = z.ravel()
        out = (self.weights[:, None] /
               (self.locations[:, None] - flat[None, :]) ** 2).sum(axis=0)
        return out.reshape(z.shape)

    def fourier(self, u):
        u = np.asarray(u, dtype=float)
        flat = u.ravel()
        out = (self.weights[:, None] *
               np.exp(-1j * flat[None, :] * self.locations[:, None])).sum(axis=0)
        return out.reshape(u.shape)

    def boundary(self, lam, side=1):
        raise AtomicMeasureError(
            "boundary values are undefined for purely atomic measures")

    def quantiles(self, n):
        """Round weight*n copies per atom, with drift-free cumulative quota.

        Rounding the cumulative weights keeps every partial count within
        1/2 of n*F, so the empirical distribution stays within 1/n of the
        measure even when many remainders tie.
        """
        if n < 1:
            raise MeasureDefinitionError("quantile count must be >= 1")
        cum = np.rint(np.cumsum(self.weights) * n).astype(int)
        cum[-1] = n
        counts = np.diff(np.concatenate([[0], cum]))
        return np.repeat(self.locations, counts)

    def describe(self):
        return {"type": "atoms",
                "locations": self.locations.tolist(),
                "weights": self.weights.tolist()}


# ----------------------------------------------------------------------
# semicircle


@dataclass(frozen=True)
class Semicircle(SpectralMeasure):
    radius: float

    def __init__(self, radius):
        radius = float(radius)
        if not (radius > 0 and math.isfinite(radius)):
            raise MeasureDefinitionError(f"semicircle radius must be > 0, got {radius}")
        object.__setattr__(self, "radius", radius)

    @property
    def support(self):
        return -self.radius, self.radius

    def mean(self):
        return 0.0

    def density(self, x):
        x = np.asarray(x, dtype=float)
        r = self.radius
        inside = np.abs(x) <= r
        vals = np.zeros_like(x, dtype=float)
        vals[inside] = 2.0 * np.sqrt(r * r - x[inside] ** 2) / (math.pi * r * r)
        return vals

    def sup_density(self):
        return 2.0 / (math.pi * self.radius)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        u = np.clip(x / self.radius, -1.0, 1.0)
        return 0.5 + (u * np.sqrt(1.0 - u * u) + np.arcsin(u)) / math.pi

    def _sqrt_branch(self, z):
        # sqrt(z - r) * sqrt(z + r) with principal roots behaves like z at
        # infinity in both half planes, which keeps the transform Herglotz.
        r = self.radius
        return np.sqrt(z - r) * np.sqrt(z + r)

    def stieltjes(self, z):
        z = _as_complex_array(z)
        r = self.radius
        return 2.0 * (-z + self._sqrt_branch(z)) / (r * r)

    def stieltjes_deriv(self, z):
        z = _as_complex_array(z)
        r = self.radius
        return 2.0 * (-1.0 + z / self._sqrt_branch(z)) / (r * r)

    def fourier(self, u):
        u = np.asarray(u, dtype=float)
        x = self.radius * u
        small = np.abs(x) < 1e-6
        xs = np.where(small, 1.0, x)
        out = 2.0 * special.j1(xs) / xs
        return np.where(small, 1.0 - x * x / 8.0, out)

    def boundary(self, lam, side=1):
        lam = float(lam)
        r = self.radius
        if abs(lam) <= r:
            real = -2.0 * lam / (r * r)
        else:
            real = 2.0 * (-lam + math.copysign(
                math.sqrt(lam * lam - r * r), lam)) / (r * r)
        dens = float(self.density(np.array(lam)))
        return BoundaryValue(real=real, imag=side * math.pi * dens, side=side)

    def describe(self):
        return {"type": "semicircle", "radius": self.radius}


# ----------------------------------------------------------------------
# uniform box


@dataclass(frozen=True)
class Uniform(SpectralMeasure):
    a: float
    b: float

    def __init__(self, a, b):
        a, b = float(a), float(b)
        if not (math.isfinite(a) and math.isfinite(b) and a < b):
            raise MeasureDefinitionError(f"uniform needs a < b, got ({a}, {b})")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def support(self):
        return self.a, self.b

    def mean(self):
        return 0.5 * (self.a + self.b)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        h = 1.0 / (self.b - self.a)
        return np.where((x >= self.a) & (x <= self.b), h, 0.0)

    def sup_density(self):
        return 1.0 / (self.b - self.a)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip((x - self.a) / (self.b - self.a), 0.0, 1.0)

    def stieltjes(self, z):
        z = _as_complex_array(z)
        return (np.log(self.b - z) - np.log(self.a - z)) / (self.b - self.a)

    def stieltjes_deriv(self, z):
        z = _as_complex_array(z)
        return (1.0 / (self.a - z) - 1.0 / (self.b - z)) / (self.b - self.a)

    def fourier(self, u):
        u = np.asarray(u, dtype=float)
        m = 0.5 * (self.a + self.b)
        h = 0.5 * (self.b - self.a)
        return np.exp(-1j * u * m) * _stable_sinc(u * h)

    def boundary(self, lam, side=1):
        lam = float(lam)
        a, b = self.a, self.b
        with np.errstate(divide="ignore"):
            real = float(np.log(abs(b - lam)) - np.log(abs(a - lam)))
        real /= (b - a)
        dens = float(self.density(np.array(lam)))
        return BoundaryValue(real=real, imag=side * math.pi * dens, side=side)

    def quantiles(self, n):
        qs = (np.arange(n) + 0.5) / n
        return self.a + qs * (self.b - self.a)

    def describe(self):
        return {"type": "uniform", "a": self.a, "b": self.b}


# ----------------------------------------------------------------------
# truncated Gaussian


@dataclass(frozen=True)
class GaussianTrunc(SpectralMeasure):
    sigma: float
    halfwidth: float  # truncation point in units of sigma

    def __init__(self, sigma, halfwidth=8.0):
        sigma, halfwidth = float(sigma), float(halfwidth)
        if not (sigma > 0 and math.isfinite(sigma)):
            raise MeasureDefinitionError(f"sigma must be > 0, got {sigma}")
        if not (halfwidth > 0 and math.isfinite(halfwidth)):
            raise MeasureDefinitionError(
                f"truncation halfwidth must be > 0, got {halfwidth}")
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "halfwidth", halfwidth)
        object.__setattr__(self, "_norm",
                           float(special.erf(halfwidth / math.sqrt(2.0))))

    @property
    def support(self):
        w = self.sigma * self.halfwidth
        return -w, w

    def mean(self):
        return 0.0

    def density(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.support
        z = np.exp(-0.5 * (x / self.sigma) ** 2)
        z /= self.sigma * math.sqrt(2.0 * math.pi) * self._norm
        return np.where((x >= lo) & (x <= hi), z, 0.0)

    def sup_density(self):
        return 1.0 / (self.sigma * math.sqrt(2.0 * math.pi) * self._norm)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        lo, _ = self.support
        raw = 0.5 * (special.erf(x / (self.sigma * math.sqrt(2.0)))
                     - special.erf(lo / (self.sigma * math.sqrt(2.0))))
        return np.clip(raw / self._norm, 0.0, 1.0)

    def _quad_complex(self, kernel, points=None):
        re = integrate.quad(lambda e: kernel(e).real, *self.support,
                            points=points, limit=400, epsabs=_QUAD_EPS,
                            epsrel=1e-10)[0]
        im = integrate.quad(lambda e: kernel(e).imag, *self.support,
                            points=points, limit=400, epsabs=_QUAD_EPS,
                            epsrel=1e-10)[0]
        return complex(re, im)

    def _stieltjes_scalar(self, z, power):
        lo, hi = self.support
        x = z.real
        points = [x] if (lo < x < hi and abs(z.imag) < 0.1) else None
        return self._quad_complex(
            lambda e: float(self.density(np.array(e))) / (e - z) ** power,
            points=points)

    def stieltjes(self, z):
        z = _as_complex_array(z)
        flat = z.ravel()
        out = np.array([self._stieltjes_scalar(w, 1) for w in flat])
        return out.reshape(z.shape)

    def stieltjes_deriv(self, z):
        z = _as_complex_array(z)
        flat = z.ravel()
        out = np.array([self._stieltjes_scalar(w, 2) for w in flat])
        return out.reshape(z.shape)

    def fourier(self, u):
        # completed square plus a scaled-erfc truncation correction; the
        # scaled form avoids overflow of erf at large imaginary argument
        u = np.asarray(u, dtype=float)
        x = self.halfwidth / math.sqrt(2.0)
        y = self.sigma * u / math.sqrt(2.0)
        corr = math.exp(-x * x) * (
            np.exp(-2j * x * y) * special.erfcx(x + 1j * y)).real
        return (np.exp(-0.5 * (self.sigma * u) ** 2) - corr) / self._norm + 0.0j

    def boundary(self, lam, side=1):
        lam = float(lam)
        lo, hi = self.support
        dens_l = float(self.density(np.array(lam)))
        if lo < lam < hi:
            def kernel(e):
                d = e - lam
                if d == 0.0:
                    # removable: slope of the density at lam
                    return float(-lam / self.sigma ** 2 *
                                 self.density(np.array(lam)))
                return (float(self.density(np.array(e))) - dens_l) / d
            pv = integrate.quad(kernel, lo, hi, points=[lam], limit=400,
                                epsabs=_QUAD_EPS, epsrel=1e-10)[0]
            pv += dens_l * math.log((hi - lam) / (lam - lo))
        else:
            pv = integrate.quad(
                lambda e: float(self.density(np.array(e))) / (e - lam),
                lo, hi, limit=400, epsabs=_QUAD_EPS, epsrel=1e-10)[0]
        return BoundaryValue(real=pv, imag=side * math.pi * dens_l, side=side)

    def describe(self):
        return {"type": "gaussian", "sigma": self.sigma,
                "truncation": self.halfwidth}


# ----------------------------------------------------------------------
# tabulated piecewise-linear density


@dataclass(frozen=True, eq=False)
class Tabulated(SpectralMeasure):
    grid: np.ndarray
    values: np.ndarray

    def __init__(self, grid, values):
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
            raise MeasureDefinitionError(
                "tabulated measure needs matching 1-d grid/values, length >= 2")
        if np.any(np.diff(grid) <= 0):
            raise NonMonotoneGridError("tabulated grid must be strictly increasing")
        if np.any(values < 0):
            raise NegativeDensityError("tabulated density values must be >= 0")
        mass = np.trapezoid(values, grid)
        if not np.isfinite(mass) or mass <= 0:
            raise NonNormalizableError(f"tabulated density has mass {mass}")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values / mass)

    @property
    def support(self):
        return float(self.grid[0]), float(self.grid[-1])

    def mean(self):
        x, p = self.grid, self.values
        # exact first moment of the piecewise-linear density
        seg = np.diff(x) * (p[:-1] * (2 * x[:-1] + x[1:]) +
                            p[1:] * (x[:-1] + 2 * x[1:])) / 6.0
        return float(seg.sum())

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return np.interp(x, self.grid, self.values, left=0.0, right=0.0)

    def sup_density(self):
        return float(self.values.max())

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        cum = np.concatenate([[0.0], np.cumsum(
            0.5 * np.diff(self.grid) * (self.values[:-1] + self.values[1:]))])
        idx = np.clip(np.searchsorted(self.grid, x, side="right") - 1,
                      0, len(self.grid) - 2)
        x0 = self.grid[idx]
        p0 = self.values[idx]
        slope = (self.values[idx + 1] - p0) / (self.grid[idx + 1] - x0)
        d = np.clip(x - x0, 0.0, self.grid[idx + 1] - x0)
        out = cum[idx] + p0 * d + 0.5 * slope * d * d
        out = np.where(x <= self.grid[0], 0.0, out)
        out = np.where(x >= self.grid[-1], 1.0, out)
        return np.clip(out, 0.0, 1.0)

    def _segment_sums(self, z, power):
        """Exact per-segment integrals of rho(E)/(E-z)^power, chunked in z."""
        x0, x1 = self.grid[:-1], self.grid[1:]
        p0 = self.values[:-1]
        slope = np.diff(self.values) / np.diff(self.grid)
        width = np.diff(self.grid)
        flat = z.ravel()
        out = np.empty(flat.shape, dtype=complex)
        chunk = max(1, 2 ** 22 // max(1, x0.size))
        for start in range(0, flat.size, chunk):
            w = flat[start:start + chunk][:, None]
            la = np.log(x0[None, :] - w)
            lb = np.log(x1[None, :] - w)
            coef = p0[None, :] + slope[None, :] * (w - x0[None, :])
            if power == 1:
                seg = slope[None, :] * width[None, :] + coef * (lb - la)
            else:
                inv_a = 1.0 / (x0[None, :] - w)
                inv_b = 1.0 / (x1[None, :] - w)
                seg = slope[None, :] * (lb - la) + coef * (inv_a - inv_b)
            out[start:start + chunk] = seg.sum(axis=1)
        return out.reshape(z.shape)

    def stieltjes(self, z):
        return self._segment_sums(_as_complex_array(z), 1)

    def stieltjes_deriv(self, z):
        return self._segment_sums(_as_complex_array(z), 2)

    def fourier(self, u):
        u = np.asarray(u, dtype=float)
        x0, x1 = self.grid[:-1], self.grid[1:]
        mid = 0.5 * (x0 + x1)
        half = 0.5 * (x1 - x0)
        p0 = self.values[:-1]
        p1 = self.values[1:]
        cmid = 0.5 * (p0 + p1)
        cslope = 0.5 * (p1 - p0)  # density = cmid + cslope * (E - mid)/half
        flat = u.ravel()
        arg = flat[:, None] * half[None, :]
        base = np.exp(-1j * flat[:, None] * mid[None, :]) * half[None, :]
        seg = base * (2.0 * cmid[None, :] * _stable_sinc(arg)
                      - 2j * cslope[None, :] * _stable_sinc1(arg))
        return seg.sum(axis=1).reshape(u.shape)

    def boundary(self, lam, side=1):
        lam = float(lam)
        lo, hi = self.support
        x0, x1 = self.grid[:-1], self.grid[1:]
        p0 = self.values[:-1]
        slope = np.diff(self.values) / np.diff(self.grid)
        width = np.diff(self.grid)
        dens_l = float(self.density(np.array(lam)))
        if lo < lam < hi:
            # subtract the value at lam; the hosting segment integrates to
            # slope * width exactly, the rest keeps real logarithms
            with np.errstate(divide="ignore", invalid="ignore"):
                la = np.log(np.abs(x0 - lam))
                lb = np.log(np.abs(x1 - lam))
                coef = (p0 - dens_l) + slope * (lam - x0)
                seg = slope * width + coef * (lb - la)
            hosts = (x0 <= lam) & (lam <= x1)
            seg[hosts] = slope[hosts] * width[hosts]
            pv = float(seg.sum()) + dens_l * math.log((hi - lam) / (lam - lo))
        else:
            la = np.log(np.abs(x0 - lam))
            lb = np.log(np.abs(x1 - lam))
            coef = p0 + slope * (lam - x0)
            pv = float((slope * width + coef * (lb - la)).sum())
        return BoundaryValue(real=pv, imag=side * math.pi * dens_l, side=side)

    def describe(self):
        return {"type": "tabulated", "grid": self.grid.tolist(),
                "values": self.values.tolist()}


# ----------------------------------------------------------------------
# factory and module-level operations


def make_measure(spec: dict) -> SpectralMeasure:
    """Build a measure from a tagged dictionary, e.g. from a config file."""
    if not isinstance(spec, dict) or "type" not in spec:
        raise MeasureDefinitionError(
            "measure spec must be a dict with a 'type' tag")
    kind = spec["type"]
    try:
        if kind == "atoms":
            return Atoms(spec["locations"], spec["weights"])
        if kind == "semicircle":
            return Semicircle(spec["radius"])
        if kind == "uniform":
            return Uniform(spec["a"], spec["b"])
        if kind == "gaussian":
            return GaussianTrunc(spec["sigma"], spec.get("truncation", 8.0))
        if kind == "tabulated":
            return Tabulated(spec["grid"], spec["values"])
    except KeyError as exc:
        raise MeasureDefinitionError(
            f"measure spec for '{kind}' is missing key {exc}") from exc
    raise MeasureDefinitionError(f"unknown measure type '{kind}'")


def stieltjes_transform(measure: SpectralMeasure, z):
    """Integral of 1/(E - z) against the measure, Im z != 0."""
    return measure.stieltjes(z)


def stieltjes_boundary(measure: SpectralMeasure, lam: float,
                       side: int = 1) -> BoundaryValue:
    """Boundary value on the real axis: principal value + i*pi*density*side."""
    if side not in (1, -1):
        raise MeasureDefinitionError(f"side must be +1 or -1, got {side}")
    return measure.boundary(lam, side)


def fourier_transform(measure: SpectralMeasure, u):
    """Integral of exp(-i u E) against the measure."""
    return measure.fourier(u)


def quantile_eigenvalues(measure: SpectralMeasure, n: int) -> np.ndarray:
    """Deterministic reservoir levels; midpoints of equal-mass slices."""
    return measure.quantiles(n)


def fourier_l1_bound(measure: SpectralMeasure, cap: float = 200.0,
                     min_exponent: float = 1.1) -> FourierL1Bound:
    """Numerically integrate |fourier(u)| over [-cap, cap] with a tail fit.

    The tail envelope is fit as C * u^(-p) on the last half-decade; when the
    fitted p indicates a non-integrable tail a DivergentTailError is raised.
    """
    if cap <= 0:
        raise MeasureDefinitionError(f"cap must be > 0, got {cap}")
    radius = max(measure.support_radius, 1e-3)
    du = min(0.02, math.pi / (20.0 * radius))
    u = np.arange(0.0, cap + du, du)
    mags = np.abs(measure.fourier(u))
    value = 2.0 * float(np.trapezoid(mags, u))

    # envelope on [cap/2, cap]: window maxima flatten the oscillation
    sel = u >= cap / 2.0
    uu, mm = u[sel], mags[sel]
    nwin = 32
    edges = np.linspace(uu[0], uu[-1], nwin + 1)
    centers, peaks = [], []
    for i in range(nwin):
        m = (uu >= edges[i]) & (uu <= edges[i + 1])
        if m.any():
            centers.append(0.5 * (edges[i] + edges[i + 1]))
            peaks.append(mm[m].max())
    centers = np.array(centers)
    peaks = np.maximum(np.array(peaks), 1e-300)
    if peaks.max() < 1e-12:
        # envelope below numerical resolution; the tail cannot contribute
        tail = 2.0 * float(peaks.max()) * cap
        return FourierL1Bound(value=value + tail, tail=tail,
                              exponent=math.inf, cap=cap)
    slope, intercept = np.polyfit(np.log(centers), np.log(peaks), 1)
    exponent = -slope
    if exponent <= min_exponent:
        raise DivergentTailError(
            f"Fourier envelope decays like u^-{exponent:.3f}; the L1 bound "
            f"does not converge (need exponent > {min_exponent})")
    c_fit = math.exp(intercept)
    tail = 2.0 * c_fit * cap ** (1.0 - exponent) / (exponent - 1.0)
    return FourierL1Bound(value=value + tail, tail=tail,
                          exponent=exponent, cap=cap)
