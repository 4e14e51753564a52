"""Exponent measures on the extended orthant ``E_d = (-inf, inf]^d``.

A point of ``E_d`` is a float vector whose entries may equal ``numpy.inf``.
An exponent measure ``eta`` is queried through its *orthant mass*

    eta((x, inf]^c) = eta({y : y_i <= x_i for some i with x_i finite}),

and defines the survival function ``S(x) = exp(-orthant_mass(x))`` of the
min-id law ``minid(eta)``.  Coordinates equal to ``inf`` impose no constraint;
the all-infinite point has mass 0, so ``S(inf) = 1``.

Univariate building blocks (``UnivariateMeasure``) describe measures on the
real line through their cumulative function ``t -> m((-inf, t])`` and, when it
exists, their Lebesgue density.  ``ProductLineMeasure`` stacks ``d`` of them on
the coordinate lines ``E_i`` and is the workhorse of every survival model in
this package.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

INF = np.inf

SUPPORT_TAGS = ("full", "lines", "atoms", "custom")


class IntegrationError(RuntimeError):
    """Quadrature did not reach the requested accuracy."""

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


# ---------------------------------------------------------------------------
# points
# ---------------------------------------------------------------------------

def as_point(x, d: int | None = None) -> np.ndarray:
    """Validate and return a point of ``E_d`` as a float array.

    Accepts the string ``"inf"`` for infinite coordinates.
    """
    if isinstance(x, ExtendedPoint):
        arr = np.array(x.coords, dtype=float)
    else:
        arr = np.atleast_1d(np.asarray(_decode_inf(x), dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("an extended point must be a non-empty vector")
    if np.isnan(arr).any() or np.isneginf(arr).any():
        raise ValueError("extended points admit finite reals and +inf only")
    if d is not None and arr.size != d:
        raise ValueError(f"expected a point of dimension {d}, got {arr.size}")
    return arr


def _decode_inf(x):
    if isinstance(x, str):
        if x.strip().lower() in ("inf", "+inf", "infinity"):
            return INF
        return float(x)
    if isinstance(x, (list, tuple)):
        return [_decode_inf(v) for v in x]
    return x


@dataclass(frozen=True)
class ExtendedPoint:
    """Immutable point of ``E_d``; ``inf`` is the sentinel for infinity."""

    coords: tuple

    def __init__(self, coords):
        arr = as_point(coords)
        object.__setattr__(self, "coords", tuple(float(v) for v in arr))

    @property
    def dim(self) -> int:
        return len(self.coords)

    def is_all_infinite(self) -> bool:
        return all(math.isinf(v) for v in self.coords)

    def finite_set(self) -> tuple:
        return tuple(i for i, v in enumerate(self.coords) if not math.isinf(v))

    def as_array(self) -> np.ndarray:
        return np.array(self.coords, dtype=float)

    def embed(self, keep: Sequence[int], d: int) -> "ExtendedPoint":
        """Place these coordinates at positions ``keep`` of an ``inf`` point."""
        out = np.full(d, INF)
        out[list(keep)] = self.coords
        return ExtendedPoint(out)


def embed(x_I, keep: Sequence[int], d: int) -> np.ndarray:
    out = np.full(d, INF)
    out[list(keep)] = as_point(x_I, len(keep))
    return out


class LambdaInfMeasure:
    """The reference measure ``(delta_inf + Lebesgue)`` raised to the power ``p``.

    A point with finite-coordinate set ``D`` lives on the stratum ``E_D``, on
    which the reference measure is ``|D|``-dimensional Lebesgue measure.
    """

    def __init__(self, p: int):
        if p < 1:
            raise ValueError("dimension must be positive")
        self.p = p

    def stratum(self, x) -> tuple:
        x = as_point(x, self.p)
        return tuple(int(i) for i in np.flatnonzero(np.isfinite(x)))

    def lebesgue_dim(self, x) -> int:
        return len(self.stratum(x))

    def strata(self):
        """All finite-coordinate sets, ordered by size."""
        from itertools import combinations

        for k in range(self.p + 1):
            yield from combinations(range(self.p), k)


# ---------------------------------------------------------------------------
# univariate measures
# ---------------------------------------------------------------------------

class UnivariateMeasure(ABC):
    """A measure ``m`` on the real line, finite on every half line ``(-inf, t]``."""

    has_density: bool = True
    is_atomic: bool = False

    @abstractmethod
    def cumulative(self, t):
        """``m((-inf, t])``; at ``t = inf`` the total mass."""

    def hazard(self, t):
        """Lebesgue density of ``m``."""
        raise NotImplementedError(f"{type(self).__name__} has no density")

    def total(self) -> float:
        return float(self.cumulative(np.array([INF]))[0])

    def breakpoints(self) -> np.ndarray:
        """Points where the density or cumulative function may be non-smooth."""
        return np.empty(0)

    def support_lower(self) -> float:
        return -INF

    def inverse(self, v):
        """``inf{t : m((-inf, t]) >= v}``, ``inf`` when ``v`` exceeds the total."""
        return _numeric_inverse(self, v)

    def sample_first_hit(self, size, rng):
        """Draws of ``inf{t : m((-inf,t]) >= E}`` for unit exponentials ``E``."""
        return self.inverse(rng.exponential(size=size))

    def scaled(self, c: float) -> "UnivariateMeasure":
        if c == 1.0:
            return self
        return Scaled1D(self, c)

    def e_factor(self, x):
        """Density of ``minid(m)`` w.r.t. ``delta_inf + Lebesgue``."""
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        fin = np.isfinite(x)
        out[~fin] = math.exp(-self.total()) if (~fin).any() else 0.0
        if fin.any():
            out[fin] = self.hazard(x[fin]) * np.exp(-self.cumulative(x[fin]))
        return out


def _numeric_inverse(m: UnivariateMeasure, v, tol=1e-13, maxiter=200):
    v = np.asarray(v, dtype=float)
    scalar = v.ndim == 0
    v = np.atleast_1d(v)
    out = np.full(v.shape, INF)
    tot = m.total()
    live = v <= tot if math.isfinite(tot) else np.ones(v.shape, bool)
    live &= v > 0
    out[v <= 0] = _lowest_point(m)
    if live.any():
        vv = v[live]
        lo0 = m.support_lower()
        lo = np.full(vv.shape, lo0 if math.isfinite(lo0) else -1.0)
        hi = np.where(np.isfinite(lo), lo + 1.0, 1.0)
        if not math.isfinite(lo0):
            # walk left until below the target
            for _ in range(200):
                bad = m.cumulative(lo) >= vv
                if not bad.any():
                    break
                lo = np.where(bad, lo - 2.0 * np.abs(lo) - 1.0, lo)
        for _ in range(2000):
            bad = m.cumulative(hi) < vv
            if not bad.any():
                break
            step = np.maximum(hi - lo, 1.0)
            hi = np.where(bad, hi + 2.0 * step, hi)
        for _ in range(maxiter):
            mid = 0.5 * (lo + hi)
            ok = m.cumulative(mid) >= vv
            hi = np.where(ok, mid, hi)
            lo = np.where(ok, lo, mid)
            if np.all(hi - lo <= tol * np.maximum(1.0, np.abs(hi))):
                break
        res = hi
        # snap onto atoms so that ties stay exact
        atoms = getattr(m, "atom_locations", None)
        if atoms is not None:
            locs = atoms()
            if locs.size:
                idx = np.searchsorted(locs, res)
                for cand in (idx - 1, idx):
                    cand = np.clip(cand, 0, locs.size - 1)
                    near = np.abs(locs[cand] - res) <= 1e-9 * np.maximum(1.0, np.abs(res))
                    res = np.where(near, locs[cand], res)
        out[live] = res
    return out[0] if scalar else out


def _lowest_point(m):
    lo = m.support_lower()
    return lo if math.isfinite(lo) else -INF


class Zero1D(UnivariateMeasure):
    def cumulative(self, t):
        return np.zeros(np.shape(t))

    def hazard(self, t):
        return np.zeros(np.shape(t))

    def total(self):
        return 0.0

    def inverse(self, v):
        return np.full(np.shape(v), INF)

    def __repr__(self):
        return "Zero1D()"


class Atoms1D(UnivariateMeasure):
    """``sum_k w_k delta_{b_k}`` on the real line."""

    has_density = False
    is_atomic = True

    def __init__(self, weights, locations):
        w = np.atleast_1d(np.asarray(weights, dtype=float))
        b = np.atleast_1d(np.asarray(locations, dtype=float))
        if w.shape != b.shape:
            raise ValueError("weights and locations must match")
        if (w < 0).any() or not np.isfinite(b).all():
            raise ValueError("atoms need nonnegative weights and finite locations")
        keep = w > 0
        order = np.argsort(b[keep], kind="stable")
        self.weights = w[keep][order]
        self.locations = b[keep][order]
        self._cum = np.cumsum(self.weights)

    def cumulative(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.locations, t, side="right")
        return np.where(idx > 0, self._cum[np.maximum(idx - 1, 0)] if self._cum.size else 0.0, 0.0)

    def total(self):
        return float(self._cum[-1]) if self._cum.size else 0.0

    def atom_locations(self):
        return self.locations

    def breakpoints(self):
        return self.locations

    def inverse(self, v):
        v = np.asarray(v, dtype=float)
        idx = np.searchsorted(self._cum, v, side="left")
        out = np.full(v.shape, INF)
        ok = idx < self._cum.size
        out[ok] = self.locations[idx[ok]]
        return out

    def sample_first_hit(self, size, rng):
        # per-atom Poisson hits: the first hit location is the smallest hit atom
        size = (size,) if np.isscalar(size) else tuple(size)
        hits = rng.random(size + (self.weights.size,)) < -np.expm1(-self.weights)
        loc = np.where(hits, self.locations, INF)
        return loc.min(axis=-1) if self.weights.size else np.full(size, INF)

    def scaled(self, c):
        return Atoms1D(self.weights * c, self.locations)

    def __repr__(self):
        return f"Atoms1D(weights={self.weights.tolist()}, locations={self.locations.tolist()})"


class PiecewiseHazard(UnivariateMeasure):
    """Piecewise constant density ``rates[k]`` on ``[breaks[k], breaks[k+1])``.

    ``breaks`` has one more entry than ``rates``; its last entry may be inf.
    """

    def __init__(self, breaks, rates):
        br = np.asarray(breaks, dtype=float)
        r = np.asarray(rates, dtype=float)
        if br.ndim != 1 or r.ndim != 1 or br.size != r.size + 1:
            raise ValueError("need len(breaks) == len(rates) + 1")
        if np.any(np.diff(br) <= 0) or (r < 0).any() or not np.isfinite(br[:-1]).all():
            raise ValueError("breaks must increase, rates must be nonnegative")
        self.breaks = br
        self.rates = r
        widths = np.diff(br)
        seg = np.where(r > 0, r * widths, 0.0)
        self._cum = np.concatenate([[0.0], np.cumsum(seg)])

    def cumulative(self, t):
        t = np.asarray(t, dtype=float)
        tc = np.clip(t, self.breaks[0], self.breaks[-1])
        k = np.clip(np.searchsorted(self.breaks, tc, side="right") - 1, 0, self.rates.size - 1)
        part = np.where(self.rates[k] > 0, self.rates[k] * (tc - self.breaks[k]), 0.0)
        out = self._cum[k] + part
        return np.where(t >= self.breaks[-1], self._cum[-1], np.where(t <= self.breaks[0], 0.0, out))

    def hazard(self, t):
        t = np.asarray(t, dtype=float)
        k = np.searchsorted(self.breaks, t, side="right") - 1
        inside = (k >= 0) & (k < self.rates.size)
        return np.where(inside, self.rates[np.clip(k, 0, self.rates.size - 1)], 0.0)

    def total(self):
        return float(self._cum[-1])

    def breakpoints(self):
        return self.breaks[np.isfinite(self.breaks)]

    def support_lower(self):
        return float(self.breaks[0])

    def inverse(self, v):
        v = np.asarray(v, dtype=float)
        k = np.clip(np.searchsorted(self._cum, v, side="left") - 1, 0, self.rates.size - 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = self.breaks[k] + (v - self._cum[k]) / self.rates[k]
        out = np.where(v > self._cum[-1], INF, t)
        return np.where(v <= 0, self.breaks[0], out)

    def scaled(self, c):
        return PiecewiseHazard(self.breaks, self.rates * c)

    def __repr__(self):
        return f"PiecewiseHazard(breaks={self.breaks.tolist()}, rates={self.rates.tolist()})"


def linear_hazard(rate: float, start: float = 0.0, end: float = INF) -> PiecewiseHazard:
    """Constant hazard ``rate`` on ``(start, end)``: ``H(t) = rate (t - start)^+``."""
    return PiecewiseHazard([start, end], [rate])


class KernelSmoothed(UnivariateMeasure):
    """``(sum_k w_k delta_{y_k})^{(kappa)}``: hazard ``sum_k w_k kappa(t, y_k)`` on ``t >= 0``."""

    def __init__(self, kernel, weights, locations):
        self.kernel = kernel
        w = np.atleast_1d(np.asarray(weights, dtype=float))
        y = np.atleast_1d(np.asarray(locations, dtype=float))
        if w.shape != y.shape:
            raise ValueError("weights and locations must match")
        keep = w > 0
        self.weights = w[keep]
        self.locations = y[keep]

    def cumulative(self, t):
        t = np.asarray(t, dtype=float)
        if self.weights.size == 0:
            return np.zeros(t.shape)
        K = self.kernel.primitive(t[..., None], self.locations)
        with np.errstate(invalid="ignore"):
            out = (K * self.weights).sum(axis=-1)
        return out

    def hazard(self, t):
        t = np.asarray(t, dtype=float)
        if self.weights.size == 0:
            return np.zeros(t.shape)
        return (self.kernel(t[..., None], self.locations) * self.weights).sum(axis=-1)

    def total(self):
        if self.weights.size == 0:
            return 0.0
        return float((self.kernel.total(self.locations) * self.weights).sum())

    def support_lower(self):
        return 0.0

    def breakpoints(self):
        if self.weights.size == 0:
            return np.empty(0)
        pts = self.kernel.s_breakpoints(self.locations)
        return np.unique(pts[np.isfinite(pts) & (pts >= 0)])

    def sample_first_hit(self, size, rng):
        # minimum over the atoms of independent first hits
        size = (size,) if np.isscalar(size) else tuple(size)
        if self.weights.size == 0:
            return np.full(size, INF)
        e = rng.exponential(size=size + (self.weights.size,))
        x = self.kernel.inverse_primitive(e / self.weights, self.locations)
        return x.min(axis=-1)

    def scaled(self, c):
        return KernelSmoothed(self.kernel, self.weights * c, self.locations)

    def __repr__(self):
        return f"KernelSmoothed({self.kernel!r}, n_atoms={self.weights.size})"


class Sum1D(UnivariateMeasure):
    def __init__(self, parts):
        self.parts = [p for p in parts if not isinstance(p, Zero1D)]
        self.has_density = all(p.has_density for p in self.parts)
        self.is_atomic = bool(self.parts) and all(p.is_atomic for p in self.parts)

    def cumulative(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        for p in self.parts:
            out = out + p.cumulative(t)
        return out

    def hazard(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        for p in self.parts:
            out = out + p.hazard(t)
        return out

    def total(self):
        return float(sum(p.total() for p in self.parts))

    def support_lower(self):
        lows = [p.support_lower() for p in self.parts]
        return min(lows) if lows else 0.0

    def breakpoints(self):
        if not self.parts:
            return np.empty(0)
        return np.unique(np.concatenate([p.breakpoints() for p in self.parts]))

    def atom_locations(self):
        locs = [p.atom_locations() for p in self.parts if hasattr(p, "atom_locations")]
        return np.sort(np.concatenate(locs)) if locs else np.empty(0)

    def inverse(self, v):
        if not self.parts:
            return np.full(np.shape(v), INF)
        if len(self.parts) == 1:
            return self.parts[0].inverse(v)
        if self.is_atomic:
            w = np.concatenate([p.weights for p in self.parts])
            b = np.concatenate([p.locations for p in self.parts])
            return Atoms1D(w, b).inverse(v)
        return _numeric_inverse(self, v)

    def sample_first_hit(self, size, rng):
        size = (size,) if np.isscalar(size) else tuple(size)
        out = np.full(size, INF)
        for p in self.parts:
            out = np.minimum(out, p.sample_first_hit(size, rng))
        return out

    def scaled(self, c):
        return Sum1D([p.scaled(c) for p in self.parts])


class Scaled1D(UnivariateMeasure):
    def __init__(self, base: UnivariateMeasure, c: float):
        if c < 0:
            raise ValueError("scale must be nonnegative")
        self.base, self.c = base, float(c)
        self.has_density = base.has_density
        self.is_atomic = base.is_atomic

    def cumulative(self, t):
        return self.c * self.base.cumulative(t)

    def hazard(self, t):
        return self.c * self.base.hazard(t)

    def total(self):
        return self.c * self.base.total()

    def support_lower(self):
        return self.base.support_lower()

    def breakpoints(self):
        return self.base.breakpoints()

    def inverse(self, v):
        if self.c == 0:
            return np.full(np.shape(v), INF)
        return self.base.inverse(np.asarray(v, dtype=float) / self.c)


class DensityHazard(UnivariateMeasure):
    """Measure with a user-supplied density on ``(lower, upper)``.

    The cumulative function is obtained by adaptive quadrature unless supplied.
    """

    def __init__(self, density: Callable, lower=0.0, upper=INF, cumulative=None,
                 breakpoints=(), quad_tol=1e-11):
        self._density = density
        self.lower, self.upper = float(lower), float(upper)
        self._cumfn = cumulative
        self._bps = np.sort(np.asarray(breakpoints, dtype=float))
        self.quad_tol = quad_tol

    def hazard(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t > self.lower) & (t < self.upper)
        out = np.zeros(t.shape)
        if inside.any():
            out[inside] = np.asarray(self._density(t[inside]), dtype=float)
        return out

    def _quad(self, a, b):
        if b <= a:
            return 0.0
        pts = self._bps[(self._bps > a) & (self._bps < b)]
        edges = np.concatenate([[a], pts, [b]])
        tot = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            f = lambda s: float(self.hazard(np.array([s]))[0])
            val, err = integrate.quad(f, lo, hi, epsabs=self.quad_tol, epsrel=1e-10, limit=200)
            if not np.isfinite(val) or err > max(1e-7, 1e-6 * abs(val)):
                raise IntegrationError("cumulative hazard quadrature failed", val, err)
            tot += val
        return tot

    def cumulative(self, t):
        t = np.asarray(t, dtype=float)
        if self._cumfn is not None:
            return np.asarray(self._cumfn(t), dtype=float)
        flat = t.ravel()
        out = np.array([self._quad(self.lower, min(s, self.upper)) for s in flat])
        return out.reshape(t.shape)

    def support_lower(self):
        return self.lower

    def breakpoints(self):
        pts = [self.lower, self.upper, *self._bps]
        pts = np.asarray(pts, dtype=float)
        return np.unique(pts[np.isfinite(pts)])


class Transformed1D(UnivariateMeasure):
    """Image of ``base`` under a non-decreasing map ``g``.

    ``inverse_map(y) = sup{x : g(x) <= y}`` gives ``m_g((-inf, y]) = m((-inf, inverse_map(y)])``.
    """

    def __init__(self, base: UnivariateMeasure, forward, inverse_map, inverse_derivative=None):
        self.base = base
        self.forward = forward
        self.inverse_map = inverse_map
        self.inverse_derivative = inverse_derivative
        self.has_density = base.has_density
        self.is_atomic = base.is_atomic

    def cumulative(self, t):
        t = np.asarray(t, dtype=float)
        u = np.asarray(self.inverse_map(t), dtype=float)
        out = np.zeros(t.shape)
        ok = ~np.isneginf(u)
        out[ok] = self.base.cumulative(u[ok])
        return np.where(np.isposinf(t), self.base.total(), out)

    def hazard(self, t):
        t = np.asarray(t, dtype=float)
        u = np.asarray(self.inverse_map(t), dtype=float)
        if self.inverse_derivative is not None:
            du = np.asarray(self.inverse_derivative(t), dtype=float)
        else:
            h = 1e-6 * np.maximum(1.0, np.abs(t))
            du = (np.asarray(self.inverse_map(t + h)) - np.asarray(self.inverse_map(t - h))) / (2 * h)
        ok = np.isfinite(u)
        out = np.zeros(t.shape)
        out[ok] = self.base.hazard(u[ok]) * du[ok]
        return out

    def total(self):
        return self.base.total()

    def atom_locations(self):
        if hasattr(self.base, "atom_locations"):
            return np.sort(np.asarray(self.forward(self.base.atom_locations()), dtype=float))
        return np.empty(0)

    def breakpoints(self):
        bp = self.base.breakpoints()
        return np.asarray(self.forward(bp), dtype=float) if bp.size else bp

    def support_lower(self):
        lo = self.base.support_lower()
        return float(self.forward(np.array([lo]))[0]) if math.isfinite(lo) else -INF

    def sample_first_hit(self, size, rng):
        return np.asarray(self.forward(self.base.sample_first_hit(size, rng)), dtype=float)


class Reweighted1D(UnivariateMeasure):
    """``m^{(g)}(dt) = g(t) m(dt)`` for a bounded nonnegative ``g``."""

    def __init__(self, base: UnivariateMeasure, g: Callable):
        self.base, self.g = base, g
        self.has_density = base.has_density
        self._dens = DensityHazard(self._hz, lower=base.support_lower(), breakpoints=base.breakpoints())

    def _hz(self, t):
        val = np.asarray(self.g(t), dtype=float) * self.base.hazard(t)
        if (val < 0).any():
            raise ValueError("reweighting function takes negative values")
        return val

    def cumulative(self, t):
        return self._dens.cumulative(t)

    def hazard(self, t):
        return self._dens.hazard(t)

    def support_lower(self):
        return self.base.support_lower()

    def breakpoints(self):
        return self.base.breakpoints()


class Smoothed1D(UnivariateMeasure):
    """``mu^{(beta)}((-inf, t]) = int_{(-inf, t]} mu((-inf, x]) beta(dx)`` for ``d = 1``."""

    def __init__(self, mu: UnivariateMeasure, beta: UnivariateMeasure, quad_tol=1e-10):
        self.mu, self.beta = mu, beta
        self.quad_tol = quad_tol
        self.has_density = beta.has_density

    def cumulative(self, t):
        t = np.asarray(t, dtype=float)
        if isinstance(self.mu, Zero1D):
            return np.zeros(t.shape)
        if self.mu.is_atomic and self.beta.has_density:
            # F_mu is a step function: sum_k w_k beta([b_k, t])
            w, b = _atoms_of(self.mu)
            Bt = self.beta.cumulative(t)[..., None]
            Bb = self.beta.cumulative(b)
            return (w * np.maximum(Bt - Bb, 0.0)).sum(axis=-1)
        flat = t.ravel()
        out = np.array([self._quad(s) for s in flat])
        return out.reshape(t.shape)

    def _quad(self, s):
        lo = max(self.beta.support_lower(), self.mu.support_lower())
        if not math.isfinite(lo):
            lo = -50.0
        if s <= lo:
            return 0.0
        pts = np.unique(np.concatenate([self.mu.breakpoints(), self.beta.breakpoints()]))
        pts = pts[(pts > lo) & (pts < s)]
        edges = np.concatenate([[lo], pts, [s]])
        tot = 0.0
        f = lambda x: float(self.mu.cumulative(np.array([x]))[0] * self.beta.hazard(np.array([x]))[0])
        for a, b in zip(edges[:-1], edges[1:]):
            val, err = integrate.quad(f, a, b, epsabs=self.quad_tol, limit=200)
            if not np.isfinite(val) or err > 1e-6 * max(1.0, abs(val)):
                raise IntegrationError("smoothing quadrature failed", val, err)
            tot += val
        return tot

    def hazard(self, t):
        t = np.asarray(t, dtype=float)
        return self.mu.cumulative(t) * self.beta.hazard(t)

    def support_lower(self):
        return self.beta.support_lower()

    def breakpoints(self):
        return np.unique(np.concatenate([self.mu.breakpoints(), self.beta.breakpoints()]))


def _atoms_of(m: UnivariateMeasure):
    if isinstance(m, Atoms1D):
        return m.weights, m.locations
    if isinstance(m, Scaled1D):
        w, b = _atoms_of(m.base)
        return w * m.c, b
    if isinstance(m, Sum1D):
        parts = [_atoms_of(p) for p in m.parts]
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])
    raise TypeError("not an atomic measure")


# ---------------------------------------------------------------------------
# latent bookkeeping for min-id draws
# ---------------------------------------------------------------------------

@dataclass
class LatentPRM:
    """Points of the Poisson random measure that realized a min-id draw.

    ``atoms`` holds ``(source_id, point)`` pairs; ``argmin`` maps each finite
    coordinate (a flat index into the sampled array) to the position in
    ``atoms`` of the point that attains it.
    """

    atoms: list = field(default_factory=list)
    argmin: dict = field(default_factory=dict)

    def source_of(self, cell):
        k = self.argmin.get(cell)
        return None if k is None else self.atoms[k][0]


# ---------------------------------------------------------------------------
# exponent measures
# ---------------------------------------------------------------------------

class ExponentMeasure(ABC):
    """Measure on ``E_d`` that is finite on every lower-orthant complement."""

    support_tag = "custom"

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.dim = int(dim)

    # -- capabilities ---------------------------------------------------
    has_density = False          # density of the measure itself
    has_minid_density = False    # density of minid(eta)
    can_sample = True

    @abstractmethod
    def _mass(self, x: np.ndarray) -> float:
        """Orthant mass for a validated point with at least one finite entry."""

    def orthant_mass(self, x) -> float:
        x = as_point(x, self.dim)
        if np.isinf(x).all():
            return 0.0
        return float(self._mass(x))

    def orthant_masses(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.array([self.orthant_mass(x) for x in X])

    def survival(self, x) -> float:
        return math.exp(-self.orthant_mass(x))

    def density(self, x) -> float:
        raise NotImplementedError(f"{type(self).__name__} has no density")

    def minid_density(self, x) -> float:
        raise NotImplementedError(f"{type(self).__name__}: minid(eta) has no density")

    def total_line_mass(self, i: int) -> float:
        """``lim_t eta({y_i <= t})``, mass of points with finite i-th coordinate."""
        x = np.full(self.dim, INF)
        x[i] = 1e300
        return self.orthant_mass(x)

    # -- sampling -------------------------------------------------------
    def sample_minid(self, rng, source=None):
        """One draw of ``minid(eta)`` with its latent point process."""
        x = self.sample_minid_batch(1, rng)[0]
        lat = LatentPRM()
        fin = np.flatnonzero(np.isfinite(x))
        if fin.size:
            lat.atoms.append((source, x.copy()))
            # without finer structure every coordinate is attributed to the measure
            lat.argmin = {int(c): 0 for c in fin}
        return x, lat

    def sample_minid_batch(self, size: int, rng) -> np.ndarray:
        """``(size, d)`` array of i.i.d. draws of ``minid(eta)``."""
        raise NotImplementedError(f"{type(self).__name__} cannot be sampled")

    # -- algebra --------------------------------------------------------
    def scaled(self, c: float) -> "ExponentMeasure":
        if c == 1.0:
            return self
        return ScaledMeasure(self, c)

    def is_zero(self) -> bool:
        return False

    # -- posterior helpers ---------------------------------------------
    def column_density(self, x, pinned, observed) -> float:
        """``int f_eta`` over ``y_k > x_k`` (observed, unpinned ``k``) with pinned coordinates fixed.

        Unobserved coordinates are integrated out entirely.  The default
        computes the mixed derivative of the survival function by central
        differences in the pinned coordinates.
        """
        x = np.asarray(x, dtype=float)
        pinned = np.asarray(pinned, bool)
        observed = np.asarray(observed, bool) | pinned
        base = np.where(observed, x, INF)
        P = np.flatnonzero(pinned)
        if P.size == 0:
            return self.survival(base)
        if np.isinf(x[P]).any():
            raise NotImplementedError("pinning at infinity needs a factorized density")
        h = 1e-4 * np.maximum(1.0, np.abs(x[P]))
        tot = 0.0
        from itertools import product

        for signs in product((-1.0, 1.0), repeat=P.size):
            pt = base.copy()
            pt[P] = x[P] + np.asarray(signs) * h
            # (-1)^{|P|} d^P S ; each central difference contributes sign/2h
            coef = np.prod([s / (2 * hh) for s, hh in zip(signs, h)])
            tot += coef * self.survival(pt)
        return max(0.0, ((-1) ** P.size) * tot)

    def hazard_factors(self):
        """Margins when the measure is line-supported (``None`` otherwise)."""
        return None


class ZeroMeasure(ExponentMeasure):
    """The zero measure on ``E'_d`` (all mass parked at the point inf)."""

    support_tag = "atoms"
    has_minid_density = True
    has_density = True

    def _mass(self, x):
        return 0.0

    def sample_minid_batch(self, size, rng):
        return np.full((size, self.dim), INF)

    def sample_minid(self, rng, source=None):
        return np.full(self.dim, INF), LatentPRM()

    def minid_density(self, x):
        x = as_point(x, self.dim)
        return 1.0 if np.isinf(x).all() else 0.0

    def density(self, x):
        return 0.0

    def column_density(self, x, pinned, observed):
        pinned = np.asarray(pinned, bool)
        return 0.0 if pinned.any() else 1.0

    def is_zero(self):
        return True

    def scaled(self, c):
        return self

    def hazard_factors(self):
        return [Zero1D() for _ in range(self.dim)]

    def __repr__(self):
        return f"ZeroMeasure(dim={self.dim})"


class AtomicMeasure(ExponentMeasure):
    """``sum_k w_k delta_{b_k}`` with ``b_k`` in ``E'_d`` (entries may be inf)."""

    support_tag = "atoms"

    def __init__(self, weights, locations):
        w = np.atleast_1d(np.asarray(weights, dtype=float))
        B = np.asarray(_decode_inf(locations), dtype=float)
        if B.ndim == 1:
            B = B[:, None] if w.size > 1 and B.size == w.size else B[None, :]
        if B.shape[0] != w.size:
            raise ValueError("one location row per weight")
        super().__init__(B.shape[1])
        if (w < 0).any() or np.isnan(B).any() or np.isneginf(B).any():
            raise ValueError("invalid atoms")
        if w.size and np.isinf(B).all(axis=1).any():
            raise ValueError("atoms at the point inf are not representable")
        keep = w > 0
        self.weights = w[keep]
        self.locations = B[keep]

    def _mass(self, x):
        fin = np.isfinite(x)
        inside = (self.locations[:, fin] <= x[fin]).any(axis=1)
        return float(self.weights[inside].sum())

    def orthant_masses(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.zeros(X.shape[0])
        for r, x in enumerate(X):
            out[r] = 0.0 if np.isinf(x).all() else self._mass(x)
        return out

    def density(self, x):
        raise NotImplementedError("atomic measures have no Lebesgue density")

    def sample_minid_batch(self, size, rng):
        hits = rng.random((size, self.weights.size)) < -np.expm1(-self.weights)
        out = np.full((size, self.dim), INF)
        for k in range(self.weights.size):
            rows = hits[:, k]
            if rows.any():
                out[rows] = np.minimum(out[rows], self.locations[k])
        return out

    def sample_minid(self, rng, source=None):
        hits = rng.random(self.weights.size) < -np.expm1(-self.weights)
        x = np.full(self.dim, INF)
        lat = LatentPRM()
        owner = np.full(self.dim, -1)
        for k in np.flatnonzero(hits):
            lat.atoms.append(((source, "atom", int(k)), self.locations[k].copy()))
            better = self.locations[k] < x
            x = np.where(better, self.locations[k], x)
            owner = np.where(better, len(lat.atoms) - 1, owner)
        lat.argmin = {int(i): int(owner[i]) for i in np.flatnonzero(np.isfinite(x))}
        return x, lat

    def scaled(self, c):
        return AtomicMeasure(self.weights * c, self.locations)

    def is_zero(self):
        return self.weights.size == 0

    def hazard_factors(self):
        # atoms on the coordinate lines form atomic margins
        on_line = (np.isfinite(self.locations).sum(axis=1) == 1)
        if not on_line.all():
            return None
        margins = []
        for i in range(self.dim):
            sel = np.isfinite(self.locations[:, i])
            margins.append(Atoms1D(self.weights[sel], self.locations[sel, i]) if sel.any() else Zero1D())
        return margins

    def column_density(self, x, pinned, observed):
        if np.asarray(pinned, bool).any():
            raise NotImplementedError("atomic measures have no min-id density")
        return super().column_density(x, pinned, observed)

    def __repr__(self):
        return f"AtomicMeasure(weights={self.weights.tolist()}, locations={self.locations.tolist()})"


class ProductLineMeasure(ExponentMeasure):
    """Measure on the union of coordinate lines with ``eta(E_i(t)) = margins[i]((-inf, t])``.

    ``minid`` of it has independent components with cumulative hazards given
    by the margins.
    """

    support_tag = "lines"

    def __init__(self, margins: Sequence[UnivariateMeasure]):
        margins = list(margins)
        super().__init__(len(margins))
        self.margins = margins
        self.has_minid_density = all(m.has_density for m in margins)
        self.has_density = self.has_minid_density

    def _mass(self, x):
        tot = 0.0
        for i in np.flatnonzero(np.isfinite(x)):
            tot += float(self.margins[i].cumulative(np.array([x[i]]))[0])
        return tot

    def orthant_masses(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.zeros(X.shape[0])
        for i, m in enumerate(self.margins):
            col = X[:, i]
            fin = np.isfinite(col)
            if fin.any():
                out[fin] += m.cumulative(col[fin])
        return out

    def density(self, x):
        x = as_point(x, self.dim)
        fin = np.flatnonzero(np.isfinite(x))
        if fin.size != 1:
            return 0.0
        i = fin[0]
        return float(self.margins[i].hazard(np.array([x[i]]))[0])

    def minid_density(self, x):
        x = as_point(x, self.dim)
        val = 1.0
        for i, m in enumerate(self.margins):
            val *= float(m.e_factor(np.array([x[i]]))[0])
        return val

    def sample_minid_batch(self, size, rng):
        out = np.empty((size, self.dim))
        for i, m in enumerate(self.margins):
            out[:, i] = m.sample_first_hit(size, rng) if not isinstance(m, Zero1D) else INF
        return out

    def sample_minid(self, rng, source=None):
        x = self.sample_minid_batch(1, rng)[0]
        lat = LatentPRM()
        for i in np.flatnonzero(np.isfinite(x)):
            pt = np.full(self.dim, INF)
            pt[i] = x[i]
            lat.atoms.append(((source, "line", int(i)), pt))
            lat.argmin[int(i)] = len(lat.atoms) - 1
        return x, lat

    def scaled(self, c):
        return ProductLineMeasure([m.scaled(c) for m in self.margins])

    def is_zero(self):
        return all(isinstance(m, Zero1D) or m.total() == 0 for m in self.margins)

    def hazard_factors(self):
        return self.margins

    def column_density(self, x, pinned, observed):
        x = np.asarray(x, dtype=float)
        pinned = np.asarray(pinned, bool)
        observed = np.asarray(observed, bool)
        val = 1.0
        for i, m in enumerate(self.margins):
            if pinned[i]:
                val *= float(m.e_factor(np.array([x[i]]))[0])
            elif observed[i]:
                if math.isinf(x[i]):
                    return 0.0
                val *= math.exp(-float(m.cumulative(np.array([x[i]]))[0]))
        return val

    def __repr__(self):
        return f"ProductLineMeasure({self.margins!r})"


def line_measure(margin: UnivariateMeasure) -> ProductLineMeasure:
    """A univariate measure viewed as an exponent measure on ``E_1``."""
    return ProductLineMeasure([margin])


class SumMeasure(ExponentMeasure):
    """Finite sum of exponent measures; ``minid`` of it is the min of independent draws."""

    def __init__(self, parts: Sequence[ExponentMeasure]):
        parts = [p for p in parts if not p.is_zero()]
        dims = {p.dim for p in parts}
        if len(dims) > 1:
            raise ValueError("summands must share the dimension")
        super().__init__(dims.pop() if dims else 1)
        self.parts = parts
        self.has_minid_density = False
        tags = {p.support_tag for p in parts}
        self.support_tag = tags.pop() if len(tags) == 1 else "custom"

    @classmethod
    def of(cls, parts, dim):
        parts = [p for p in parts if not p.is_zero()]
        if not parts:
            return ZeroMeasure(dim)
        if len(parts) == 1:
            return parts[0]
        return cls(parts)

    def _mass(self, x):
        return float(sum(p.orthant_mass(x) for p in self.parts))

    def orthant_masses(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.zeros(X.shape[0])
        for p in self.parts:
            out += p.orthant_masses(X)
        return out

    def sample_minid_batch(self, size, rng):
        out = np.full((size, self.dim), INF)
        for p in self.parts:
            out = np.minimum(out, p.sample_minid_batch(size, rng))
        return out

    def sample_minid(self, rng, source=None):
        x = np.full(self.dim, INF)
        lat = LatentPRM()
        owner = {}
        for k, p in enumerate(self.parts):
            xk, lk = p.sample_minid(rng, source=(source, k))
            offset = len(lat.atoms)
            lat.atoms.extend(lk.atoms)
            for c, a in lk.argmin.items():
                if xk[c] < x[c]:
                    x[c] = xk[c]
                    owner[c] = offset + a
        lat.argmin = owner
        return x, lat

    def scaled(self, c):
        return SumMeasure.of([p.scaled(c) for p in self.parts], self.dim)

    def is_zero(self):
        return not self.parts

    def hazard_factors(self):
        facs = [p.hazard_factors() for p in self.parts]
        if any(f is None for f in facs):
            return None
        return [Sum1D([f[i] for f in facs]) for i in range(self.dim)]

    def flatten(self) -> ExponentMeasure:
        """Merge the summands into a single representation when possible."""
        if not self.parts:
            return ZeroMeasure(self.dim)
        if all(isinstance(p, AtomicMeasure) for p in self.parts):
            return AtomicMeasure(np.concatenate([p.weights for p in self.parts]),
                                 np.vstack([p.locations for p in self.parts]))
        facs = self.hazard_factors()
        if facs is not None:
            return ProductLineMeasure(facs)
        return self


class ScaledMeasure(ExponentMeasure):
    def __init__(self, base: ExponentMeasure, c: float):
        if c < 0:
            raise ValueError("scale must be nonnegative")
        super().__init__(base.dim)
        self.base, self.c = base, float(c)
        self.support_tag = base.support_tag

    def _mass(self, x):
        return self.c * self.base.orthant_mass(x)


class MonotoneMap:
    """Componentwise non-decreasing map of ``E_d`` fixing inf.

    ``forward[i]`` maps coordinate ``i``; ``inverse[i](y)`` must return
    ``sup{x : g_i(x) <= y}`` (``-inf`` if empty).  When an inverse is missing
    it is computed by bisection.  Constructing the object is the monotonicity
    certificate required by :func:`image_transform`.
    """

    def __init__(self, forward, inverse=None, inverse_derivative=None, certified=True):
        if not certified:
            raise ValueError("a monotone map must be certified")
        self.forward = list(forward)
        self.d = len(self.forward)
        self.inverse = list(inverse) if inverse is not None else [None] * self.d
        self.inverse_derivative = (list(inverse_derivative) if inverse_derivative is not None
                                   else [None] * self.d)

    @classmethod
    def identity(cls, d):
        f = lambda x: np.asarray(x, dtype=float)
        return cls([f] * d, [f] * d, [lambda y: np.ones(np.shape(y))] * d)

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        for i in range(self.d):
            col = x[..., i]
            val = np.asarray(self.forward[i](np.where(np.isfinite(col), col, 0.0)), dtype=float)
            out[..., i] = np.where(np.isfinite(col), val, INF)
        return out

    def inverse_coord(self, i, y):
        y = np.asarray(y, dtype=float)
        out = np.full(y.shape, INF)
        fin = np.isfinite(y)
        if fin.any():
            if self.inverse[i] is not None:
                out[fin] = np.asarray(self.inverse[i](y[fin]), dtype=float)
            else:
                out[fin] = _bisect_upper_inverse(self.forward[i], y[fin])
        return out

    def compose(self, inner: "MonotoneMap") -> "MonotoneMap":
        """``self o inner``."""
        fwd = [(lambda x, f=f, g=g: f(g(x))) for f, g in zip(self.forward, inner.forward)]
        inv = [(lambda y, i=i: inner.inverse_coord(i, self.inverse_coord(i, y))) for i in range(self.d)]
        return MonotoneMap(fwd, inv)


def _bisect_upper_inverse(g, y, lo=-1e6, hi=1e6, iters=200):
    y = np.asarray(y, dtype=float)
    a = np.full(y.shape, lo)
    b = np.full(y.shape, hi)
    for _ in range(iters):
        m = 0.5 * (a + b)
        ok = np.asarray(g(m), dtype=float) <= y
        a = np.where(ok, m, a)
        b = np.where(ok, b, m)
    out = a
    out = np.where(np.asarray(g(np.full(y.shape, lo))) > y, -INF, out)
    return out


class TransformedMeasure(ExponentMeasure):
    """Image ``eta_g = eta o g^{-1}`` of an exponent measure under a monotone map."""

    def __init__(self, base: ExponentMeasure, g: MonotoneMap):
        super().__init__(base.dim)
        self.base, self.g = base, g
        self.support_tag = base.support_tag

    def _mass(self, x):
        u = np.array([self.g.inverse_coord(i, np.array([x[i]]))[0] for i in range(self.dim)])
        u = np.where(np.isneginf(u), INF, u)   # empty preimage: no constraint
        if np.isinf(u).all():
            return 0.0
        return self.base.orthant_mass(u)

    def sample_minid_batch(self, size, rng):
        return self.g.apply(self.base.sample_minid_batch(size, rng))


class MarginalMeasure(ExponentMeasure):
    def __init__(self, base: ExponentMeasure, keep: Sequence[int]):
        super().__init__(len(keep))
        self.base, self.keep = base, list(keep)
        self.support_tag = base.support_tag

    def _mass(self, x):
        return self.base.orthant_mass(embed(x, self.keep, self.base.dim))

    def sample_minid_batch(self, size, rng):
        return self.base.sample_minid_batch(size, rng)[:, self.keep]


@dataclass
class StratumComponent:
    """Finite measure with density on the stratum ``E_D``.

    ``density`` maps an ``(n, |D|)`` array to densities.  ``envelope_sampler(n, rng)``
    draws ``n`` points from a dominating density ``q`` of total mass
    ``envelope_mass`` with ``density <= envelope_mass * q`` pointwise, and
    ``envelope_density`` evaluates that normalized ``q``.
    """

    coords: tuple
    density: Callable
    envelope_mass: float
    envelope_sampler: Callable
    envelope_density: Callable
    lower: float = 0.0
    upper: float = INF


class StrataDensityMeasure(ExponentMeasure):
    """Measure with densities on strata ``E_D`` (``|D| <= 2`` for quadrature).

    Minid draws thin a Poisson process with the dominating intensity.
    """

    support_tag = "full"
    has_density = True

    def __init__(self, dim: int, components: Sequence[StratumComponent]):
        super().__init__(dim)
        self.components = list(components)
        for c in self.components:
            if len(c.coords) not in (1, 2):
                raise ValueError("strata of dimension 1 or 2 are supported")

    def _component_mass(self, c: StratumComponent, x):
        xs = x[list(c.coords)]
        fin = np.isfinite(xs)
        if not fin.any():
            return 0.0
        f = lambda *z: float(c.density(np.array([z]))[0])
        lo, hi = c.lower, c.upper
        if len(c.coords) == 1:
            val, _ = integrate.quad(lambda z: f(z), lo, min(xs[0], hi), limit=200)
            return max(val, 0.0)
        # mass of {z1 <= x1} u {z2 <= x2} = total - mass of {z1 > x1, z2 > x2}
        total, _ = integrate.dblquad(lambda z2, z1: f(z1, z2), lo, hi, lo, hi)
        a1 = xs[0] if fin[0] else hi
        a2 = xs[1] if fin[1] else hi
        upper, _ = integrate.dblquad(lambda z2, z1: f(z1, z2), max(a1, lo), hi, max(a2, lo), hi)
        return max(total - upper, 0.0)

    def _mass(self, x):
        return float(sum(self._component_mass(c, x) for c in self.components))

    def density(self, x):
        x = as_point(x, self.dim)
        D = tuple(np.flatnonzero(np.isfinite(x)))
        val = 0.0
        for c in self.components:
            if tuple(c.coords) == D:
                val += float(c.density(x[list(D)][None, :])[0])
        return val

    def sample_minid_batch(self, size, rng):
        out = np.full((size, self.dim), INF)
        for c in self.components:
            counts = rng.poisson(c.envelope_mass, size=size)
            n = int(counts.sum())
            if n == 0:
                continue
            pts = np.atleast_2d(c.envelope_sampler(n, rng)).reshape(n, len(c.coords))
            ratio = np.asarray(c.density(pts)) / (c.envelope_mass * np.asarray(c.envelope_density(pts)))
            if (ratio > 1 + 1e-9).any():
                raise ValueError("envelope does not dominate the density")
            keep = rng.random(n) < ratio
            owner = np.repeat(np.arange(size), counts)[keep]
            full = np.full((keep.sum(), self.dim), INF)
            full[:, list(c.coords)] = pts[keep]
            for i in range(self.dim):
                np.minimum.at(out[:, i], owner, full[:, i])
        return out

    @property
    def has_minid_density(self):
        return True

    def minid_density(self, x):
        x = as_point(x, self.dim)
        pinned = np.isfinite(x)
        big = np.where(pinned, x, INF)
        if not pinned.any():
            return math.exp(-self._all_lines_mass())
        return self.column_density(big, pinned, np.ones(self.dim, bool), limit_inf=True)

    def _all_lines_mass(self):
        return float(sum(self._component_mass(c, np.full(self.dim, 1e300)) for c in self.components))

    def column_density(self, x, pinned, observed, limit_inf=False):
        # unpinned observed coordinates at inf mean "= inf": use the far limit
        x = np.asarray(x, dtype=float)
        if limit_inf:
            observed = np.ones(self.dim, bool)
            x = np.where(np.isfinite(x), x, 1e300)
        return super().column_density(x, pinned, observed)


# ---------------------------------------------------------------------------
# module-level operations
# ---------------------------------------------------------------------------

def orthant_complement_mass(eta: ExponentMeasure, x) -> float:
    """``eta({y : y_i <= x_i for some finite x_i})``; zero at the all-infinite point."""
    return eta.orthant_mass(x)


def survival(eta: ExponentMeasure, x) -> float:
    """``exp(-orthant_complement_mass(eta, x))``."""
    return eta.survival(x)


def marginalize(eta: ExponentMeasure, keep: Sequence[int]) -> ExponentMeasure:
    """Projection of ``eta`` onto the coordinates ``keep`` (mass sent to inf is dropped)."""
    keep = [int(k) for k in keep]
    if not keep or len(set(keep)) != len(keep) or min(keep) < 0 or max(keep) >= eta.dim:
        raise ValueError("keep must be a nonempty set of coordinate indices")
    if isinstance(eta, ZeroMeasure):
        return ZeroMeasure(len(keep))
    if isinstance(eta, AtomicMeasure):
        B = eta.locations[:, keep]
        alive = np.isfinite(B).any(axis=1)
        if not alive.any():
            return ZeroMeasure(len(keep))
        return AtomicMeasure(eta.weights[alive], B[alive])
    if isinstance(eta, ProductLineMeasure):
        return ProductLineMeasure([eta.margins[k] for k in keep])
    if isinstance(eta, SumMeasure):
        return SumMeasure.of([marginalize(p, keep) for p in eta.parts], len(keep))
    return MarginalMeasure(eta, keep)


def image_transform(eta: ExponentMeasure, g: MonotoneMap) -> ExponentMeasure:
    """Image measure ``eta(g^{-1}(.))`` under a certified monotone map."""
    if not isinstance(g, MonotoneMap):
        raise TypeError("image_transform needs a MonotoneMap (monotonicity certificate)")
    if g.d != eta.dim:
        raise ValueError("map dimension mismatch")
    if isinstance(eta, ZeroMeasure):
        return eta
    if isinstance(eta, AtomicMeasure):
        return AtomicMeasure(eta.weights, g.apply(eta.locations))
    if isinstance(eta, ProductLineMeasure):
        margins = []
        for i, m in enumerate(eta.margins):
            if isinstance(m, Zero1D):
                margins.append(m)
            elif isinstance(m, Atoms1D):
                margins.append(Atoms1D(m.weights, np.asarray(g.forward[i](m.locations), dtype=float)))
            else:
                margins.append(Transformed1D(m, g.forward[i], lambda y, i=i: g.inverse_coord(i, y),
                                             g.inverse_derivative[i]))
        return ProductLineMeasure(margins)
    if isinstance(eta, SumMeasure):
        return SumMeasure.of([image_transform(p, g) for p in eta.parts], eta.dim)
    return TransformedMeasure(eta, g)


def reweight(eta: ExponentMeasure, g: Callable) -> ExponentMeasure:
    """``eta^{(g)}(A) = int_A g d eta`` for a bounded nonnegative ``g`` on ``E_d``.

    ``g`` receives an ``(n, d)`` array of points.  Supported for atomic and
    line-supported measures.
    """
    if isinstance(eta, ZeroMeasure):
        return eta
    if isinstance(eta, AtomicMeasure):
        vals = np.asarray(g(eta.locations), dtype=float).reshape(-1)
        if (vals < 0).any():
            raise ValueError("reweighting function takes negative values")
        return AtomicMeasure(eta.weights * vals, eta.locations)
    if isinstance(eta, ProductLineMeasure):
        margins = []
        for i, m in enumerate(eta.margins):
            def gi(t, i=i):
                t = np.atleast_1d(np.asarray(t, dtype=float))
                pts = np.full((t.size, eta.dim), INF)
                pts[:, i] = t
                return np.asarray(g(pts), dtype=float).reshape(t.shape)
            if isinstance(m, Zero1D):
                margins.append(m)
            elif isinstance(m, Atoms1D):
                vals = gi(m.locations)
                if (vals < 0).any():
                    raise ValueError("reweighting function takes negative values")
                margins.append(Atoms1D(m.weights * vals, m.locations))
            else:
                probe = m.breakpoints()
                probe = np.concatenate([probe, probe + 0.5, [m.support_lower() if math.isfinite(m.support_lower()) else 0.0]])
                if (gi(probe) < 0).any():
                    raise ValueError("reweighting function takes negative values")
                margins.append(Reweighted1D(m, gi))
        return ProductLineMeasure(margins)
    if isinstance(eta, SumMeasure):
        return SumMeasure.of([reweight(p, g) for p in eta.parts], eta.dim)
    raise NotImplementedError(f"reweighting is not available for {type(eta).__name__}")


def smooth(mu, beta) -> ProductLineMeasure:
    """``mu^{(beta)}(A) = int_A mu((-inf, x]) beta(dx)`` for univariate ``mu`` and ``beta``.

    Both arguments may be univariate measures or exponent measures on ``E_1``.
    """
    mu1 = _as_univariate(mu)
    beta1 = _as_univariate(beta)
    if isinstance(mu1, Zero1D) or mu1.total() == 0.0 and not math.isinf(mu1.total()):
        return ProductLineMeasure([Zero1D()])
    if beta1.is_atomic:
        w, b = _atoms_of(beta1)
        return ProductLineMeasure([Atoms1D(w * mu1.cumulative(b), b)])
    return ProductLineMeasure([Smoothed1D(mu1, beta1)])


def _as_univariate(m) -> UnivariateMeasure:
    if isinstance(m, UnivariateMeasure):
        return m
    if isinstance(m, ZeroMeasure) and m.dim == 1:
        return Zero1D()
    if isinstance(m, ProductLineMeasure) and m.dim == 1:
        return m.margins[0]
    if isinstance(m, AtomicMeasure) and m.dim == 1:
        return Atoms1D(m.weights, m.locations[:, 0])
    raise TypeError("expected a measure on the real line")
