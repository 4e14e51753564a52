"""Location measures for atom families and a tabulated inverse-CDF sampler."""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

INF = np.inf


class TabulatedSampler:
    """Samples from a nonnegative density known on a fine grid.

    The density is replaced by its piecewise-linear interpolant on the grid;
    draws are exact for that interpolant.  ``edges`` are panel boundaries
    (kinks of the density), each panel gets ``per_panel`` equal cells.
    """

    def __init__(self, density, edges, per_panel=128, values=None, grid=None):
        if grid is None:
            edges = np.unique(np.asarray(edges, dtype=float))
            if edges.size < 2 or not np.isfinite(edges).all():
                raise ValueError("need at least one finite panel")
            pieces = [np.linspace(a, b, per_panel + 1)[:-1] for a, b in zip(edges[:-1], edges[1:])]
            grid = np.concatenate(pieces + [edges[-1:]])
        self.grid = np.asarray(grid, dtype=float)
        f = np.asarray(density(self.grid) if values is None else values, dtype=float)
        if (f < 0).any() or not np.isfinite(f).all():
            raise ValueError("tabulated density must be finite and nonnegative")
        self.f = f
        h = np.diff(self.grid)
        self.cell = 0.5 * (f[:-1] + f[1:]) * h
        self.cum = np.concatenate([[0.0], np.cumsum(self.cell)])
        self.total = float(self.cum[-1])

    def sample(self, size, rng):
        if self.total <= 0:
            raise ValueError("tabulated density has zero mass")
        u = rng.random(size) * self.total
        k = np.clip(np.searchsorted(self.cum, u, side="right") - 1, 0, self.cell.size - 1)
        r = u - self.cum[k]
        x0, h = self.grid[k], self.grid[k + 1] - self.grid[k]
        f0, f1 = self.f[k], self.f[k + 1]
        slope = (f1 - f0) / h
        # solve f0 t + slope t^2 / 2 = r for t in [0, h]
        with np.errstate(divide="ignore", invalid="ignore"):
            disc = np.sqrt(np.maximum(f0 * f0 + 2 * slope * r, 0.0))
            t_quad = 2 * r / (f0 + disc)
        t = np.where(np.abs(slope) * h < 1e-12 * np.maximum(f0, 1e-300), r / np.maximum(f0, 1e-300), t_quad)
        t = np.where(np.isfinite(t), t, 0.5 * h)
        return x0 + np.clip(t, 0.0, h)


class LocationMeasure1D:
    lower: float
    upper: float

    def total(self) -> float:
        raise NotImplementedError

    def density(self, b):
        raise NotImplementedError

    def mass_below(self, t):
        raise NotImplementedError

    def sample(self, size, rng):
        raise NotImplementedError

    def breakpoints(self):
        return np.array([self.lower, self.upper])


class Interval(LocationMeasure1D):
    """``rate * Lebesgue`` on ``(lower, upper)``."""

    def __init__(self, lower=0.0, upper=1.0, rate=1.0):
        if not (upper > lower) or rate < 0 or not math.isfinite(upper):
            raise ValueError("need a bounded interval and a nonnegative rate")
        self.lower, self.upper, self.rate = float(lower), float(upper), float(rate)

    def total(self):
        return self.rate * (self.upper - self.lower)

    def density(self, b):
        b = np.asarray(b, dtype=float)
        return np.where((b > self.lower) & (b < self.upper), self.rate, 0.0)

    def mass_below(self, t):
        t = np.asarray(t, dtype=float)
        return self.rate * (np.clip(t, self.lower, self.upper) - self.lower)

    def sample(self, size, rng):
        return rng.uniform(self.lower, self.upper, size)

    def to_dict(self):
        return {"kind": "interval", "lower": self.lower, "upper": self.upper, "rate": self.rate}

    def __repr__(self):
        return f"Interval({self.lower}, {self.upper}, rate={self.rate})"


class SmoothedLocations(LocationMeasure1D):
    """``alpha_0^{(kappa_0)}`` on ``[0, inf)`` for ``alpha_0 = rate * Lebesgue(lower, upper)``.

    Its density is ``s -> rate * int_{lower}^{upper} kappa_0(s, y) dy`` in closed form.
    """

    def __init__(self, base: Interval, kernel, per_panel=256):
        self.base = base
        self.kernel = kernel
        self.lower = max(0.0, base.lower + kernel.lo)
        self.upper = base.upper + kernel.hi
        if not math.isfinite(self.upper):
            raise ValueError("the smoothed location measure needs a compactly supported kernel")
        self._bps = np.unique(np.clip(np.array([self.lower, self.upper, base.lower + kernel.lo,
                                                base.lower + kernel.hi, base.upper + kernel.lo,
                                                base.upper + kernel.hi]), self.lower, self.upper))
        self._tab = TabulatedSampler(self.density, self._bps, per_panel)
        self._total = self._exact_total()

    def to_dict(self):
        return {"kind": "smoothed", "base": self.base.to_dict(), "kernel": self.kernel.to_dict()}

    def density(self, b):
        b = np.asarray(b, dtype=float)
        val = self.base.rate * self.kernel.location_integral(b, self.base.lower, self.base.upper)
        return np.where((b >= self.lower) & (b <= self.upper), val, 0.0)

    def _exact_total(self):
        tot = 0.0
        for a, b in zip(self._bps[:-1], self._bps[1:]):
            val, _ = integrate.quad(lambda s: float(self.density(np.array([s]))[0]), a, b, epsabs=1e-13)
            tot += val
        return tot

    def total(self):
        return self._total

    def mass_below(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = []
        for s in t:
            s = min(max(s, self.lower), self.upper)
            pts = self._bps[(self._bps > self.lower) & (self._bps < s)]
            edges = np.concatenate([[self.lower], pts, [s]])
            acc = 0.0
            for a, b in zip(edges[:-1], edges[1:]):
                if b > a:
                    acc += integrate.quad(lambda z: float(self.density(np.array([z]))[0]), a, b)[0]
            out.append(acc)
        return np.array(out)

    def sample(self, size, rng):
        return self._tab.sample(size, rng)

    def breakpoints(self):
        return self._bps

    def __repr__(self):
        return f"SmoothedLocations({self.base!r}, {self.kernel!r})"


class Box:
    """``rate * Lebesgue`` on a box in ``E_d``; coordinates with ``lower = upper = inf`` are pinned at inf."""

    def __init__(self, lower, upper, rate=1.0):
        lo = np.atleast_1d(np.asarray(lower, dtype=float))
        hi = np.atleast_1d(np.asarray(upper, dtype=float))
        if lo.shape != hi.shape:
            raise ValueError("bounds must match")
        pinned = np.isinf(lo) & np.isinf(hi) & (lo > 0)
        free = ~pinned
        if not free.any():
            raise ValueError("a location box needs at least one free coordinate")
        if not (np.isfinite(lo[free]).all() and np.isfinite(hi[free]).all() and (hi[free] > lo[free]).all()):
            raise ValueError("free coordinates need bounded nondegenerate ranges")
        self.lower, self.upper, self.rate = lo, hi, float(rate)
        self.pinned = pinned
        self.dim = lo.size

    def total(self):
        f = ~self.pinned
        return self.rate * float(np.prod(self.upper[f] - self.lower[f]))

    def sample(self, size, rng):
        out = np.full((size, self.dim), INF)
        for i in np.flatnonzero(~self.pinned):
            out[:, i] = rng.uniform(self.lower[i], self.upper[i], size)
        return out

    def cells(self, points):
        """Partition the box by the finite coordinates of ``points``.

        Returns ``(masses, member)`` where ``member[c, r]`` says whether the
        whole cell ``c`` lies inside ``{b : b_i <= x_{r,i} for some finite x_{r,i}}``.
        """
        points = np.atleast_2d(points)
        edges = []
        free = np.flatnonzero(~self.pinned)
        for i in free:
            cuts = points[:, i][np.isfinite(points[:, i])]
            cuts = cuts[(cuts > self.lower[i]) & (cuts < self.upper[i])]
            edges.append(np.unique(np.concatenate([[self.lower[i]], cuts, [self.upper[i]]])))
        grids = np.meshgrid(*[np.arange(e.size - 1) for e in edges], indexing="ij")
        idx = np.stack([g.ravel() for g in grids], axis=1)
        masses = np.full(idx.shape[0], self.rate)
        mids = np.full((idx.shape[0], self.dim), INF)
        for col, (i, e) in enumerate(zip(free, edges)):
            masses *= e[idx[:, col] + 1] - e[idx[:, col]]
            mids[:, i] = 0.5 * (e[idx[:, col] + 1] + e[idx[:, col]])
        member = ((mids[:, None, :] <= points[None, :, :]) & np.isfinite(points)[None, :, :]).any(axis=2)
        return masses, member

    def to_dict(self):
        return {"kind": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist(), "rate": self.rate}

    def __repr__(self):
        return f"Box({self.lower.tolist()}, {self.upper.tolist()}, rate={self.rate})"


class DiscreteLocations:
    """Finite location measure ``sum_k w_k delta_{p_k}`` on ``E'_d``."""

    def __init__(self, weights, points):
        self.weights = np.atleast_1d(np.asarray(weights, dtype=float))
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.points.shape[0] != self.weights.size:
            raise ValueError("one point per weight")
        self.dim = self.points.shape[1]

    def total(self):
        return float(self.weights.sum())

    def sample(self, size, rng):
        k = rng.choice(self.weights.size, size=size, p=self.weights / self.weights.sum())
        return self.points[k]

    def cells(self, points):
        points = np.atleast_2d(points)
        member = ((self.points[:, None, :] <= points[None, :, :]) & np.isfinite(points)[None, :, :]).any(axis=2)
        return self.weights.copy(), member

    def to_dict(self):
        return {"kind": "discrete", "weights": self.weights.tolist(), "points": self.points.tolist()}
