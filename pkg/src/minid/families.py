"""Parametric atom families: pieces of a Levy measure on exponent measures.

A family describes a (possibly infinite) intensity on a parameter space
together with the map ``theta -> eta_theta``.  Every family answers

* ``laplace_exponent(points, z) = int 1 - exp(-sum_r z_r eta(C_r)) nu(d eta)``
  with ``C_r`` the orthant complement of ``points[r]``;
* ``table(size, rng, trunc)``: the atoms of ``size`` independent Poisson
  processes with intensity ``nu`` (truncated), as an :class:`AtomTable`;
* for density-carrying families, ``block_integral(obs, block)`` equal to
  ``int h(eta, obs, block) nu(d eta)`` and samplers for ``h nu`` normalized.

Batch tables keep Monte Carlo over ``10^5`` replicates vectorized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from .measures import (INF, AtomicMeasure, ExponentMeasure, KernelSmoothed, MonotoneMap,
                       ProductLineMeasure, Zero1D, image_transform)
from .locations import Box, DiscreteLocations, Interval, TabulatedSampler
from .observations import ObservationSet

_GL_CACHE: dict = {}


def gauss_panels(edges, order=16):
    """Composite Gauss-Legendre rule over consecutive ``edges``."""
    edges = np.unique(np.asarray(edges, dtype=float))
    if edges.size < 2:
        return np.empty(0), np.empty(0)
    if order not in _GL_CACHE:
        _GL_CACHE[order] = leggauss(order)
    x, w = _GL_CACHE[order]
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (b - a) * x[None, :] + 0.5 * (a + b)
    weights = 0.5 * (b - a) * w[None, :]
    return nodes.ravel(), weights.ravel()


def owner_sum(owner, values, size):
    """Sum rows of ``values`` per owner index."""
    values = np.asarray(values, dtype=float)
    out = np.zeros((size,) + values.shape[1:])
    if owner.size:
        np.add.at(out, owner, values)
    return out


# ---------------------------------------------------------------------------
# truncation
# ---------------------------------------------------------------------------

@dataclass
class Truncation:
    """Small-atom truncation policy.

    Infinite families drop atoms whose size is below a cutoff chosen so that
    the expected omitted orthant mass at the reference horizon is at most
    ``tol``; ``n_max`` caps the expected atom count per draw instead (the
    resulting bound is reported, possibly above ``tol``).
    """

    tol: float = 1e-4
    horizon: float = 10.0
    n_max: float | None = None

    def __post_init__(self):
        if self.tol <= 0 or self.horizon <= 0:
            raise ValueError("truncation tolerance and horizon must be positive")


def solve_cutoff(first_moment, count, scale, trunc: Truncation):
    """Cutoff ``eps`` with ``scale * first_moment(eps) <= tol`` (or count cap).

    ``first_moment(eps)`` is the truncated first moment of the jump intensity
    and ``count(eps)`` the expected number of atoms above ``eps``.
    """
    if scale <= 0:
        return 1.0, 0.0
    target = trunc.tol / scale
    lo, hi = -700.0, 10.0
    if float(first_moment(math.exp(hi))) <= target:
        eps = math.exp(hi)
    else:
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if float(first_moment(math.exp(mid))) <= target:
                lo = mid
            else:
                hi = mid
        eps = math.exp(lo)
    if trunc.n_max is not None and float(count(eps)) > trunc.n_max:
        lo2, hi2 = math.log(eps), 10.0
        for _ in range(200):
            mid = 0.5 * (lo2 + hi2)
            if float(count(math.exp(mid))) > trunc.n_max:
                lo2 = mid
            else:
                hi2 = mid
        eps = math.exp(hi2)
    return eps, float(scale * first_moment(eps))


# ---------------------------------------------------------------------------
# atom tables
# ---------------------------------------------------------------------------

class AtomTable:
    """Atoms of ``size`` independent Poisson processes on exponent measures."""

    def __init__(self, owner, size, dim):
        self.owner = np.asarray(owner, dtype=int)
        self.size = int(size)
        self.dim = int(dim)

    @property
    def n_atoms(self) -> int:
        return self.owner.size

    def orthant_masses(self, points) -> np.ndarray:
        raise NotImplementedError

    def first_hits(self, n: int, rng) -> np.ndarray:
        """``(n_atoms, d, n)``: ``n`` i.i.d. min-id draws from every atom."""
        raise NotImplementedError

    def subset(self, keep) -> "AtomTable":
        raise NotImplementedError

    def measure(self, k: int) -> ExponentMeasure:
        raise NotImplementedError

    def line_cumulative(self, i: int, t) -> np.ndarray:
        """``eta_k({y_i <= t_k})`` per atom, for line-supported atoms."""
        pts = np.full((self.n_atoms, self.dim), INF)
        pts[:, i] = t
        return np.array([self.measure(k).orthant_mass(p) if np.isfinite(p[i]) else 0.0
                         for k, p in enumerate(pts)])

    def atom_locations_1d(self):
        """Exact hit locations for atomic one-dimensional tables, else ``None``."""
        return None

    def owner_masses(self, points) -> np.ndarray:
        """``(size, m)``: total orthant masses per replicate."""
        points = np.atleast_2d(points)
        if self.n_atoms == 0:
            return np.zeros((self.size, points.shape[0]))
        return owner_sum(self.owner, self.orthant_masses(points), self.size)

    def thin(self, weights, rng) -> "AtomTable":
        keep = rng.random(self.n_atoms) < np.asarray(weights)
        return self.subset(keep)


class EmptyTable(AtomTable):
    def __init__(self, size, dim):
        super().__init__(np.empty(0, int), size, dim)

    def orthant_masses(self, points):
        return np.zeros((0, np.atleast_2d(points).shape[0]))

    def first_hits(self, n, rng):
        return np.full((0, self.dim, n), INF)

    def subset(self, keep):
        return self

    def line_cumulative(self, i, t):
        return np.zeros(0)


class MeasureListTable(AtomTable):
    """Atoms drawn from a finite list of fixed measures."""

    def __init__(self, owner, size, measures, idx):
        super().__init__(owner, size, measures[0].dim)
        self.measures = measures
        self.idx = np.asarray(idx, dtype=int)

    def orthant_masses(self, points):
        points = np.atleast_2d(points)
        M = np.array([m.orthant_masses(points) for m in self.measures])
        return M[self.idx]

    def first_hits(self, n, rng):
        out = np.full((self.n_atoms, self.dim, n), INF)
        for k in np.unique(self.idx):
            rows = np.flatnonzero(self.idx == k)
            draws = self.measures[k].sample_minid_batch(rows.size * n, rng)
            out[rows] = draws.reshape(rows.size, n, self.dim).transpose(0, 2, 1)
        return out

    def subset(self, keep):
        return MeasureListTable(self.owner[keep], self.size, self.measures, self.idx[keep])

    def measure(self, k):
        return self.measures[self.idx[k]]

    def line_cumulative(self, i, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(self.n_atoms)
        for k in np.unique(self.idx):
            rows = self.idx == k
            facs = self.measures[k].hazard_factors()
            if facs is None:
                return super().line_cumulative(i, t)
            out[rows] = facs[i].cumulative(t[rows])
        return out


class DiracTable(AtomTable):
    """Atoms ``a_k delta_{b_k}`` with ``b_k`` in ``E'_d``."""

    def __init__(self, owner, size, a, B):
        B = np.atleast_2d(B)
        super().__init__(owner, size, B.shape[1])
        self.a = np.asarray(a, dtype=float)
        self.B = B

    def orthant_masses(self, points):
        points = np.atleast_2d(points)
        inside = ((self.B[:, None, :] <= points[None, :, :]) & np.isfinite(points)[None, :, :]).any(axis=2)
        return self.a[:, None] * inside

    def first_hits(self, n, rng):
        hit = rng.random((self.n_atoms, n)) < -np.expm1(-self.a)[:, None]
        return np.where(hit[:, None, :], self.B[:, :, None], INF)

    def subset(self, keep):
        return DiracTable(self.owner[keep], self.size, self.a[keep], self.B[keep])

    def measure(self, k):
        return AtomicMeasure([self.a[k]], self.B[k][None, :])

    def line_cumulative(self, i, t):
        return np.where(self.B[:, i] <= np.asarray(t), self.a, 0.0)

    def atom_locations_1d(self):
        return self.B[:, 0] if self.dim == 1 else None


class KernelAtomTable(AtomTable):
    """Atoms ``(a delta_b)^{(kappa)}`` placed on coordinate line ``line``."""

    def __init__(self, owner, size, dim, line, kernel, a, b):
        super().__init__(owner, size, dim)
        self.line, self.kernel = line, kernel
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)

    def orthant_masses(self, points):
        points = np.atleast_2d(points)
        x = points[:, self.line]
        fin = np.isfinite(x)
        out = np.zeros((self.n_atoms, points.shape[0]))
        if fin.any():
            out[:, fin] = self.a[:, None] * self.kernel.primitive(x[fin][None, :], self.b[:, None])
        return out

    def first_hits(self, n, rng):
        out = np.full((self.n_atoms, self.dim, n), INF)
        e = rng.exponential(size=(self.n_atoms, n))
        out[:, self.line, :] = self.kernel.inverse_primitive(e / self.a[:, None], self.b[:, None])
        return out

    def subset(self, keep):
        return KernelAtomTable(self.owner[keep], self.size, self.dim, self.line, self.kernel,
                               self.a[keep], self.b[keep])

    def measure(self, k):
        margins = [Zero1D() for _ in range(self.dim)]
        margins[self.line] = KernelSmoothed(self.kernel, [self.a[k]], [self.b[k]])
        return ProductLineMeasure(margins)

    def line_cumulative(self, i, t):
        if i != self.line:
            return np.zeros(self.n_atoms)
        return self.a * self.kernel.primitive(np.asarray(t, dtype=float), self.b)


class CombinedTable(AtomTable):
    """Concatenation of tables from several families sharing ``size``."""

    def __init__(self, tables: Sequence[AtomTable], size, dim):
        tables = [t for t in tables if t.n_atoms > 0]
        owner = np.concatenate([t.owner for t in tables]) if tables else np.empty(0, int)
        super().__init__(owner, size, dim)
        self.tables = tables
        self.offsets = np.cumsum([0] + [t.n_atoms for t in tables])

    def orthant_masses(self, points):
        if not self.tables:
            return np.zeros((0, np.atleast_2d(points).shape[0]))
        return np.vstack([t.orthant_masses(points) for t in self.tables])

    def first_hits(self, n, rng):
        if not self.tables:
            return np.full((0, self.dim, n), INF)
        return np.concatenate([t.first_hits(n, rng) for t in self.tables], axis=0)

    def subset(self, keep):
        keep = np.asarray(keep, bool)
        return CombinedTable([t.subset(keep[a:b]) for t, a, b in
                              zip(self.tables, self.offsets[:-1], self.offsets[1:])], self.size, self.dim)

    def measure(self, k):
        t = int(np.searchsorted(self.offsets, k, side="right") - 1)
        return self.tables[t].measure(k - self.offsets[t])

    def line_cumulative(self, i, t):
        t = np.asarray(t, dtype=float)
        if not self.tables:
            return np.zeros(0)
        return np.concatenate([tb.line_cumulative(i, t[a:b]) for tb, a, b in
                               zip(self.tables, self.offsets[:-1], self.offsets[1:])])

    def atom_locations_1d(self):
        locs = [t.atom_locations_1d() for t in self.tables]
        if any(l is None for l in locs):
            return None
        return np.concatenate(locs) if locs else np.empty(0)

    def source_labels(self):
        """Index of the originating table for every atom."""
        return np.concatenate([np.full(t.n_atoms, j) for j, t in enumerate(self.tables)]) \
            if self.tables else np.empty(0, int)


# ---------------------------------------------------------------------------
# posterior weight helper
# ---------------------------------------------------------------------------

def h_weight(eta: ExponentMeasure, obs: ObservationSet, block) -> float:
    """``h(eta, obs, block)``: product over observations of upper-orthant integrals
    of the min-id density, with the block's coordinates pinned at the data.

    ``block`` holds indices into ``obs.cells``.  Observed cells outside the
    block contribute survival factors, unobserved ones integrate to 1.
    """
    block = set(block)
    facs = eta.hazard_factors()
    if facs is not None and all(f.has_density for f in facs):
        val = 1.0
        for c, (i, j) in enumerate(obs.cells):
            x = obs.values[i, j]
            m = facs[i]
            if c in block:
                val *= float(m.e_factor(np.array([x]))[0])
            else:
                if math.isinf(x):
                    return 0.0
                val *= math.exp(-float(m.cumulative(np.array([x]))[0]))
            if val == 0.0:
                return 0.0
        return val
    val = 1.0
    pinned = np.zeros(obs.values.shape, bool)
    for c in block:
        i, j = obs.cells[c]
        pinned[i, j] = True
    for j in range(obs.n):
        if not obs.mask[:, j].any():
            continue
        val *= eta.column_density(obs.values[:, j], pinned[:, j], obs.mask[:, j])
        if val == 0.0:
            return 0.0
    return val


def block_components(obs: ObservationSet, block):
    """Split a block into per-component value arrays."""
    comps = {}
    for c in block:
        i, j = obs.cells[c]
        comps.setdefault(i, []).append(obs.values[i, j])
    return {i: np.asarray(v) for i, v in comps.items()}


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------

class AtomFamily:
    dim: int
    finite: bool = False
    has_density: bool = False
    random_measure: bool = False
    integrator: str = "closed_form"
    name: str = "family"

    def laplace_exponent(self, points, z) -> float:
        raise NotImplementedError

    def mean_masses(self, points) -> np.ndarray:
        """``int eta(C_r) nu(d eta)`` for each point (may be inf)."""
        points = np.atleast_2d(points)
        h = 1e-6
        out = np.empty(points.shape[0])
        for r in range(points.shape[0]):
            z = np.zeros(points.shape[0])
            z[r] = h
            out[r] = self.laplace_exponent(points, z) / h
        return out

    def integrability(self, x) -> float:
        """``int min(eta(C_x), 1) nu(d eta)``."""
        raise NotImplementedError

    def cutoff(self, trunc: Truncation):
        """``(eps, bound)``; finite families return ``(0, 0)``."""
        return 0.0, 0.0

    def expected_count(self, trunc: Truncation) -> float:
        raise NotImplementedError

    def _draw(self, count: int, rng, trunc: Truncation) -> AtomTable:
        """``count`` atoms from the normalized truncated intensity; owner unset."""
        raise NotImplementedError

    def table(self, size: int, rng, trunc: Truncation | None = None) -> AtomTable:
        trunc = trunc or Truncation()
        lam = self.expected_count(trunc)
        counts = rng.poisson(lam, size) if lam > 0 else np.zeros(size, int)
        tab = self._draw(int(counts.sum()), rng, trunc)
        tab.owner = np.repeat(np.arange(size), counts)
        tab.size = size
        return tab

    def proposal_table(self, count: int, rng, trunc: Truncation) -> AtomTable:
        tab = self._draw(count, rng, trunc)
        tab.owner = np.arange(count)
        tab.size = count
        return tab

    def truncation_bound(self, trunc: Truncation) -> float:
        return self.cutoff(trunc)[1]

    def scaled(self, c: float) -> "AtomFamily":
        raise NotImplementedError

    # density machinery (overridden by density families)
    def block_integral(self, obs: ObservationSet, block) -> float:
        raise NotImplementedError(f"{self.name} has no min-id density")

    def sample_block(self, obs, block, rng, trunc=None) -> ExponentMeasure:
        raise NotImplementedError(f"{self.name} has no min-id density")

    def mcmc_block(self, obs, block, rng, steps=200, trunc=None) -> ExponentMeasure:
        raise NotImplementedError(f"{self.name} has no min-id density")

    def line_cumulatives_horizon(self, t: float) -> np.ndarray:
        """Mean of ``eta({y_i <= t})`` per line; used by the support check."""
        d = self.dim
        out = np.zeros(d)
        for i in range(d):
            p = np.full((1, d), INF)
            p[0, i] = t
            out[i] = self.mean_masses(p)[0]
        return out

    def to_dict(self):
        raise NotImplementedError


class FiniteFamily(AtomFamily):
    """``nu = sum_k w_k delta_{eta_k}`` for fixed exponent measures ``eta_k``."""

    finite = True
    integrator = "exact"
    name = "finite"

    def __init__(self, measures: Sequence[ExponentMeasure], weights):
        self.measures = list(measures)
        self.weights = np.atleast_1d(np.asarray(weights, dtype=float))
        if not self.measures or len(self.measures) != self.weights.size:
            raise ValueError("one weight per measure")
        if (self.weights < 0).any():
            raise ValueError("weights must be nonnegative")
        dims = {m.dim for m in self.measures}
        if len(dims) != 1:
            raise ValueError("measures must share the dimension")
        self.dim = dims.pop()
        self.has_density = all(m.has_minid_density for m in self.measures)
        self._hcache = {}

    def _masses(self, points):
        points = np.atleast_2d(points)
        return np.array([m.orthant_masses(points) for m in self.measures])

    def laplace_exponent(self, points, z):
        z = np.asarray(z, dtype=float)
        M = self._masses(points)
        return float(np.sum(self.weights * -np.expm1(-(M @ z))))

    def mean_masses(self, points):
        return self.weights @ self._masses(points)

    def integrability(self, x):
        M = self._masses(np.atleast_2d(x))[:, 0]
        return float(self.weights @ np.minimum(M, 1.0))

    def expected_count(self, trunc):
        return float(self.weights.sum())

    def _draw(self, count, rng, trunc):
        p = self.weights / self.weights.sum()
        idx = rng.choice(len(self.measures), size=count, p=p)
        return MeasureListTable(np.zeros(count, int), 1, self.measures, idx)

    def scaled(self, c):
        return FiniteFamily(self.measures, self.weights * c)

    def component_weights(self, obs, block) -> np.ndarray:
        key = (obs.key, tuple(sorted(block)))
        if key not in self._hcache:
            self._hcache[key] = self.weights * np.array([h_weight(m, obs, block) for m in self.measures])
        return self._hcache[key]

    def block_integral(self, obs, block):
        return float(self.component_weights(obs, block).sum())

    def sample_block(self, obs, block, rng, trunc=None):
        w = self.component_weights(obs, block)
        return self.measures[int(rng.choice(w.size, p=w / w.sum()))]

    def mcmc_block(self, obs, block, rng, steps=200, trunc=None):
        # independence Metropolis over the index with uniform proposals
        w = self.component_weights(obs, block)
        k = int(rng.integers(w.size))
        while w[k] == 0:
            k = int(rng.integers(w.size))
        for _ in range(steps):
            prop = int(rng.integers(w.size))
            if rng.random() * w[k] < w[prop]:
                k = prop
        return self.measures[k]

    def to_dict(self):
        from .serialization import measure_to_dict

        return {"kind": "finite", "weights": self.weights.tolist(),
                "measures": [measure_to_dict(m) for m in self.measures]}


class CRMFamily(AtomFamily):
    """Weighted Dirac atoms ``a delta_b``: intensity ``rho(a) da x locations(db)``."""

    name = "crm"

    def __init__(self, jumps, locations):
        self.jumps = jumps
        self.locations = locations
        self.dim = locations.dim
        self.finite = bool(getattr(jumps, "finite", False))

    def laplace_exponent(self, points, z):
        points = np.atleast_2d(points)
        z = np.asarray(z, dtype=float)
        masses, member = self.locations.cells(points)
        s = member.astype(float) @ z
        return float(np.sum(masses * self.jumps.psi(s)))

    def mean_masses(self, points):
        masses, member = self.locations.cells(np.atleast_2d(points))
        return float(self.jumps.tau(1, 0.0)) * (masses @ member)

    def integrability(self, x):
        masses, member = self.locations.cells(np.atleast_2d(x))
        return float(masses @ member[:, 0]) * self.jumps.min_moment(1.0)

    def cutoff(self, trunc):
        if self.finite:
            return 0.0, 0.0
        L = self.locations.total()
        return solve_cutoff(self.jumps.truncated_first_moment, lambda e: L * self.jumps.tail_mass(e), L, trunc)

    def expected_count(self, trunc):
        eps, _ = self.cutoff(trunc)
        return float(self.jumps.tail_mass(eps)) * self.locations.total()

    def _draw(self, count, rng, trunc):
        eps, _ = self.cutoff(trunc)
        a = self.jumps.sample_above(eps, count, rng) if count else np.empty(0)
        B = self.locations.sample(count, rng) if count else np.empty((0, self.dim))
        return DiracTable(np.zeros(count, int), 1, a, B)

    def scaled(self, c):
        return CRMFamily(self.jumps.scaled(c), self.locations)

    def to_dict(self):
        return {"kind": "crm", "jumps": self.jumps.to_dict(), "locations": self.locations.to_dict()}


class KernelCRMFamily(AtomFamily):
    """Smoothed atoms ``(a delta_b)^{(kappa)}`` on coordinate line ``line``.

    Intensity ``rho(a) da x beta(db)`` with a one-dimensional location measure.
    """

    name = "kernel_crm"
    has_density = True
    integrator = "quadrature"

    def __init__(self, dim, line, jumps, kernel, locations, order=16):
        if not 0 <= line < dim:
            raise ValueError("line index out of range")
        self.dim, self.line = int(dim), int(line)
        self.jumps, self.kernel, self.locations = jumps, kernel, locations
        self.finite = bool(getattr(jumps, "finite", False))
        self.order = order
        self._cache = {}

    # quadrature over the location variable
    def _rule(self, xs):
        xs = np.asarray(xs, dtype=float)
        xs = xs[np.isfinite(xs)]
        lo, hi = self.locations.lower, self.locations.upper
        kinks = self.kernel.y_breakpoints(xs) if xs.size else np.empty(0)
        edges = np.concatenate([[lo, hi], self.locations.breakpoints(), kinks])
        edges = edges[(edges >= lo) & (edges <= hi)]
        return gauss_panels(edges, self.order)

    def _G(self, xs, b):
        """``sum_x K(x, b)`` over the given values (inf gives the kernel total)."""
        xs = np.asarray(xs, dtype=float)
        if xs.size == 0:
            return np.zeros(np.shape(b))
        return self.kernel.primitive(xs[None, :], np.asarray(b)[:, None]).sum(axis=1)

    def laplace_exponent(self, points, z):
        points = np.atleast_2d(points)
        z = np.asarray(z, dtype=float)
        x = points[:, self.line]
        fin = np.isfinite(x) & (z != 0)
        if not fin.any():
            return 0.0
        b, w = self._rule(x[fin])
        g = (self.kernel.primitive(x[fin][None, :], b[:, None]) * z[fin][None, :]).sum(axis=1)
        return float(np.sum(w * self.locations.density(b) * self.jumps.psi(g)))

    def mean_masses(self, points):
        points = np.atleast_2d(points)
        x = points[:, self.line]
        out = np.zeros(points.shape[0])
        m1 = float(self.jumps.tau(1, 0.0))
        for r in np.flatnonzero(np.isfinite(x)):
            b, w = self._rule(x[r:r + 1])
            out[r] = m1 * np.sum(w * self.locations.density(b) * self.kernel.primitive(x[r], b))
        return out

    def integrability(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xi = x[self.line]
        if not np.isfinite(xi):
            return 0.0
        b, w = self._rule([xi])
        K = self.kernel.primitive(xi, b)
        vals = np.array([self.jumps.min_moment(s) for s in K])
        return float(np.sum(w * self.locations.density(b) * vals))

    def _reference_mass(self, horizon):
        b, w = self._rule([horizon])
        return float(np.sum(w * self.locations.density(b) * self.kernel.primitive(horizon, b)))

    def cutoff(self, trunc):
        if self.finite:
            return 0.0, 0.0
        key = ("cut", trunc.tol, trunc.horizon, trunc.n_max)
        if key not in self._cache:
            R = self._reference_mass(trunc.horizon)
            L = self.locations.total()
            self._cache[key] = solve_cutoff(self.jumps.truncated_first_moment,
                                            lambda e: L * self.jumps.tail_mass(e), R, trunc)
        return self._cache[key]

    def expected_count(self, trunc):
        eps, _ = self.cutoff(trunc)
        return float(self.jumps.tail_mass(eps)) * self.locations.total()

    def _draw(self, count, rng, trunc):
        eps, _ = self.cutoff(trunc)
        a = self.jumps.sample_above(eps, count, rng) if count else np.empty(0)
        b = self.locations.sample(count, rng) if count else np.empty(0)
        return KernelAtomTable(np.zeros(count, int), 1, self.dim, self.line, self.kernel, a, b)

    def scaled(self, c):
        return KernelCRMFamily(self.dim, self.line, self.jumps.scaled(c), self.kernel, self.locations, self.order)

    # -- density machinery ---------------------------------------------
    def _block_parts(self, obs, block):
        """Pinned finite values, tail values and validity of a block for this line."""
        comps = block_components(obs, block)
        for i, v in comps.items():
            if i != self.line and np.isfinite(v).any():
                return None
        pinned = comps.get(self.line, np.empty(0))
        all_line = np.array([obs.values[i, j] for i, j in obs.cells if i == self.line])
        # unpinned observed cells at infinity cannot be exceeded
        bset = set(block)
        for c, (i, j) in enumerate(obs.cells):
            if c not in bset and not np.isfinite(obs.values[i, j]):
                return None
        return pinned[np.isfinite(pinned)], all_line

    def _block_density(self, b, pinned, all_line):
        k = pinned.size
        G = self._G(all_line, b)
        val = self.locations.density(b) * self.jumps.tau(k, G)
        for x in pinned:
            val = val * self.kernel(x, b)
        return val, G

    def block_integral(self, obs, block):
        key = ("blk", obs.key, tuple(sorted(block)))
        if key in self._cache:
            return self._cache[key]
        parts = self._block_parts(obs, block)
        if parts is None:
            val = 0.0
        else:
            pinned, all_line = parts
            if pinned.size == 0:
                raise ValueError("a block pinned only at infinity has no finite weight")
            b, w = self._rule(all_line)
            q, _ = self._block_density(b, pinned, all_line)
            val = float(np.sum(w * q))
        self._cache[key] = val
        return val

    def _measure(self, a, b):
        margins = [Zero1D() for _ in range(self.dim)]
        margins[self.line] = KernelSmoothed(self.kernel, [a], [b])
        return ProductLineMeasure(margins)

    def sample_block(self, obs, block, rng, trunc=None):
        pinned, all_line = self._block_parts(obs, block)
        key = ("tab", obs.key, tuple(sorted(block)))
        if key not in self._cache:
            xs = all_line[np.isfinite(all_line)]
            lo, hi = self.locations.lower, self.locations.upper
            edges = np.concatenate([[lo, hi], self.locations.breakpoints(), self.kernel.y_breakpoints(xs)])
            edges = edges[(edges >= lo) & (edges <= hi)]
            self._cache[key] = TabulatedSampler(lambda bb: self._block_density(bb, pinned, all_line)[0],
                                                edges, 256)
        tab = self._cache[key]
        b = float(tab.sample(1, rng)[0])
        G = float(self._G(all_line, np.array([b]))[0])
        a = float(self.jumps.sample_tilted(pinned.size, G, 1, rng)[0])
        return self._measure(a, b)

    def mcmc_block(self, obs, block, rng, steps=200, trunc=None):
        """Random-walk Metropolis on ``(log a, b)`` targeting ``h nu``."""
        pinned, all_line = self._block_parts(obs, block)
        k = pinned.size

        def logt(la, b):
            dens, G = self._block_density(np.array([b]), np.empty(0), all_line)
            base = float(self.locations.density(np.array([b]))[0])
            if base <= 0:
                return -INF
            kap = np.prod(self.kernel(pinned, b)) if k else 1.0
            if kap <= 0:
                return -INF
            a = math.exp(la)
            return (k * la + math.log(kap) - a * float(G[0]) + math.log(max(float(self.jumps.density(a)), 1e-300))
                    + math.log(base) + la)

        # start from the location grid maximum
        xs = all_line[np.isfinite(all_line)]
        grid = np.linspace(self.locations.lower, self.locations.upper, 401)[1:-1]
        q, G = self._block_density(grid, pinned, all_line)
        b = float(grid[int(np.argmax(q))])
        Gb = float(self._G(all_line, np.array([b]))[0])
        la = math.log(max(k - getattr(self.jumps, "sigma", 0.0), 0.5) / (getattr(self.jumps, "beta", 1.0) + Gb + 1e-12))
        cur = logt(la, b)
        sb = 0.1 * (self.locations.upper - self.locations.lower)
        sa = 0.5
        for _ in range(steps):
            la2 = la + sa * rng.normal()
            b2 = b + sb * rng.normal()
            prop = logt(la2, b2)
            if math.log(rng.random()) < prop - cur:
                la, b, cur = la2, b2, prop
        return self._measure(math.exp(la), b)

    def to_dict(self):
        return {"kind": "kernel_crm", "dim": self.dim, "line": self.line, "jumps": self.jumps.to_dict(),
                "kernel": self.kernel.to_dict(), "locations": self.locations.to_dict()}


class TiltedFamily(AtomFamily):
    """``w(eta) nu(d eta)`` with ``w(eta) = prod_j exp(-eta(C_{X_j}))``."""

    name = "tilted"

    def __init__(self, base: AtomFamily, obs: ObservationSet):
        self.base = base
        self.obs = obs
        self.points = obs.points()
        self.dim = base.dim
        self.finite = base.finite
        self.has_density = base.has_density
        self.random_measure = base.random_measure

    def weight(self, eta: ExponentMeasure) -> float:
        if self.points.shape[0] == 0:
            return 1.0
        return math.exp(-float(np.sum(eta.orthant_masses(self.points))))

    def laplace_exponent(self, points, z):
        points = np.atleast_2d(points)
        z = np.asarray(z, dtype=float)
        if self.points.shape[0] == 0:
            return self.base.laplace_exponent(points, z)
        P = np.vstack([points, self.points])
        Z = np.concatenate([z, np.ones(self.points.shape[0])])
        return (self.base.laplace_exponent(P, Z)
                - self.base.laplace_exponent(self.points, np.ones(self.points.shape[0])))

    def integrability(self, x):
        return self.base.integrability(x)

    def cutoff(self, trunc):
        return self.base.cutoff(trunc)

    def expected_count(self, trunc):
        return self.base.expected_count(trunc)

    def table(self, size, rng, trunc=None):
        tab = self.base.table(size, rng, trunc)
        if self.points.shape[0] == 0 or tab.n_atoms == 0:
            return tab
        w = np.exp(-tab.orthant_masses(self.points).sum(axis=1))
        return tab.thin(w, rng)

    def scaled(self, c):
        return TiltedFamily(self.base.scaled(c), self.obs)


class TransformedFamily(AtomFamily):
    """Image of every atom under a monotone map of ``E_d``."""

    name = "transformed"

    def __init__(self, base: AtomFamily, g: MonotoneMap):
        self.base, self.g = base, g
        self.dim = base.dim
        self.finite = base.finite

    def _pull(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.empty_like(points)
        for i in range(self.dim):
            out[:, i] = self.g.inverse_coord(i, points[:, i])
        return np.where(np.isneginf(out), INF, out)

    def laplace_exponent(self, points, z):
        P = self._pull(points)
        z = np.where(np.isinf(P).all(axis=1), 0.0, np.asarray(z, dtype=float))
        return self.base.laplace_exponent(P, z)

    def integrability(self, x):
        P = self._pull(x)
        return self.base.integrability(P[0]) if np.isfinite(P[0]).any() else 0.0

    def cutoff(self, trunc):
        return self.base.cutoff(trunc)

    def expected_count(self, trunc):
        return self.base.expected_count(trunc)

    def table(self, size, rng, trunc=None):
        return TransformedTable(self.base.table(size, rng, trunc), self)

    def scaled(self, c):
        return TransformedFamily(self.base.scaled(c), self.g)


class TransformedTable(AtomTable):
    def __init__(self, inner: AtomTable, fam: TransformedFamily):
        super().__init__(inner.owner, inner.size, inner.dim)
        self.inner, self.fam = inner, fam

    def orthant_masses(self, points):
        P = self.fam._pull(points)
        out = self.inner.orthant_masses(P)
        out[:, np.isinf(P).all(axis=1)] = 0.0
        return out

    def first_hits(self, n, rng):
        X = self.inner.first_hits(n, rng)
        return self.fam.g.apply(X.transpose(0, 2, 1)).transpose(0, 2, 1)

    def subset(self, keep):
        return TransformedTable(self.inner.subset(keep), self.fam)

    def measure(self, k):
        return image_transform(self.inner.measure(k), self.fam.g)

    def line_cumulative(self, i, t):
        u = self.fam.g.inverse_coord(i, np.asarray(t, dtype=float))
        u = np.where(np.isneginf(u), -1e300, u)
        return self.inner.line_cumulative(i, u)
