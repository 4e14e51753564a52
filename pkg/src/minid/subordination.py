"""Random-measure atom family generated by a random root CRM.

A root atom ``a0 delta_{b0}`` (intensity ``rho_0(da0) r0 db0`` on a bounded
interval) is smoothed by a compact root kernel into the location intensity
``a0 kappa_0(y, b0) dy`` on ``y >= 0``.  Conditionally on the root atom, each
line ``i`` carries an independent CRM with intensity
``rho_i(da) a0 kappa_0(y, b0) dy`` whose atoms become hazard contributions
``a kappa_i(., y)``.  The resulting exponent measure is line supported and
random; the family's intensity is the law of that measure integrated against
the root intensity.

Block integrals ``int h(eta) nu(d eta)`` are exact up to quadrature: the
Campbell-Mecke expansion of a product of hazards over a Poisson process
produces a sum over set partitions of each line's pinned cells, which is
collected into a polynomial in ``a0`` and integrated against ``rho_0`` via
``tau_{0,k}``.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .families import AtomFamily, AtomTable, Truncation, gauss_panels, solve_cutoff
from .locations import Interval, TabulatedSampler
from .measures import INF, KernelSmoothed, ProductLineMeasure, Zero1D
from .observations import ObservationSet


@lru_cache(maxsize=None)
def _subsets_with_low(mask: int):
    """Submasks of ``mask`` containing its lowest set bit."""
    low = mask & -mask
    rest = mask ^ low
    out = []
    sub = rest
    while True:
        out.append(sub | low)
        if sub == 0:
            break
        sub = (sub - 1) & rest
    return tuple(out)


def partition_polynomials(cvals: dict, m: int) -> np.ndarray:
    """Coefficients of ``P(a) = sum_pi a^{|pi|} prod_B c_B`` over partitions of ``m`` items.

    ``cvals[mask]`` is an array (one value per quadrature node) for every
    nonempty submask.  Returns an array ``(m + 1, n_nodes)``.
    """
    full = (1 << m) - 1
    shape = next(iter(cvals.values())).shape if cvals else (1,)
    P = {0: np.zeros((m + 1,) + shape)}
    P[0][0] = 1.0
    for mask in range(1, full + 1):
        acc = np.zeros((m + 1,) + shape)
        for T in _subsets_with_low(mask):
            rest = P[mask ^ T]
            acc[1:] += cvals[T] * rest[:-1]
        P[mask] = acc
    return P[full]


def sample_partition(cvals: dict, m: int, a0: float, rng) -> list:
    """Draw a partition of ``range(m)`` with weight ``a0^{|pi|} prod_B c_B``."""
    full = (1 << m) - 1
    P = {0: 1.0}
    for mask in range(1, full + 1):
        P[mask] = sum(a0 * cvals[T] * P[mask ^ T] for T in _subsets_with_low(mask))
    blocks, mask = [], full
    while mask:
        cands = _subsets_with_low(mask)
        w = np.array([a0 * cvals[T] * P[mask ^ T] for T in cands])
        T = cands[int(rng.choice(len(cands), p=w / w.sum()))]
        blocks.append([k for k in range(m) if T >> k & 1])
        mask ^= T
    return blocks


class SubordinatedTable(AtomTable):
    """Root atoms with their inner kernel atoms, one group per root atom."""

    def __init__(self, owner, size, fam, a0, b0, inner):
        super().__init__(owner, size, fam.dim)
        self.fam = fam
        self.a0, self.b0 = np.asarray(a0, float), np.asarray(b0, float)
        # inner[i] = (parent, a, y)
        self.inner = inner

    def orthant_masses(self, points):
        points = np.atleast_2d(points)
        out = np.zeros((self.n_atoms, points.shape[0]))
        for i, (par, a, y) in enumerate(self.inner):
            x = points[:, i]
            fin = np.isfinite(x)
            if not fin.any() or par.size == 0:
                continue
            vals = np.zeros((par.size, points.shape[0]))
            vals[:, fin] = a[:, None] * self.fam.kernels[i].primitive(x[fin][None, :], y[:, None])
            np.add.at(out, par, vals)
        return out

    def first_hits(self, n, rng):
        out = np.full((self.n_atoms, self.dim, n), INF)
        for i, (par, a, y) in enumerate(self.inner):
            if par.size == 0:
                continue
            e = rng.exponential(size=(par.size, n))
            hits = self.fam.kernels[i].inverse_primitive(e / a[:, None], y[:, None])
            col = out[:, i, :]
            np.minimum.at(col, par, hits)
            out[:, i, :] = col
        return out

    def subset(self, keep):
        keep = np.asarray(keep, bool)
        remap = np.cumsum(keep) - 1
        inner = []
        for par, a, y in self.inner:
            k = keep[par]
            inner.append((remap[par[k]], a[k], y[k]))
        return SubordinatedTable(self.owner[keep], self.size, self.fam, self.a0[keep], self.b0[keep], inner)

    def measure(self, k):
        margins = []
        for i, (par, a, y) in enumerate(self.inner):
            sel = par == k
            margins.append(KernelSmoothed(self.fam.kernels[i], a[sel], y[sel]) if sel.any() else Zero1D())
        return ProductLineMeasure(margins)

    def line_cumulative(self, i, t):
        par, a, y = self.inner[i]
        out = np.zeros(self.n_atoms)
        if par.size:
            np.add.at(out, par, a * self.fam.kernels[i].primitive(np.asarray(t, float)[par], y))
        return out


class SubordinatedFamily(AtomFamily):
    """Lines driven by a shared random root measure (random-measure atoms)."""

    name = "subordinated"
    has_density = True
    random_measure = True
    integrator = "nested_quadrature"

    def __init__(self, root_jumps, root_locations: Interval, root_kernel, jumps, kernels, order=16):
        if len(jumps) != len(kernels) or not jumps:
            raise ValueError("one jump intensity and one kernel per line")
        if not (math.isfinite(root_kernel.lo) and math.isfinite(root_kernel.hi)):
            raise ValueError("the root kernel must have compact support")
        self.root_jumps, self.root_locations, self.root_kernel = root_jumps, root_locations, root_kernel
        self.jumps, self.kernels = list(jumps), list(kernels)
        self.dim = len(self.jumps)
        self.order = order
        self.finite = bool(getattr(root_jumps, "finite", False))
        self._cache = {}

    # -- quadrature ------------------------------------------------------
    def _window(self, b0):
        lo = max(0.0, b0 + self.root_kernel.lo)
        hi = b0 + self.root_kernel.hi
        return lo, hi

    def _omega(self, y, b0):
        return self.root_kernel(y, b0)

    def _kinks(self, line_values):
        ks = [np.empty(0)]
        for i, xs in line_values.items():
            xs = np.asarray(xs, float)
            xs = xs[np.isfinite(xs)]
            if xs.size:
                ks.append(self.kernels[i].y_breakpoints(xs))
        return np.concatenate(ks)

    def _cap(self, line_values):
        """Largest relevant inner location: beyond it every kernel term vanishes."""
        cap = -INF
        for i, xs in line_values.items():
            xs = np.asarray(xs, float)
            if xs.size == 0:
                continue
            if not np.isfinite(xs).all():
                return INF
            cap = max(cap, float(xs.max()) - self.kernels[i].lo)
        return cap

    def _outer_rule(self, kinks, cap):
        lo, hi = self.root_locations.lower, self.root_locations.upper
        if math.isfinite(cap):
            hi = min(hi, cap - self.root_kernel.lo)
        if hi <= lo:
            return np.empty(0), np.empty(0)
        k0 = np.concatenate([kinks - self.root_kernel.lo, kinks - self.root_kernel.hi,
                             [-self.root_kernel.lo, -self.root_kernel.hi]])
        if math.isfinite(cap):
            k0 = np.concatenate([k0, [cap - self.root_kernel.lo, cap - self.root_kernel.hi]])
        edges = np.concatenate([[lo, hi], k0[(k0 > lo) & (k0 < hi)]])
        return gauss_panels(edges, self.order)

    def _inner_rule(self, b0, kinks, cap):
        lo, hi = self._window(b0)
        hi = min(hi, cap)
        if hi <= lo:
            return np.empty(0), np.empty(0)
        edges = np.concatenate([[lo, hi], kinks[(kinks > lo) & (kinks < hi)]])
        return gauss_panels(edges, self.order)

    # -- Laplace exponent --------------------------------------------------
    def _A(self, y, w, b0, gfun):
        """``sum_i int psi_i(g_i(y)) omega(y; b0) dy`` on a given inner rule."""
        if y.size == 0:
            return 0.0
        om = self._omega(y, b0) * w
        tot = 0.0
        for i in range(self.dim):
            g = gfun(i, y)
            if g is None:
                continue
            pos = om > 0
            tot += float(np.sum(om[pos] * self.jumps[i].psi(g[pos])))
        return tot

    def laplace_exponent(self, points, z):
        points = np.atleast_2d(np.asarray(points, float))
        z = np.asarray(z, float)
        use = (z != 0) & np.isfinite(points).any(axis=1)
        if not use.any():
            return 0.0
        P, Z = points[use], z[use]
        line_values = {i: P[:, i][np.isfinite(P[:, i])] for i in range(self.dim)}
        kinks = self._kinks(line_values)
        cap = self._cap(line_values)

        def gfun(i, y):
            col = P[:, i]
            fin = np.isfinite(col)
            if not fin.any():
                return None
            K = self.kernels[i].primitive(col[fin][None, :], y[:, None])
            return K @ Z[fin]

        b0s, wb = self._outer_rule(kinks, cap)
        dens = self.root_locations.density(b0s)
        tot = 0.0
        for b0, w, r in zip(b0s, wb, dens):
            if r == 0:
                continue
            y, wy = self._inner_rule(b0, kinks, cap)
            A = self._A(y, wy, b0, gfun)
            tot += w * r * float(self.root_jumps.psi(A))
        return tot

    def mean_masses(self, points):
        """``E[eta(C_r)]`` integrated against the root intensity (closed form in ``a0``)."""
        points = np.atleast_2d(np.asarray(points, float))
        m0 = float(self.root_jumps.tau(1, 0.0))
        out = np.zeros(points.shape[0])
        for r, x in enumerate(points):
            out[r] = m0 * self._root_mass_integral(x, lambda v: v)
        return out

    def _inner_mean(self, x, b0, kinks, cap):
        y, wy = self._inner_rule(b0, kinks, cap)
        if y.size == 0:
            return 0.0
        om = self._omega(y, b0) * wy
        tot = 0.0
        for i in range(self.dim):
            if np.isfinite(x[i]):
                tot += float(self.jumps[i].tau(1, 0.0)) * float(np.sum(om * self.kernels[i].primitive(x[i], y)))
        return tot

    def _root_mass_integral(self, x, f):
        x = np.asarray(x, float)
        line_values = {i: x[i:i + 1] for i in range(self.dim) if np.isfinite(x[i])}
        if not line_values:
            return 0.0
        kinks = self._kinks(line_values)
        cap = self._cap(line_values)
        b0s, wb = self._outer_rule(kinks, cap)
        dens = self.root_locations.density(b0s)
        return float(sum(w * r * f(self._inner_mean(x, b0, kinks, cap)) for b0, w, r in zip(b0s, wb, dens)))

    def integrability(self, x):
        # Jensen: E min(eta(C), 1) <= min(E eta(C), 1), giving an upper bound
        return self._root_mass_integral(x, lambda v: self.root_jumps.min_moment(v))

    # -- truncation and tables ---------------------------------------------
    def _root_weight_max(self):
        lo, hi = self.root_locations.lower, self.root_locations.upper
        b = np.linspace(lo, hi, 513)
        return float(np.max(self.root_kernel.total(b)))

    def cutoff(self, trunc: Truncation):
        """Root cutoff; the inner cutoffs are available from :meth:`inner_cutoffs`."""
        key = ("cut", trunc.tol, trunc.horizon, trunc.n_max)
        if key not in self._cache:
            h = trunc.horizon
            L0 = self.root_locations.total()
            W = self._root_weight_max()
            M = sum(float(j.tau(1, 0.0)) * k.bound * h for j, k in zip(self.jumps, self.kernels)) * W
            half = Truncation(trunc.tol / 2, trunc.horizon, trunc.n_max)
            if self.finite:
                root = (0.0, 0.0)
            else:
                root = solve_cutoff(self.root_jumps.truncated_first_moment,
                                    lambda e: L0 * self.root_jumps.tail_mass(e), L0 * M, half)
            m0 = float(self.root_jumps.tau(1, 0.0))
            inner, bound = [], root[1]
            per = Truncation(trunc.tol / (2 * self.dim), trunc.horizon, None)
            for j, k in zip(self.jumps, self.kernels):
                if getattr(j, "finite", False):
                    inner.append(0.0)
                    continue
                e, b = solve_cutoff(j.truncated_first_moment, j.tail_mass, m0 * L0 * W * k.bound * h, per)
                inner.append(e)
                bound += b
            self._cache[key] = (root[0], bound, inner)
        eps0, bound, _ = self._cache[key]
        return eps0, bound

    def inner_cutoffs(self, trunc):
        self.cutoff(trunc)
        return self._cache[("cut", trunc.tol, trunc.horizon, trunc.n_max)][2]

    def expected_count(self, trunc):
        eps0, _ = self.cutoff(trunc)
        return float(self.root_jumps.tail_mass(eps0)) * self.root_locations.total()

    def _inner_atoms(self, a0, b0, i, eps, rng, tilt=None):
        """Inner atoms of line ``i`` for root atoms ``(a0, b0)``; optional thinning."""
        jumps, kern0 = self.jumps[i], self.root_kernel
        W = kern0.total(b0)
        lam = a0 * W * float(jumps.tail_mass(eps))
        counts = rng.poisson(lam)
        n = int(counts.sum())
        par = np.repeat(np.arange(a0.size), counts)
        if n == 0:
            return par, np.empty(0), np.empty(0)
        a = jumps.sample_above(eps, n, rng) if eps > 0 else jumps.sample_above(0.0, n, rng)
        y = kern0.inverse_primitive(rng.random(n) * W[par], b0[par])
        if tilt is not None:
            keep = rng.random(n) < np.exp(-a * tilt(y))
            par, a, y = par[keep], a[keep], y[keep]
        return par, a, y

    def _draw(self, count, rng, trunc):
        eps0, _ = self.cutoff(trunc)
        eps = self.inner_cutoffs(trunc)
        a0 = self.root_jumps.sample_above(eps0, count, rng) if count else np.empty(0)
        b0 = self.root_locations.sample(count, rng) if count else np.empty(0)
        inner = [self._inner_atoms(a0, b0, i, eps[i], rng) for i in range(self.dim)]
        return SubordinatedTable(np.zeros(count, int), 1, self, a0, b0, inner)

    def scaled(self, c):
        return SubordinatedFamily(self.root_jumps.scaled(c), self.root_locations, self.root_kernel,
                                  self.jumps, self.kernels, self.order)

    # -- posterior machinery -------------------------------------------------
    def _block_setup(self, obs: ObservationSet, block):
        """Per-line pinned finite values and observed values, or ``None`` if ``h = 0``."""
        bset = set(block)
        pinned = {i: [] for i in range(self.dim)}
        observed = {i: [] for i in range(self.dim)}
        for c, (i, j) in enumerate(obs.cells):
            x = obs.values[i, j]
            observed[i].append(x)
            if c in bset:
                if math.isfinite(x):
                    pinned[i].append(x)
            elif not math.isfinite(x) and math.isinf(float(self.kernels[i].total(np.array([0.0]))[0])):
                return None
        pinned = {i: np.asarray(v) for i, v in pinned.items()}
        observed = {i: np.asarray(v) for i, v in observed.items() if v}
        return pinned, observed

    def _line_terms(self, y, b0, pinned, observed):
        """Inner-rule evaluations: ``G_i(y)``, ``omega`` and per-line subset integrands."""
        om = self._omega(y, b0)
        G = {}
        for i, xs in observed.items():
            G[i] = self.kernels[i].primitive(xs[None, :], y[:, None]).sum(axis=1)
        return om, G

    def _cvals(self, y, wy, om, G, i, xs):
        """``c_{i,T}`` for every nonempty subset ``T`` of the pinned values ``xs``."""
        m = xs.size
        kap = self.kernels[i](xs[None, :], y[:, None])       # (ny, m)
        g = G.get(i, np.zeros(y.size))
        out = {}
        taus = {k: self.jumps[i].tau(k, g) for k in range(1, m + 1)}
        for T in range(1, 1 << m):
            idx = [k for k in range(m) if T >> k & 1]
            out[T] = float(np.sum(wy * om * taus[len(idx)] * np.prod(kap[:, idx], axis=1)))
        return out

    def _A_block(self, y, wy, om, G):
        tot = 0.0
        for i, g in G.items():
            pos = om > 0
            tot += float(np.sum(wy[pos] * om[pos] * self.jumps[i].psi(g[pos])))
        return tot

    def _root_terms(self, b0, pinned, observed, kinks, cap):
        """``(A(b0), C_k(b0) coefficients, per-line c-values)`` at one root location."""
        y, wy = self._inner_rule(b0, kinks, cap)
        m_tot = sum(v.size for v in pinned.values())
        if y.size == 0:
            return 0.0, np.zeros(m_tot + 1), None
        om, G = self._line_terms(y, b0, pinned, observed)
        A = self._A_block(y, wy, om, G)
        coeffs = np.zeros(m_tot + 1)
        coeffs[0] = 1.0
        cv = {}
        for i, xs in pinned.items():
            if xs.size == 0:
                continue
            cv[i] = self._cvals(y, wy, om, G, i, xs)
            poly = partition_polynomials({T: np.array([v]) for T, v in cv[i].items()}, xs.size)[:, 0]
            coeffs = np.convolve(coeffs, poly)[: m_tot + 1]
        return A, coeffs, cv

    def _root_density(self, b0s, pinned, observed, kinks, cap):
        out = np.zeros(np.size(b0s))
        dens = self.root_locations.density(b0s)
        for n, (b0, r) in enumerate(zip(np.atleast_1d(b0s), np.atleast_1d(dens))):
            if r == 0:
                continue
            A, C, _ = self._root_terms(b0, pinned, observed, kinks, cap)
            if not math.isfinite(A):
                continue
            val = sum(C[k] * float(self.root_jumps.tau(k, A)) for k in range(1, C.size) if C[k] != 0)
            out[n] = r * val
        return out

    def block_integral(self, obs, block):
        key = ("blk", obs.key, tuple(sorted(block)))
        if key in self._cache:
            return self._cache[key]
        setup = self._block_setup(obs, block)
        if setup is None:
            val = 0.0
        else:
            pinned, observed = setup
            if sum(v.size for v in pinned.values()) == 0:
                raise ValueError("a block pinned only at infinity has no finite weight")
            kinks, cap = self._kinks(observed), self._cap(observed)
            b0s, wb = self._outer_rule(kinks, cap)
            val = float(np.sum(wb * self._root_density(b0s, pinned, observed, kinks, cap)))
        self._cache[key] = val
        return val

    def sample_block(self, obs, block, rng, trunc=None):
        trunc = trunc or Truncation()
        pinned, observed = self._block_setup(obs, block)
        kinks, cap = self._kinks(observed), self._cap(observed)
        lo, hi = self.root_locations.lower, self.root_locations.upper
        if math.isfinite(cap):
            hi = min(hi, cap - self.root_kernel.lo)
        k0 = np.concatenate([kinks - self.root_kernel.lo, kinks - self.root_kernel.hi,
                             [-self.root_kernel.lo, -self.root_kernel.hi]])
        edges = np.concatenate([[lo, hi], k0[(k0 > lo) & (k0 < hi)]])
        key = ("tab", obs.key, tuple(sorted(block)))
        if key not in self._cache:
            self._cache[key] = TabulatedSampler(
                lambda b: self._root_density(b, pinned, observed, kinks, cap), edges, 48)
        tab = self._cache[key]
        b0 = float(tab.sample(1, rng)[0])
        A, C, cv = self._root_terms(b0, pinned, observed, kinks, cap)
        ks = np.arange(C.size)
        w = np.array([C[k] * float(self.root_jumps.tau(k, A)) if (k > 0 and C[k] > 0) else 0.0 for k in ks])
        k = int(rng.choice(ks, p=w / w.sum()))
        a0 = float(self.root_jumps.sample_tilted(k, A, 1, rng)[0])
        eps = self.inner_cutoffs(trunc)
        y_lo, y_hi = self._window(b0)
        y_hi = min(y_hi, cap)
        margins = []
        for i in range(self.dim):
            xs = pinned[i]
            obs_i = observed.get(i, np.empty(0))
            gfun = (lambda yy, o=obs_i, i=i: self.kernels[i].primitive(o[None, :], np.asarray(yy)[:, None]).sum(axis=1)
                    if o.size else np.zeros(np.shape(yy)))
            a_list, y_list = [], []
            if xs.size:
                for blk in sample_partition(cv[i], xs.size, a0, rng):
                    pts = xs[blk]

                    def dens(yy, pts=pts, gfun=gfun, i=i):
                        yy = np.asarray(yy, float)
                        val = self._omega(yy, b0) * self.jumps[i].tau(len(pts), gfun(yy))
                        return val * np.prod(self.kernels[i](pts[None, :], yy[:, None]), axis=1)

                    ed = np.concatenate([[y_lo, y_hi], kinks[(kinks > y_lo) & (kinks < y_hi)]])
                    y = float(TabulatedSampler(dens, ed, 64).sample(1, rng)[0])
                    a = float(self.jumps[i].sample_tilted(len(pts), float(gfun(np.array([y]))[0]), 1, rng)[0])
                    a_list.append(a)
                    y_list.append(y)
            # the remaining inner atoms form a CRM tilted by exp(-a G_i(y))
            _, a_r, y_r = self._inner_atoms(np.array([a0]), np.array([b0]), i, eps[i], rng, tilt=gfun)
            a_all = np.concatenate([a_list, a_r])
            y_all = np.concatenate([y_list, y_r])
            margins.append(KernelSmoothed(self.kernels[i], a_all, y_all) if a_all.size else Zero1D())
        return ProductLineMeasure(margins)

    def mcmc_block(self, obs, block, rng, steps=200, trunc=None):
        # the exact component draw is an independence proposal accepted with probability one
        return self.sample_block(obs, block, rng, trunc)

    def to_dict(self):
        return {"kind": "subordinated", "root_jumps": self.root_jumps.to_dict(),
                "root_locations": self.root_locations.to_dict(), "root_kernel": self.root_kernel.to_dict(),
                "jumps": [j.to_dict() for j in self.jumps], "kernels": [k.to_dict() for k in self.kernels]}
