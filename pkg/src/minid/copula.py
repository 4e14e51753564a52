"""Bivariate NTR prior with jumps coupled by a Clayton Levy copula.

Atoms are ``a1 delta_{(b, inf)} + a2 delta_{(inf, b)}``: both lines jump at
the common location ``b`` with sizes whose joint tail integral is
``U(a1, a2) = C(U1(a1), U2(a2))`` for the Clayton Levy copula
``C(u, v) = (u^{-theta} + v^{-theta})^{-1/theta}``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from .families import AtomFamily, AtomTable, Truncation, solve_cutoff
from .locations import Interval
from .measures import INF, AtomicMeasure


def clayton(u, v, theta):
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    with np.errstate(divide="ignore", over="ignore"):
        return np.where((u > 0) & (v > 0), (u ** -theta + v ** -theta) ** (-1.0 / theta), 0.0)


def clayton_conditional_quantile(u, w, theta):
    """``v`` with ``dC/du(u, v) = w``; ``dC/du = (1 + (u/v)^theta)^{-1-1/theta}``."""
    u = np.asarray(u, float)
    w = np.asarray(w, float)
    with np.errstate(divide="ignore", over="ignore"):
        return u * (w ** (-theta / (1.0 + theta)) - 1.0) ** (-1.0 / theta)


class PairTable(AtomTable):
    def __init__(self, owner, size, a1, a2, b):
        super().__init__(owner, size, 2)
        self.a1, self.a2, self.b = (np.asarray(v, float) for v in (a1, a2, b))

    def orthant_masses(self, points):
        points = np.atleast_2d(points)
        x1, x2 = points[:, 0], points[:, 1]
        hit1 = self.b[:, None] <= np.where(np.isfinite(x1), x1, -INF)[None, :]
        hit2 = self.b[:, None] <= np.where(np.isfinite(x2), x2, -INF)[None, :]
        return self.a1[:, None] * hit1 + self.a2[:, None] * hit2

    def first_hits(self, n, rng):
        out = np.full((self.n_atoms, 2, n), INF)
        for i, a in enumerate((self.a1, self.a2)):
            hit = rng.random((self.n_atoms, n)) < -np.expm1(-a)[:, None]
            out[:, i, :] = np.where(hit, self.b[:, None], INF)
        return out

    def subset(self, keep):
        return PairTable(self.owner[keep], self.size, self.a1[keep], self.a2[keep], self.b[keep])

    def measure(self, k):
        w, locs = [], []
        if self.a1[k] > 0:
            w.append(self.a1[k])
            locs.append([self.b[k], INF])
        if self.a2[k] > 0:
            w.append(self.a2[k])
            locs.append([INF, self.b[k]])
        return AtomicMeasure(w, np.array(locs))

    def line_cumulative(self, i, t):
        a = self.a1 if i == 0 else self.a2
        return np.where(self.b <= np.asarray(t), a, 0.0)

    def atom_locations_1d(self):
        return None


class LevyCopulaFamily(AtomFamily):
    """Clayton-coupled pair of CRMs on a common interval of locations."""

    name = "levy_copula"

    def __init__(self, jumps1, jumps2, theta: float, locations: Interval):
        if theta <= 0:
            raise ValueError("Clayton parameter must be positive")
        self.j = (jumps1, jumps2)
        self.theta = float(theta)
        self.locations = locations
        self.dim = 2
        self._cross_cache = {}

    def _cross(self, s1, s2):
        """``int int (1 - e^{-s1 a1})(1 - e^{-s2 a2}) nu(da1, da2)``."""
        if s1 <= 0 or s2 <= 0:
            return 0.0
        key = (round(s1, 14), round(s2, 14))
        if key not in self._cross_cache:
            U1, U2 = self.j[0].tail_mass, self.j[1].tail_mass

            # substitution a_i = -log(u_i) / s_i maps the integral onto the unit square
            def f(u2, u1):
                a1 = -math.log(u1) / s1
                a2 = -math.log(u2) / s2
                return float(clayton(U1(a1), U2(a2), self.theta))

            val, _ = integrate.dblquad(f, 0.0, 1.0, 0.0, 1.0, epsabs=1e-11, epsrel=1e-9)
            self._cross_cache[key] = val
        return self._cross_cache[key]

    def _psi_pair(self, s1, s2):
        return float(self.j[0].psi(s1)) + float(self.j[1].psi(s2)) - self._cross(s1, s2)

    def laplace_exponent(self, points, z):
        points = np.atleast_2d(np.asarray(points, float))
        z = np.asarray(z, float)
        cuts = points[np.isfinite(points)]
        lo, hi = self.locations.lower, self.locations.upper
        edges = np.unique(np.concatenate([[lo, hi], cuts[(cuts > lo) & (cuts < hi)]]))
        tot = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            mid = 0.5 * (a + b)
            s = [float(np.sum(z * (np.isfinite(points[:, i]) & (mid <= points[:, i])))) for i in range(2)]
            if s[0] == 0 and s[1] == 0:
                continue
            tot += self.locations.rate * (b - a) * self._psi_pair(*s)
        return tot

    def mean_masses(self, points):
        points = np.atleast_2d(np.asarray(points, float))
        out = np.zeros(points.shape[0])
        for i in range(2):
            x = points[:, i]
            fin = np.isfinite(x)
            out[fin] += float(self.j[i].tau(1, 0.0)) * self.locations.mass_below(x[fin])
        return out

    def integrability(self, x):
        x = np.asarray(x, float)
        # min(a1 1{b<=x1} + a2 1{b<=x2}, 1) <= sum of the single-line terms
        return float(sum(self.locations.mass_below(x[i]) * self.j[i].min_moment(1.0)
                         for i in range(2) if np.isfinite(x[i])))

    def cutoff(self, trunc):
        L = self.locations.total()
        m1 = lambda e: self.j[0].truncated_first_moment(e) + self.j[1].truncated_first_moment(e)
        cnt = lambda e: L * (self.j[0].tail_mass(e) + self.j[1].tail_mass(e))
        return solve_cutoff(m1, cnt, L, trunc)

    def expected_count(self, trunc):
        eps, _ = self.cutoff(trunc)
        return self.locations.total() * float(self.j[0].tail_mass(eps) + self.j[1].tail_mass(eps))

    def _pairs(self, count, rng, trunc):
        """Candidate pairs and the mask of those with ``max(a1, a2) > eps`` kept once.

        Candidates are led by line 1 with probability ``U1(eps) / (U1 + U2)``
        and by line 2 otherwise; line-2-led pairs whose partner exceeds
        ``eps`` are dropped since line-1-led draws already cover them.
        """
        eps, _ = self.cutoff(trunc)
        U1e, U2e = float(self.j[0].tail_mass(eps)), float(self.j[1].tail_mass(eps))
        lead1 = rng.random(count) < U1e / (U1e + U2e)
        a1 = np.empty(count)
        a2 = np.empty(count)
        n1 = int(lead1.sum())
        n2 = count - n1
        if n1:
            x = self.j[0].sample_above(eps, n1, rng)
            v = clayton_conditional_quantile(self.j[0].tail_mass(x), rng.random(n1), self.theta)
            a1[lead1] = x
            a2[lead1] = self._inverse_or_zero(1, v)
        if n2:
            x = self.j[1].sample_above(eps, n2, rng)
            u = clayton_conditional_quantile(self.j[1].tail_mass(x), rng.random(n2), self.theta)
            a2[~lead1] = x
            a1[~lead1] = self._inverse_or_zero(0, u)
        keep = lead1 | (a1 <= eps)
        b = self.locations.sample(count, rng)
        return a1, a2, b, keep

    def table(self, size, rng, trunc=None):
        trunc = trunc or Truncation()
        counts = rng.poisson(self.expected_count(trunc), size)
        owner = np.repeat(np.arange(size), counts)
        a1, a2, b, keep = self._pairs(owner.size, rng, trunc)
        return PairTable(owner[keep], size, a1[keep], a2[keep], b[keep])

    def proposal_table(self, count, rng, trunc):
        a1, a2, b, keep = self._pairs(count, rng, trunc)
        return PairTable(np.arange(count)[keep], count, a1[keep], a2[keep], b[keep])

    def _inverse_or_zero(self, i, v):
        v = np.asarray(v, float)
        out = np.zeros(v.shape)
        ok = np.isfinite(v) & (v > 0)
        out[ok] = self.j[i].tail_inverse(v[ok])
        return out

    def scaled(self, c):
        # scaling nu scales both margins and keeps the Levy copula homogeneous of order one
        return LevyCopulaFamily(self.j[0].scaled(c), self.j[1].scaled(c), self.theta, self.locations)

    def to_dict(self):
        return {"kind": "levy_copula", "jumps1": self.j[0].to_dict(), "jumps2": self.j[1].to_dict(),
                "theta": self.theta, "locations": self.locations.to_dict()}
