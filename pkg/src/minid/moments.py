"""Prior summaries: Laplace transforms, hazard moments, mean functionals, association."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Callable, Sequence

import numpy as np
from scipy.special import comb

from .combinatorics import blocks_of, set_partitions
from .families import CRMFamily, FiniteFamily, KernelCRMFamily, Truncation, TransformedFamily, gauss_panels
from .levy import LevyCharacteristics
from .measures import INF, MonotoneMap, image_transform


class DifferentiationError(ArithmeticError):
    """Richardson levels disagree beyond the tolerance."""


class TailError(ArithmeticError):
    """The integrand did not decay below the cutoff within the panel budget."""


@dataclass
class LaplaceQuery:
    """Points ``x_1..x_m`` (rows) and exponents ``z``."""

    points: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.z = np.atleast_1d(np.asarray(self.z, dtype=float))
        if self.points.shape[0] < 1 or self.z.size != self.points.shape[0]:
            raise ValueError("one exponent per query point")


def _negative_certified(chars: LevyCharacteristics, z) -> bool:
    """Negative exponents are allowed when every jump law has an exponential moment there."""
    zmin = float(np.min(z))
    for f in chars.families:
        j = getattr(f, "jumps", None)
        if j is None or not hasattr(j, "exp_moment_floor"):
            return False
        if zmin * 1.0 <= j.exp_moment_floor():
            return False
    return True


def laplace_transform(chars: LevyCharacteristics, q: LaplaceQuery | np.ndarray, z=None) -> float:
    """``E[prod_r S_mu(x_r)^{z_r}]`` from the Levy-Khintchine exponent."""
    if not isinstance(q, LaplaceQuery):
        q = LaplaceQuery(q, z)
    if (q.z < 0).any() and not _negative_certified(chars, q.z):
        raise ValueError("negative exponents need an exponential-moment certificate")
    if not (q.z != 0).any():
        return 1.0
    val = chars.laplace_exponent(q.points, q.z)
    if not math.isfinite(val) and val > 0:
        return 0.0
    if not math.isfinite(val):
        raise ArithmeticError("Laplace exponent diverges")
    return math.exp(-val)


# ---------------------------------------------------------------------------
# hazard moments
# ---------------------------------------------------------------------------

def _family_cumulant(fam, points, orders):
    """``int prod_r eta(C_r)^{j_r} nu(d eta)`` in closed form, or ``None``."""
    J = int(sum(orders))
    act = [r for r, j in enumerate(orders) if j > 0]
    if isinstance(fam, FiniteFamily):
        M = fam._masses(points)
        return float(fam.weights @ np.prod(M[:, act] ** np.asarray(orders)[act], axis=1))
    if isinstance(fam, CRMFamily):
        masses, member = fam.locations.cells(points)
        return float(fam.jumps.tau(J, 0.0)) * float(masses @ np.prod(member[:, act], axis=1))
    if isinstance(fam, KernelCRMFamily):
        x = points[act, fam.line]
        if not np.isfinite(x).all():
            return 0.0
        b, w = fam._rule(x)
        K = np.ones(b.size)
        for r in act:
            K = K * fam.kernel.primitive(points[r, fam.line], b) ** orders[r]
        return float(fam.jumps.tau(J, 0.0)) * float(np.sum(w * fam.locations.density(b) * K))
    return None


def _cumulant(chars, points, orders):
    J = sum(orders)
    tot = 0.0
    for f in chars.families:
        c = _family_cumulant(f, points, orders)
        if c is None:
            return None
        tot += c
    if J == 1:
        r = int(np.flatnonzero(orders)[0])
        tot += float(chars.base_masses(points[r:r + 1])[0])
    return tot


def _moments_from_cumulants(chars, points, orders):
    var = [r for r, j in enumerate(orders) for _ in range(j)]
    tot = 0.0
    cache = {}
    for labels in set_partitions(len(var)):
        term = 1.0
        for blk in blocks_of(labels):
            o = [0] * len(orders)
            for c in blk:
                o[var[c]] += 1
            key = tuple(o)
            if key not in cache:
                cache[key] = _cumulant(chars, points, o)
                if cache[key] is None:
                    return None
            term *= cache[key]
        tot += term
    return tot


def _forward_difference(L, orders, h):
    J = sum(orders)
    tot = 0.0
    for ks in product(*[range(j + 1) for j in orders]):
        coef = (-1.0) ** (J - sum(ks)) * float(np.prod([comb(j, k) for j, k in zip(orders, ks)]))
        tot += coef * L(h * np.asarray(ks, dtype=float))
    return tot / h ** J


def _richardson(L, orders, h):
    """Three-level Richardson extrapolation of a forward difference (error ``O(h)`` per level)."""
    D = [_forward_difference(L, orders, h / 2 ** k) for k in range(3)]
    R1 = [2 * D[1] - D[0], 2 * D[2] - D[1]]
    return (4 * R1[1] - R1[0]) / 3, abs(R1[1] - R1[0])


def hazard_moments(chars: LevyCharacteristics, points, orders, method: str = "auto",
                   h: float | None = None, rtol: float = 1e-3) -> float:
    """``E[prod_r mu(C_r)^{j_r}]`` for ``C_r`` the orthant complement of ``points[r]``.

    ``method="exact"`` assembles moments from closed-form joint cumulants;
    ``"numeric"`` differentiates the Laplace transform at ``z = 0`` with
    forward differences (so that ``z >= 0``) and Richardson extrapolation.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    orders = [int(j) for j in np.atleast_1d(orders)]
    if len(orders) != points.shape[0] or min(orders) < 0:
        raise ValueError("one nonnegative order per point")
    J = sum(orders)
    if J == 0:
        return 1.0
    if J > 4:
        raise ValueError("mixed moments beyond total order 4 are not supported")
    if method in ("auto", "exact"):
        val = _moments_from_cumulants(chars, points, orders)
        if val is not None:
            return float(val)
        if method == "exact":
            raise ValueError("no closed-form cumulants for these families")
    if h is None:
        h = 1e-3 if J <= 2 else 2e-2
    L = lambda zz: laplace_transform(chars, LaplaceQuery(points, zz)) if np.any(zz) else 1.0
    val, spread = _richardson(L, orders, h)
    val = (-1) ** J * val
    if spread > rtol * max(abs(val), 1e-8) + 1e-7:
        raise DifferentiationError(f"Richardson levels disagree by {spread:.3g}")
    return float(val)


def mean_masses(chars: LevyCharacteristics, points) -> np.ndarray:
    """First moments ``E[mu(C_r)]`` by the family mean-measure routines."""
    return chars.mean_masses(points)


# ---------------------------------------------------------------------------
# mean functionals
# ---------------------------------------------------------------------------

def transform_chars(chars: LevyCharacteristics, g: MonotoneMap) -> LevyCharacteristics:
    """Characteristics of the image measure under a monotone map."""
    return LevyCharacteristics(image_transform(chars.base, g), [TransformedFamily(f, g) for f in chars.families])


def _upper_inverse(f: Callable, t, lo=0.0, hi=1e6, iters=120):
    """``sup{x >= lo : f(x) <= t}`` by bisection, vectorized."""
    t = np.asarray(t, dtype=float)
    a = np.full(t.shape, lo)
    b = np.full(t.shape, hi)
    below = f(b) <= t
    for _ in range(iters):
        mid = 0.5 * (a + b)
        ok = f(mid) <= t
        a = np.where(ok, mid, a)
        b = np.where(ok, b, mid)
    return np.where(below, INF, a)


@dataclass
class FunctionalMoment:
    value: float
    tail_bound: float
    cutoff: float


def _tail_cutoff(S1: Callable, width: float, tol: float, max_panels: int):
    """End of the first run of three consecutive panels where ``S1 < tol``."""
    run, t = 0, 0.0
    for _ in range(max_panels):
        t += width
        if S1(t) < tol:
            run += 1
            if run == 3:
                return t
        else:
            run = 0
    raise TailError(f"integrand still above {tol} at t = {t}")


def mean_functional_moment(chars: LevyCharacteristics, m: int = 1, f: Callable | None = None,
                           f_inverse: Callable | None = None, tol: float = 1e-10,
                           width: float | None = None, order: int = 16, max_panels: int = 4000,
                           full: bool = False):
    """``E[I(f, mu)^m]`` with ``I(f, mu) = int f dminid(mu)`` on the real line.

    Uses ``E[I^m] = int_{(0,inf)^m} L(1, f^{<-}(t_1), ..., f^{<-}(t_m)) dt`` by
    composite Gauss-Legendre rules on the ordered simplex (the integrand is
    symmetric), with the tail cut where the one-point integrand stays below
    ``tol`` over three consecutive panels.
    """
    if chars.dim != 1:
        raise ValueError("mean functionals are defined on the real line")
    if not 1 <= m <= 3:
        raise ValueError("supported orders are 1, 2, 3")
    if f is None:
        finv = lambda t: np.asarray(t, dtype=float)
    else:
        finv = f_inverse or (lambda t: _upper_inverse(f, t))

    def L(ts):
        pts = np.asarray(finv(np.asarray(ts, dtype=float)), dtype=float).reshape(-1, 1)
        return laplace_transform(chars, LaplaceQuery(pts, np.ones(pts.shape[0])))

    if width is None:
        # scale panels by the prior mean of minid(mu) when cheap
        width = 1.0
    T = _tail_cutoff(lambda t: L([t]), width, tol, max_panels)
    edges = np.arange(0.0, T + 0.5 * width, width)
    x, w = gauss_panels(edges, order)
    if m == 1:
        val = float(sum(wi * L([xi]) for xi, wi in zip(x, w)))
    elif m == 2:
        val = 0.0
        for t2, w2 in zip(x, w):
            inner_edges = np.concatenate([edges[edges < t2], [t2]])
            y, v = gauss_panels(inner_edges, order)
            val += w2 * float(sum(vi * L([yi, t2]) for yi, vi in zip(y, v)))
        val *= 2.0
    else:
        val = 0.0
        for t3, w3 in zip(x, w):
            e2 = np.concatenate([edges[edges < t3], [t3]])
            y2, v2 = gauss_panels(e2, max(order // 2, 4))
            for t2, ww2 in zip(y2, v2):
                e1 = np.concatenate([edges[edges < t2], [t2]])
                y1, v1 = gauss_panels(e1, max(order // 2, 4))
                val += w3 * ww2 * float(sum(vi * L([yi, t2, t3]) for yi, vi in zip(y1, v1)))
        val *= 6.0
    # exponential-tail estimate of the omitted part, times the symmetric factor
    tail = L([T]) * width * math.factorial(m) * max(T, 1.0) ** (m - 1)
    res = FunctionalMoment(val, tail, T)
    return res if full else val


# ---------------------------------------------------------------------------
# Monte Carlo helpers and association
# ---------------------------------------------------------------------------

def sample_masses(chars: LevyCharacteristics, points, size: int, rng, trunc: Truncation | None = None,
                  chunk: int = 20000) -> np.ndarray:
    """``(size, m)`` realized orthant masses ``mu(C_r)`` of independent IDEM draws."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    trunc = trunc or Truncation()
    base = chars.base_masses(points)
    out = np.empty((size, points.shape[0]))
    for s in range(0, size, chunk):
        n = min(chunk, size - s)
        tab = chars.table(n, rng, trunc)
        out[s:s + n] = base[None, :] + tab.owner_masses(points)
    return out


def mc_laplace(chars: LevyCharacteristics, q: LaplaceQuery, size: int, rng, trunc=None):
    """Monte Carlo ``E[prod S_mu(x_r)^{z_r}]`` and its standard error."""
    M = sample_masses(chars, q.points, size, rng, trunc)
    v = np.exp(-(M @ q.z))
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(size))


def _cov_se(a, b):
    a = a - a.mean()
    b = b - b.mean()
    p = a * b
    n = p.size
    return float(p.sum() / (n - 1)), float(p.std(ddof=1) / math.sqrt(n))


@dataclass
class CovarianceRow:
    kind: str
    left: tuple
    right: tuple
    cov: float
    se: float

    @property
    def failed(self) -> bool:
        return self.cov < -3.0 * self.se

    def as_dict(self):
        return {"kind": self.kind, "left": list(self.left), "right": list(self.right),
                "cov": self.cov, "se": self.se, "failed": self.failed}


@dataclass
class AssociationReport:
    rows: list

    @property
    def ok(self) -> bool:
        return not any(r.failed for r in self.rows)

    def as_dict(self):
        return {"ok": self.ok, "rows": [r.as_dict() for r in self.rows]}


def association_diagnostic(chars: LevyCharacteristics, pairs: Sequence, size: int = 20000, rng=None,
                           trunc: Truncation | None = None) -> AssociationReport:
    """Monte Carlo covariances that association forces to be nonnegative.

    For every pair of points: ``cov(S_mu(x), S_mu(y))``, the covariance of
    ``1{X_1 > x}`` and ``1{X_2 > y}`` across two exchangeable draws, and of
    ``1{X_1 > x}`` and ``1{X_1 > y}`` within one draw.
    """
    from .sampling import sample_batch

    rng = np.random.default_rng() if rng is None else rng
    pairs = [(np.asarray(x, float).ravel(), np.asarray(y, float).ravel()) for x, y in pairs]
    pts = np.array([p for pr in pairs for p in pr])
    S = np.exp(-sample_masses(chars, pts, size, rng, trunc))
    X = sample_batch(chars, size, 2, rng, trunc)             # (size, d, 2)
    rows = []
    for k, (x, y) in enumerate(pairs):
        c, se = _cov_se(S[:, 2 * k], S[:, 2 * k + 1])
        rows.append(CovarianceRow("survival", tuple(x), tuple(y), c, se))
        ax = np.all(X[:, :, 0] > x[None, :], axis=1).astype(float)
        by = np.all(X[:, :, 1] > y[None, :], axis=1).astype(float)
        c, se = _cov_se(ax, by)
        rows.append(CovarianceRow("across_draws", tuple(x), tuple(y), c, se))
        ay = np.all(X[:, :, 0] > y[None, :], axis=1).astype(float)
        c, se = _cov_se(ax, ay)
        rows.append(CovarianceRow("within_draw", tuple(x), tuple(y), c, se))
    return AssociationReport(rows)
