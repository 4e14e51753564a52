"""Independent oracles and a quick self-check suite.

The oracles avoid the posterior engine: the finite-family predictive is
computed by summing over Poisson atom counts, densities are integrated per
stratum, and scenario laws come from brute-force enumeration.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, stats
from scipy.stats import qmc

from .families import FiniteFamily, Truncation
from .measures import INF, ProductLineMeasure
from .observations import ObservationSet


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag}  {self.name:<34} value={self.value:.4g}  tol={self.tolerance:.3g}  {self.detail}"


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------

def poisson_count_oracle(family: FiniteFamily, data, grid, n_max: int = 25) -> np.ndarray:
    """Predictive survival ``E[exp(-sum N_k H_k(t)) | data]`` for a univariate finite family.

    ``N_k ~ Poisson(w_k)`` independently; given the counts the data are i.i.d.
    with hazard ``sum N_k h_k``.  The sum runs over ``N_k < n_max``.
    """
    hs = []
    for m in family.measures:
        if not isinstance(m, ProductLineMeasure) or m.dim != 1:
            raise ValueError("the count oracle needs univariate line measures")
        hs.append(m.margins[0])
    data = np.asarray(data, dtype=float).ravel()
    grid = np.asarray(grid, dtype=float).ravel()
    h_data = np.array([h.hazard(data) for h in hs])          # (K, n)
    H_data = np.array([h.cumulative(data) for h in hs])
    H_grid = np.array([h.cumulative(grid) for h in hs])      # (K, G)
    counts = np.array(list(itertools.product(range(n_max), repeat=len(hs))), dtype=float)
    logp = stats.poisson.logpmf(counts, family.weights[None, :]).sum(axis=1)
    with np.errstate(divide="ignore"):
        loglik = np.log(counts @ h_data).sum(axis=1) - (counts @ H_data).sum(axis=1)
    lw = logp + loglik
    w = np.exp(lw - lw[np.isfinite(lw)].max())
    w /= w.sum()
    return w @ np.exp(-(counts @ H_grid))


def scenario_oracle(model, obs) -> dict:
    """Brute-force scenario law from block weights, independent of the posterior routines."""
    from .combinatorics import blocks_of, set_partitions
    from .sampling import HittingScenario

    def v(block):
        return float(model.family_integrals(obs, block).sum()) + model.k_term(obs, block)

    out = {}
    for labels in set_partitions(obs.size):
        out[HittingScenario(labels)] = math.prod(v(b) for b in blocks_of(labels))
    tot = sum(out.values())
    return {k: p / tot for k, p in out.items()}


def total_variation(freq: dict, probs: dict) -> float:
    keys = set(freq) | set(probs)
    return 0.5 * sum(abs(freq.get(k, 0.0) - probs.get(k, 0.0)) for k in keys)


# ---------------------------------------------------------------------------
# density normalization
# ---------------------------------------------------------------------------

def _stratum_points(d, coords, z):
    x = np.full((z.shape[0], d), INF)
    x[:, list(coords)] = z
    return x


def _half_line(f, start, scale, max_panels=80):
    """``int_start^inf f`` over geometrically growing panels of initial width ``scale``."""
    tot, err, lo, w = 0.0, 0.0, start, scale
    for _ in range(max_panels):
        v, e = integrate.quad(f, lo, lo + w, limit=200, epsabs=1e-15, epsrel=1e-13)
        tot, err = tot + v, err + e
        if abs(v) < 1e-16 * max(1.0, abs(tot)) and f(lo + w) < 1e-16:
            break
        lo, w = lo + w, 2.0 * w
    return tot, err


def minid_mass(eta, method: str = "quad", n: int = 2 ** 15, reps: int = 8, rng=None, scale: float = 1.0):
    """Total mass of the min-id density of ``eta``: strata integrals plus the atom at infinity.

    ``quad`` integrates each stratum by adaptive quadrature (line measures
    factor into one-dimensional integrals; otherwise strata of dimension at
    most two).  ``mc`` uses ``reps`` scrambled Sobol replicates on the map
    ``x = scale u / (1 - u)`` and returns the replicate standard error.
    Returns ``(value, error)``.
    """
    d = eta.dim
    strata = [c for r in range(1, d + 1) for c in itertools.combinations(range(d), r)]
    at_inf = float(eta.minid_density(np.full(d, INF)))
    if method == "quad":
        if isinstance(eta, ProductLineMeasure):
            ints, err = [], 0.0
            for m in eta.margins:
                bps = [b for b in np.atleast_1d(m.breakpoints()) if np.isfinite(b) and b > 0]
                f = lambda t, m=m: float(m.e_factor(np.array([t]))[0])
                hi = max(bps) if bps else 0.0
                a, e1 = integrate.quad(f, 0.0, hi, points=bps[:-1] or None, limit=400,
                                       epsabs=1e-13, epsrel=1e-12) if hi > 0 else (0.0, 0.0)
                h0 = float(m.hazard(np.array([hi + 1e-9]))[0])
                b, e2 = _half_line(f, hi, 1.0 / h0 if h0 > 0 else 1.0)
                ints.append(a + b)
                err += e1 + e2
            tot = 0.0
            for c in strata + [()]:
                p = 1.0
                for i, m in enumerate(eta.margins):
                    p *= ints[i] if i in c else float(m.e_factor(np.array([INF]))[0])
                tot += p
            return tot, err
        tot, err = at_inf, 0.0
        for c in strata:
            if len(c) == 1:
                f = lambda t: float(eta.minid_density(_stratum_points(d, c, np.array([[t]]))[0]))
                v, e = integrate.quad(f, 0.0, INF, limit=400)
            elif len(c) == 2:
                f = lambda t2, t1: float(eta.minid_density(_stratum_points(d, c, np.array([[t1, t2]]))[0]))
                v, e = integrate.dblquad(f, 0.0, INF, 0.0, INF)
            else:
                raise ValueError("quadrature covers strata of dimension at most two")
            tot += v
            err += e
        return tot, err
    if method != "mc":
        raise ValueError("method must be 'quad' or 'mc'")
    rng = np.random.default_rng() if rng is None else rng
    lines = isinstance(eta, ProductLineMeasure)
    maps = [_margin_map(m) for m in eta.margins] if lines else [(0.0, scale)] * d
    vals = np.empty(reps)
    for r in range(reps):
        tot = at_inf
        for c in strata:
            u = np.clip(qmc.Sobol(len(c), scramble=True, seed=rng).random(n), 0.0, 1.0 - 1e-12)
            z = np.empty(u.shape)
            jac = np.ones(n)
            for k, i in enumerate(c):
                start, s = maps[i]
                z[:, k] = start + s * u[:, k] / (1.0 - u[:, k])
                jac *= s / (1.0 - u[:, k]) ** 2
            if lines:
                f = np.ones(n)
                for i, m in enumerate(eta.margins):
                    f *= m.e_factor(z[:, c.index(i)]) if i in c else float(m.e_factor(np.array([INF]))[0])
            else:
                f = np.array([eta.minid_density(p) for p in _stratum_points(d, c, z)])
            tot += float(np.mean(f * jac))
        vals[r] = tot
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(reps))


def _margin_map(m):
    """Start of the hazard support and a time scale for the Sobol map of one margin."""
    bps = np.sort([b for b in np.atleast_1d(m.breakpoints()) if np.isfinite(b) and b >= 0])
    start = 0.0
    if bps.size and bps[0] > 0 and float(m.hazard(np.array([bps[0] / 2]))[0]) == 0.0:
        start = float(bps[0])
    # median of the first hit beyond ``start`` (half the mass when the law has an atom at inf)
    tot = float(m.total()) - float(m.cumulative(np.array([start]))[0])
    target = math.log(2.0) if tot > 2 * math.log(2.0) else tot / 2
    if not target > 0:
        return start, 1.0
    steps = start + np.logspace(-9, 12, 2000)
    H = m.cumulative(steps) - float(m.cumulative(np.array([start]))[0])
    k = int(np.argmax(H >= target))
    return start, float(steps[k] - start)


def family_atoms(fam, count: int, rng, trunc: Truncation | None = None, tries: int = 200) -> list:
    """``count`` nonzero atoms of ``fam`` (finite families return their fixed measures)."""
    if isinstance(fam, FiniteFamily):
        return list(fam.measures)
    out = []
    for _ in range(tries):
        tab = fam.proposal_table(count, rng, trunc or Truncation())
        out += [eta for eta in (tab.measure(k) for k in range(tab.n_atoms)) if not eta.is_zero()]
        if len(out) >= count:
            break
    return out[:count]


# ---------------------------------------------------------------------------
# quick suite
# ---------------------------------------------------------------------------

def _timed(fn):
    t = time.perf_counter()
    res = fn()
    res.seconds = time.perf_counter() - t
    return res


def check_e_factor() -> CheckResult:
    from .kernels import DykstraLaud
    from .locations import Interval
    from .survival_model import e_factor

    a, y, tau, x = 0.7, 0.5, 2.0, 1.2
    closed = a * tau * math.exp(-a * tau * (x - y))
    atom = e_factor((np.array([a]), np.array([y])), DykstraLaud(tau), x)
    # a narrow uniform location measure approximates the atom
    narrow = e_factor(Interval(y - 1e-6, y + 1e-6, a / 2e-6), DykstraLaud(tau), x)
    err = max(abs(atom - closed), abs(narrow - closed))
    return CheckResult("e-factor closed form", err < 1e-5, err, 1e-5)


def check_gibbs(sweeps: int = 30000, seed: int = 0) -> CheckResult:
    from .posterior import PosteriorModel, gibbs_chain
    from .presets import toy_two_family
    from .rng import make_rng

    p = toy_two_family()
    model = PosteriorModel(p.chars)
    probs = scenario_oracle(model, p.data)
    run = gibbs_chain(model, p.data, sweeps, make_rng(seed), burn_in=1000)
    tv = total_variation(run.frequencies(), probs)
    return CheckResult("gibbs vs enumeration", tv < 0.02, tv, 0.02, f"sweeps={sweeps}")


def check_predictive(M: int = 1000, seed: int = 0) -> CheckResult:
    from .posterior import PosteriorModel
    from .predictive import PredictiveConfig, predictive_summary
    from .presets import toy_three

    p = toy_three()
    grid = np.linspace(0.2, 2.5, 10)
    oracle = poisson_count_oracle(p.chars.families[0], p.data.cell_values(), grid)
    s = predictive_summary(PosteriorModel(p.chars), p.data, PredictiveConfig(k=200, M=M, grid=grid, seed=seed))
    tol = np.maximum(3 * s.se, 0.01)
    worst = float(np.max(np.abs(s.mean - oracle) - tol))
    return CheckResult("predictive vs count oracle", worst <= 0, float(np.max(np.abs(s.mean - oracle))),
                       float(tol.min()), f"M={M}")


def check_laplace(N: int = 20000, seed: int = 0) -> CheckResult:
    from .moments import LaplaceQuery, laplace_transform, mc_laplace
    from .presets import ntr_gamma
    from .rng import make_rng

    chars = ntr_gamma().chars
    q = LaplaceQuery([[0.5], [1.2], [2.5]], [1.0, 0.5, 2.0])
    exact = laplace_transform(chars, q)
    est, se = mc_laplace(chars, q, N, make_rng(seed))
    z = abs(est - exact) / se
    return CheckResult("laplace transform vs MC", z < 4, z, 4.0, f"exact={exact:.5f} mc={est:.5f}")


def check_ties(n_sets: int = 100, seed: int = 0) -> CheckResult:
    from .combinatorics import blocks_of
    from .posterior import tie_partition

    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(n_sets):
        m = int(rng.integers(2, 12))
        labels = rng.integers(0, max(1, m // 2), m)
        vals = rng.exponential(size=labels.max() + 1)[labels]
        got = tie_partition(ObservationSet.from_points(vals[:, None]))
        want = sorted(blocks_of(labels.tolist()))
        bad += sorted(got.blocks()) != want
    return CheckResult("NTR tie partition", bad == 0, float(bad), 0.0, f"{n_sets} datasets")


def check_density_norm(seed: int = 0) -> CheckResult:
    from .presets import hierarchical, hierarchical_deterministic, toy_three
    from .rng import make_rng

    rng = make_rng(seed)
    worst = 0.0
    for p in (toy_three(), hierarchical_deterministic(), hierarchical()):
        for fam in p.chars.families:
            for eta in family_atoms(fam, 2, rng):
                v, _ = minid_mass(eta, "quad")
                worst = max(worst, abs(v - 1.0))
    return CheckResult("density normalization", worst < 1e-6, worst, 1e-6)


def check_hazard_moments() -> CheckResult:
    from .moments import hazard_moments
    from .presets import ntr_gamma

    chars = ntr_gamma().chars
    pts, orders = [[0.8], [1.5]], [1, 1]
    a = hazard_moments(chars, pts, orders, method="exact")
    b = hazard_moments(chars, pts, orders, method="numeric")
    err = abs(a - b) / abs(a)
    return CheckResult("hazard moments exact vs numeric", err < 1e-3, err, 1e-3)


SUITE = [check_e_factor, check_ties, check_hazard_moments, check_laplace, check_density_norm,
         check_gibbs, check_predictive]


def run_suite(seed: int = 0) -> list:
    out = []
    for fn in SUITE:
        kw = {"seed": seed} if "seed" in fn.__code__.co_varnames else {}
        try:
            out.append(_timed(lambda: fn(**kw)))
        except Exception as exc:             # a crashing check is a failing check
            out.append(CheckResult(fn.__name__, False, float("nan"), float("nan"), f"error: {exc}"))
    return out


def gibbs_diagnostics(preset: str = "toy_two_family", sweeps: int = 100000, burn_in: int = 1000,
                      seed: int = 0) -> dict:
    """TV distance between Gibbs frequencies and exact enumeration on a small instance."""
    from .posterior import ENUMERATION_CAP, PosteriorModel, gibbs_chain
    from .presets import load_preset
    from .rng import make_rng

    p = load_preset(preset)
    if p.data is None or p.data.size > ENUMERATION_CAP:
        raise ValueError(f"preset {preset!r} has no small dataset for enumeration")
    model = PosteriorModel(p.chars)
    probs = scenario_oracle(model, p.data)
    run = gibbs_chain(model, p.data, sweeps, make_rng(seed), burn_in=burn_in)
    freq = run.frequencies()
    rows = [{"scenario": str(s), "exact": probs[s], "gibbs": freq.get(s, 0.0)}
            for s in sorted(probs, key=lambda s: s.labels)]
    return {"preset": preset, "sweeps": sweeps, "burn_in": burn_in, "seed": seed,
            "tv": total_variation(freq, probs), "n_partitions": len(probs), "rows": rows}
