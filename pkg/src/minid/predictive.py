"""Posterior predictive sampling ``X_{n+1..n+k} | X_n ~ min(Y, Z)`` and survival summaries.

``Y`` comes from the tilted IDEM ``(alpha, nu_bar_n)``; ``Z`` is the
componentwise minimum over scenario blocks of i.i.d. draws from the block
components.  ``predictive_summary`` composes exact draws;
``mcmc_predictive`` reaches the same target with Metropolis moves.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .families import TiltedFamily, Truncation
from .measures import INF
from .observations import ObservationSet
from .rng import child_seeds, make_rng, substreams
from .posterior import PosteriorModel, gibbs_chain, sample_component, sample_scenarios, tilt
from .sampling import HittingScenario, sample_batch


@dataclass
class PredictiveConfig:
    k: int = 200
    M: int = 1000
    grid: np.ndarray = None
    seed: int | None = 0
    burn_in: int = 1000
    thin: int = 10
    level: float = 0.95
    trunc: Truncation = field(default_factory=Truncation)
    scenario_method: str = "auto"
    chains: int = 4
    component_steps: int = 200

    def __post_init__(self):
        if self.k < 1 or self.M < 1:
            raise ValueError("k and M must be positive")
        if not 0 < self.level < 1:
            raise ValueError("credible level must lie in (0, 1)")
        if self.grid is not None:
            g = np.asarray(self.grid, dtype=float)
            g2 = g.reshape(-1, 1) if g.ndim == 1 else g
            for col in g2.T:
                fin = col[np.isfinite(col)]
                if fin.size > 1 and not (np.diff(fin) > 0).all():
                    raise ValueError("grid must be strictly increasing per coordinate")
            self.grid = g2


def marginal_grid(times, d: int, i: int) -> np.ndarray:
    """Grid points ``t e_i`` (other coordinates at infinity) for component ``i``."""
    times = np.asarray(times, dtype=float)
    G = np.full((times.size, d), INF)
    G[:, i] = times
    return G


def empirical_survival(draws: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """``(..., G)``: fraction of draws ``(..., d, k)`` exceeding each grid point componentwise.

    Grid coordinates at infinity impose no constraint.
    """
    grid = np.atleast_2d(grid)
    free = np.isinf(grid)
    g = np.where(free, -INF, grid)
    exceed = (draws[..., None, :, :] > g[:, :, None]) | free[:, :, None]   # (..., G, d, k)
    return exceed.all(axis=-2).mean(axis=-1)


@dataclass
class PredictiveSummary:
    grid: np.ndarray
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    se: np.ndarray
    level: float
    meta: dict = field(default_factory=dict)

    def rows(self):
        for g, m, lo, hi, s in zip(self.grid, self.mean, self.lower, self.upper, self.se):
            yield list(g), float(m), float(lo), float(hi), float(s)


def _summarize(surv: np.ndarray, grid, level, se=None, meta=None) -> PredictiveSummary:
    a = (1.0 - level) / 2.0
    mean = surv.mean(axis=0)
    lo = np.minimum(np.quantile(surv, a, axis=0), mean)
    hi = np.maximum(np.quantile(surv, 1 - a, axis=0), mean)
    if se is None:
        se = surv.std(axis=0, ddof=1) / math.sqrt(surv.shape[0]) if surv.shape[0] > 1 else np.zeros(mean.shape)
    return PredictiveSummary(np.atleast_2d(grid), mean, lo, hi, se, level, meta or {})


def _grid(cfg: PredictiveConfig, d: int, obs: ObservationSet):
    if cfg.grid is not None:
        if cfg.grid.shape[1] != d:
            if cfg.grid.shape[1] == 1:
                return np.repeat(cfg.grid, d, axis=1)
            raise ValueError("grid dimension mismatch")
        return cfg.grid
    vals = obs.cell_values() if obs.size else np.array([1.0])
    t = np.linspace(0.0, float(np.max(vals[np.isfinite(vals)], initial=1.0)) * 1.5, 11)[1:]
    return np.repeat(t[:, None], d, axis=1)


def _components_min(model, obs, scen: HittingScenario, k, rng, trunc, method="exact", steps=200):
    d = model.dim
    Z = np.full((d, k), INF)
    for b in scen.blocks():
        comp = sample_component(model, obs, b, rng, trunc, method=method, steps=steps)
        if comp.is_zero():
            continue
        Z = np.minimum(Z, comp.sample_minid_batch(k, rng).T)
    return Z


def predictive_draw(model: PosteriorModel, obs: ObservationSet, k: int, rng, trunc: Truncation | None = None,
                    scenario_method: str = "auto", burn_in: int = 1000) -> np.ndarray:
    """One ``d x k`` draw of future observations given ``obs``."""
    trunc = trunc or Truncation()
    obs = obs if obs is not None else ObservationSet.empty(model.dim)
    Y = sample_batch(tilt(model.chars, obs), 1, k, rng, trunc)[0]
    if obs.size == 0:
        return Y
    scen = sample_scenarios(model, obs, 1, rng, scenario_method, burn_in)[0]
    return np.minimum(Y, _components_min(model, obs, scen, k, rng, trunc))


def predictive_survival(model: PosteriorModel, obs: ObservationSet, grid, M: int, cfg: PredictiveConfig,
                        rng) -> tuple[np.ndarray, dict]:
    """``(M, G)`` empirical survivals of ``M`` independent predictive replicates."""
    tilted = tilt(model.chars, obs)
    draws = sample_batch(tilted, M, cfg.k, rng, cfg.trunc)           # (M, d, k)
    if obs.size:
        scen = sample_scenarios(model, obs, M, rng, cfg.scenario_method, cfg.burn_in)
        for m in range(M):
            draws[m] = np.minimum(draws[m], _components_min(model, obs, scen[m], cfg.k, rng, cfg.trunc))
    return empirical_survival(draws, grid), {"infinite_entries": int(np.isinf(draws).sum())}


REPLICATE_CHUNK = 250


def run_chunked(task, total: int, seed, threads: int = 1, chunk: int = REPLICATE_CHUNK) -> list:
    """Run ``task(size, rng)`` over fixed-size chunks with per-chunk substreams.

    Chunk ``c`` always receives the ``c``-th child stream of ``seed``, so
    results are identical for every thread count.
    """
    sizes = [min(chunk, total - s) for s in range(0, total, chunk)]
    seeds = child_seeds(seed, len(sizes))
    jobs = [(n, make_rng(sq)) for n, sq in zip(sizes, seeds)]
    if threads <= 1 or len(jobs) == 1:
        return [task(n, r) for n, r in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: task(*job), jobs))


def predictive_summary(model: PosteriorModel, obs: ObservationSet | None, cfg: PredictiveConfig,
                       rng=None, threads: int = 1) -> PredictiveSummary:
    """Pointwise mean, credible band and MC error of ``M`` replicate empirical survivals.

    With an explicit ``rng`` all replicates share that stream; otherwise they
    are split into chunks seeded from ``cfg.seed``.
    """
    obs = obs if obs is not None else ObservationSet.empty(model.dim)
    grid = _grid(cfg, model.dim, obs)
    if rng is not None:
        surv, info = predictive_survival(model, obs, grid, cfg.M, cfg, rng)
        infinite = info["infinite_entries"]
    else:
        parts = run_chunked(lambda n, r: predictive_survival(model, obs, grid, n, cfg, r), cfg.M, cfg.seed,
                            threads)
        surv = np.concatenate([p[0] for p in parts])
        infinite = sum(p[1]["infinite_entries"] for p in parts)
    meta = {"method": "exact_composition", "M": cfg.M, "k": cfg.k, "seed": cfg.seed,
            "truncation_bound": tilt(model.chars, obs).truncation_bound(cfg.trunc),
            "infinite_entries": infinite}
    return _summarize(surv, grid, cfg.level, meta=meta)


# ---------------------------------------------------------------------------
# MCMC route
# ---------------------------------------------------------------------------

class _BirthDeath:
    """Spatial birth-death Metropolis chain for a Poisson process with intensity ``w nu``.

    Relative to a Poisson process with intensity ``nu`` (total mass
    ``Lambda``) the target has density ``prod w(eta_i)``; births propose from
    ``nu / Lambda`` and are accepted with ``min(1, Lambda w / (n + 1))``,
    deaths remove a uniform atom with ``min(1, n / (Lambda w_i))``.
    """

    def __init__(self, fam: TiltedFamily, trunc, rng):
        self.fam, self.trunc = fam, trunc
        self.lam = fam.base.expected_count(trunc)
        self.atoms, self.w = [], []
        # start from an exact draw of the tilted process
        tab = fam.table(1, rng, trunc)
        for r in range(tab.n_atoms):
            eta = tab.measure(r)
            self.atoms.append(eta)
            self.w.append(fam.weight(eta))

    def step(self, rng):
        n = len(self.atoms)
        if rng.random() < 0.5:
            eta = self.fam.base.proposal_table(1, rng, self.trunc).measure(0)
            w = self.fam.weight(eta)
            if rng.random() < min(1.0, self.lam * w / (n + 1)):
                self.atoms.append(eta)
                self.w.append(w)
        elif n:
            i = int(rng.integers(n))
            if rng.random() < min(1.0, n / (self.lam * self.w[i])):
                self.atoms.pop(i)
                self.w.pop(i)

    def draws(self, k, d, rng):
        Y = np.full((d, k), INF)
        for eta in self.atoms:
            Y = np.minimum(Y, eta.sample_minid_batch(k, rng).T)
        return Y


def split_rhat(chains: np.ndarray) -> np.ndarray:
    """Split-R-hat per trailing coordinate of ``(n_chains, n_iter, ...)``."""
    c, n = chains.shape[:2]
    h = n // 2
    if h < 2:
        return np.full(chains.shape[2:], np.nan)
    parts = np.concatenate([chains[:, :h], chains[:, h:2 * h]], axis=0)
    means = parts.mean(axis=1)
    W = parts.var(axis=1, ddof=1).mean(axis=0)
    B = h * means.var(axis=0, ddof=1)
    var = (h - 1) / h * W + B / h
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.sqrt(var / W)
    return np.where(W > 0, r, 1.0)


def _batch_means_se(chains: np.ndarray, n_batches: int = 20) -> np.ndarray:
    c, n = chains.shape[:2]
    b = max(1, n // n_batches)
    nb = n // b
    bm = chains[:, : nb * b].reshape(c, nb, b, *chains.shape[2:]).mean(axis=2).reshape(c * nb, *chains.shape[2:])
    return bm.std(axis=0, ddof=1) / math.sqrt(bm.shape[0])


def mcmc_predictive(model: PosteriorModel, obs: ObservationSet | None, cfg: PredictiveConfig,
                    rng=None, moves_per_iter: int | None = None) -> PredictiveSummary:
    """Metropolis-within-Gibbs route to the predictive survival summary.

    Each iteration updates the tilted atoms by birth-death moves, sweeps the
    hitting scenario once, refreshes block components by nested Metropolis
    chains, and records the empirical survival of ``k`` fresh future draws.
    """
    rng = make_rng(cfg.seed) if rng is None else rng
    obs = obs if obs is not None else ObservationSet.empty(model.dim)
    grid = _grid(cfg, model.dim, obs)
    d = model.dim
    tilted = tilt(model.chars, obs)
    n_iter = max(2, -(-cfg.M // cfg.chains))
    burn = max(0, min(cfg.burn_in, 10 * n_iter)) // 10
    out = np.empty((cfg.chains, n_iter, grid.shape[0]))
    streams = substreams(int(rng.integers(2 ** 63)), cfg.chains)
    for c, r in enumerate(streams):
        fams = [f if isinstance(f, TiltedFamily) else TiltedFamily(f, obs) for f in tilted.families]
        procs = [_BirthDeath(f, cfg.trunc, r) for f in fams]
        moves = moves_per_iter or max(10, int(2 * sum(p.lam for p in procs)))
        scen = HittingScenario.singletons(obs.size)
        for it in range(burn + n_iter):
            for p in procs:
                for _ in range(moves):
                    p.step(r)
            if obs.size:
                scen = gibbs_chain(model, obs, 1, r, init=scen, burn_in=0, thin=1).samples[0]
            if it < burn:
                continue
            Y = tilted.base.sample_minid_batch(cfg.k, r).T
            for p in procs:
                Y = np.minimum(Y, p.draws(cfg.k, d, r))
            if obs.size:
                Y = np.minimum(Y, _components_min(model, obs, scen, cfg.k, r, cfg.trunc, method="mcmc",
                                                  steps=cfg.component_steps))
            out[c, it - burn] = empirical_survival(Y[None], grid)[0]
    rhat = split_rhat(out)
    flat = out.reshape(-1, grid.shape[0])
    max_rhat = float(np.nanmax(rhat)) if np.isfinite(rhat).any() else float("nan")
    meta = {"method": "mcmc", "chains": cfg.chains, "iterations": n_iter, "burn_in": burn,
            "split_rhat": rhat.tolist(), "max_split_rhat": max_rhat,
            "converged": bool(not (max_rhat > 1.1))}
    return _summarize(flat, grid, cfg.level, se=_batch_means_se(out), meta=meta)
