"""Posterior of an IDEM prior under the absolute-continuity condition.

Given data ``X_n`` the posterior exponent measure is ``mu_bar_n + sum_l mu^{(l)}``:
``mu_bar_n`` has characteristics ``(alpha, nu_bar_n)`` (the tilted Levy
measure) and, given the hitting scenario, each block ``theta_l`` contributes
an independent component drawn from ``C^{-1} (h nu + K delta_zero)``.
The scenario itself has probability proportional to ``prod_l v(theta_l)``
with ``v = int h dnu + K``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .combinatorics import set_partitions
from .families import AtomFamily, TiltedFamily, Truncation, h_weight
from .levy import ConditionError, LevyCharacteristics
from .measures import ExponentMeasure, ZeroMeasure
from .observations import ObservationSet, tie_partition_labels
from .sampling import HittingScenario

log = logging.getLogger(__name__)

ENUMERATION_CAP = 9

__all__ = ["PosteriorModel", "PosteriorState", "mixture_density_full", "margin_density", "h_weight",
           "k_term", "c_norm", "hitting_logprob", "enumerate_scenarios", "gibbs_step", "gibbs_chain",
           "gibbs_candidates", "tie_partition", "tilt", "sample_component", "posterior_state",
           "ENUMERATION_CAP"]


class PosteriorModel:
    """Density model: characteristics whose atoms and base admit min-id densities."""

    def __init__(self, chars: LevyCharacteristics):
        base = chars.base
        if not base.is_zero():
            facs = base.hazard_factors()
            if facs is None or not all(f.has_density for f in facs):
                raise ConditionError("absolute-continuity condition: the base measure needs a density "
                                     "(a line-supported base with hazard rates)")
        for f in chars.families:
            if not f.has_density:
                raise ConditionError(f"absolute-continuity condition: family {f.name!r} has atoms "
                                     "without min-id densities (e.g. CRM priors with fixed jump locations)")
        self.chars = chars
        self.base_factors = None if base.is_zero() else base.hazard_factors()
        self._v = {}

    @property
    def dim(self) -> int:
        return self.chars.dim

    # -- block weights -------------------------------------------------------
    def family_integrals(self, obs: ObservationSet, block) -> np.ndarray:
        block = tuple(sorted(block))
        return np.array([f.block_integral(obs, block) for f in self.chars.families])

    def k_term(self, obs: ObservationSet, block) -> float:
        """Base-measure term: nonzero only for a single cell under a line base."""
        if self.base_factors is None or len(block) != 1:
            return 0.0
        i, j = obs.cells[next(iter(block))]
        x = obs.values[i, j]
        if not math.isfinite(x):
            return 0.0
        return float(self.base_factors[i].hazard(np.array([x]))[0])

    def log_v(self, obs: ObservationSet, block) -> float:
        key = (obs.key, tuple(sorted(block)))
        if key not in self._v:
            c = float(self.family_integrals(obs, block).sum()) + self.k_term(obs, block)
            self._v[key] = math.log(c) if c > 0 else -math.inf
        return self._v[key]


def _cells_obs(points) -> ObservationSet:
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P[None, :]
    return ObservationSet(P, np.ones(P.shape, bool))


def _g_term(model: PosteriorModel, obs: ObservationSet) -> float:
    if model.base_factors is None:
        return 0.0
    fin = [(i, j) for i, j in obs.cells if math.isfinite(obs.values[i, j])]
    if len(fin) != 1:
        return 0.0
    i, j = fin[0]
    return float(model.base_factors[i].hazard(np.array([obs.values[i, j]]))[0])


def margin_density(model: PosteriorModel, obs: ObservationSet) -> float:
    """``f^{(IJ)} + g^{(IJ)}`` at the observed cells of ``obs``."""
    if obs.size == 0:
        raise ValueError("need at least one observed index")
    if not np.isfinite(obs.cell_values()).any():
        raise ValueError("the all-infinite point carries the atom of the reference measure; rejected")
    block = tuple(range(obs.size))
    return float(model.family_integrals(obs, block).sum()) + _g_term(model, obs)


def mixture_density_full(model: PosteriorModel, points) -> float:
    """Density of the ``d x m`` exponent measure at a matrix whose columns are points of ``E_d``."""
    return margin_density(model, _cells_obs(points))


def k_term(model: PosteriorModel, obs: ObservationSet, block) -> float:
    return model.k_term(obs, block)


def c_norm(model: PosteriorModel, obs: ObservationSet, block) -> float:
    return float(model.family_integrals(obs, block).sum()) + model.k_term(obs, block)


# ---------------------------------------------------------------------------
# hitting scenarios
# ---------------------------------------------------------------------------

def hitting_logprob(model: PosteriorModel, obs: ObservationSet, scenario: HittingScenario,
                    normalized: bool = False) -> float:
    if scenario.size != obs.size:
        raise ValueError("scenario must partition the observed cells")
    val = sum(model.log_v(obs, b) for b in scenario.blocks())
    if normalized:
        if obs.size > ENUMERATION_CAP:
            raise ValueError(f"normalization needs at most {ENUMERATION_CAP} observed cells")
        _, logp = _enumerate_logweights(model, obs)
        val -= logsumexp(logp)
    return float(val)


def _enumerate_logweights(model, obs):
    m = obs.size
    if m > ENUMERATION_CAP:
        raise ValueError(f"enumeration is capped at {ENUMERATION_CAP} observed cells")
    for r in range(1, 1 << m):
        model.log_v(obs, [c for c in range(m) if r >> c & 1])
    scen, logw = [], []
    for labels in set_partitions(m):
        s = HittingScenario(labels)
        scen.append(s)
        logw.append(sum(model.log_v(obs, b) for b in s.blocks()))
    return scen, np.array(logw)


def enumerate_scenarios(model: PosteriorModel, obs: ObservationSet):
    """All partitions with normalized probabilities (exact, small data only)."""
    scen, logw = _enumerate_logweights(model, obs)
    p = np.exp(logw - logsumexp(logw))
    return scen, p


def gibbs_candidates(model: PosteriorModel, obs: ObservationSet, current: HittingScenario, cell: int):
    """Candidate scenarios for moving ``cell`` and their normalized probabilities.

    With the cell removed, joining block ``B`` has weight ``v(B + c) / v(B)``
    and opening a singleton has weight ``v({c})``; every other factor cancels.
    """
    labels = list(current.labels)
    others = [b for b in HittingScenario.from_labels(
        [l for k, l in enumerate(labels) if k != cell]).blocks()]
    # translate back to original cell indices
    idx = [k for k in range(len(labels)) if k != cell]
    blocks = [tuple(idx[c] for c in b) for b in others]
    cands, logw = [], []
    for b in blocks:
        logw.append(model.log_v(obs, b + (cell,)) - model.log_v(obs, b))
        cands.append([b + (cell,) if bb is b else bb for bb in blocks])
    logw.append(model.log_v(obs, (cell,)))
    cands.append(blocks + [(cell,)])
    scen = [HittingScenario.from_blocks(c, len(labels)) for c in cands]
    logw = np.array(logw)
    if not np.isfinite(logw).any():
        return scen, None
    return scen, np.exp(logw - logsumexp(logw))


def gibbs_step(model: PosteriorModel, obs: ObservationSet, current: HittingScenario, cell, rng) -> HittingScenario:
    """Resample the block of one cell (given as an index or an ``(i, j)`` pair)."""
    if isinstance(cell, tuple):
        cell = obs.cells.index(cell)
    scen, p = gibbs_candidates(model, obs, current, cell)
    if p is None:
        log.warning("all Gibbs candidates have zero weight at cell %s; keeping the state", cell)
        return current
    return scen[int(rng.choice(len(scen), p=p))]


@dataclass
class GibbsRun:
    samples: list
    log_posterior: np.ndarray

    def frequencies(self) -> dict:
        out: dict = {}
        for s in self.samples:
            out[s] = out.get(s, 0) + 1
        n = len(self.samples)
        return {k: v / n for k, v in out.items()}


def gibbs_chain(model: PosteriorModel, obs: ObservationSet, sweeps: int, rng, init: HittingScenario | None = None,
                burn_in: int = 1000, thin: int = 10) -> GibbsRun:
    """Systematic-scan Gibbs sampler over hitting scenarios.

    Same transition as :func:`gibbs_step`, run on a mutable block table with
    a local cache of ``log v`` per block.
    """
    m = obs.size
    cur = init or HittingScenario.singletons(m)
    if not math.isfinite(hitting_logprob(model, obs, cur)):
        cur = HittingScenario.singletons(m)
    cache: dict = {}

    def lv(cells):
        key = tuple(sorted(cells))
        v = cache.get(key)
        if v is None:
            v = cache[key] = model.log_v(obs, key)
        return v

    labels = list(cur.labels)
    blocks: dict = {}
    for c, b in enumerate(labels):
        blocks.setdefault(b, []).append(c)
    fresh = max(labels, default=-1) + 1
    samples, trace = [], []
    for s in range(burn_in + sweeps):
        for c in range(m):
            blk = blocks[labels[c]]
            blk.remove(c)
            if not blk:
                del blocks[labels[c]]
            keys = list(blocks)
            logw = [lv(blocks[k] + [c]) - lv(blocks[k]) for k in keys] + [lv([c])]
            logw = np.array(logw)
            if not np.isfinite(logw).any():
                log.warning("all Gibbs candidates have zero weight at cell %s; keeping the state", c)
                blocks.setdefault(labels[c], []).append(c)
                continue
            p = np.exp(logw - logw.max())
            k = int(np.searchsorted(np.cumsum(p), rng.random() * p.sum(), side="right"))
            k = min(k, len(keys))
            if k == len(keys):
                labels[c] = fresh
                blocks[fresh] = [c]
                fresh += 1
            else:
                labels[c] = keys[k]
                blocks[keys[k]].append(c)
        if s >= burn_in and (s - burn_in) % thin == 0:
            scen = HittingScenario.from_labels(labels)
            samples.append(scen)
            trace.append(sum(lv(b) for b in blocks.values()))
    return GibbsRun(samples, np.array(trace))


def sample_scenarios(model: PosteriorModel, obs: ObservationSet, size: int, rng, method: str = "auto",
                     burn_in: int = 1000) -> list:
    """``size`` independent scenario draws (exact when enumerable, else one chain each)."""
    if obs.size == 0:
        return [HittingScenario(())] * size
    if method == "enumerate" or (method == "auto" and obs.size <= ENUMERATION_CAP):
        scen, p = enumerate_scenarios(model, obs)
        return [scen[k] for k in rng.choice(len(scen), size=size, p=p)]
    return [gibbs_chain(model, obs, 1, rng, burn_in=burn_in, thin=1).samples[0] for _ in range(size)]


def tie_partition(obs: ObservationSet) -> HittingScenario:
    """Cells grouped by exactly equal values (per component when ``d > 1``)."""
    if obs.d == 1:
        return HittingScenario(tuple(tie_partition_labels(obs.cell_values())))
    return HittingScenario.from_labels([(i, float(obs.values[i, j])) for i, j in obs.cells])


# ---------------------------------------------------------------------------
# posterior components
# ---------------------------------------------------------------------------

def tilt(chars: LevyCharacteristics, obs: ObservationSet | None) -> LevyCharacteristics:
    """``(alpha, nu_bar_n)`` with ``nu_bar_n(d eta) = prod_j exp(-eta(C_{X_j})) nu(d eta)``."""
    if obs is None or obs.size == 0:
        return chars
    return LevyCharacteristics(chars.base, [TiltedFamily(f, obs) for f in chars.families])


def sample_component(model: PosteriorModel, obs: ObservationSet, block, rng, trunc: Truncation | None = None,
                     method: str = "exact", steps: int = 200) -> ExponentMeasure:
    """Draw from ``C^{-1}(h nu + K delta_zero)`` for one block."""
    block = tuple(sorted(block))
    I = model.family_integrals(obs, block)
    K = model.k_term(obs, block)
    C = float(I.sum()) + K
    if not C > 0:
        raise ArithmeticError("block normalizer vanishes; the scenario has probability zero")
    if rng.random() < K / C:
        return ZeroMeasure(model.dim)
    fam: AtomFamily = model.chars.families[int(rng.choice(I.size, p=I / I.sum()))]
    if method == "mcmc":
        return fam.mcmc_block(obs, block, rng, steps=steps, trunc=trunc)
    return fam.sample_block(obs, block, rng, trunc=trunc)


@dataclass
class PosteriorState:
    tilted: LevyCharacteristics
    scenario: HittingScenario
    components: list
    obs: ObservationSet = None
    meta: dict = field(default_factory=dict)

    def measure(self, rng, trunc: Truncation | None = None) -> ExponentMeasure:
        """One realization of the full posterior exponent measure."""
        from .levy import sample_idem
        from .measures import SumMeasure

        parts = [sample_idem(self.tilted, trunc, rng)] + list(self.components)
        return SumMeasure.of(parts, self.tilted.dim)

    def to_dict(self):
        from .serialization import measure_to_dict

        return {"scenario": self.scenario.to_list(), "blocks": [list(b) for b in self.scenario.blocks()],
                "components": [measure_to_dict(c) for c in self.components],
                "tilt": {"n_points": int(self.obs.points().shape[0]) if self.obs is not None else 0,
                         "families": [f.base.name for f in self.tilted.families
                                      if isinstance(f, TiltedFamily)]},
                **self.meta}


def posterior_state(model: PosteriorModel, obs: ObservationSet, rng, method: str = "auto",
                    burn_in: int = 1000, trunc: Truncation | None = None) -> PosteriorState:
    scen = sample_scenarios(model, obs, 1, rng, method, burn_in)[0]
    comps = [sample_component(model, obs, b, rng, trunc) for b in scen.blocks()]
    return PosteriorState(tilt(model.chars, obs), scen, comps, obs,
                          {"scenario_method": "enumerate" if obs.size <= ENUMERATION_CAP and method == "auto"
                           else method})
