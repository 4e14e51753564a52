import math

import numpy as np
import pytest
from scipy import integrate

from minid.checks import minid_mass, scenario_oracle
from minid.combinatorics import bell
from minid.families import FiniteFamily, h_weight
from minid.levy import ConditionError, LevyCharacteristics
from minid.measures import ProductLineMeasure, ZeroMeasure, linear_hazard
from minid.observations import ObservationSet
from minid.posterior import (PosteriorModel, c_norm, enumerate_scenarios, gibbs_candidates, gibbs_step,
                             hitting_logprob, k_term, margin_density, mixture_density_full, posterior_state,
                             sample_component, tie_partition, tilt)
from minid.presets import ntr_gamma, toy_three, toy_two_family
from minid.rng import make_rng
from minid.sampling import HittingScenario


def obs_of(*xs):
    return ObservationSet.from_points(np.array([[x] for x in xs]))


def f1(x):
    return math.exp(-x)


def f2(x):
    return 2.5 * math.exp(-2.5 * (x - 1.0)) if x > 1.0 else 0.0


@pytest.fixture(scope="module")
def toy():
    p = toy_two_family()
    return p, PosteriorModel(p.chars)


def test_full_density_two_families(toy):
    _, m = toy
    pts = [(0.5, 1.2), (1.4, 2.0), (0.2, 0.9)]
    for a, b in pts:
        oracle = 0.8 * f1(a) * f1(b) + 0.6 * f2(a) * f2(b)
        assert mixture_density_full(m, np.array([[a, b]])) == pytest.approx(oracle, rel=1e-12)


def test_single_index_margin(toy):
    _, m = toy
    for x in (0.4, 1.3, 2.2):
        assert margin_density(m, obs_of(x)) == pytest.approx(0.8 * f1(x) + 0.6 * f2(x), rel=1e-12)


def test_margin_integrates_full_density(toy):
    _, m = toy
    for x1 in (0.7, 1.6):
        g = lambda y: mixture_density_full(m, np.array([[x1, y]]))
        slab = integrate.quad(g, 0, 1)[0] + integrate.quad(g, 1, np.inf)[0]
        total = slab + mixture_density_full(m, np.array([[x1, np.inf]]))
        assert total == pytest.approx(margin_density(m, obs_of(x1)), rel=1e-7)


def test_atomic_model_rejected():
    with pytest.raises(ConditionError):
        PosteriorModel(ntr_gamma().chars)


def test_h_weight_against_quadrature(toy):
    p, _ = toy
    eta = p.chars.families[0].measures[0]
    obs = obs_of(0.3, 0.8)
    tail = math.exp(-integrate.quad(lambda t: 1.0, 0, 0.8)[0])
    assert h_weight(eta, obs, (0,)) == pytest.approx(f1(0.3) * tail, rel=1e-10)
    assert h_weight(eta, obs_of(0.9), (0,)) == pytest.approx(f1(0.9), rel=1e-12)


def test_k_term_vanishes_without_base(toy):
    _, m = toy
    for block in [(0,), (1,), (0, 1)]:
        assert k_term(m, obs_of(0.4, 1.1), block) == 0.0


def test_c_bound(toy):
    _, m = toy
    obs = obs_of(0.4, 1.1, 1.9)
    for block in [(0,), (1, 2), (0, 1, 2)]:
        sub = obs.restrict([obs.cells[c] for c in block])
        assert c_norm(m, obs, block) <= margin_density(m, sub) + k_term(m, obs, block) + 1e-12


def test_single_cell_scenario():
    m = PosteriorModel(toy_two_family().chars)
    assert hitting_logprob(m, obs_of(0.5), HittingScenario.singletons(1), normalized=True) == pytest.approx(0.0)
    assert gibbs_step(m, obs_of(0.5), HittingScenario.singletons(1), 0, make_rng(0)).labels == (0,)


def test_enumeration_normalized_and_matches_brute_force(toy):
    _, m = toy
    obs = obs_of(0.3, 0.8, 1.2)
    scen, probs = enumerate_scenarios(m, obs)
    assert len(scen) == bell(3) == 5
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)
    brute = scenario_oracle(m, obs)
    for s, pr in zip(scen, probs):
        assert brute[s] == pytest.approx(pr, rel=1e-9)


def test_small_weight_favours_joint_block():
    fam = FiniteFamily([ProductLineMeasure([linear_hazard(1.0)])], [0.05])
    m = PosteriorModel(LevyCharacteristics(ZeroMeasure(1), [fam]))
    obs = obs_of(0.5, 0.9)
    joint = hitting_logprob(m, obs, HittingScenario.from_labels([0, 0]))
    split = hitting_logprob(m, obs, HittingScenario.from_labels([0, 1]))
    assert joint > split


def test_candidate_count_and_detailed_balance(toy):
    _, m = toy
    obs = toy[0].data
    scen, probs = enumerate_scenarios(m, obs)
    pi = {s.labels: p for s, p in zip(scen, probs)}
    for s in scen:
        for cell in range(obs.size):
            cands, q = gibbs_candidates(m, obs, s, cell)
            rest = [l for c, l in enumerate(s.labels) if c != cell]
            assert len(cands) == len(set(rest)) + 1
            assert q.sum() == pytest.approx(1.0)
            qs = {c.labels: v for c, v in zip(cands, q)}
            for t in cands:
                back, qb = gibbs_candidates(m, obs, t, cell)
                qt = {c.labels: v for c, v in zip(back, qb)}
                assert pi[s.labels] * qs[t.labels] == pytest.approx(pi[t.labels] * qt[s.labels], rel=1e-9, abs=1e-15)


@pytest.mark.parametrize("x,expected", [((1.0, 1.0, 2.5), (0, 0, 1)), ((0.3, 0.7, 1.1), (0, 1, 2)),
                                        ((2.0, 2.0, 2.0), (0, 0, 0))])
def test_tie_partition_examples(x, expected):
    assert tie_partition(obs_of(*x)).labels == expected


def test_tilt_rules(toy):
    p, _ = toy
    assert tilt(p.chars, None) is p.chars
    t = tilt(p.chars, obs_of(0.3, 0.8))
    for fam in t.families:
        for eta in fam.base.measures:
            w = fam.weight(eta)
            assert 0.0 <= w <= 1.0
    t = tilt(p.chars, obs_of(1e-9))
    assert t.families[0].weight(p.chars.families[0].measures[0]) == pytest.approx(1.0, abs=1e-8)


def test_point_mass_component_returned():
    eta0 = ProductLineMeasure([linear_hazard(1.3)])
    m = PosteriorModel(LevyCharacteristics(ZeroMeasure(1), [FiniteFamily([eta0], [0.9])]))
    comp = sample_component(m, obs_of(0.6), (0,), make_rng(1))
    assert comp is eta0


def test_family_selection_frequency(toy):
    _, m = toy
    obs = obs_of(0.3, 1.2)
    h = [0.8 * f1(1.2) * math.exp(-0.3), 0.6 * f2(1.2) * 1.0]
    p1 = h[0] / sum(h)
    rng = make_rng(2)
    n = 4000
    hits = sum(sample_component(m, obs, (1,), rng).margins[0].breaks[0] == 0.0 for _ in range(n))
    assert abs(hits / n - p1) < 3 * math.sqrt(p1 * (1 - p1) / n)


def test_single_observation_state():
    fam = FiniteFamily([ProductLineMeasure([linear_hazard(1.3)])], [0.9])
    m = PosteriorModel(LevyCharacteristics(ZeroMeasure(1), [fam]))
    st = posterior_state(m, obs_of(0.6), make_rng(3))
    assert st.scenario.labels == (0,)
    assert len(st.components) == 1


@pytest.mark.parametrize("preset", [toy_two_family, toy_three])
def test_finite_family_densities_normalized(preset):
    for fam in preset().chars.families:
        for eta in fam.measures:
            assert minid_mass(eta, "quad")[0] == pytest.approx(1.0, abs=1e-6)
