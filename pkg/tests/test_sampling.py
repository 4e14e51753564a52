import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import kstest, ks_2samp

from minid.families import FiniteFamily
from minid.levy import LevyCharacteristics
from minid.measures import INF, AtomicMeasure, ProductLineMeasure, ZeroMeasure, linear_hazard, survival
from minid.observations import ObservationSet
from minid.posterior import tie_partition
from minid.presets import hierarchical, ntr_gamma
from minid.rng import make_rng
from minid.sampling import (HittingScenario, extract_hitting_scenario, sample_batch, sample_minid,
                            sample_minid_batch, sample_sequence)


def test_single_atom_hit_frequency():
    x = sample_minid_batch(AtomicMeasure([1.0], [[2.0]]), 100000, make_rng(0))[:, 0]
    p = 1 - math.exp(-1.0)
    freq = np.mean(x == 2.0)
    assert set(np.unique(x)) <= {2.0, INF}
    assert abs(freq - p) < 3 * math.sqrt(p * (1 - p) / x.size)


def test_product_line_gives_independent_exponentials():
    X = sample_minid_batch(ProductLineMeasure([linear_hazard(1.0), linear_hazard(1.0)]), 20000, make_rng(1))
    for i in range(2):
        assert kstest(X[:, i], "expon").pvalue > 0.005
    assert abs(np.corrcoef(X[:, 0], X[:, 1])[0, 1]) < 4 / math.sqrt(20000)


def test_two_atom_joint_pattern():
    eta = AtomicMeasure([2.0, 1.0], [[1.0, 1.0], [0.0, 3.0]])
    X = sample_minid_batch(eta, 100000, make_rng(2))
    p = (1 - math.exp(-1.0)) * (1 - math.exp(-2.0))
    freq = np.mean((X[:, 0] == 0.0) & (X[:, 1] == 1.0))
    assert abs(freq - p) < 3 * math.sqrt(p * (1 - p) / X.shape[0])


def test_latent_record_names_the_generating_atom():
    x, latent = sample_minid(AtomicMeasure([50.0], [[0.5, 1.5]]), make_rng(3))
    assert np.array_equal(x, [0.5, 1.5])
    assert latent.argmin == {0: 0, 1: 0}


def test_survival_reconstruction():
    eta = ProductLineMeasure([linear_hazard(0.7, start=0.2)])
    x = sample_minid_batch(eta, 100000, make_rng(4))[:, 0]
    for t in np.linspace(0.3, 4.0, 10):
        s = survival(eta, [t])
        assert abs(np.mean(x > t) - s) < 4 * math.sqrt(s * (1 - s) / x.size) + 1e-12


def test_no_levy_measure_gives_iid_columns():
    chars = LevyCharacteristics(ProductLineMeasure([linear_hazard(1.0)]), [])
    X = sample_batch(chars, 20000, 2, make_rng(5))[:, 0, :]
    assert kstest(X[:, 0], "expon").pvalue > 0.005
    assert kstest(X[:, 1], "expon").pvalue > 0.005
    assert abs(np.corrcoef(X[:, 0], X[:, 1])[0, 1]) < 4 / math.sqrt(20000)


def test_ntr_sequences_have_ties():
    X = sample_batch(ntr_gamma().chars, 2000, 2, make_rng(6))[:, 0, :]
    fin = np.isfinite(X[:, 0])
    assert np.mean(X[fin, 0] == X[fin, 1]) > 0.05


def test_scenario_equals_tie_partition_for_ntr():
    rng = make_rng(7)
    chars = ntr_gamma().chars
    for mode in ("integrated", "conditional"):
        for _ in range(100):
            draw = sample_sequence(chars, 6, rng, mode=mode)
            fin = np.isfinite(draw.values[0])
            if not fin.any():
                continue
            obs = ObservationSet.from_points(draw.values[:, fin].T)
            scen = extract_hitting_scenario(draw)
            assert scen.labels == tie_partition(obs).labels


def test_conditional_and_integrated_modes_agree():
    chars = ntr_gamma().chars
    rng = make_rng(8)
    a = np.array([sample_sequence(chars, 1, rng, mode="integrated").values[0, 0] for _ in range(3000)])
    b = np.array([sample_sequence(chars, 1, rng, mode="conditional").values[0, 0] for _ in range(3000)])
    assert ks_2samp(np.minimum(a, 99), np.minimum(b, 99)).pvalue > 0.005


def test_exchangeability_under_column_swap():
    X = sample_batch(hierarchical().chars, 20000, 2, make_rng(9))
    left = np.minimum(X[:, 0, 0], 50.0)
    right = np.minimum(X[:, 0, 1], 50.0)
    assert ks_2samp(left, right).pvalue > 0.005


def test_base_only_scenario_is_all_singletons():
    chars = LevyCharacteristics(ProductLineMeasure([linear_hazard(1.0)]), [])
    draw = sample_sequence(chars, 4, make_rng(10))
    scen = extract_hitting_scenario(draw)
    assert scen.labels == (0, 1, 2, 3)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=1, max_size=12))
def test_restricted_growth_canonical_form(raw):
    s = HittingScenario.from_labels(raw)
    seen = -1
    assert s.labels[0] == 0
    for v in s.labels:
        assert v <= seen + 1
        seen = max(seen, v)
    assert 1 <= s.n_blocks <= len(raw)
    # same partition as the raw labels
    for i in range(len(raw)):
        for j in range(len(raw)):
            assert (raw[i] == raw[j]) == (s.labels[i] == s.labels[j])


def test_single_heavy_atom_scenario_is_one_block():
    chars = LevyCharacteristics(ZeroMeasure(1), [FiniteFamily([AtomicMeasure([60.0], [[0.7]])], [60.0])])
    draw = sample_sequence(chars, 4, make_rng(11))
    assert np.all(draw.values == 0.7)
    assert extract_hitting_scenario(draw).labels == (0, 0, 0, 0)
