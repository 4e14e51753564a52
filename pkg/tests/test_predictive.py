import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from minid.families import FiniteFamily
from minid.levy import LevyCharacteristics
from minid.measures import ProductLineMeasure, ZeroMeasure, linear_hazard
from minid.moments import LaplaceQuery, laplace_transform
from minid.observations import ObservationSet
from minid.posterior import PosteriorModel
from minid.predictive import (PredictiveConfig, empirical_survival, marginal_grid, mcmc_predictive,
                              predictive_draw, predictive_summary, run_chunked)
from minid.presets import toy_three
from minid.rng import make_rng

GRID = np.linspace(0.2, 2.5, 6)


def prior_curve(chars, grid):
    return np.array([laplace_transform(chars, LaplaceQuery([[t]], [1.0])) for t in grid])


def test_empty_data_gives_prior_predictive():
    p = toy_three()
    m = PosteriorModel(p.chars)
    s = predictive_summary(m, None, PredictiveConfig(k=50, M=2000, grid=GRID, seed=3))
    assert np.all(np.abs(s.mean - prior_curve(p.chars, GRID)) < 4 * s.se)


def test_mcmc_empty_data_gives_prior_predictive():
    p = toy_three()
    m = PosteriorModel(p.chars)
    s = mcmc_predictive(m, None, PredictiveConfig(k=50, M=1000, grid=GRID, seed=4, burn_in=100))
    assert np.all(np.abs(s.mean - prior_curve(p.chars, GRID)) < 4 * s.se + 1e-3)


def test_point_mass_composition():
    # one copy of eta0 explains the datum; the tilted Poisson process adds more copies
    w, x1 = 0.9, 0.6
    eta0 = ProductLineMeasure([linear_hazard(1.3)])
    m = PosteriorModel(LevyCharacteristics(ZeroMeasure(1), [FiniteFamily([eta0], [w])]))
    obs = ObservationSet.from_points(np.array([[x1]]))
    s = predictive_summary(m, obs, PredictiveConfig(k=50, M=3000, grid=GRID, seed=5))
    H = 1.3 * GRID
    oracle = np.exp(-H) * np.exp(-w * math.exp(-1.3 * x1) * (1 - np.exp(-H)))
    assert np.all(np.abs(s.mean - oracle) < 4 * s.se)


def test_deterministic_prior_bands_collapse():
    chars = LevyCharacteristics(ProductLineMeasure([linear_hazard(1.0)]), [])
    m = PosteriorModel(chars)
    k = 400
    s = predictive_summary(m, None, PredictiveConfig(k=k, M=500, grid=GRID, seed=6))
    exact = np.exp(-GRID)
    assert np.all(np.abs(s.mean - exact) < 4 * s.se)
    width = s.upper - s.lower
    assert np.all(width <= 4 * 1.96 * np.sqrt(exact * (1 - exact) / k) + 1e-12)


def test_replicate_noise_rate():
    chars = LevyCharacteristics(ProductLineMeasure([linear_hazard(1.0)]), [])
    m = PosteriorModel(chars)
    grid = np.array([0.7])
    small = predictive_summary(m, None, PredictiveConfig(k=100, M=2000, grid=grid, seed=7))
    large = predictive_summary(m, None, PredictiveConfig(k=400, M=2000, grid=grid, seed=8))
    ratio = small.se[0] / large.se[0]
    assert 1.6 <= ratio <= 2.5


def test_band_contains_mean():
    p = toy_three()
    s = predictive_summary(PosteriorModel(p.chars), p.data, PredictiveConfig(k=50, M=200, grid=GRID, level=0.5))
    assert np.all(s.lower <= s.mean) and np.all(s.mean <= s.upper)


def test_predictive_draw_shape():
    p = toy_three()
    X = predictive_draw(PosteriorModel(p.chars), p.data, 7, make_rng(0))
    assert X.shape == (1, 7)


def test_thread_count_does_not_change_results():
    p = toy_three()
    m = PosteriorModel(p.chars)
    cfg = PredictiveConfig(k=20, M=600, grid=GRID, seed=9)
    a = predictive_summary(m, p.data, cfg, threads=1)
    b = predictive_summary(m, p.data, cfg, threads=3)
    assert np.array_equal(a.mean, b.mean) and np.array_equal(a.se, b.se)


def test_run_chunked_order():
    out = run_chunked(lambda n, rng: [n], 1000, seed=1, threads=2, chunk=300)
    assert [x for part in out for x in part] == [300, 300, 300, 100]


def test_marginal_grid_layout():
    G = marginal_grid([0.5, 1.0], 3, 1)
    assert G.shape == (2, 3)
    assert np.all(np.isinf(G[:, [0, 2]])) and np.array_equal(G[:, 1], [0.5, 1.0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.0, 5.0), min_size=1, max_size=30))
def test_empirical_survival_monotone(xs):
    draws = np.array(xs)[None, :]
    grid = np.linspace(-0.5, 5.5, 13)[:, None]
    s = empirical_survival(draws, grid)
    assert np.all(np.diff(s) <= 0)
    assert s[0] == 1.0 and s[-1] == 0.0
