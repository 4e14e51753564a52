"""Group 1's predictive survival with low vs high group-2 data, for random and deterministic roots."""

import numpy as np

from minid.observations import ingest_grouped
from minid.posterior import PosteriorModel
from minid.predictive import PredictiveConfig, marginal_grid, predictive_summary
from minid.presets import hierarchical, hierarchical_deterministic

times = np.linspace(0.2, 2.0, 10)
grid = marginal_grid(times, 2, 0)
group1 = [0.6, 1.0]
cfg = dict(k=100, M=500, grid=grid)

for preset in (hierarchical(), hierarchical_deterministic()):
    model = PosteriorModel(preset.chars)
    low = predictive_summary(model, ingest_grouped([group1, [0.3, 0.5, 0.7]]), PredictiveConfig(seed=1, **cfg))
    high = predictive_summary(model, ingest_grouped([group1, [2.5, 3.0, 3.5]]), PredictiveConfig(seed=2, **cfg))
    z = (low.mean - high.mean) / np.hypot(low.se, high.se)
    print(preset.name)
    for t, a, b, zz in zip(times, low.mean, high.mean, z):
        print(f"  t={t:.2f}  S1 | early group 2 = {a:.3f}   S1 | late group 2 = {b:.3f}   z = {zz:+.1f}")
