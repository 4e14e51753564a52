"""Draw from the gamma NTR prior and compare Monte Carlo with the closed-form Laplace transform."""

import numpy as np

from minid.moments import LaplaceQuery, hazard_moments, laplace_transform, mc_laplace
from minid.presets import ntr_gamma
from minid.rng import make_rng
from minid.sampling import sample_batch

chars = ntr_gamma().chars
rng = make_rng(0)

X = sample_batch(chars, 5, 8, rng)[:, 0, :]
print("five prior sequences of eight observations (rows share one random survival curve):")
print(np.round(X, 3))

q = LaplaceQuery([[0.5], [1.5]], [1.0, 2.0])
est, se = mc_laplace(chars, q, 50_000, rng)
print(f"E[S(0.5) S(1.5)^2]: exact {laplace_transform(chars, q):.5f}, MC {est:.5f} +/- {se:.5f}")
print("E[mu(0, 0.8] mu(0, 1.5]]:", hazard_moments(chars, [[0.8], [1.5]], [1, 1]))
