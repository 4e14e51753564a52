"""Acceptance criteria, one PASS/FAIL line each (see the summary at the end of a pytest run)."""

import itertools
import math
import time

import numpy as np
import pytest
from scipy.stats import ks_2samp

from minid.checks import family_atoms, gibbs_diagnostics, minid_mass, poisson_count_oracle
from minid.combinatorics import blocks_of
from minid.families import Truncation
from minid.levy import ConditionError
from minid.moments import (LaplaceQuery, association_diagnostic, laplace_transform, mc_laplace,
                           mean_functional_moment)
from minid.observations import ObservationSet, ingest_grouped
from minid.posterior import PosteriorModel, tie_partition
from minid.predictive import PredictiveConfig, marginal_grid, mcmc_predictive, predictive_summary
from minid.presets import (PRESETS, hierarchical, hierarchical_deterministic, levy_copula, load_preset,
                           ntr_gamma, toy_three)
from minid.rng import make_rng
from minid.sampling import sample_batch

N = 100_000


@pytest.mark.slow
def test_criterion_01_laplace_reconciliation(report):
    queries = [([[0.5]], [1.0]), ([[0.3], [1.0], [2.2]], [1.0, 0.5, 2.0]), ([[1.5]], [3.0]),
               ([[0.2], [2.8]], [0.7, 1.3]), ([[0.8], [1.6], [2.4]], [2.0, 1.0, 0.5])]
    worst = 0.0
    for p in (ntr_gamma(), hierarchical()):
        for pts, z in queries:
            P = np.array(pts, dtype=float)
            if p.chars.dim == 2:
                P = np.c_[P, np.flip(P[:, 0]) * 0.8]
                P[0, 1] = np.inf
            q = LaplaceQuery(P, z)
            exact = laplace_transform(p.chars, q)
            est, se = mc_laplace(p.chars, q, N, make_rng(1))
            worst = max(worst, abs(est - exact) / se)
    ok = worst < 4.0
    report(1, "Laplace transform vs MC", ok, f"max |z| = {worst:.2f} over 10 queries (tol 4)")
    assert ok


@pytest.mark.slow
def test_criterion_02_infinite_divisibility(report):
    worst = 1.0
    for p in (ntr_gamma(drift=0.3), hierarchical(), levy_copula(), toy_three()):
        rng = make_rng(5)
        full = sample_batch(p.chars, N, 2, rng)
        half = p.chars.scaled(0.5)
        pair = np.minimum(sample_batch(half, N, 2, rng), sample_batch(half, N, 2, rng))
        for i in range(p.chars.dim):
            worst = min(worst, ks_2samp(full[:, i, 0], pair[:, i, 0]).pvalue)
            worst = min(worst, ks_2samp(full[:, i, :].min(1), pair[:, i, :].min(1)).pvalue)
    ok = worst > 0.005
    report(2, "min of two half-draws vs one draw", ok, f"min KS p = {worst:.4f} (tol 0.005)")
    assert ok


@pytest.mark.slow
def test_criterion_03_gibbs_vs_enumeration(report):
    rep = gibbs_diagnostics("toy_two_family", sweeps=N, burn_in=1000, seed=0)
    ok = rep["n_partitions"] == 15 and rep["tv"] < 0.02
    report(3, "Gibbs vs enumeration", ok, f"TV = {rep['tv']:.4f} over {rep['n_partitions']} partitions (tol 0.02)")
    assert ok


GRID = np.linspace(0.2, 2.5, 10)


@pytest.fixture(scope="module")
def toy_predictive():
    p = toy_three()
    model = PosteriorModel(p.chars)
    s = predictive_summary(model, p.data, PredictiveConfig(k=200, M=2000, grid=GRID, seed=1))
    return p, model, s


@pytest.mark.slow
def test_criterion_04_predictive_oracle(report, toy_predictive):
    p, _, s = toy_predictive
    oracle = poisson_count_oracle(p.chars.families[0], p.data.cell_values(), GRID)
    excess = np.abs(s.mean - oracle) - np.maximum(3 * s.se, 0.01)
    ok = bool(np.all(excess <= 0))
    report(4, "predictive vs exact oracle", ok,
           f"max |diff| = {np.max(np.abs(s.mean - oracle)):.4f}, worst slack {np.max(excess):.4f} (tol max(3 SE, 0.01))")
    assert ok


@pytest.mark.slow
def test_criterion_05_mcmc_vs_direct(report, toy_predictive):
    p, model, s = toy_predictive
    m = mcmc_predictive(model, p.data, PredictiveConfig(k=200, M=2000, grid=GRID, seed=2, burn_in=200))
    z = np.abs(m.mean - s.mean) / np.hypot(m.se, s.se)
    ok = bool(np.all(z < 4))
    report(5, "MCMC vs direct predictive", ok, f"max |z| = {z.max():.2f} (tol 4)")
    assert ok


@pytest.mark.slow
def test_criterion_06_subordination_laplace(report):
    p = hierarchical()
    spec = p.spec
    rho0, rho1 = spec.root_jumps, spec.jumps[0]
    tau0, h0, tau1 = spec.root_kernel.tau, spec.root_kernel.height, spec.kernels[0].tau
    rng = make_rng(11)
    eps = 1e-8
    # stage one: root atoms on (0, T); stage two: group-1 atoms around each root atom
    n0 = rng.poisson(rho0.tail_mass(eps) * spec.T, N)
    owner = np.repeat(np.arange(N), n0)
    a0 = rho0.sample_above(eps, owner.size, rng)
    b0 = rng.uniform(0.0, spec.T, owner.size)
    lo, hi = np.maximum(b0 - tau0, 0.0), b0 + tau0
    n1 = rng.poisson(rho1.tail_mass(eps) * a0 * h0 * (hi - lo))
    par = np.repeat(np.arange(owner.size), n1)
    a1 = rho1.sample_above(eps, par.size, rng)
    b1 = rng.uniform(lo[par], hi[par])
    worst = 0.0
    for t in (0.5, 1.5, 3.0):
        H = np.zeros(N)
        np.add.at(H, owner[par], a1 * tau1 * np.maximum(t - b1, 0.0))
        exact = laplace_transform(p.chars, LaplaceQuery([[t, np.inf]], [1.0]))
        worst = max(worst, abs(np.exp(-H).mean() - exact) / exact)
    ok = worst < 0.02
    report(6, "two-stage MC vs subordinated transform", ok, f"max rel err = {worst:.4f} (tol 0.02)")
    assert ok


@pytest.mark.slow
def test_criterion_07_association(report):
    bad, worst = [], math.inf
    for name in sorted(PRESETS):
        chars = load_preset(name).chars
        pts = [np.full(chars.dim, t) for t in np.linspace(0.3, 2.5, 5)]
        rep = association_diagnostic(chars, list(itertools.combinations(pts, 2)), size=N, rng=make_rng(2),
                                     trunc=Truncation(n_max=200))
        worst = min([worst] + [r.cov / r.se for r in rep.rows if r.se > 0])
        if not rep.ok:
            bad.append(name)
    ok = not bad
    report(7, "association diagnostic", ok,
           f"{len(PRESETS)} presets, min cov/SE = {worst:.2f} (tol -3)" + (f", failing {bad}" if bad else ""))
    assert ok


@pytest.mark.slow
def test_criterion_08_mean_functional(report):
    chars = ntr_gamma(drift=0.5).chars
    m1 = mean_functional_moment(chars, 1, full=True)
    m2 = mean_functional_moment(chars, 2, full=True)
    X = sample_batch(chars, N, 2, make_rng(4))[:, 0, :]
    zs = []
    for sample, exact in ((X[:, 0], m1.value), (X[:, 0] * X[:, 1], m2.value)):
        zs.append(abs(sample.mean() - exact) / (sample.std(ddof=1) / math.sqrt(sample.size)))
    ok = max(zs) < 4
    report(8, "mean-functional moments vs MC", ok,
           f"E[I]={m1.value:.4f} (|z|={zs[0]:.2f}), E[I^2]={m2.value:.4f} (|z|={zs[1]:.2f}) (tol 4)")
    assert ok


def test_criterion_09_tie_rule(report):
    rng = np.random.default_rng(9)
    t0 = time.perf_counter()
    mismatches = 0
    for _ in range(100):
        m = int(rng.integers(2, 15))
        labels = rng.integers(0, max(1, m // 2), m)
        vals = rng.exponential(size=labels.max() + 1)[labels]
        got = sorted(tie_partition(ObservationSet.from_points(vals[:, None])).blocks())
        mismatches += got != sorted(blocks_of(labels.tolist()))
    secs = time.perf_counter() - t0
    ok = mismatches == 0 and secs < 1.0
    report(9, "tie partition", ok, f"{mismatches} mismatches in 100 datasets, {secs:.2f} s (tol 0, 1 s)")
    assert ok


def test_criterion_10_density_normalization(report):
    rng = make_rng(3)
    worst_q = worst_mc = 0.0
    count = 0
    for name in sorted(PRESETS):
        chars = load_preset(name).chars
        try:
            PosteriorModel(chars)
        except ConditionError:
            continue                        # atomic Lévy measures carry no density
        for fam in chars.families:
            for eta in family_atoms(fam, 5, rng):
                worst_q = max(worst_q, abs(minid_mass(eta, "quad")[0] - 1.0))
                worst_mc = max(worst_mc, abs(minid_mass(eta, "mc", rng=rng)[0] - 1.0))
                count += 1
    ok = worst_q < 1e-6 and worst_mc < 1e-4
    report(10, "density normalization", ok,
           f"{count} measures, quad err {worst_q:.1e} (tol 1e-6), MC err {worst_mc:.1e} (tol 1e-4)")
    assert ok


@pytest.mark.slow
def test_criterion_11_borrowing(report):
    g1, low, high = [0.6, 1.0], [0.3, 0.5, 0.7], [2.5, 3.0, 3.5]
    grid = marginal_grid(np.linspace(0.2, 2.0, 10), 2, 0)
    z = {}
    for p in (hierarchical(), hierarchical_deterministic()):
        model = PosteriorModel(p.chars)
        a = predictive_summary(model, ingest_grouped([g1, low]), PredictiveConfig(k=200, M=2000, grid=grid, seed=1))
        b = predictive_summary(model, ingest_grouped([g1, high]), PredictiveConfig(k=200, M=2000, grid=grid, seed=2))
        z[p.name] = np.abs(a.mean - b.mean) / np.hypot(a.se, b.se)
    zr, zd = z["hierarchical"], z["hierarchical_deterministic"]
    ok = bool(zr.max() > 3 and zd.max() <= 3)
    report(11, "borrowing of information", ok,
           f"random root max |z| = {zr.max():.1f} (need > 3), deterministic max |z| = {zd.max():.2f} (need <= 3)")
    assert ok
