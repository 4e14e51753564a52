import math

import numpy as np
import pytest
from scipy import integrate, special
from scipy.stats import ks_2samp

from minid.families import CRMFamily, FiniteFamily, Truncation
from minid.jumps import PowerJumps, gamma_jumps, stable_jumps
from minid.kernels import DykstraLaud, OrnsteinUhlenbeck, Rectangular
from minid.levy import (ConditionError, LevyCharacteristics, check_kernel, make_crm, product_line_measure,
                        root_crm, sample_idem, subordinate, validate)
from minid.locations import Box
from minid.measures import (INF, AtomicMeasure, Atoms1D, ProductLineMeasure, ZeroMeasure, Zero1D,
                            linear_hazard, orthant_complement_mass, survival)
from minid.moments import hazard_moments, sample_masses
from minid.presets import ntr_gamma
from minid.rng import make_rng
from minid.subordination import SubordinatedFamily


def gamma_crm(T=1.0):
    return make_crm(1, jumps=gamma_jumps(), locations=Box([0.0], [T]))


def test_gamma_crm_integrability_value():
    rep = validate(gamma_crm())
    assert rep.ok
    oracle = integrate.quad(lambda a: math.exp(-a), 0, 1)[0] + integrate.quad(lambda a: math.exp(-a) / a, 1, np.inf)[0]
    assert oracle == pytest.approx((1 - math.exp(-1)) + special.exp1(1.0), abs=1e-10)
    for v in rep.integrability["0:crm"]["values"]:
        assert v == pytest.approx(oracle, rel=1e-6)


def test_stable_crm_integrability_closed_form():
    rep = validate(make_crm(1, jumps=stable_jumps(1.0, 0.5), locations=Box([0.0], [1.0])))
    assert rep.ok
    # int_0^1 a^{-1/2} da + int_1^inf a^{-3/2} da = 2 + 2
    assert rep.integrability["0:crm"]["values"][0] == pytest.approx(4.0, rel=1e-6)


def test_undamped_intensity_rejected():
    bad = PowerJumps(1.0, 1.0, 0.0)
    chars = LevyCharacteristics(ZeroMeasure(1), [CRMFamily(bad, Box([0.0], [1.0]))])
    assert not validate(chars).ok
    with pytest.raises(ConditionError):
        make_crm(1, jumps=bad, locations=Box([0.0], [1.0]))


def test_empty_characteristics_warn():
    rep = validate(LevyCharacteristics(ZeroMeasure(1), []))
    assert rep.ok and rep.warnings


def test_finite_family_poisson_count():
    chars = LevyCharacteristics(ZeroMeasure(1), [FiniteFamily([ProductLineMeasure([linear_hazard(1.0)])], [3.0])])
    tab = chars.families[0].table(100000, make_rng(0))
    counts = np.bincount(tab.owner, minlength=100000)
    assert abs(counts.mean() - 3.0) < 0.05


def test_deterministic_base_every_draw():
    base = AtomicMeasure([2.0], [[1.0, 1.0]])
    chars = LevyCharacteristics(base, [])
    rng = make_rng(1)
    for _ in range(20):
        m = sample_idem(chars, rng=rng)
        assert orthant_complement_mass(m, [1.0, 5.0]) == 2.0
        assert orthant_complement_mass(m, [0.9, 0.9]) == 0.0


def test_gamma_crm_mean_mass_matches_moment():
    chars = ntr_gamma().chars
    exact = hazard_moments(chars, [[1.2]], [1])
    M = sample_masses(chars, [[1.2]], 100000, make_rng(2))[:, 0]
    se = M.std(ddof=1) / math.sqrt(M.size)
    assert abs(M.mean() - exact) < 3 * se + chars.truncation_bound(Truncation())


def test_crm_disjoint_sets_uncorrelated():
    chars = ntr_gamma().chars
    M = sample_masses(chars, [[1.0], [2.0]], 100000, make_rng(3))
    a, b = M[:, 0], M[:, 1] - M[:, 0]
    r = np.corrcoef(a, b)[0, 1]
    assert abs(r) < 3 / math.sqrt(a.size)


def test_truncation_bound_is_honest():
    chars = ntr_gamma().chars
    coarse, fine = Truncation(n_max=5, horizon=3.0), Truncation(n_max=20, horizon=3.0)
    m1 = sample_masses(chars, [[2.0]], 100000, make_rng(4), trunc=coarse)[:, 0]
    m2 = sample_masses(chars, [[2.0]], 100000, make_rng(5), trunc=fine)[:, 0]
    se = math.hypot(m1.std() / math.sqrt(m1.size), m2.std() / math.sqrt(m2.size))
    assert abs(m2.mean() - m1.mean()) < chars.truncation_bound(coarse) + 3 * se


def test_infinite_divisibility_of_masses():
    chars = ntr_gamma().chars
    full = sample_masses(chars, [[0.5], [1.5], [2.5]], 50000, make_rng(6))
    half = chars.scaled(0.5)
    a = sample_masses(half, [[0.5], [1.5], [2.5]], 50000, make_rng(7))
    b = sample_masses(half, [[0.5], [1.5], [2.5]], 50000, make_rng(8))
    for k in range(3):
        assert ks_2samp(full[:, k], a[:, k] + b[:, k]).pvalue > 0.005


def test_product_line_examples():
    assert isinstance(product_line_measure([Zero1D(), Zero1D()]), ZeroMeasure)
    eta = product_line_measure([linear_hazard(1.0), linear_hazard(2.0)])
    for x in ([0.3, 0.8], [1.5, 0.1]):
        assert survival(eta, x) == pytest.approx(math.exp(-x[0] - 2 * x[1]), abs=1e-12)
    m1, m2 = Atoms1D([0.5, 1.0], [0.2, 1.0]), Atoms1D([2.0], [0.7])
    eta = product_line_measure([m1, m2])
    for x in ([0.1, 0.1], [0.2, 0.7], [1.0, 0.0], [INF, 0.7]):
        scan = sum(w for w, y in [(0.5, 0.2), (1.0, 1.0)] if y <= x[0] < INF) + (2.0 if 0.7 <= x[1] < INF else 0.0)
        assert orthant_complement_mass(eta, x) == pytest.approx(scan)


def test_kernel_conditions():
    for k in (Rectangular(0.5), DykstraLaud(1.0), OrnsteinUhlenbeck(1.0)):
        rep = check_kernel(k)
        assert rep["K1_bound"] and rep["K1_activation"] and rep["K2_cutoff"]


def test_deterministic_root_has_no_random_family():
    mu0 = root_crm(0.0, 2.0, base_rate=1.0)
    chars = subordinate(mu0, [gamma_jumps(), gamma_jumps()], [DykstraLaud(1.0)] * 2, Rectangular(0.5))
    assert not any(isinstance(f, SubordinatedFamily) for f in chars.families)
    assert len(chars.families) == 2
    assert validate(chars).ok


def test_random_root_adds_random_family():
    mu0 = root_crm(0.0, 2.0, jumps=gamma_jumps())
    chars = subordinate(mu0, [gamma_jumps()], [DykstraLaud(1.0)], Rectangular(0.5))
    assert any(isinstance(f, SubordinatedFamily) for f in chars.families)
    assert validate(chars).ok
