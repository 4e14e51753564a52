import math

import numpy as np
import pytest
from scipy import integrate

from minid.families import FiniteFamily
from minid.jumps import gamma_jumps
from minid.levy import LevyCharacteristics, make_crm
from minid.locations import Box
from minid.measures import AtomicMeasure, MonotoneMap, ProductLineMeasure, ZeroMeasure, Zero1D, linear_hazard
from minid.moments import (LaplaceQuery, association_diagnostic, hazard_moments,
                           laplace_transform, mc_laplace, mean_functional_moment, transform_chars)
from minid.presets import ntr_gamma
from minid.rng import make_rng


def gamma_unit():
    return make_crm(1, jumps=gamma_jumps(), locations=Box([0.0], [1.0]))


def deterministic(rate=1.0):
    return LevyCharacteristics(ProductLineMeasure([linear_hazard(rate)]), [])


def test_laplace_trivial_cases():
    det = LevyCharacteristics(AtomicMeasure([2.0], [[1.0, 1.0]]), [])
    q = LaplaceQuery([[1.0, 2.0], [0.0, 0.0]], [0.7, 3.0])
    assert laplace_transform(det, q) == pytest.approx(math.exp(-0.7 * 2.0))
    assert laplace_transform(gamma_unit(), LaplaceQuery([[0.5]], [0.0])) == 1.0


@pytest.mark.parametrize("x,z", [(0.4, 2.0), (0.9, 0.5), (0.25, 5.0)])
def test_gamma_laplace_against_quadrature(x, z):
    inner = integrate.quad(lambda a: -math.expm1(-z * a) * math.exp(-a) / a, 0, np.inf)[0]
    assert inner == pytest.approx(math.log1p(z), rel=1e-9)
    assert laplace_transform(gamma_unit(), LaplaceQuery([[x]], [z])) == pytest.approx(math.exp(-x * inner), rel=1e-9)


def test_hazard_moment_examples():
    det = LevyCharacteristics(AtomicMeasure([2.0], [[1.0, 1.0]]), [])
    assert hazard_moments(det, [[1.0, 2.0]], [1]) == pytest.approx(2.0)
    c = gamma_unit()
    mean = hazard_moments(c, [[0.5]], [1])
    second = hazard_moments(c, [[0.5]], [2])
    assert mean == pytest.approx(0.5, rel=1e-6)
    assert second - mean ** 2 == pytest.approx(0.5, rel=1e-4)


def test_hazard_moment_two_routes():
    # closed-form route against the differenced log Laplace transform
    c = ntr_gamma().chars
    for t in (0.3, 1.1, 2.7):
        a = hazard_moments(c, [[t]], [1], method="exact")
        b = hazard_moments(c, [[t]], [1], method="numeric")
        assert a == pytest.approx(b, rel=1e-6)


def test_high_orders_rejected():
    with pytest.raises(ValueError):
        hazard_moments(gamma_unit(), [[0.5]], [5])


def test_mean_functional_deterministic():
    assert mean_functional_moment(deterministic(), 1) == pytest.approx(1.0, abs=1e-8)
    assert mean_functional_moment(deterministic(), 2) == pytest.approx(1.0, abs=1e-8)


def test_mean_functional_change_of_variables():
    f = lambda x: np.maximum(x, 0.0) ** 2
    finv = lambda y: np.sqrt(np.maximum(y, 0.0))
    g = MonotoneMap([f], [finv])
    direct = mean_functional_moment(deterministic(), 1, f=f, f_inverse=finv)
    assert direct == pytest.approx(integrate.quad(lambda x: x * x * math.exp(-x), 0, np.inf)[0], rel=1e-4)
    chars = ntr_gamma(drift=0.5).chars
    a = mean_functional_moment(chars, 1, f=f, f_inverse=finv)
    b = mean_functional_moment(transform_chars(chars, g), 1)
    assert a == pytest.approx(b, rel=1e-6)


def test_laplace_monotone():
    c = ntr_gamma().chars
    zs = np.linspace(0.0, 3.0, 7)
    vals = [laplace_transform(c, LaplaceQuery([[1.0]], [z])) for z in zs]
    assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))
    xs = np.linspace(0.1, 2.9, 7)
    vals = [laplace_transform(c, LaplaceQuery([[x]], [1.0])) for x in xs]
    assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))


def test_mc_laplace_reconciles_small():
    c = ntr_gamma().chars
    q = LaplaceQuery([[0.5], [1.5]], [1.0, 0.5])
    est, se = mc_laplace(c, q, 20000, make_rng(0))
    assert abs(est - laplace_transform(c, q)) < 4 * se


def test_association_examples():
    det = deterministic()
    rep = association_diagnostic(det, [(np.array([0.3]), np.array([0.6]))], size=1000, rng=make_rng(1))
    surv = [r for r in rep.rows if r.kind == "survival"][0]
    assert abs(surv.cov) < 1e-20
    rep = association_diagnostic(gamma_unit(), [(np.array([0.3]), np.array([0.6]))], size=20000, rng=make_rng(2))
    surv = [r for r in rep.rows if r.kind == "survival"][0]
    assert surv.cov > 0 and surv.cov >= -3 * surv.se
    assert rep.ok


def test_independent_stack_uncorrelated():
    a = FiniteFamily([ProductLineMeasure([linear_hazard(1.0), Zero1D()])], [1.5])
    b = FiniteFamily([ProductLineMeasure([Zero1D(), linear_hazard(2.0)])], [1.0])
    chars = LevyCharacteristics(ZeroMeasure(2), [a, b])
    pair = (np.array([0.5, np.inf]), np.array([np.inf, 0.4]))
    rep = association_diagnostic(chars, [pair], size=50000, rng=make_rng(3))
    surv = [r for r in rep.rows if r.kind == "survival"][0]
    assert abs(surv.cov) < 3 * surv.se
