import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from minid.measures import (INF, AtomicMeasure, Atoms1D, DensityHazard, ExtendedPoint, MonotoneMap, PiecewiseHazard,
                            ProductLineMeasure, ZeroMeasure, Zero1D, image_transform, linear_hazard,
                            marginalize, orthant_complement_mass, reweight, smooth, survival)


def dirac2():
    return AtomicMeasure([2.0], [[1.0, 1.0]])


def test_extended_point_rules():
    p = ExtendedPoint([1.0, INF])
    assert p.dim == 2 and not p.is_all_infinite()
    assert ExtendedPoint([INF, INF]).is_all_infinite()
    for bad in ([-INF, 0.0], [np.nan]):
        with pytest.raises(ValueError):
            ExtendedPoint(bad)


def test_orthant_mass_atoms():
    eta = dirac2()
    assert orthant_complement_mass(eta, [0.0, 0.0]) == 0.0
    assert orthant_complement_mass(eta, [1.0, 2.0]) == 2.0


def test_orthant_mass_line_density_against_quadrature():
    dens = DensityHazard(lambda t: np.exp(-np.asarray(t, dtype=float)))
    eta = ProductLineMeasure([dens, Zero1D()])
    x = math.log(2.0)
    ref = integrate.quad(lambda t: math.exp(-t), 0.0, x)[0]
    assert orthant_complement_mass(eta, [x, 5.0]) == pytest.approx(ref, abs=1e-10)
    assert ref == pytest.approx(0.5, abs=1e-12)


def test_all_infinite_point_has_zero_mass():
    assert orthant_complement_mass(dirac2(), [INF, INF]) == 0.0
    assert survival(dirac2(), [INF, INF]) == 1.0


def test_survival_examples():
    assert survival(dirac2(), [0.0, 0.0]) == 1.0
    assert survival(dirac2(), [1.0, 2.0]) == pytest.approx(0.1353352832366127, abs=1e-12)
    one = AtomicMeasure([0.7], [[2.0]])
    assert survival(one, [1.999]) == 1.0
    assert survival(one, [2.0]) == pytest.approx(math.exp(-0.7))


def test_marginalize_examples():
    m = marginalize(dirac2(), [0])
    assert orthant_complement_mass(m, [0.5]) == 0.0
    assert orthant_complement_mass(m, [1.0]) == 2.0
    line2 = ProductLineMeasure([Zero1D(), linear_hazard(1.0)])
    m2 = marginalize(line2, [0])
    assert orthant_complement_mass(m2, [3.0]) == 0.0


def test_marginalize_product_line_three_dims():
    margins = [linear_hazard(1.0), linear_hazard(0.5, start=0.2), PiecewiseHazard([0.0, 1.0, INF], [0.3, 2.0])]
    eta = ProductLineMeasure(margins)
    m = marginalize(eta, [0, 1])
    direct = ProductLineMeasure(margins[:2])
    g = np.linspace(-0.5, 3.0, 5)
    for a in g:
        for b in g:
            assert orthant_complement_mass(m, [a, b]) == pytest.approx(orthant_complement_mass(direct, [a, b]), abs=1e-12)


def test_image_transform_examples():
    eta = ProductLineMeasure([linear_hazard(1.0)])
    ident = image_transform(eta, MonotoneMap.identity(1))
    for x in (0.3, 1.7):
        assert survival(ident, [x]) == pytest.approx(survival(eta, [x]), abs=1e-12)
    double = MonotoneMap([lambda x: 2 * x], [lambda y: y / 2])
    g = image_transform(eta, double)
    for x in (0.4, 1.0, 2.6):
        assert survival(g, [x]) == pytest.approx(survival(eta, [x / 2]), abs=1e-12)
    sq = MonotoneMap([lambda x: np.maximum(x, 0.0) ** 2], [lambda y: np.sqrt(np.maximum(y, 0.0))])
    at = image_transform(AtomicMeasure([3.0], [[1.0]]), sq)
    assert orthant_complement_mass(at, [0.999]) == 0.0
    assert orthant_complement_mass(at, [1.0]) == 3.0


def test_reweight_examples():
    eta = dirac2()
    assert orthant_complement_mass(reweight(eta, lambda p: np.ones(len(p))), [1, 1]) == 2.0
    assert orthant_complement_mass(reweight(eta, lambda p: np.zeros(len(p))), [5, 5]) == 0.0
    assert orthant_complement_mass(reweight(eta, lambda p: np.full(len(p), 0.5)), [1, 1]) == 1.0


def test_smooth_examples():
    leb = PiecewiseHazard([0.0, INF], [1.0])
    s = smooth(Atoms1D([1.0], [0.0]), leb)
    for t in (0.0, 0.5, 2.0):
        assert orthant_complement_mass(s, [t]) == pytest.approx(t, abs=1e-9)
    assert orthant_complement_mass(smooth(Zero1D(), leb), [3.0]) == 0.0
    s2 = smooth(Atoms1D([1.0, 1.0], [0.0, 1.0]), leb)
    for t in (0.25, 1.0, 1.5, 3.0):
        assert orthant_complement_mass(s2, [t]) == pytest.approx(t + max(t - 1.0, 0.0), abs=1e-8)


atoms_strategy = st.lists(
    st.tuples(st.floats(0.01, 5.0), st.floats(-2.0, 2.0), st.floats(-2.0, 2.0)), min_size=1, max_size=6)
point = st.tuples(st.floats(-3.0, 3.0), st.floats(-3.0, 3.0))


def _atomic(atoms):
    w = [a for a, _, _ in atoms]
    loc = [[b, c] for _, b, c in atoms]
    return AtomicMeasure(w, loc)


@settings(max_examples=60, deadline=None)
@given(atoms_strategy, point, point)
def test_monotone_in_query_point(atoms, x, dx):
    eta = _atomic(atoms)
    lo = np.array(x)
    hi = lo + np.abs(np.array(dx))
    assert orthant_complement_mass(eta, lo) <= orthant_complement_mass(eta, hi) + 1e-12


@settings(max_examples=60, deadline=None)
@given(atoms_strategy, point)
def test_atom_scan_matches(atoms, x):
    eta = _atomic(atoms)
    scan = sum(a for a, b, c in atoms if b <= x[0] or c <= x[1])
    assert orthant_complement_mass(eta, x) == pytest.approx(scan, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(atoms_strategy, st.lists(st.floats(-2.5, 2.5), min_size=3, max_size=3),
       st.lists(st.floats(-2.5, 2.5), min_size=3, max_size=3))
def test_survival_is_two_increasing(atoms, xs, ys):
    eta = _atomic(atoms)
    xs, ys = sorted(xs), sorted(ys)
    for i in range(2):
        for j in range(2):
            a, b, c, d = xs[i], xs[i + 1], ys[j], ys[j + 1]
            box = (survival(eta, [a, c]) - survival(eta, [b, c]) - survival(eta, [a, d]) + survival(eta, [b, d]))
            assert box >= -1e-12


def test_survival_two_increasing_for_line_densities():
    eta = ProductLineMeasure([linear_hazard(1.0), PiecewiseHazard([0.0, 1.0, INF], [0.3, 2.0])])
    g = np.sort(np.random.default_rng(3).uniform(-0.5, 3.0, 8))
    for a, b in zip(g[:-1], g[1:]):
        for c, d in zip(g[:-1], g[1:]):
            box = survival(eta, [a, c]) - survival(eta, [b, c]) - survival(eta, [a, d]) + survival(eta, [b, d])
            assert box >= -1e-12


@settings(max_examples=40, deadline=None)
@given(atoms_strategy, st.floats(-3.0, 3.0))
def test_marginal_consistency(atoms, x):
    eta = _atomic(atoms)
    assert survival(marginalize(eta, [1]), [x]) == pytest.approx(survival(eta, [INF, x]), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(atoms_strategy, point)
def test_transform_composition(atoms, x):
    eta = _atomic(atoms)
    f = MonotoneMap([lambda t: 2 * t + 1] * 2, [lambda y: (y - 1) / 2] * 2)
    h = MonotoneMap([np.cbrt] * 2, [lambda y: y ** 3] * 2)
    once = image_transform(eta, f.compose(h))
    twice = image_transform(image_transform(eta, h), f)
    assert orthant_complement_mass(once, x) == pytest.approx(orthant_complement_mass(twice, x), abs=1e-9)


def test_zero_measure_survival_one():
    assert survival(ZeroMeasure(3), [0.0, 1.0, 2.0]) == 1.0
