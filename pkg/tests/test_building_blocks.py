import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate
from scipy.stats import kstest

from minid.combinatorics import bell, blocks_of, set_partitions
from minid.jumps import FiniteGammaJumps, gamma_jumps, stable_jumps
from minid.kernels import DykstraLaud, OrnsteinUhlenbeck, Rectangular
from minid.rng import child_seeds, make_rng

JUMPS = [gamma_jumps(), gamma_jumps(2.0, 0.5), stable_jumps(1.0, 0.5), stable_jumps(0.7, 0.3)]


@pytest.mark.parametrize("m,expected", [(1, 1), (2, 2), (3, 5), (4, 15), (6, 203), (9, 21147)])
def test_bell_numbers(m, expected):
    assert bell(m) == expected


@pytest.mark.parametrize("m", range(1, 7))
def test_set_partitions_enumerates_each_partition_once(m):
    parts = list(set_partitions(m))
    assert len(parts) == bell(m) == len(set(parts))
    for labels in parts:
        assert labels[0] == 0
        assert all(v <= max(labels[:i], default=-1) + 1 for i, v in enumerate(labels))
        assert sorted(c for b in blocks_of(labels) for c in b) == list(range(m))


@pytest.mark.parametrize("j", JUMPS, ids=repr)
@pytest.mark.parametrize("eps", [1e-3, 0.1, 2.0])
def test_tail_mass_against_quadrature(j, eps):
    ref = integrate.quad(lambda a: float(j.density(a)), eps, np.inf, limit=200)[0]
    assert float(j.tail_mass(eps)) == pytest.approx(ref, rel=1e-7)


@pytest.mark.parametrize("j", JUMPS, ids=repr)
@pytest.mark.parametrize("u", [0.3, 2.0])
def test_laplace_exponent_against_quadrature(j, u):
    ref = integrate.quad(lambda a: -math.expm1(-u * a) * float(j.density(a)), 0, np.inf, limit=200)[0]
    assert float(j.psi(u)) == pytest.approx(ref, rel=1e-7)


@pytest.mark.parametrize("j", JUMPS[:3], ids=repr)
def test_sample_above_follows_normalized_tail(j):
    eps = 0.05
    a = j.sample_above(eps, 20000, make_rng(0))
    assert a.min() >= eps
    cdf = lambda x: 1.0 - np.asarray([float(j.tail_mass(max(v, eps))) for v in np.atleast_1d(x)]) / float(j.tail_mass(eps))
    assert kstest(a, cdf).pvalue > 0.005


@settings(max_examples=60, deadline=None)
@given(st.floats(-12.0, 3.0), st.sampled_from(range(len(JUMPS))))
def test_tail_inverse_round_trip(log_a, k):
    j = JUMPS[k]
    a = math.exp(log_a)
    v = float(j.tail_mass(a))
    assert float(j.tail_inverse(v)) == pytest.approx(a, rel=1e-8)


def test_finite_gamma_jumps():
    j = FiniteGammaJumps(2.0, 3.0, 1.5)
    assert float(j.tail_mass(0.0)) == pytest.approx(2.0)
    a = j.sample_above(0.0, 20000, make_rng(1))
    assert kstest(a, "gamma", args=(3.0, 0, 1 / 1.5)).pvalue > 0.005


KERNELS = [DykstraLaud(1.5), Rectangular(0.5), OrnsteinUhlenbeck(0.8)]


@pytest.mark.parametrize("k", KERNELS, ids=repr)
@pytest.mark.parametrize("x,y", [(0.3, 0.1), (1.7, 0.4), (0.2, 0.9), (3.0, 1.0)])
def test_kernel_primitive_against_quadrature(k, x, y):
    pts = [p for p in (y, y - getattr(k, "tau", 0.0), y + getattr(k, "tau", 0.0)) if 0.0 < p < x]
    ref = integrate.quad(lambda s: float(k(s, y)), 0.0, x, points=pts or None)[0]
    assert float(k.primitive(x, y)) == pytest.approx(ref, rel=1e-9, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 0.999), st.floats(0.0, 2.0), st.sampled_from(range(3)))
def test_kernel_inverse_primitive(frac, y, k):
    kern = KERNELS[k]
    x_hi = y + 10.0
    total = float(kern.primitive(x_hi, y))
    v = frac * total
    x = float(kern.inverse_primitive(np.array([v]), np.array([y]))[0])
    assert float(kern.primitive(x, y)) == pytest.approx(v, rel=1e-7, abs=1e-9)


def test_child_seeds_reproducible():
    a = [make_rng(s).random() for s in child_seeds(5, 3)]
    b = [make_rng(s).random() for s in child_seeds(5, 3)]
    assert a == b and len(set(a)) == 3
