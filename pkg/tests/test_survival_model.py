import math

import numpy as np
import pytest
from scipy import integrate
from scipy.stats import chisquare

from minid.families import KernelCRMFamily, Truncation
from minid.kernels import DykstraLaud, Rectangular
from minid.levy import validate
from minid.locations import Interval
from minid.moments import LaplaceQuery, laplace_transform
from minid.presets import PRESETS, load_preset
from minid.rng import make_rng
from minid.sampling import sample_batch
from minid.serialization import chars_from_dict, chars_to_dict
from minid.subordination import SubordinatedFamily
from minid.survival_model import (GroupedData, HierarchicalSpec, build_model, e_factor, ingest_grouped,
                                  margin_density_f_IJ)


@pytest.mark.parametrize("x", [0.1, 0.6, 1.3, 4.0])
def test_e_factor_single_atom_dykstra_laud(x):
    a, y, tau = 0.8, 0.5, 1.5
    expected = a * tau * math.exp(-a * tau * (x - y)) if x > y else 0.0
    assert e_factor(([a], [y]), DykstraLaud(tau), x) == pytest.approx(expected, rel=1e-12, abs=1e-15)


def test_e_factor_infinity_and_zero():
    assert e_factor(([0.8], [0.5]), DykstraLaud(1.0), math.inf) == 0.0
    assert e_factor(None, DykstraLaud(1.0), 0.7) == 0.0
    assert e_factor(None, DykstraLaud(1.0), math.inf) == 1.0
    # rectangular kernel: finite total hazard
    assert e_factor(([2.0], [1.0]), Rectangular(0.5), math.inf) == pytest.approx(math.exp(-2.0), rel=1e-12)


@pytest.mark.parametrize("x", [0.2, 0.8, 1.2, 1.7])
def test_e_factor_density_against_quadrature(x):
    k = Rectangular(0.5)
    rate = 2.0
    kern = lambda s, y: 1.0 if abs(s - y) <= 0.5 else 0.0

    def hazard(s):
        pts = [p for p in (s - 0.5, s + 0.5) if 0.0 < p < 1.0]
        return integrate.quad(lambda y: rate * kern(s, y), 0, 1, points=pts or None)[0]

    hz = hazard(x)
    cum = integrate.quad(hazard, 0.0, x, points=[p for p in (0.5, 1.5) if p < x] or None, epsabs=1e-13)[0]
    assert e_factor(Interval(0.0, 1.0, rate=rate), k, x) == pytest.approx(hz * math.exp(-cum), rel=1e-6, abs=1e-12)


def test_e_factor_density_at_infinity():
    total = 2.0 * (0.125 + 0.25 + 0.5)
    assert e_factor(Interval(0.0, 1.0, rate=2.0), Rectangular(0.5), math.inf) == pytest.approx(math.exp(-total))


def test_deterministic_root_single_group_is_kernel_mixture():
    chars, model = build_model(HierarchicalSpec(d=1, root_jumps=None, base_rate=1.0))
    assert all(isinstance(f, KernelCRMFamily) for f in chars.families)
    assert validate(chars).ok


def test_random_root_validates():
    chars, _ = build_model(HierarchicalSpec(d=2))
    assert validate(chars).ok
    assert not any(isinstance(f, KernelCRMFamily) for f in chars.families)


def test_inner_atoms_distinct_and_local():
    spec = HierarchicalSpec(d=2)
    chars, _ = build_model(spec)
    fam = next(f for f in chars.families if isinstance(f, SubordinatedFamily))
    tab = fam.proposal_table(10000, make_rng(0), Truncation())
    (p0, _, y0), (p1, _, y1) = tab.inner
    assert y0.size > 1000 and y1.size > 1000
    assert np.intersect1d(y0, y1).size == 0
    tau0 = spec.root_kernel.tau
    for par, y in ((p0, y0), (p1, y1)):
        b = tab.b0[par]
        assert np.all(y >= b - tau0 - 1e-12) and np.all(y <= b + tau0 + 1e-12)


def test_single_group_density_matches_samples():
    spec = HierarchicalSpec(d=1)
    chars, model = build_model(spec)
    edges = np.linspace(0.0, 3.0, 13)
    probs = [integrate.quad(lambda t: margin_density_f_IJ(model, [[t]]), a, b)[0] for a, b in zip(edges[:-1], edges[1:])]
    probs.append(1.0 - sum(probs))
    X = sample_batch(chars, 20000, 1, make_rng(1))[:, 0, 0]
    obs = np.histogram(np.minimum(X, 99.0), bins=list(edges) + [np.inf])[0]
    assert chisquare(obs, np.array(probs) * X.size).pvalue > 0.005


def test_cross_group_density_and_factorization():
    x = [[0.5], [0.7]]
    rand = HierarchicalSpec(d=2)
    joint = margin_density_f_IJ(rand, x)
    prod = margin_density_f_IJ(rand, [[0.5], []]) * margin_density_f_IJ(rand, [[], [0.7]])
    assert joint > 0
    assert abs(joint - prod) > 3 * 1e-6 * max(joint, prod)
    det = HierarchicalSpec(d=2, root_jumps=None, base_rate=1.0)
    assert margin_density_f_IJ(det, x) == 0.0
    chars, _ = build_model(det)
    both = laplace_transform(chars, LaplaceQuery([[0.5, 0.7]], [1.0]))
    one = laplace_transform(chars, LaplaceQuery([[0.5, np.inf]], [1.0]))
    two = laplace_transform(chars, LaplaceQuery([[np.inf, 0.7]], [1.0]))
    assert both == pytest.approx(one * two, rel=1e-9)


def test_no_deterministic_root_term_without_drift():
    chars, _ = build_model(HierarchicalSpec(d=2, base_rate=0.0))
    assert all(isinstance(f, SubordinatedFamily) for f in chars.families)


def test_ingest_grouped_examples():
    obs = ingest_grouped([[1.0, 2.0], [3.0, 4.0, 5.0]])
    assert obs.n == 3 and obs.size == 5
    one = ingest_grouped([[0.5, 0.7]])
    assert one.d == 1 and one.mask.all()
    gap = ingest_grouped([[0.5], []])
    assert gap.size == 1 and not gap.mask[1].any()
    with pytest.raises(ValueError):
        ingest_grouped([[], []])


def test_grouped_data_validation():
    assert GroupedData([[1.0], [2.0, 3.0]]).to_observations().size == 3
    with pytest.raises(ValueError):
        GroupedData([[0.0]])
    with pytest.raises(ValueError):
        GroupedData([[np.inf]])


def test_hierarchical_config_round_trip():
    spec = HierarchicalSpec(d=3, T=1.5, kernels=[DykstraLaud(0.5), DykstraLaud(1.0), DykstraLaud(2.0)])
    again = HierarchicalSpec.from_dict(spec.to_dict())
    assert again.to_dict() == spec.to_dict()
    det = HierarchicalSpec.from_dict({"d": 2, "root_jumps": None, "base_rate": 1.0})
    assert not det.random_root


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_characteristics_round_trip(name):
    chars = load_preset(name).chars
    again = chars_from_dict(chars_to_dict(chars))
    assert chars_to_dict(again) == chars_to_dict(chars)
    q = LaplaceQuery([np.r_[0.6, np.full(chars.dim - 1, np.inf)]], [1.0])
    assert laplace_transform(again, q) == pytest.approx(laplace_transform(chars, q), rel=1e-10)
