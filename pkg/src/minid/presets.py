"""Named model presets used by the command line, the demos and the tests."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .copula import LevyCopulaFamily
from .families import CRMFamily, FiniteFamily
from .jumps import gamma_jumps, stable_jumps
from .kernels import DykstraLaud, Rectangular
from .levy import LevyCharacteristics
from .locations import Box, Interval
from .measures import PiecewiseHazard, ProductLineMeasure, ZeroMeasure, linear_hazard
from .observations import ObservationSet
from .survival_model import HierarchicalSpec, build_model


@dataclass
class Preset:
    name: str
    chars: LevyCharacteristics
    description: str
    data: ObservationSet | None = None
    spec: HierarchicalSpec | None = None
    params: dict = field(default_factory=dict)


def _line(h):
    return ProductLineMeasure([h])


def ntr_gamma(T: float = 3.0, c: float = 1.0, beta: float = 1.0, drift: float = 0.0) -> Preset:
    """Gamma CRM on ``(0, T)``: a neutral-to-the-right prior, optionally with a Lebesgue drift."""
    base = _line(linear_hazard(drift)) if drift > 0 else ZeroMeasure(1)
    chars = LevyCharacteristics(base, [CRMFamily(gamma_jumps(c, beta), Box([0.0], [T]))])
    return Preset("ntr_gamma", chars, "gamma CRM hazard on a bounded interval",
                  params={"T": T, "c": c, "beta": beta, "drift": drift})


def stable_crm(T: float = 3.0, c: float = 1.0, sigma: float = 0.5) -> Preset:
    chars = LevyCharacteristics(ZeroMeasure(1), [CRMFamily(stable_jumps(c, sigma), Box([0.0], [T]))])
    return Preset("stable_crm", chars, "stable CRM hazard on a bounded interval",
                  params={"T": T, "c": c, "sigma": sigma})


def levy_copula(T: float = 2.0, theta: float = 1.0, c: float = 1.0, beta: float = 1.0) -> Preset:
    fam = LevyCopulaFamily(gamma_jumps(c, beta), gamma_jumps(c, beta), theta, Interval(0.0, T))
    chars = LevyCharacteristics(ZeroMeasure(2), [fam])
    return Preset("levy_copula", chars, "two gamma CRMs coupled by a Clayton Levy copula",
                  params={"T": T, "theta": theta, "c": c, "beta": beta})


def hierarchical(d: int = 2, T: float = 2.0, tau0: float = 0.5, taus=None, base_rate: float = 0.0) -> Preset:
    """Random gamma root smoothed by a rectangular kernel, Dykstra-Laud group kernels."""
    taus = [1.0] * d if taus is None else list(taus)
    spec = HierarchicalSpec(d=d, T=T, root_jumps=gamma_jumps(), base_rate=base_rate,
                            root_kernel=Rectangular(tau0), kernels=[DykstraLaud(t) for t in taus])
    chars, _ = build_model(spec)
    return Preset("hierarchical", chars, "group hazards driven by a shared random root", spec=spec,
                  params={"d": d, "T": T, "tau0": tau0, "taus": taus, "base_rate": base_rate})


def hierarchical_deterministic(d: int = 2, T: float = 2.0, tau0: float = 0.5, taus=None,
                               base_rate: float = 1.0) -> Preset:
    """Same group layer with a deterministic root: groups become independent."""
    taus = [1.0] * d if taus is None else list(taus)
    spec = HierarchicalSpec(d=d, T=T, root_jumps=None, base_rate=base_rate,
                            root_kernel=Rectangular(tau0), kernels=[DykstraLaud(t) for t in taus])
    chars, _ = build_model(spec)
    return Preset("hierarchical_deterministic", chars, "independent kernel-mixture hazards per group",
                  spec=spec, params={"d": d, "T": T, "tau0": tau0, "taus": taus, "base_rate": base_rate})


def toy_two_family() -> Preset:
    """Two finite families of exponential-type hazards with four observations."""
    f1 = FiniteFamily([_line(linear_hazard(1.0))], [0.8])
    f2 = FiniteFamily([_line(linear_hazard(2.5, start=1.0))], [0.6])
    chars = LevyCharacteristics(ZeroMeasure(1), [f1, f2])
    data = ObservationSet.from_points(np.array([[0.3], [0.8], [1.2], [2.0]]))
    return Preset("toy_two_family", chars, "two finite families, constant hazards", data=data)


def toy_three() -> Preset:
    """Finite Levy measure with three parametric atoms and two observations."""
    etas = [_line(linear_hazard(0.8)), _line(linear_hazard(1.5, start=0.5)),
            _line(PiecewiseHazard([0.0, 1.0, np.inf], [0.4, 2.0]))]
    chars = LevyCharacteristics(ZeroMeasure(1), [FiniteFamily(etas, [0.7, 0.5, 0.3])])
    data = ObservationSet.from_points(np.array([[0.4], [1.3]]))
    return Preset("toy_three", chars, "three weighted exponent measures", data=data)


PRESETS: dict[str, Callable[..., Preset]] = {
    "ntr_gamma": ntr_gamma,
    "stable_crm": stable_crm,
    "levy_copula": levy_copula,
    "hierarchical": hierarchical,
    "hierarchical_deterministic": hierarchical_deterministic,
    "toy_two_family": toy_two_family,
    "toy_three": toy_three,
}


def load_preset(name: str, **params) -> Preset:
    try:
        make = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return make(**params)
