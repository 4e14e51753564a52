"""Hierarchical partially exchangeable survival model with a random root.

A root CRM ``mu_0`` on the real line (drift ``alpha_0`` plus jumps) is
smoothed by a kernel ``kappa_0``; its smoothed version drives one kernel CRM
per group.  Group hazards are ``mu_i^{(kappa_i)}`` so that shared root atoms
produce similar, yet never identical, hazard increases across groups.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

from .jumps import JumpIntensity, gamma_jumps, jumps_from_dict
from .kernels import DykstraLaud, Kernel, Rectangular, kernel_from_dict
from .levy import LevyCharacteristics, root_crm, subordinate
from .locations import LocationMeasure1D
from .measures import INF, KernelSmoothed
from .observations import ObservationSet, ingest_grouped
from .posterior import PosteriorModel, margin_density

__all__ = ["HierarchicalSpec", "GroupedData", "e_factor", "build_model", "margin_density_f_IJ",
           "ingest_grouped"]


@dataclass
class GroupedData:
    """Per-group survival times, possibly of unequal lengths."""

    groups: list

    def __post_init__(self):
        self.groups = [np.asarray(g, dtype=float).ravel() for g in self.groups]
        for g in self.groups:
            if g.size and not (np.isfinite(g).all() and (g > 0).all()):
                raise ValueError("survival times must be positive and finite")

    @property
    def d(self) -> int:
        return len(self.groups)

    def to_observations(self) -> ObservationSet:
        return ingest_grouped(self.groups)


@dataclass
class HierarchicalSpec:
    """Root CRM on ``(0, T)`` smoothed by ``root_kernel``, then one kernel CRM per group.

    ``root_jumps=None`` removes the random part of the root; ``base_rate``
    sets a Lebesgue drift ``alpha_0`` on ``(0, T)``.
    """

    d: int = 2
    T: float = 2.0
    root_jumps: JumpIntensity | None = field(default_factory=gamma_jumps)
    root_rate: float = 1.0
    base_rate: float = 0.0
    root_kernel: Kernel = field(default_factory=lambda: Rectangular(0.5))
    jumps: list = None
    kernels: list = None

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("need at least one group")
        if not self.T > 0:
            raise ValueError("root interval length must be positive")
        if self.root_jumps is None and self.base_rate <= 0:
            raise ValueError("the root needs a drift or jumps")
        self.jumps = list(self.jumps) if self.jumps else [gamma_jumps() for _ in range(self.d)]
        self.kernels = list(self.kernels) if self.kernels else [DykstraLaud(1.0) for _ in range(self.d)]
        if len(self.jumps) != self.d or len(self.kernels) != self.d:
            raise ValueError("one jump intensity and one kernel per group")

    @property
    def random_root(self) -> bool:
        return self.root_jumps is not None

    def root(self) -> LevyCharacteristics:
        return root_crm(0.0, self.T, self.base_rate, self.root_jumps, self.root_rate)

    def to_dict(self) -> dict:
        return {"model": "hierarchical", "d": self.d, "T": self.T,
                "root_jumps": None if self.root_jumps is None else self.root_jumps.to_dict(),
                "root_rate": self.root_rate, "base_rate": self.base_rate,
                "root_kernel": self.root_kernel.to_dict(),
                "jumps": [j.to_dict() for j in self.jumps], "kernels": [k.to_dict() for k in self.kernels]}

    @classmethod
    def from_dict(cls, d: dict) -> "HierarchicalSpec":
        d = dict(d)
        d.pop("model", None)
        rj = d.pop("root_jumps", {"kind": "gamma"})
        kw = {"root_jumps": None if rj in (None, "none", False) else jumps_from_dict(rj)}
        if "root_kernel" in d:
            kw["root_kernel"] = kernel_from_dict(d.pop("root_kernel"))
        if d.get("jumps"):
            kw["jumps"] = [jumps_from_dict(j) for j in d.pop("jumps")]
        if d.get("kernels"):
            kw["kernels"] = [kernel_from_dict(k) for k in d.pop("kernels")]
        d.pop("jumps", None)
        d.pop("kernels", None)
        return cls(**d, **kw)


def e_factor(eta_1d, kappa: Kernel, x: float) -> float:
    """Hazard-density factor of the smoothed measure ``eta^{(kappa)}`` at ``x``.

    ``eta_1d`` is ``None`` (zero), a pair ``(weights, locations)`` of atoms,
    or a location measure with a density.  For finite ``x`` the value is
    ``hazard(x) exp(-cumulative(x))``; at infinity it is ``exp(-total)``.
    """
    if eta_1d is None:
        return 1.0 if math.isinf(x) else 0.0
    if isinstance(eta_1d, tuple):
        m = KernelSmoothed(kappa, *eta_1d)
        if math.isinf(x):
            tot = m.total()
            return math.exp(-tot) if math.isfinite(tot) else 0.0
        xa = np.array([float(x)])
        return float(m.hazard(xa)[0] * math.exp(-float(m.cumulative(xa)[0])))
    if not isinstance(eta_1d, LocationMeasure1D):
        raise TypeError("eta must be None, a (weights, locations) pair or a location measure")
    lo, hi = eta_1d.lower, eta_1d.upper
    pts = [p for p in eta_1d.breakpoints() if lo < p < hi]
    if math.isinf(x):
        tot = integrate.quad(lambda y: float(kappa.total(np.array([y]))[0]) * float(eta_1d.density(y)),
                             lo, hi, points=pts or None, limit=200)[0]
        return math.exp(-tot) if math.isfinite(tot) else 0.0
    kp = [p for p in (x - kappa.hi, x - kappa.lo) if lo < p < hi]
    haz = integrate.quad(lambda y: float(kappa(x, y)) * float(eta_1d.density(y)), lo, hi,
                         points=(pts + kp) or None, limit=200)[0]
    cum = integrate.quad(lambda y: float(kappa.primitive(x, y)) * float(eta_1d.density(y)), lo, hi,
                         points=(pts + kp) or None, limit=200)[0]
    return haz * math.exp(-cum)


def build_model(spec: HierarchicalSpec) -> tuple[LevyCharacteristics, PosteriorModel]:
    """Characteristics of the group-level IDEM and its density model."""
    chars = subordinate(spec.root(), spec.jumps, spec.kernels, spec.root_kernel)
    return chars, PosteriorModel(chars)


_MODELS: dict = {}


def _model_for(spec) -> PosteriorModel:
    if isinstance(spec, PosteriorModel):
        return spec
    if isinstance(spec, LevyCharacteristics):
        return PosteriorModel(spec)
    key = repr(spec.to_dict())
    if key not in _MODELS:
        _MODELS[key] = build_model(spec)[1]
    return _MODELS[key]


def margin_density_f_IJ(spec, x_IJ) -> float:
    """Density of the observed cells ``x_IJ`` (grouped times or an ``ObservationSet``)."""
    obs = x_IJ if isinstance(x_IJ, ObservationSet) else ingest_grouped(
        x_IJ.groups if isinstance(x_IJ, GroupedData) else x_IJ)
    return margin_density(_model_for(spec), obs)
