"""JSON-safe dictionaries for measures, families and characteristics.

Infinity is written as the string ``"inf"`` so that output stays valid JSON.
"""

from __future__ import annotations

import math

import numpy as np

from .copula import LevyCopulaFamily
from .families import CRMFamily, FiniteFamily, KernelCRMFamily, TiltedFamily
from .jumps import jumps_from_dict
from .kernels import kernel_from_dict
from .levy import LevyCharacteristics
from .locations import Box, DiscreteLocations, Interval, SmoothedLocations
from .measures import (AtomicMeasure, Atoms1D, KernelSmoothed, PiecewiseHazard, ProductLineMeasure, Scaled1D,
                       ScaledMeasure, Sum1D, SumMeasure, Zero1D, ZeroMeasure)
from .subordination import SubordinatedFamily


def encode_inf(x):
    """Replace infinities by ``"inf"`` recursively (lists, dicts, arrays, floats)."""
    if isinstance(x, np.ndarray):
        return encode_inf(x.tolist())
    if isinstance(x, dict):
        return {k: encode_inf(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [encode_inf(v) for v in x]
    if isinstance(x, (float, np.floating)):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def decode_inf(x):
    if isinstance(x, str) and x.strip().lower() in ("inf", "+inf", "infinity", "-inf"):
        return -math.inf if x.strip().startswith("-") else math.inf
    if isinstance(x, list):
        return [decode_inf(v) for v in x]
    if isinstance(x, dict):
        return {k: decode_inf(v) for k, v in x.items()}
    return x


# -- univariate ------------------------------------------------------------

def univariate_to_dict(m) -> dict:
    if isinstance(m, Zero1D):
        return {"kind": "zero"}
    if isinstance(m, PiecewiseHazard):
        return {"kind": "piecewise", "breaks": encode_inf(m.breaks), "rates": m.rates.tolist()}
    if isinstance(m, Atoms1D):
        return {"kind": "atoms", "weights": m.weights.tolist(), "locations": m.locations.tolist()}
    if isinstance(m, KernelSmoothed):
        return {"kind": "kernel_smoothed", "kernel": m.kernel.to_dict(), "weights": m.weights.tolist(),
                "locations": m.locations.tolist()}
    if isinstance(m, Sum1D):
        return {"kind": "sum", "parts": [univariate_to_dict(p) for p in m.parts]}
    if isinstance(m, Scaled1D):
        return {"kind": "scaled", "c": m.c, "base": univariate_to_dict(m.base)}
    return {"kind": "opaque", "repr": repr(m)}


def univariate_from_dict(d: dict):
    kind = d["kind"]
    if kind == "zero":
        return Zero1D()
    if kind == "piecewise":
        return PiecewiseHazard(decode_inf(d["breaks"]), d["rates"])
    if kind == "atoms":
        return Atoms1D(d["weights"], d["locations"])
    if kind == "kernel_smoothed":
        return KernelSmoothed(kernel_from_dict(d["kernel"]), d["weights"], d["locations"])
    if kind == "sum":
        return Sum1D([univariate_from_dict(p) for p in d["parts"]])
    if kind == "scaled":
        return Scaled1D(univariate_from_dict(d["base"]), d["c"])
    raise ValueError(f"cannot rebuild univariate measure of kind {kind!r}")


# -- exponent measures -----------------------------------------------------

def measure_to_dict(m) -> dict:
    if isinstance(m, ZeroMeasure):
        return {"kind": "zero", "dim": m.dim}
    if isinstance(m, AtomicMeasure):
        return {"kind": "atomic", "weights": m.weights.tolist(), "locations": encode_inf(m.locations)}
    if isinstance(m, ProductLineMeasure):
        return {"kind": "lines", "margins": [univariate_to_dict(u) for u in m.margins]}
    if isinstance(m, SumMeasure):
        return {"kind": "sum", "dim": m.dim, "parts": [measure_to_dict(p) for p in m.parts]}
    if isinstance(m, ScaledMeasure):
        return {"kind": "scaled", "c": m.c, "base": measure_to_dict(m.base)}
    return {"kind": "opaque", "dim": m.dim, "repr": repr(m)}


def measure_from_dict(d: dict):
    kind = d["kind"]
    if kind == "zero":
        return ZeroMeasure(int(d["dim"]))
    if kind == "atomic":
        return AtomicMeasure(d["weights"], decode_inf(d["locations"]))
    if kind == "lines":
        return ProductLineMeasure([univariate_from_dict(u) for u in d["margins"]])
    if kind == "sum":
        return SumMeasure.of([measure_from_dict(p) for p in d["parts"]], int(d["dim"]))
    if kind == "scaled":
        return ScaledMeasure(measure_from_dict(d["base"]), d["c"])
    raise ValueError(f"cannot rebuild exponent measure of kind {kind!r}")


# -- families --------------------------------------------------------------

def locations_from_dict(d: dict):
    kind = d["kind"]
    if kind == "interval":
        return Interval(d["lower"], d["upper"], d.get("rate", 1.0))
    if kind == "box":
        return Box(decode_inf(d["lower"]), decode_inf(d["upper"]), d.get("rate", 1.0))
    if kind == "discrete":
        return DiscreteLocations(d["weights"], decode_inf(d["points"]))
    if kind == "smoothed":
        return SmoothedLocations(locations_from_dict(d["base"]), kernel_from_dict(d["kernel"]))
    raise ValueError(f"unknown location measure kind {kind!r}")


def family_to_dict(f) -> dict:
    if isinstance(f, TiltedFamily):
        return {"kind": "tilted", "base": family_to_dict(f.base), "n_points": int(len(f.points))}
    return encode_inf(f.to_dict())


def family_from_dict(d: dict):
    kind = d["kind"]
    if kind == "finite":
        return FiniteFamily([measure_from_dict(m) for m in d["measures"]], d["weights"])
    if kind == "crm":
        return CRMFamily(jumps_from_dict(d["jumps"]), locations_from_dict(d["locations"]))
    if kind == "kernel_crm":
        return KernelCRMFamily(int(d["dim"]), int(d["line"]), jumps_from_dict(d["jumps"]),
                               kernel_from_dict(d["kernel"]), locations_from_dict(d["locations"]))
    if kind == "levy_copula":
        return LevyCopulaFamily(jumps_from_dict(d["jumps1"]), jumps_from_dict(d["jumps2"]), d["theta"],
                                locations_from_dict(d["locations"]))
    if kind == "subordinated":
        return SubordinatedFamily(jumps_from_dict(d["root_jumps"]), locations_from_dict(d["root_locations"]),
                                  kernel_from_dict(d["root_kernel"]), [jumps_from_dict(j) for j in d["jumps"]],
                                  [kernel_from_dict(k) for k in d["kernels"]])
    raise ValueError(f"cannot rebuild Levy family of kind {kind!r}")


def chars_to_dict(chars: LevyCharacteristics) -> dict:
    return {"dim": chars.dim, "base": measure_to_dict(chars.base),
            "families": [family_to_dict(f) for f in chars.families]}


def chars_from_dict(d: dict) -> LevyCharacteristics:
    base = measure_from_dict(d["base"]) if "base" in d else ZeroMeasure(int(d["dim"]))
    return LevyCharacteristics(base, [family_from_dict(f) for f in d.get("families", [])])
