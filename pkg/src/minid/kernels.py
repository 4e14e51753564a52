"""Hazard kernels ``kappa(s, y)`` used to smooth atoms into hazard rates.

Every kernel here is translation invariant, ``kappa(s, y) = k(s - y)``, and
supported on ``s - y`` in ``[lo, hi]``.  Time runs on ``s >= 0`` so the
primitive is ``K(x, y) = int_0^x kappa(s, y) ds``.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod

import numpy as np

INF = np.inf


class Kernel(ABC):
    name: str = "custom"
    #: ``kappa(s, y) = 0`` unless ``lo <= s - y <= hi``
    lo: float = 0.0
    hi: float = INF
    attested: bool = True

    @abstractmethod
    def profile(self, u):
        """``k(u)`` with ``kappa(s, y) = k(s - y)``."""

    @abstractmethod
    def profile_primitive(self, u):
        """``int_{-inf}^u k``."""

    def __call__(self, s, y):
        s = np.asarray(s, dtype=float)
        y = np.asarray(y, dtype=float)
        with np.errstate(invalid="ignore"):
            val = self.profile(s - y)
        return np.where(np.isfinite(s) & (s >= 0), val, 0.0)

    def primitive(self, x, y):
        """``K(x, y) = int_0^x kappa(s, y) ds`` (``x`` may be inf)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        xp = np.maximum(x, 0.0)
        with np.errstate(invalid="ignore"):
            up = np.where(np.isinf(xp), self.profile_primitive(np.full(np.broadcast(xp, y).shape, INF)),
                          self.profile_primitive(np.where(np.isinf(xp), 0.0, xp) - y))
            val = up - self.profile_primitive(-y)
        return np.maximum(val, 0.0)

    def total(self, y):
        return self.primitive(np.full(np.shape(y), INF), y)

    def inverse_primitive(self, v, y):
        """Smallest ``x >= 0`` with ``K(x, y) >= v``; inf when never reached."""
        v = np.asarray(v, dtype=float)
        y = np.asarray(y, dtype=float)
        v, y = np.broadcast_arrays(v, y)
        target = v + self.profile_primitive(-y)
        u = self.profile_quantile(target)
        x = np.maximum(u + y, 0.0)
        return np.where(v <= 0, 0.0, np.where(target >= self.profile_primitive(np.full(y.shape, INF)), INF, x))

    @abstractmethod
    def profile_quantile(self, p):
        """Smallest ``u`` with ``profile_primitive(u) >= p``."""

    def location_integral(self, s, ylo, yhi):
        """``int_{ylo}^{yhi} kappa(s, y) dy`` for the location argument."""
        s = np.asarray(s, dtype=float)
        a = np.maximum(s - yhi, -1e300)
        b = s - ylo
        return np.where(s >= 0, self.profile_primitive(b) - self.profile_primitive(a), 0.0)

    def s_breakpoints(self, y):
        y = np.asarray(y, dtype=float)
        pts = [y + self.lo, y + self.hi]
        return np.concatenate([p[np.isfinite(p)] for p in pts])

    def y_breakpoints(self, s):
        """Location values where ``y -> kappa(s, y)`` or ``y -> K(s, y)`` kinks."""
        s = np.asarray(s, dtype=float)
        pts = [s - self.lo, s - self.hi, -self.lo, -self.hi]
        out = np.concatenate([np.atleast_1d(p) for p in pts])
        return out[np.isfinite(out)]

    def cutoff(self, t):
        """``kappa(s, b) = 0`` for every ``s <= t`` once ``b > cutoff(t)`` (K2)."""
        return t - self.lo

    # condition constants
    bound: float
    width: float
    lower_bound: float

    def check_conditions(self, n_probe=2001, rng=None) -> dict:
        """Numerical check of the boundedness, activation and cutoff conditions."""
        rng = np.random.default_rng(0) if rng is None else rng
        y = rng.uniform(-2.0, 5.0, n_probe)
        s = rng.uniform(0.0, 8.0, n_probe)
        k1_bound = bool((self(s, y) <= self.bound + 1e-12).all())
        st = y[:, None] + self.width * np.linspace(1e-6, 1 - 1e-6, 9)[None, :]
        yy = np.repeat(y[:, None], 9, axis=1)
        ok = st >= 0
        k1_active = bool((self(st[ok], yy[ok]) >= self.lower_bound - 1e-12).all())
        t = rng.uniform(0.0, 5.0, n_probe)
        b = self.cutoff(t) + rng.uniform(1e-9, 3.0, n_probe)
        sgrid = t[:, None] * np.linspace(0, 1, 11)[None, :]
        k2 = bool((self(sgrid, np.repeat(b[:, None], 11, axis=1)) == 0).all())
        c2 = bool(np.isinf(self.total(np.array([1.0]))[0]))
        return {"K1_bound": k1_bound, "K1_activation": k1_active, "K2_cutoff": k2,
                "C2_infinite_integral": c2, "attested": self.attested}

    def to_dict(self):
        raise NotImplementedError


class DykstraLaud(Kernel):
    """``kappa(s, y) = tau 1{s >= y}``."""

    name = "dykstra_laud"
    lo, hi = 0.0, INF

    def __init__(self, tau: float = 1.0):
        if tau <= 0:
            raise ValueError("tau must be positive")
        self.tau = float(tau)
        self.bound = self.tau
        self.width = 1.0
        self.lower_bound = self.tau

    def profile(self, u):
        return np.where(np.asarray(u) >= 0, self.tau, 0.0)

    def profile_primitive(self, u):
        u = np.asarray(u, dtype=float)
        return np.where(u > 0, self.tau * u, 0.0)

    def profile_quantile(self, p):
        p = np.asarray(p, dtype=float)
        return np.where(p <= 0, 0.0, p / self.tau)

    def primitive(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        with np.errstate(invalid="ignore"):
            val = self.tau * (np.maximum(x, 0.0) - np.maximum(y, 0.0))
        return np.where(np.isposinf(x), INF, np.maximum(val, 0.0))

    def inverse_primitive(self, v, y):
        v = np.asarray(v, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.maximum(y, 0.0) + v / self.tau

    def to_dict(self):
        return {"preset": self.name, "tau": self.tau}

    def __repr__(self):
        return f"DykstraLaud(tau={self.tau})"


class Rectangular(Kernel):
    """``kappa(s, y) = height 1{|s - y| <= tau}``."""

    name = "rectangular"

    def __init__(self, tau: float = 1.0, height: float = 1.0):
        if tau <= 0 or height <= 0:
            raise ValueError("tau and height must be positive")
        self.tau, self.height = float(tau), float(height)
        self.lo, self.hi = -self.tau, self.tau
        self.bound = self.height
        self.width = self.tau
        self.lower_bound = self.height

    def profile(self, u):
        u = np.asarray(u, dtype=float)
        return np.where(np.abs(u) <= self.tau, self.height, 0.0)

    def profile_primitive(self, u):
        u = np.asarray(u, dtype=float)
        return self.height * (np.clip(u, -self.tau, self.tau) + self.tau)

    def profile_quantile(self, p):
        p = np.asarray(p, dtype=float)
        return np.clip(p / self.height - self.tau, -self.tau, self.tau)

    def inverse_primitive(self, v, y):
        v = np.asarray(v, dtype=float)
        y = np.asarray(y, dtype=float)
        lo = np.maximum(y - self.tau, 0.0)
        hi = y + self.tau
        x = lo + v / self.height
        return np.where((hi > 0) & (x <= hi), np.where(v <= 0, 0.0, x), INF)

    def to_dict(self):
        return {"preset": self.name, "tau": self.tau, "height": self.height}

    def __repr__(self):
        return f"Rectangular(tau={self.tau}, height={self.height})"


class OrnsteinUhlenbeck(Kernel):
    """``kappa(s, y) = sqrt(2 tau) exp(-tau (s - y)) 1{s >= y}``."""

    name = "ou"
    lo, hi = 0.0, INF

    def __init__(self, tau: float = 1.0):
        if tau <= 0:
            raise ValueError("tau must be positive")
        self.tau = float(tau)
        self.c = math.sqrt(2.0 * self.tau)
        self.bound = self.c
        self.width = 1.0
        self.lower_bound = self.c * math.exp(-self.tau)

    def profile(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(over="ignore"):
            return np.where(u >= 0, self.c * np.exp(-self.tau * np.maximum(u, 0.0)), 0.0)

    def profile_primitive(self, u):
        u = np.asarray(u, dtype=float)
        return np.where(u > 0, (self.c / self.tau) * -np.expm1(-self.tau * np.maximum(u, 0.0)), 0.0)

    def profile_quantile(self, p):
        p = np.asarray(p, dtype=float)
        m = self.c / self.tau
        with np.errstate(divide="ignore", invalid="ignore"):
            u = -np.log1p(-p / m) / self.tau
        return np.where(p <= 0, 0.0, np.where(p >= m, INF, u))

    def to_dict(self):
        return {"preset": self.name, "tau": self.tau}

    def __repr__(self):
        return f"OrnsteinUhlenbeck(tau={self.tau})"


KERNEL_PRESETS = {
    "dykstra_laud": DykstraLaud,
    "rectangular": Rectangular,
    "ou": OrnsteinUhlenbeck,
}


def make_kernel(preset: str, **params) -> Kernel:
    try:
        cls = KERNEL_PRESETS[preset]
    except KeyError:
        raise ValueError(f"unknown kernel preset {preset!r}; choose from {sorted(KERNEL_PRESETS)}")
    return cls(**params)


def kernel_from_dict(d: dict) -> Kernel:
    d = dict(d)
    return make_kernel(d.pop("preset"), **d)
