"""Jump-size intensities ``rho(a)`` on ``(0, inf)``.

``PowerJumps`` covers the generalized gamma class
``rho(a) = c a^{-1-sigma} exp(-beta a)``: gamma (``sigma = 0``), stable
(``beta = 0``) and their tempered mixtures.  ``FiniteGammaJumps`` is a
finite-activity intensity proportional to a gamma density.

Notation used by the posterior code:

* ``psi(u) = int (1 - e^{-u a}) rho(a) da`` (Laplace exponent),
* ``tau_k(u) = int a^k e^{-u a} rho(a) da``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

INF = np.inf


def _upper_gamma_neg(sigma: float, x):
    """``Gamma(-sigma, x)`` for ``0 <= sigma < 1`` and ``x > 0``."""
    x = np.asarray(x, dtype=float)
    if sigma == 0.0:
        return special.exp1(x)
    g1 = special.gammaincc(1.0 - sigma, x) * special.gamma(1.0 - sigma)
    return (x ** (-sigma) * np.exp(-x) - g1) / sigma


class JumpIntensity:
    finite: bool = False

    def density(self, a):
        raise NotImplementedError

    def psi(self, u):
        raise NotImplementedError

    def tau(self, k: int, u):
        raise NotImplementedError

    def tail_mass(self, eps):
        raise NotImplementedError

    def truncated_first_moment(self, eps):
        raise NotImplementedError

    def min_moment(self, s=1.0) -> float:
        """``int min(s a, 1) rho(a) da``."""
        if s <= 0:
            return 0.0
        return float(s * self.truncated_first_moment(1.0 / s) + self.tail_mass(1.0 / s))

    def exp_moment_floor(self) -> float:
        """Infimum of ``u`` for which ``psi(u)`` is finite."""
        return 0.0

    def tail_inverse(self, v):
        """``a`` with ``tail_mass(a) = v``: log-log table lookup refined by Newton steps."""
        v = np.asarray(v, dtype=float)
        if getattr(self, "_tail_table", None) is None:
            la = np.linspace(-60.0, 8.0, 4097)
            with np.errstate(divide="ignore"):
                lt = np.log(self.tail_mass(np.exp(la)))
            ok = np.isfinite(lt)
            self._tail_table = (la[ok][::-1], lt[ok][::-1])      # increasing log tail
        la, lt = self._tail_table
        with np.errstate(divide="ignore"):
            lv = np.log(v)
        a = np.exp(np.interp(lv, lt, la))
        lo, hi = math.exp(la[-1]), math.exp(la[0])
        for _ in range(3):
            with np.errstate(divide="ignore", invalid="ignore"):
                step = (self.tail_mass(a) - v) / self.density(a)
            a = np.clip(np.where(np.isfinite(step), a + step, a), lo, hi)
        return a


class PowerJumps(JumpIntensity):
    """``rho(a) = c a^{-1-sigma} e^{-beta a}``."""

    def __init__(self, c: float = 1.0, sigma: float = 0.0, beta: float = 1.0):
        if c < 0 or beta < 0 or sigma < 0:
            raise ValueError("c, beta and sigma must be nonnegative")
        if sigma == 0 and beta == 0:
            raise ValueError("sigma = beta = 0 is not a Levy intensity")
        self.c, self.sigma, self.beta = float(c), float(sigma), float(beta)

    @property
    def integrable(self) -> bool:
        return self.sigma < 1.0

    def density(self, a):
        a = np.asarray(a, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(a > 0, self.c * a ** (-1 - self.sigma) * np.exp(-self.beta * a), 0.0)

    def exp_moment_floor(self):
        return -self.beta

    def psi(self, u):
        u = np.asarray(u, dtype=float)
        if not self.integrable:
            return np.full(u.shape, INF)
        b, s, c = self.beta, self.sigma, self.c
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if s == 0.0:
                out = c * np.log1p(u / b)
            else:
                out = c * special.gamma(1 - s) / s * ((b + u) ** s - b ** s)
        return np.where(np.isposinf(u), INF, np.where(u + b < 0, INF, out))

    def tau(self, k: int, u):
        u = np.asarray(u, dtype=float)
        if k <= self.sigma:
            return np.full(u.shape, INF)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = self.c * special.gamma(k - self.sigma) * (self.beta + u) ** (self.sigma - k)
        return np.where(np.isposinf(u), 0.0, out)

    def log_tau(self, k: int, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (math.log(self.c) + special.gammaln(k - self.sigma)
                   + (self.sigma - k) * np.log(self.beta + u))
        return np.where(np.isposinf(u), -INF, out)

    def tail_mass(self, eps):
        eps = np.asarray(eps, dtype=float)
        if self.c == 0:
            return np.zeros(eps.shape)
        if self.beta == 0:
            with np.errstate(divide="ignore"):
                return self.c * eps ** (-self.sigma) / self.sigma
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.c * self.beta ** self.sigma * _upper_gamma_neg(self.sigma, self.beta * eps)
        return np.where(eps <= 0, INF, out)

    def truncated_first_moment(self, eps):
        eps = np.asarray(eps, dtype=float)
        s = self.sigma
        if s >= 1:
            return np.full(eps.shape, INF)
        if self.beta == 0:
            return self.c * eps ** (1 - s) / (1 - s)
        return (self.c * self.beta ** (s - 1) * special.gamma(1 - s)
                * special.gammainc(1 - s, self.beta * eps))

    def mean(self) -> float:
        return float(self.tau(1, 0.0))

    def sample_above(self, eps: float, size: int, rng) -> np.ndarray:
        """Exact draws from ``rho`` restricted to ``(eps, inf)``, normalized."""
        if eps <= 0:
            raise ValueError("sampling needs a positive cutoff")
        s, b = self.sigma, self.beta
        out = np.empty(size)
        if b == 0:
            return eps * rng.random(size) ** (-1.0 / s)
        m = max(eps, 1.0 / b)
        mass_a = float(self.tail_mass(eps) - self.tail_mass(m))
        mass_b = float(self.tail_mass(m))
        # branch counts follow the exact masses; each branch is then filled by rejection
        use_a = rng.random(size) < mass_a / (mass_a + mass_b)
        out[use_a] = self._fill(int(use_a.sum()), rng, lambda n: self._prop_low(eps, m, n, rng),
                                lambda a: np.exp(-b * (a - eps)))
        out[~use_a] = self._fill(int((~use_a).sum()), rng, lambda n: m + rng.exponential(1.0 / b, n),
                                 lambda a: (m / a) ** (1 + s))
        return out

    def _prop_low(self, eps, m, n, rng):
        s = self.sigma
        v = rng.random(n)
        if s == 0.0:
            return eps * (m / eps) ** v
        return (eps ** (-s) - v * (eps ** (-s) - m ** (-s))) ** (-1.0 / s)

    @staticmethod
    def _fill(n, rng, propose, accept_prob):
        out = np.empty(n)
        filled = 0
        while filled < n:
            cand = propose(n - filled)
            ok = cand[rng.random(cand.size) < accept_prob(cand)]
            out[filled:filled + ok.size] = ok
            filled += ok.size
        return out

    def sample_tilted(self, k: int, u, size, rng):
        """Draws from ``a^k e^{-u a} rho(a) / tau_k(u)``: a gamma law."""
        rate = self.beta + np.asarray(u, dtype=float)
        return rng.gamma(k - self.sigma, 1.0, size) / rate

    def log_density_tilted(self, k, u, a):
        """Log of the normalized tilted density, for Metropolis steps."""
        a = np.asarray(a, dtype=float)
        return (k - 1 - self.sigma) * np.log(a) - (self.beta + u) * a - self.log_tau(k, u) + math.log(self.c)

    def scaled(self, k: float) -> "PowerJumps":
        return PowerJumps(self.c * k, self.sigma, self.beta)

    def to_dict(self):
        return {"kind": "power", "c": self.c, "sigma": self.sigma, "beta": self.beta}

    def __repr__(self):
        return f"PowerJumps(c={self.c}, sigma={self.sigma}, beta={self.beta})"


def gamma_jumps(c: float = 1.0, beta: float = 1.0) -> PowerJumps:
    """``c a^{-1} e^{-beta a}``."""
    return PowerJumps(c, 0.0, beta)


def stable_jumps(c: float = 1.0, sigma: float = 0.5) -> PowerJumps:
    return PowerJumps(c, sigma, 0.0)


class FiniteGammaJumps(JumpIntensity):
    """``rho(a) = mass * Gamma(shape, rate)`` density; finite activity."""

    finite = True

    def __init__(self, mass: float = 1.0, shape: float = 1.0, rate: float = 1.0):
        if mass < 0 or shape <= 0 or rate <= 0:
            raise ValueError("invalid finite gamma intensity")
        self.mass, self.shape, self.rate = float(mass), float(shape), float(rate)

    def density(self, a):
        a = np.asarray(a, dtype=float)
        with np.errstate(divide="ignore"):
            logp = (self.shape * math.log(self.rate) - special.gammaln(self.shape)
                    + (self.shape - 1) * np.log(a) - self.rate * a)
        return np.where(a > 0, self.mass * np.exp(logp), 0.0)

    def exp_moment_floor(self):
        return -self.rate

    def psi(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.mass * (1.0 - (self.rate / (self.rate + u)) ** self.shape)
        return np.where(np.isposinf(u), self.mass, out)

    def tau(self, k, u):
        u = np.asarray(u, dtype=float)
        return np.exp(self.log_tau(k, u))

    def log_tau(self, k, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore"):
            out = (math.log(self.mass) + self.shape * math.log(self.rate)
                   + special.gammaln(self.shape + k) - special.gammaln(self.shape)
                   - (self.shape + k) * np.log(self.rate + u))
        return np.where(np.isposinf(u), -INF, out)

    def tail_mass(self, eps):
        eps = np.asarray(eps, dtype=float)
        return self.mass * special.gammaincc(self.shape, self.rate * np.maximum(eps, 0.0))

    def truncated_first_moment(self, eps):
        eps = np.asarray(eps, dtype=float)
        return self.mass * self.shape / self.rate * special.gammainc(self.shape + 1, self.rate * eps)

    def mean(self):
        return self.mass * self.shape / self.rate

    def sample_above(self, eps, size, rng):
        if eps <= 0:
            return rng.gamma(self.shape, 1.0 / self.rate, size)
        lo = special.gammainc(self.shape, self.rate * eps)
        u = lo + (1 - lo) * rng.random(size)
        return special.gammaincinv(self.shape, u) / self.rate

    def sample_tilted(self, k, u, size, rng):
        return rng.gamma(self.shape + k, 1.0, size) / (self.rate + np.asarray(u, dtype=float))

    def log_density_tilted(self, k, u, a):
        a = np.asarray(a, dtype=float)
        sh = self.shape + k
        r = self.rate + u
        return sh * math.log(r) - special.gammaln(sh) + (sh - 1) * np.log(a) - r * a

    def scaled(self, k: float) -> "FiniteGammaJumps":
        return FiniteGammaJumps(self.mass * k, self.shape, self.rate)

    def to_dict(self):
        return {"kind": "finite_gamma", "mass": self.mass, "shape": self.shape, "rate": self.rate}

    def __repr__(self):
        return f"FiniteGammaJumps(mass={self.mass}, shape={self.shape}, rate={self.rate})"


def jumps_from_dict(d: dict) -> JumpIntensity:
    d = dict(d)
    kind = d.pop("kind", "power")
    if kind == "power":
        return PowerJumps(**d)
    if kind == "gamma":
        return gamma_jumps(**d)
    if kind == "stable":
        return stable_jumps(**d)
    if kind == "finite_gamma":
        return FiniteGammaJumps(**d)
    raise ValueError(f"unknown jump intensity kind {kind!r}")
