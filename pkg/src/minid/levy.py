"""Levy characteristics ``(alpha, nu)`` of infinitely divisible exponent measures."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .copula import PairTable
from .families import (AtomFamily, CombinedTable, CRMFamily, DiracTable, EmptyTable, KernelAtomTable,
                       KernelCRMFamily, MeasureListTable, Truncation)
from .kernels import Kernel
from .locations import Box, Interval, SmoothedLocations
from .measures import (INF, AtomicMeasure, ExponentMeasure, KernelSmoothed, PiecewiseHazard,
                       ProductLineMeasure, SumMeasure, UnivariateMeasure, Zero1D, ZeroMeasure)
from .subordination import SubordinatedFamily, SubordinatedTable


class ConditionError(ValueError):
    """A structural condition required by an operation does not hold."""


@dataclass
class LevyCharacteristics:
    """Deterministic base exponent measure plus a finite list of atom families."""

    base: ExponentMeasure
    families: list = field(default_factory=list)

    def __post_init__(self):
        self.families = list(self.families)
        for f in self.families:
            if f.dim != self.base.dim:
                raise ValueError("families and base must share the dimension")

    @property
    def dim(self) -> int:
        return self.base.dim

    @classmethod
    def trivial(cls, d: int) -> "LevyCharacteristics":
        return cls(ZeroMeasure(d), [])

    def base_masses(self, points) -> np.ndarray:
        return self.base.orthant_masses(np.atleast_2d(points))

    def laplace_exponent(self, points, z) -> float:
        """``sum z_r alpha(C_r) + int 1 - exp(-sum z_r eta(C_r)) nu(d eta)``."""
        points = np.atleast_2d(np.asarray(points, float))
        z = np.asarray(z, float)
        val = float(np.dot(z, self.base_masses(points)))
        for f in self.families:
            val += f.laplace_exponent(points, z)
        return val

    def mean_masses(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, float))
        out = self.base_masses(points).astype(float)
        for f in self.families:
            out = out + f.mean_masses(points)
        return out

    def scaled(self, c: float) -> "LevyCharacteristics":
        return LevyCharacteristics(self.base.scaled(c), [f.scaled(c) for f in self.families])

    def table(self, size: int, rng, trunc: Truncation | None = None) -> CombinedTable:
        """Atoms of ``size`` independent PRMs with intensity ``nu`` (truncated)."""
        trunc = trunc or Truncation()
        return CombinedTable([f.table(size, rng, trunc) for f in self.families], size, self.dim)

    def truncation_bound(self, trunc: Truncation | None = None) -> float:
        trunc = trunc or Truncation()
        return float(sum(f.truncation_bound(trunc) for f in self.families))

    def to_dict(self):
        from .serialization import chars_to_dict

        return chars_to_dict(self)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass
class ValidationReport:
    integrability: dict
    support: dict
    ok: bool
    warnings: list

    def as_dict(self):
        return {"ok": self.ok, "integrability": self.integrability, "support": self.support,
                "warnings": list(self.warnings)}


def validate(chars: LevyCharacteristics, i_max: int = 6, support_times=None) -> ValidationReport:
    """Integrability on the localizing sets and the real-valued support condition.

    Integrability uses ``U_i`` contained in the complement of ``(i, inf]^d``;
    divergence is reported as a failure.  The support condition is checked on
    the mean measure of ``{x_i <= t}`` for ``t = 10, ..., 10^6``; lack of
    growth produces a warning only.
    """
    d = chars.dim
    integ, warns, ok = {}, [], True
    for k, fam in enumerate(chars.families):
        vals = []
        for i in range(1, i_max + 1):
            try:
                v = float(fam.integrability(np.full(d, float(i))))
            except (FloatingPointError, ZeroDivisionError):
                v = INF
            vals.append(v)
        finite = all(math.isfinite(v) for v in vals)
        ok &= finite
        integ[f"{k}:{fam.name}"] = {"values": vals, "finite": finite}
    times = np.asarray(support_times if support_times is not None else 10.0 ** np.arange(1, 7), float)
    support = {}
    for i in range(d):
        vals = []
        for t in times:
            p = np.full((1, d), INF)
            p[0, i] = t
            vals.append(float(chars.mean_masses(p)[0]))
        vals = np.asarray(vals)
        growing = bool(np.isinf(vals[-1]) or (vals[-1] > 1e3 and vals[-1] > vals[-2] + 1.0))
        if not growing:
            warns.append(f"line {i}: mean mass of {{x_{i} <= t}} stays near {vals[-1]:.4g}; "
                         "realizations may put positive probability on infinity")
        support[i] = {"times": times.tolist(), "mean_mass": vals.tolist(), "growing": growing}
    if not chars.families and chars.base.is_zero():
        warns.append("zero base without families: every draw is infinite")
    return ValidationReport(integ, support, ok, warns)


# ---------------------------------------------------------------------------
# sampling realizations
# ---------------------------------------------------------------------------

def table_measure(tab, rows=None) -> ExponentMeasure:
    """Sum of the table's atoms (optionally restricted to ``rows``) as one measure."""
    d = tab.dim
    rows = np.arange(tab.n_atoms) if rows is None else np.asarray(rows, int)
    if rows.size == 0:
        return ZeroMeasure(d)
    if isinstance(tab, CombinedTable):
        parts = []
        for t, a, b in zip(tab.tables, tab.offsets[:-1], tab.offsets[1:]):
            sel = rows[(rows >= a) & (rows < b)] - a
            if sel.size:
                parts.append(table_measure(t, sel))
        return SumMeasure.of(parts, d) if len(parts) != 1 else parts[0]
    if isinstance(tab, DiracTable):
        return AtomicMeasure(tab.a[rows], tab.B[rows])
    if isinstance(tab, PairTable):
        w = np.concatenate([tab.a1[rows], tab.a2[rows]])
        B = np.full((2 * rows.size, 2), INF)
        B[: rows.size, 0] = tab.b[rows]
        B[rows.size:, 1] = tab.b[rows]
        keep = w > 0
        return AtomicMeasure(w[keep], B[keep])
    if isinstance(tab, KernelAtomTable):
        margins = [Zero1D() for _ in range(d)]
        margins[tab.line] = KernelSmoothed(tab.kernel, tab.a[rows], tab.b[rows])
        return ProductLineMeasure(margins)
    if isinstance(tab, SubordinatedTable):
        margins = []
        sel = np.zeros(tab.n_atoms, bool)
        sel[rows] = True
        for i, (par, a, y) in enumerate(tab.inner):
            k = sel[par]
            margins.append(KernelSmoothed(tab.fam.kernels[i], a[k], y[k]) if k.any() else Zero1D())
        return ProductLineMeasure(margins)
    return SumMeasure.of([tab.measure(int(r)) for r in rows], d)


def sample_idem(chars: LevyCharacteristics, trunc: Truncation | None = None, rng=None) -> ExponentMeasure:
    """One realization ``alpha + sum_j eta_j`` of the (truncated) IDEM.

    The returned measure carries ``truncation_bound``: the expected omitted
    orthant mass at the reference horizon.
    """
    rng = np.random.default_rng() if rng is None else rng
    trunc = trunc or Truncation()
    bound = chars.truncation_bound(trunc)
    if not math.isfinite(bound):
        raise ConditionError("the truncation policy cannot bound the omitted mass")
    tab = chars.table(1, rng, trunc)
    parts = [chars.base, table_measure(tab)]
    mu = SumMeasure.of(parts, chars.dim)
    if isinstance(mu, SumMeasure):
        mu = mu.flatten()
    mu.truncation_bound = bound
    mu.n_atoms = tab.n_atoms
    return mu


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def make_crm(d: int, base: ExponentMeasure | None = None, jumps=None, locations=None,
             family: CRMFamily | None = None) -> LevyCharacteristics:
    """CRM characteristics: ``nu`` is the image of ``(a, b) -> a delta_b``."""
    base = ZeroMeasure(d) if base is None else base
    if family is None:
        if jumps is None or locations is None:
            raise ValueError("need jumps and locations or a CRM family")
        family = CRMFamily(jumps, locations)
    if family.dim != d:
        raise ValueError("family dimension mismatch")
    chars = LevyCharacteristics(base, [family])
    rep = validate(chars)
    if not rep.ok:
        raise ConditionError("jump intensity fails the integrability condition")
    return chars


def product_line_measure(margins: Sequence[UnivariateMeasure]) -> ExponentMeasure:
    """Measure on the coordinate lines with independent minid components."""
    margins = list(margins)
    m = ProductLineMeasure(margins)
    return ZeroMeasure(len(margins)) if m.is_zero() else m


def _root_parts(mu0: LevyCharacteristics):
    """Split a root CRM on the real line into (base interval or None, jumps, interval)."""
    if mu0.dim != 1:
        raise ValueError("the root measure lives on the real line")
    base = None
    if not mu0.base.is_zero():
        facs = mu0.base.hazard_factors()
        m = facs[0] if facs else None
        if not (isinstance(m, PiecewiseHazard) and np.count_nonzero(m.rates) == 1):
            raise ValueError("root base must be a constant rate on a bounded interval")
        k = int(np.flatnonzero(m.rates)[0])
        hi = m.breaks[k + 1] if k + 1 < m.breaks.size else INF
        base = Interval(m.breaks[k], hi, m.rates[k])
    if len(mu0.families) > 1:
        raise ValueError("the root may carry at most one CRM family")
    jumps = interval = None
    if mu0.families:
        f = mu0.families[0]
        if not isinstance(f, CRMFamily) or not isinstance(f.locations, Box):
            raise ValueError("root family must be a CRM on an interval")
        interval = Interval(float(f.locations.lower[0]), float(f.locations.upper[0]), f.locations.rate)
        jumps = f.jumps
    return base, jumps, interval


def root_crm(lower=0.0, upper=1.0, base_rate=0.0, jumps=None, rate=1.0) -> LevyCharacteristics:
    """Root CRM on ``(lower, upper)``: Lebesgue drift ``base_rate`` plus jumps."""
    base = ZeroMeasure(1)
    if base_rate > 0:
        base = ProductLineMeasure([PiecewiseHazard([lower, upper], [base_rate])])
    fams = [] if jumps is None else [CRMFamily(jumps, Box([lower], [upper], rate))]
    return LevyCharacteristics(base, fams)


def check_kernel(kernel: Kernel, inner: bool = True) -> dict:
    rep = kernel.check_conditions()
    if not kernel.attested:
        raise ConditionError("custom kernels need a user attestation")
    if not (rep["K1_bound"] and rep["K1_activation"] and rep["K2_cutoff"]):
        raise ConditionError(f"kernel {kernel!r} violates the kernel conditions: {rep}")
    return rep


def subordinate(mu0: LevyCharacteristics, rhos, kappas, root_kernel: Kernel) -> LevyCharacteristics:
    """Group-level CRMs driven by the smoothed root measure ``mu0^{(kappa_0)}``.

    The deterministic part of the root yields one kernel-CRM family per line
    with location measure ``alpha_0^{(kappa_0)}``; the random part yields a
    single random-measure family.
    """
    if len(rhos) != len(kappas) or not rhos:
        raise ValueError("one jump intensity and one kernel per line")
    for k in kappas:
        rep = check_kernel(k)
        if not rep["C2_infinite_integral"]:
            warnings.warn(f"kernel {k!r}: infinite hazard integral not available; the alternative "
                          "root-mass branch is not verified", stacklevel=2)
    check_kernel(root_kernel)
    base, jumps0, interval = _root_parts(mu0)
    d = len(rhos)
    fams: list[AtomFamily] = []
    if base is not None:
        loc = SmoothedLocations(base, root_kernel)
        fams += [KernelCRMFamily(d, i, rhos[i], kappas[i], loc) for i in range(d)]
    if jumps0 is not None:
        fams.append(SubordinatedFamily(jumps0, interval, root_kernel, rhos, kappas))
    return LevyCharacteristics(ZeroMeasure(d), fams)
