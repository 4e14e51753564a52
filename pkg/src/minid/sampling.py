"""Exchangeable min-id sequences and their hitting scenarios.

Two equivalent routes generate ``X_1, ..., X_n``:

* *conditional*: draw ``mu`` from the IDEM, then i.i.d. ``minid(mu)``;
* *integrated*: draw the Poisson process of atoms ``eta_k`` of ``nu`` and
  let each column be the minimum of independent ``minid(eta_k)`` draws and a
  ``minid(alpha)`` draw.

The integrated route reveals the hitting scenario: the partition of observed
cells by the atom that attains them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from .families import Truncation
from .levy import LevyCharacteristics, sample_idem, table_measure
from .measures import INF, ExponentMeasure
from .observations import ObservationSet


@dataclass(frozen=True)
class HittingScenario:
    """Partition of observed cells in restricted-growth form.

    ``labels[c]`` is the block of cell ``c`` (cells ordered observation by
    observation); the first occurrence of block ``b`` precedes that of ``b+1``.
    """

    labels: tuple

    def __post_init__(self):
        labels = tuple(int(v) for v in self.labels)
        top = -1
        for v in labels:
            if v > top + 1 or v < 0:
                raise ValueError("labels must be a restricted-growth string")
            top = max(top, v)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_labels(cls, raw: Sequence[Hashable]) -> "HittingScenario":
        seen: dict = {}
        return cls(tuple(seen.setdefault(r, len(seen)) for r in raw))

    @classmethod
    def from_blocks(cls, blocks, m: int) -> "HittingScenario":
        raw = [None] * m
        for b, blk in enumerate(blocks):
            for c in blk:
                raw[c] = b
        if any(r is None for r in raw):
            raise ValueError("blocks must cover every cell")
        return cls.from_labels(raw)

    @classmethod
    def singletons(cls, m: int) -> "HittingScenario":
        return cls(tuple(range(m)))

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def n_blocks(self) -> int:
        return max(self.labels) + 1 if self.labels else 0

    def blocks(self) -> list[tuple]:
        out = [[] for _ in range(self.n_blocks)]
        for c, b in enumerate(self.labels):
            out[b].append(c)
        return [tuple(b) for b in out]

    def to_list(self):
        return list(self.labels)

    def __str__(self):
        return "".join(str(v) if v < 10 else f"[{v}]" for v in self.labels)


@dataclass
class SequenceDraw:
    """Sampled ``d x n`` matrix with latent labels per cell."""

    values: np.ndarray
    labels: dict
    mode: str
    measure: ExponentMeasure | None = None
    n_atoms: int = 0
    truncation_bound: float = 0.0
    extra: dict = field(default_factory=dict)

    def scenario(self, obs: ObservationSet | None = None) -> HittingScenario:
        return extract_hitting_scenario(self, obs)


def _conditional(chars, n, rng, trunc):
    mu = sample_idem(chars, trunc, rng)
    d = chars.dim
    X = np.full((d, n), INF)
    labels = {}
    for j in range(n):
        x, lat = mu.sample_minid(rng, source="mu")
        X[:, j] = x
        for i in np.flatnonzero(np.isfinite(x)):
            src = lat.source_of(int(i))
            shared = isinstance(src, tuple) and len(src) == 3 and src[1] == "atom"
            labels[(int(i), j)] = src if shared else (src, j)
    return SequenceDraw(X, labels, "conditional", mu, getattr(mu, "n_atoms", 0),
                        getattr(mu, "truncation_bound", 0.0))


def _integrated(chars, n, rng, trunc):
    d = chars.dim
    tab = chars.table(1, rng, trunc)
    hits = tab.first_hits(n, rng)                   # (atoms, d, n)
    X = np.full((d, n), INF)
    labels = {}
    if tab.n_atoms:
        arg = np.argmin(hits, axis=0)
        X = np.min(hits, axis=0)
    for j in range(n):
        xa, lat = chars.base.sample_minid(rng, source="alpha")
        for i in range(d):
            if xa[i] < X[i, j]:
                X[i, j] = xa[i]
                src = lat.source_of(i)
                shared = isinstance(src, tuple) and len(src) == 3 and src[1] == "atom"
                labels[(i, j)] = ("alpha",) + (src if shared else (src, j),)
            elif math.isfinite(X[i, j]):
                labels[(i, j)] = ("eta", int(arg[i, j]))
    return SequenceDraw(X, labels, "integrated", None, tab.n_atoms, chars.truncation_bound(trunc),
                        {"table": tab})


def sample_sequence(chars: LevyCharacteristics, n: int, rng=None, mode: str = "integrated",
                    trunc: Truncation | None = None) -> SequenceDraw:
    """``n`` exchangeable draws (a ``d x n`` matrix) with latent cell labels."""
    rng = np.random.default_rng() if rng is None else rng
    trunc = trunc or Truncation()
    if n < 1:
        raise ValueError("need at least one observation")
    if mode == "conditional":
        return _conditional(chars, n, rng, trunc)
    if mode == "integrated":
        return _integrated(chars, n, rng, trunc)
    raise ValueError(f"unknown sampling mode {mode!r}")


def sample_minid(eta: ExponentMeasure, rng=None, source="eta"):
    """One draw of ``minid(eta)`` together with the realizing latent points."""
    rng = np.random.default_rng() if rng is None else rng
    return eta.sample_minid(rng, source=source)


def sample_minid_batch(eta: ExponentMeasure, size: int, rng=None) -> np.ndarray:
    """``(size, d)`` i.i.d. draws of ``minid(eta)``."""
    rng = np.random.default_rng() if rng is None else rng
    return eta.sample_minid_batch(size, rng)


def extract_hitting_scenario(draw: SequenceDraw, obs: ObservationSet | None = None) -> HittingScenario:
    """Hitting scenario of the observed cells (all finite cells by default)."""
    if obs is None:
        obs = ObservationSet(draw.values, np.isfinite(draw.values))
    raw = []
    for i, j in obs.cells:
        if (i, j) not in draw.labels:
            raise ValueError(f"cell {(i, j)} is infinite and has no hitting atom")
        raw.append(draw.labels[(i, j)])
    return HittingScenario.from_labels(raw)


def sample_batch(chars: LevyCharacteristics, size: int, n: int, rng=None,
                 trunc: Truncation | None = None, chunk: int = 20000) -> np.ndarray:
    """``(size, d, n)``: independent replicates of ``n`` exchangeable draws (integrated route)."""
    rng = np.random.default_rng() if rng is None else rng
    trunc = trunc or Truncation()
    d = chars.dim
    out = np.empty((size, d, n))
    for start in range(0, size, chunk):
        m = min(chunk, size - start)
        block = chars.base.sample_minid_batch(m * n, rng).reshape(m, n, d).transpose(0, 2, 1).copy()
        tab = chars.table(m, rng, trunc)
        if tab.n_atoms:
            np.minimum.at(block, tab.owner, tab.first_hits(n, rng))
        out[start:start + m] = block
    return out


def realized_measure(chars: LevyCharacteristics, rng=None, trunc: Truncation | None = None) -> ExponentMeasure:
    """Alias of :func:`sample_idem` for symmetry with the sequence samplers."""
    return sample_idem(chars, trunc, rng)


__all__ = ["HittingScenario", "SequenceDraw", "sample_sequence", "sample_minid", "sample_minid_batch", "sample_batch",
           "extract_hitting_scenario", "realized_measure", "table_measure"]
