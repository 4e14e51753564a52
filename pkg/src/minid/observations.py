"""Observed survival data as a ``d x n`` matrix with an observation mask."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

INF = np.inf


@dataclass
class ObservationSet:
    """``values[i, j]`` is component ``i`` of observation ``j``.

    ``mask[i, j]`` marks observed cells.  Cells are enumerated observation by
    observation (``j`` outer, ``i`` inner); that order defines cell indices
    and the restricted-growth encoding of hitting scenarios.
    """

    values: np.ndarray
    mask: np.ndarray = None
    cells: list = field(init=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[None, :]
        if v.ndim != 2:
            raise ValueError("observations must form a d x n matrix")
        m = np.ones(v.shape, bool) if self.mask is None else np.asarray(self.mask, bool)
        if m.shape != v.shape:
            raise ValueError("mask shape mismatch")
        if np.isnan(v[m]).any() or np.isneginf(v[m]).any():
            raise ValueError("observed entries must be real numbers")
        self.values = np.where(m, v, INF)
        self.mask = m
        self.cells = [(i, j) for j in range(v.shape[1]) for i in range(v.shape[0]) if m[i, j]]

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def size(self) -> int:
        return len(self.cells)

    @property
    def key(self) -> tuple:
        """Content key for caches keyed by a data set."""
        k = self.__dict__.get("_key")
        if k is None:
            k = (self.values.shape, self.values.tobytes(), self.mask.tobytes())
            self.__dict__["_key"] = k
        return k

    def cell_values(self) -> np.ndarray:
        return np.array([self.values[i, j] for i, j in self.cells])

    def cell_components(self) -> np.ndarray:
        return np.array([i for i, _ in self.cells], dtype=int)

    def cell_columns(self) -> np.ndarray:
        return np.array([j for _, j in self.cells], dtype=int)

    def points(self) -> np.ndarray:
        """Columns with at least one observed entry, as rows of an ``(n', d)`` array."""
        keep = self.mask.any(axis=0)
        return self.values[:, keep].T.copy()

    def finite_cells(self) -> bool:
        return bool(np.isfinite(self.cell_values()).all())

    @classmethod
    def empty(cls, d: int) -> "ObservationSet":
        return cls(np.zeros((d, 0)))

    @classmethod
    def from_points(cls, points) -> "ObservationSet":
        """Build from ``(m, d)`` points; ``inf`` entries count as observed at infinity."""
        P = np.atleast_2d(np.asarray(points, dtype=float))
        obs = cls.__new__(cls)
        obs.values = P.T.copy()
        obs.mask = np.ones(obs.values.shape, bool)
        obs.cells = [(i, j) for j in range(obs.values.shape[1]) for i in range(obs.values.shape[0])]
        return obs

    def restrict(self, cells: Sequence) -> "ObservationSet":
        """Same values, observed only on ``cells`` (margin ``IJ``)."""
        m = np.zeros(self.values.shape, bool)
        for i, j in cells:
            m[i, j] = True
        out = self.__class__.__new__(self.__class__)
        out.values = np.where(m, self.values, INF)
        out.mask = m
        out.cells = [(i, j) for j in range(m.shape[1]) for i in range(m.shape[0]) if m[i, j]]
        return out


def ingest_grouped(groups: Sequence[Sequence[float]]) -> ObservationSet:
    """Per-group survival times to a ``d x max(n_i)`` observation set."""
    groups = [np.asarray(g, dtype=float).ravel() for g in groups]
    if not groups or sum(g.size for g in groups) == 0:
        raise ValueError("grouped data needs at least one observation")
    for g in groups:
        if g.size and (not np.isfinite(g).all() or (g <= 0).any()):
            raise ValueError("survival times must be positive and finite")
    n = max(g.size for g in groups)
    vals = np.full((len(groups), n), INF)
    mask = np.zeros((len(groups), n), bool)
    for i, g in enumerate(groups):
        vals[i, : g.size] = g
        mask[i, : g.size] = True
    return ObservationSet(vals, mask)


def tie_partition_labels(values) -> list:
    """Restricted-growth labels grouping exactly equal values."""
    labels, seen = [], {}
    for v in values:
        key = float(v)
        if key not in seen:
            seen[key] = len(seen)
        labels.append(seen[key])
    return labels
