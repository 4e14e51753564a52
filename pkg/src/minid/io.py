"""File formats: samples, grouped data, summaries, manifests and configs."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from .serialization import decode_inf, encode_inf

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(float(v))


def _parse(s: str) -> float:
    s = s.strip()
    return math.inf if s.lower() in ("inf", "+inf", "infinity") else float(s)


# -- configs ---------------------------------------------------------------

def load_config(path) -> dict:
    """TOML first, JSON as a fallback; the string ``"inf"`` decodes to infinity."""
    text = Path(path).read_text()
    try:
        cfg = tomllib.loads(text)
    except tomllib.TOMLDecodeError:
        cfg = json.loads(text)
    return decode_inf(cfg)


def config_hash(cfg: dict) -> str:
    blob = json.dumps(encode_inf(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# -- samples -----------------------------------------------------------------

def write_samples(path, X: np.ndarray, manifest_name: str | None = None, meta: dict | None = None) -> Path:
    """``(N, d)`` rows to CSV with a JSON sidecar ``<path>.meta.json``."""
    path = Path(path)
    X = np.atleast_2d(X)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["draw"] + [f"x{i + 1}" for i in range(X.shape[1])])
        for r, row in enumerate(X):
            w.writerow([r] + [_fmt(v) for v in row])
    side = path.with_name(path.name + ".meta.json")
    side.write_text(json.dumps(encode_inf({"manifest": manifest_name, **(meta or {})}), indent=2) + "\n")
    return path


def read_samples(path) -> np.ndarray:
    with Path(path).open() as fh:
        rows = list(csv.reader(fh))
    return np.array([[_parse(v) for v in r[1:]] for r in rows[1:]], dtype=float).reshape(len(rows) - 1, -1)


# -- grouped survival data ------------------------------------------------------

def read_grouped(path, d: int | None = None) -> list:
    """CSV with columns ``group_id, time`` to per-group lists.

    Integer group ids ``1..d`` (or ``0..d-1``) keep their order; any other
    labels are sorted.  A header-only file yields ``d`` empty groups.
    """
    with Path(path).open() as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"group_id", "time"} <= set(reader.fieldnames):
            raise ValueError("grouped data needs columns group_id and time")
        rows = [(r["group_id"].strip(), _parse(r["time"])) for r in reader]
    labels = sorted({g for g, _ in rows}, key=lambda s: (0, int(s)) if s.lstrip("-").isdigit() else (1, s))
    if labels and all(s.isdigit() for s in labels):
        ids = [int(s) for s in labels]
        off = 0 if min(ids) == 0 else 1
        n = max(max(ids) + 1 - off, d or 0)
        groups = [[] for _ in range(n)]
        for g, t in rows:
            groups[int(g) - off].append(t)
    else:
        index = {g: k for k, g in enumerate(labels)}
        groups = [[] for _ in range(max(len(labels), d or 0))]
        for g, t in rows:
            groups[index[g]].append(t)
    if d is not None and len(groups) > d:
        raise ValueError(f"data has {len(groups)} groups, model has {d}")
    if d is not None:
        groups += [[] for _ in range(d - len(groups))]
    return groups


def write_grouped(path, groups) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["group_id", "time"])
        for i, g in enumerate(groups):
            for t in g:
                w.writerow([i + 1, _fmt(t)])
    return path


# -- summaries and manifests ------------------------------------------------------

def write_summary(path, summary, manifest_name: str | None = None) -> Path:
    """Predictive survival summary: grid coordinates, mean, band, standard error."""
    path = Path(path)
    d = summary.grid.shape[1]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"t{i + 1}" for i in range(d)] + ["mean", "lower", "upper", "se", "manifest"])
        for g, m, lo, hi, se in summary.rows():
            w.writerow([_fmt(v) for v in g] + [repr(m), repr(lo), repr(hi), repr(se), manifest_name or ""])
    return path


def read_summary(path) -> dict:
    with Path(path).open() as fh:
        rows = list(csv.DictReader(fh))
    tcols = [k for k in rows[0] if k.startswith("t")] if rows else []
    return {"grid": np.array([[_parse(r[c]) for c in tcols] for r in rows]),
            **{k: np.array([float(r[k]) for r in rows]) for k in ("mean", "lower", "upper", "se")}}


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(encode_inf(obj), indent=2, sort_keys=True) + "\n")
    return path
