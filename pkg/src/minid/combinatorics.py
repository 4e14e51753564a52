"""Set partitions in restricted-growth form."""

from __future__ import annotations

from typing import Iterator


def set_partitions(m: int) -> Iterator[tuple]:
    """All restricted-growth strings of length ``m`` (Bell(m) of them)."""
    if m == 0:
        yield ()
        return
    a = [0] * m
    top = [0] * m          # running maximum before position k

    def rec(k):
        if k == m:
            yield tuple(a)
            return
        for v in range(top[k - 1] + 2 if k else 1):
            a[k] = v
            if k + 1 < m:
                top[k] = max(top[k - 1] if k else 0, v)
            yield from rec(k + 1)

    yield from rec(0)


def blocks_of(labels) -> list[tuple]:
    out: dict = {}
    for c, b in enumerate(labels):
        out.setdefault(b, []).append(c)
    return [tuple(out[b]) for b in sorted(out)]


def bell(m: int) -> int:
    row = [1]
    for _ in range(m):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]
