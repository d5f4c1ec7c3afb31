"""Ramp marker words and recovery of deleted positions.

The marker for ``(n, t)`` is ``0, 1, ..., t, 0, 1, ...`` of length ``n``.  It
splits into blocks of ``t + 1`` strictly increasing symbols, plus a shorter
final block when ``t + 1`` does not divide ``n``.  With at most ``t``
deletions every full block keeps at least one symbol.  Adjacent survivors
also never merge into one increasing run, because that would need more than
``t`` deletions.  So the maximal strictly increasing runs of the received
word line up with the blocks one by one.  Only the short final block can
disappear entirely.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass


class TooManyDeletions(ValueError):
    pass


class InconsistentMarker(RuntimeError):
    pass


@dataclass(frozen=True)
class MarkerWord:
    n: int
    t: int

    def __post_init__(self) -> None:
        if self.n < 1 or self.t < 1:
            raise ValueError(f"marker needs n >= 1 and t >= 1, got n={self.n}, t={self.t}")

    @property
    def symbols(self) -> tuple[int, ...]:
        return tuple(i % (self.t + 1) for i in range(self.n))


def marker_sequence(n: int, t: int) -> MarkerWord:
    return MarkerWord(n, t)


def delete_components(x: Sequence[int], s: Iterable[int]) -> tuple[int, ...]:
    """Drop the 1-based positions ``s`` from ``x``."""
    s = set(s)
    if any(p < 1 or p > len(x) for p in s):
        raise ValueError(f"positions {sorted(s)} out of range 1..{len(x)}")
    return tuple(v for i, v in enumerate(x, start=1) if i not in s)


def _runs(y: Sequence[int]) -> list[list[int]]:
    runs: list[list[int]] = []
    for v in y:
        if runs and runs[-1][-1] < v:
            runs[-1].append(v)
        else:
            runs.append([v])
    return runs


def recover_positions(y: Sequence[int], n: int, t: int) -> tuple[int, ...]:
    """Deleted positions (sorted, 1-based) that turn the ``(n, t)`` marker into ``y``."""
    marker = marker_sequence(n, t).symbols
    y = tuple(int(v) for v in y)
    if len(y) > n or any(v < 0 or v > t for v in y):
        raise InconsistentMarker(f"{y} is not a subsequence of the ({n}, {t}) marker")
    if n - len(y) > t:
        raise TooManyDeletions(f"{n - len(y)} symbols missing, budget is {t}")
    width = t + 1
    blocks = [list(range(start, min(start + width, n))) for start in range(0, n, width)]
    runs = _runs(y)
    if len(runs) == len(blocks) - 1 and len(blocks[-1]) < width:
        runs.append([])
    if len(runs) != len(blocks):
        raise TooManyDeletions(f"{y} has {len(runs)} blocks where the marker has {len(blocks)}")

    deleted: list[int] = []
    for block, run in zip(blocks, runs):
        present = set(run)
        if not present <= {marker[i] for i in block}:
            raise InconsistentMarker(f"run {run} does not fit marker block at position {block[0] + 1}")
        deleted.extend(i + 1 for i in block if marker[i] not in present)
    if len(deleted) > t:
        raise TooManyDeletions(f"{y} needs {len(deleted)} deletions, budget is {t}")
    if delete_components(marker, deleted) != y:
        raise InconsistentMarker(f"recovered positions {deleted} do not reproduce {y}")
    return tuple(deleted)


@dataclass
class LemmaReport:
    n: int
    t: int
    ok: bool
    cases: int
    counterexample: dict | None = None
    truncated: bool = False

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "t": self.t,
            "ok": self.ok,
            "cases": self.cases,
            "counterexample": self.counterexample,
            "truncated": self.truncated,
        }


def verify_lemma_exhaustive(n: int, t: int, max_cases: int = 10**7) -> LemmaReport:
    """Round-trip and injectivity over every deletion set of size at most ``t``."""
    total = sum(math.comb(n, k) for k in range(min(t, n) + 1))
    if total > max_cases:
        return LemmaReport(n, t, False, 0, truncated=True)
    marker = marker_sequence(n, t).symbols
    seen: dict[tuple[int, ...], tuple[int, ...]] = {}
    cases = 0
    for k in range(min(t, n) + 1):
        for s in itertools.combinations(range(1, n + 1), k):
            cases += 1
            y = delete_components(marker, s)
            if y in seen:
                return LemmaReport(n, t, False, cases, {"kind": "collision", "sets": [list(seen[y]), list(s)], "y": list(y)})
            seen[y] = s
            try:
                got = recover_positions(y, n, t)
            except (TooManyDeletions, InconsistentMarker) as exc:
                return LemmaReport(n, t, False, cases, {"kind": "error", "set": list(s), "y": list(y), "error": str(exc)})
            if got != s:
                return LemmaReport(n, t, False, cases, {"kind": "mismatch", "set": list(s), "recovered": list(got), "y": list(y)})
    return LemmaReport(n, t, True, cases)
