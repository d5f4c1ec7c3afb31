"""Types and type classes over Z_ell, deletion descendants and suitable sets.

A type of length ``n`` is stored as its integer occurrence counts, so
``(5, 1, 1)`` stands for the distribution ``(5/7, 1/7, 1/7)``.  Every listing
produced here is deterministic: count vectors are ordered reverse
lexicographically, i.e. ``(n, 0, ..., 0)`` first.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field

DEFAULT_MAX_CLASSES = 40
DEFAULT_MAX_SUBSETS = 10**6


@dataclass(frozen=True, order=True)
class TypeCounts:
    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if not counts:
            raise ValueError("a type needs at least one symbol")
        if any(c < 0 for c in counts):
            raise ValueError(f"negative count in {counts}")
        if sum(counts) < 1:
            raise ValueError("a type must describe a sequence of length >= 1")

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def ell(self) -> int:
        return len(self.counts)

    def __iter__(self) -> Iterator[int]:
        return iter(self.counts)

    def __getitem__(self, a: int) -> int:
        return self.counts[a]

    def permuted(self, perm: Sequence[int]) -> TypeCounts:
        """Relabel symbols: symbol ``a`` becomes ``perm[a]``."""
        out = [0] * self.ell
        for a, c in enumerate(self.counts):
            out[perm[a]] = c
        return TypeCounts(tuple(out))

    def __repr__(self) -> str:
        return f"TypeCounts{self.counts}"


@dataclass(frozen=True, order=True)
class TypeClass:
    """Orbit of a type under symbol relabelling, keyed by its sorted counts."""

    canonical: TypeCounts

    def __post_init__(self) -> None:
        c = self.canonical
        if not isinstance(c, TypeCounts):
            c = TypeCounts(tuple(c))
        object.__setattr__(self, "canonical", TypeCounts(tuple(sorted(c.counts, reverse=True))))

    @classmethod
    def of(cls, p: TypeCounts | Sequence[int]) -> TypeClass:
        return cls(p if isinstance(p, TypeCounts) else TypeCounts(tuple(p)))

    @property
    def n(self) -> int:
        return self.canonical.n

    @property
    def ell(self) -> int:
        return self.canonical.ell

    def __repr__(self) -> str:
        return f"TypeClass{list(self.canonical.counts)}"


@dataclass(frozen=True)
class TypeSet:
    classes: tuple[TypeClass, ...]
    t: int = 1

    def __post_init__(self) -> None:
        classes = tuple(c if isinstance(c, TypeClass) else TypeClass.of(c) for c in self.classes)
        object.__setattr__(self, "classes", classes)
        if not classes:
            raise ValueError("a type set needs at least one class")
        if len(set(classes)) != len(classes):
            raise ValueError("type set classes must be pairwise distinct")
        if len({(c.n, c.ell) for c in classes}) != 1:
            raise ValueError("all classes in a type set must share n and ell")
        if self.t < 0:
            raise ValueError("deletion budget t must be non-negative")

    @property
    def n(self) -> int:
        return self.classes[0].n

    @property
    def ell(self) -> int:
        return self.classes[0].ell

    @property
    def M(self) -> int:
        return len(self.classes)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "ell": self.ell,
            "t": self.t,
            "classes": [list(c.canonical.counts) for c in self.classes],
        }

    @classmethod
    def from_json(cls, obj: dict) -> TypeSet:
        classes = tuple(TypeClass.of(c) for c in obj["classes"])
        ts = cls(classes, int(obj.get("t", 1)))
        if "n" in obj and int(obj["n"]) != ts.n:
            raise ValueError(f"declared n={obj['n']} disagrees with class counts (n={ts.n})")
        if "ell" in obj and int(obj["ell"]) != ts.ell:
            raise ValueError(f"declared ell={obj['ell']} disagrees with class counts (ell={ts.ell})")
        return ts


def _check_n_ell(n: int, ell: int) -> None:
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    if int(ell) != ell or ell < 1:
        raise ValueError(f"ell must be a positive integer, got {ell!r}")


def _compositions(n: int, parts: int) -> Iterator[tuple[int, ...]]:
    # reverse lexicographic: largest first coordinate first
    if parts == 1:
        yield (n,)
        return
    for head in range(n, -1, -1):
        for tail in _compositions(n - head, parts - 1):
            yield (head,) + tail


def _partitions(n: int, parts: int, largest: int) -> Iterator[tuple[int, ...]]:
    if n == 0:
        yield (0,) * parts
        return
    if parts == 0:
        return
    for head in range(min(n, largest), 0, -1):
        for tail in _partitions(n - head, parts - 1, head):
            yield (head,) + tail


def enumerate_types(n: int, ell: int) -> list[TypeCounts]:
    """All types of length ``n`` over ``ell`` symbols, reverse lexicographic."""
    _check_n_ell(n, ell)
    return [TypeCounts(c) for c in _compositions(n, ell)]


def enumerate_classes(n: int, ell: int) -> list[TypeClass]:
    """One class per partition of ``n`` into at most ``ell`` parts."""
    _check_n_ell(n, ell)
    return [TypeClass(TypeCounts(p)) for p in _partitions(n, ell, n)]


def _distinct_permutations(items: Sequence[int]) -> Iterator[tuple[int, ...]]:
    # reverse lexicographic over a multiset
    pool = sorted(items, reverse=True)
    size = len(pool)

    def rec(prefix: list[int], remaining: dict[int, int]) -> Iterator[tuple[int, ...]]:
        if len(prefix) == size:
            yield tuple(prefix)
            return
        for v in sorted(remaining, reverse=True):
            if remaining[v]:
                remaining[v] -= 1
                prefix.append(v)
                yield from rec(prefix, remaining)
                prefix.pop()
                remaining[v] += 1

    counts: dict[int, int] = {}
    for v in pool:
        counts[v] = counts.get(v, 0) + 1
    yield from rec([], counts)


def class_members(c: TypeClass) -> list[TypeCounts]:
    return [TypeCounts(p) for p in _distinct_permutations(c.canonical.counts)]


def sequence_count(p: TypeCounts) -> int:
    """Number of sequences of type ``p`` (a multinomial coefficient)."""
    total = math.factorial(p.n)
    for c in p.counts:
        total //= math.factorial(c)
    return total


def class_sequence_count(c: TypeClass) -> int:
    return sequence_count(c.canonical) * len(class_members(c))


def type_of(x: Sequence[int], ell: int) -> TypeCounts:
    counts = [0] * ell
    for s in x:
        counts[s] += 1
    return TypeCounts(tuple(counts))


def sequences_of_type(p: TypeCounts) -> list[tuple[int, ...]]:
    """The set T(p), reverse lexicographic."""
    symbols = [a for a, c in enumerate(p.counts) for _ in range(c)]
    return list(_distinct_permutations(symbols))


def class_sequences(c: TypeClass) -> list[tuple[int, ...]]:
    """The set T([P]): every sequence whose type lies in the class."""
    out: list[tuple[int, ...]] = []
    for q in class_members(c):
        out.extend(sequences_of_type(q))
    out.sort(reverse=True)
    return out


def descendants(p: TypeCounts, t: int) -> frozenset[TypeCounts]:
    """Types of length ``n - t`` reachable from ``p`` by removing ``t`` occurrences."""
    if int(t) != t or not 0 <= t <= p.n - 1:
        raise ValueError(f"t must satisfy 0 <= t <= n-1 = {p.n - 1}, got {t!r}")
    out: list[TypeCounts] = []

    def rec(i: int, left: int, acc: list[int]) -> None:
        if i == p.ell:
            if left == 0:
                out.append(TypeCounts(tuple(acc)))
            return
        for r in range(min(left, p.counts[i]) + 1):
            acc.append(p.counts[i] - r)
            rec(i + 1, left - r, acc)
            acc.pop()

    rec(0, t, [])
    return frozenset(out)


@dataclass(frozen=True)
class SuitabilityResult:
    suitable: bool
    witness: tuple[TypeCounts, TypeCounts, TypeCounts] | None = None

    def __bool__(self) -> bool:
        return self.suitable


def is_witness(q1: TypeCounts, q2: TypeCounts, r: TypeCounts, t: int) -> bool:
    return q1 != q2 and r in descendants(q1, t) and r in descendants(q2, t)


def is_suitable(s: TypeSet, cross_class_only: bool = False) -> SuitabilityResult:
    """Decide whether ``s`` is suitable for ``s.t``-deletion correction.

    Distinct members of the same class count as a conflicting pair, so a
    class can be unsuitable on its own.  ``cross_class_only=True`` drops those
    same-class pairs; that weaker reading does not guarantee a correctable
    code and exists for comparison only.
    """
    if s.n < s.t + 1:
        raise ValueError(f"need n >= t+1, got n={s.n}, t={s.t}")
    owner: dict[TypeCounts, tuple[int, TypeCounts]] = {}
    for i, c in enumerate(s.classes):
        for q in class_members(c):
            for r in sorted(descendants(q, s.t), reverse=True):
                j, prev = owner.setdefault(r, (i, q))
                if prev != q and not (cross_class_only and i == j):
                    return SuitabilityResult(False, (prev, q, r))
    return SuitabilityResult(True)


@dataclass
class SearchResult:
    sets: list[TypeSet]
    truncated: bool = False
    examined: int = 0
    reason: str = ""
    candidates: list[TypeClass] = field(default_factory=list)

    @property
    def max_M(self) -> int:
        return max((s.M for s in self.sets), default=0)


def _descendant_sets(classes: Iterable[TypeClass], t: int) -> dict[TypeClass, frozenset[TypeCounts]]:
    out = {}
    for c in classes:
        acc: set[TypeCounts] = set()
        for q in class_members(c):
            acc |= descendants(q, t)
        out[c] = frozenset(acc)
    return out


def search_suitable(
    n: int,
    ell: int,
    t: int,
    strategy: str = "exhaustive",
    max_M: int | None = None,
    max_classes: int = DEFAULT_MAX_CLASSES,
    max_subsets: int = DEFAULT_MAX_SUBSETS,
) -> SearchResult:
    """Search for suitable type sets.

    ``exhaustive`` lists every maximal suitable set (maximal cliques of the
    pairwise-compatibility graph on self-suitable classes); with ``max_M``
    set, growth stops at that size.  ``greedy`` returns a single set built by
    scanning classes by decreasing sequence count, ties broken by ascending
    canonical counts.  Hitting a resource cap yields ``truncated=True`` and
    the sets found so far, never a silently partial answer.
    """
    _check_n_ell(n, ell)
    if n < t + 1:
        raise ValueError(f"need n >= t+1, got n={n}, t={t}")
    if strategy not in ("exhaustive", "greedy"):
        raise ValueError(f"unknown strategy {strategy!r}")

    classes = enumerate_classes(n, ell)
    if len(classes) > max_classes:
        return SearchResult([], truncated=True, reason=f"{len(classes)} classes exceed cap {max_classes}")

    good = [c for c in classes if is_suitable(TypeSet((c,), t))]
    # a set is suitable iff each class is and each pair of classes is, since
    # conflicts are between two member types
    desc = _descendant_sets(good, t)
    adj = {c: {d for d in good if d != c and not (desc[c] & desc[d])} for c in good}
    order = {c: i for i, c in enumerate(good)}

    if strategy == "greedy":
        ranked = sorted(good, key=lambda c: (-class_sequence_count(c), c.canonical.counts))
        chosen: list[TypeClass] = []
        for c in ranked:
            if max_M is not None and len(chosen) >= max_M:
                break
            if all(d in adj[c] for d in chosen):
                chosen.append(c)
        sets = [TypeSet(tuple(sorted(chosen, key=order.get)), t)] if chosen else []
        return SearchResult(sets, examined=len(ranked), candidates=good)

    found: list[tuple[TypeClass, ...]] = []
    examined = 0
    truncated = False

    def bron_kerbosch(r: list[TypeClass], p: set[TypeClass], x: set[TypeClass]) -> None:
        nonlocal examined, truncated
        if truncated:
            return
        examined += 1
        if examined > max_subsets:
            truncated = True
            return
        if (not p and not x) or (max_M is not None and len(r) >= max_M):
            if r:
                found.append(tuple(sorted(r, key=order.get)))
            return
        pivot = max(p | x, key=lambda u: (len(adj[u] & p), -order[u]))
        for v in sorted(p - adj[pivot], key=order.get):
            bron_kerbosch(r + [v], p & adj[v], x & adj[v])
            p = p - {v}
            x = x | {v}

    bron_kerbosch([], set(good), set())
    unique = sorted(set(found), key=lambda cs: (-len(cs), [order[c] for c in cs]))
    return SearchResult(
        [TypeSet(cs, t) for cs in unique],
        truncated=truncated,
        examined=examined,
        reason=f"examined more than {max_subsets} search nodes" if truncated else "",
        candidates=good,
    )

