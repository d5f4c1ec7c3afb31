"""Sparse states and density operators on qudit registers of mixed dimension.

Basis strings are tuples with one symbol per position (position 1 first).
Internally a string ``x`` is packed into the integer ``sum(x[i] * stride[i])``
with ``stride[0] = 1``, so position 1 is the least significant digit.  With
that packing, splitting a position of dimension ``d1 * d2`` into two
adjacent positions ``(d1, d2)`` (symbol ``c = c1 + d1 * c2``) leaves every
index unchanged; the composite qudits of the marker construction rely on it.

A :class:`DensityOperator` stores its support (sorted packed indices) and
either a dense block over that support or a factor ``F`` with
``rho = F @ F^dagger``.  Reduced states of large sparse codewords are low
rank, and the factor form keeps them small.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

NORM_TOL = 1e-12
SPARSITY_FLOOR = 1e-15
PSD_SLACK = -1e-10
DENSE_LIMIT = 2048

Basis = tuple[int, ...]


@dataclass(frozen=True)
class SystemShape:
    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if not dims:
            raise ValueError("a system needs at least one position")
        if any(d < 1 for d in dims):
            raise ValueError(f"local dimensions must be positive, got {dims}")
        if math.prod(dims) >= 2**62:
            raise ValueError("total dimension too large for packed indices")

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def total(self) -> int:
        return math.prod(self.dims)

    @property
    def strides(self) -> np.ndarray:
        return np.concatenate(([1], np.cumprod(self.dims[:-1], dtype=np.int64))).astype(np.int64)

    def sub(self, positions: Sequence[int]) -> SystemShape:
        """Shape of the given 1-based positions, in the order given."""
        return SystemShape(tuple(self.dims[p - 1] for p in positions))

    def pack(self, strings: Iterable[Sequence[int]]) -> np.ndarray:
        arr = np.asarray(list(strings), dtype=np.int64).reshape(-1, self.n)
        if arr.size and ((arr < 0).any() or (arr >= np.asarray(self.dims)).any()):
            raise ValueError(f"basis symbol out of range for dims {self.dims}")
        return arr @ self.strides

    def unpack(self, index: np.ndarray) -> np.ndarray:
        index = np.asarray(index, dtype=np.int64)
        return (index[:, None] // self.strides[None, :]) % np.asarray(self.dims, dtype=np.int64)[None, :]


def _positions(shape: SystemShape, positions: Iterable[int]) -> list[int]:
    ps = sorted(set(int(p) for p in positions))
    if any(p < 1 or p > shape.n for p in ps):
        raise ValueError(f"positions {ps} out of range 1..{shape.n}")
    return ps


def _split_index(shape: SystemShape, index: np.ndarray, first: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Pack the digits of ``index`` on ``first`` and on the other positions."""
    rest = [p for p in range(1, shape.n + 1) if p not in set(first)]
    digits = shape.unpack(index)
    a = digits[:, [p - 1 for p in first]] @ shape.sub(first).strides if first else np.zeros(len(index), np.int64)
    b = digits[:, [p - 1 for p in rest]] @ shape.sub(rest).strides if rest else np.zeros(len(index), np.int64)
    return a, b


@dataclass(frozen=True, eq=False)
class SparsePureState:
    """A vector stored as sorted packed indices and complex amplitudes."""

    shape: SystemShape
    index: np.ndarray
    amps: np.ndarray
    normalized: bool = True

    def __post_init__(self) -> None:
        index = np.asarray(self.index, dtype=np.int64).ravel()
        amps = np.asarray(self.amps, dtype=np.complex128).ravel()
        if index.shape != amps.shape:
            raise ValueError("index and amplitude arrays differ in length")
        order = np.argsort(index, kind="stable")
        index, amps = index[order], amps[order]
        if len(index) > 1 and (np.diff(index) == 0).any():
            uniq, inv = np.unique(index, return_inverse=True)
            summed = np.zeros(len(uniq), np.complex128)
            np.add.at(summed, inv, amps)
            index, amps = uniq, summed
        keep = np.abs(amps) >= SPARSITY_FLOOR
        index, amps = index[keep], amps[keep]
        index.flags.writeable = False
        amps.flags.writeable = False
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "amps", amps)
        if self.normalized and abs(self.norm() - 1.0) > NORM_TOL:
            raise ValueError(f"state flagged normalized has norm {self.norm()!r}")

    @classmethod
    def from_dict(cls, dims: Sequence[int] | SystemShape, amplitudes: Mapping[Basis, complex], normalized: bool = True) -> SparsePureState:
        shape = dims if isinstance(dims, SystemShape) else SystemShape(tuple(dims))
        keys = list(amplitudes)
        return cls(shape, shape.pack(keys), np.array([amplitudes[k] for k in keys], np.complex128), normalized)

    @classmethod
    def basis_state(cls, dims: Sequence[int] | SystemShape, x: Basis) -> SparsePureState:
        return cls.from_dict(dims, {tuple(x): 1.0})

    @classmethod
    def from_vector(cls, vec: Sequence[complex], dims: Sequence[int] | None = None, normalized: bool = True) -> SparsePureState:
        vec = np.asarray(vec, np.complex128).ravel()
        shape = SystemShape(tuple(dims) if dims is not None else (len(vec),))
        if shape.total != len(vec):
            raise ValueError("vector length does not match dims")
        return cls(shape, np.arange(len(vec)), vec, normalized)

    @property
    def amplitudes(self) -> dict[Basis, complex]:
        strings = self.shape.unpack(self.index)
        return {tuple(int(v) for v in row): complex(a) for row, a in zip(strings, self.amps)}

    def __len__(self) -> int:
        return len(self.index)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2)))

    def normalize(self) -> SparsePureState:
        nrm = self.norm()
        if nrm == 0:
            raise ValueError("cannot normalize the zero vector")
        return SparsePureState(self.shape, self.index, self.amps / nrm, True)

    def scaled(self, c: complex) -> SparsePureState:
        return SparsePureState(self.shape, self.index, self.amps * c, False)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape.total, np.complex128)
        out[self.index] = self.amps
        return out

    def inner(self, other: SparsePureState) -> complex:
        """``<self|other>``."""
        _same_shape(self.shape, other.shape)
        common, i, j = np.intersect1d(self.index, other.index, assume_unique=True, return_indices=True)
        return complex(np.vdot(self.amps[i], other.amps[j]))

    def to_json(self) -> dict:
        strings = self.shape.unpack(self.index)
        return {
            "dims": list(self.shape.dims),
            "amps": [
                {"basis": ",".join(str(int(v)) for v in row), "re": float(a.real), "im": float(a.imag)}
                for row, a in zip(strings, self.amps)
            ],
        }

    @classmethod
    def from_json(cls, obj: Mapping, normalized: bool = True) -> SparsePureState:
        amps = {}
        for item in obj["amps"]:
            key = tuple(int(v) for v in str(item["basis"]).split(",")) if str(item["basis"]) else ()
            amps[key] = amps.get(key, 0) + complex(item["re"], item.get("im", 0.0))
        return cls.from_dict(obj["dims"], amps, normalized)


def _same_shape(a: SystemShape, b: SystemShape) -> None:
    if a != b:
        raise ValueError(f"shape mismatch: {a.dims} vs {b.dims}")


def superpose(coeffs: Sequence[complex], states: Sequence[SparsePureState], normalized: bool = True) -> SparsePureState:
    """``sum_k coeffs[k] * states[k]``."""
    if len(coeffs) != len(states) or not states:
        raise ValueError("need one coefficient per state")
    shape = states[0].shape
    for s in states:
        _same_shape(shape, s.shape)
    index = np.concatenate([s.index for s in states])
    amps = np.concatenate([c * s.amps for c, s in zip(coeffs, states)])
    return SparsePureState(shape, index, amps, normalized)


def tensor(a: SparsePureState, b: SparsePureState) -> SparsePureState:
    shape = SystemShape(a.shape.dims + b.shape.dims)
    index = (a.index[:, None] + a.shape.total * b.index[None, :]).ravel()
    amps = (a.amps[:, None] * b.amps[None, :]).ravel()
    return SparsePureState(shape, index, amps, a.normalized and b.normalized)


def permute_positions(s: SparsePureState, sigma: Sequence[int]) -> SparsePureState:
    """Move the symbol at position ``i`` to position ``sigma[i-1]`` (1-based)."""
    n = s.shape.n
    sigma = [int(v) for v in sigma]
    if sorted(sigma) != list(range(1, n + 1)):
        raise ValueError(f"{sigma} is not a permutation of 1..{n}")
    if any(s.shape.dims[i] != s.shape.dims[sigma[i] - 1] for i in range(n)):
        raise ValueError("permutation must map positions onto positions of equal dimension")
    digits = s.shape.unpack(s.index)
    out = np.empty_like(digits)
    out[:, [v - 1 for v in sigma]] = digits
    return SparsePureState(s.shape, out @ s.shape.strides, s.amps, s.normalized)


def split_positions(obj: SparsePureState | DensityOperator, dims: Sequence[int]) -> SparsePureState | DensityOperator:
    """Reinterpret each position as adjacent sub-positions (first factor least significant).

    ``dims`` is the new, finer list of local dimensions; consecutive runs of it
    must multiply to the old local dimensions.  Indices are unchanged.
    """
    new = SystemShape(tuple(dims))
    it = iter(new.dims)
    for d in obj.shape.dims:
        prod = 1
        while prod < d:
            prod *= next(it, d + 1)
        if prod != d:
            raise ValueError(f"dims {new.dims} do not refine {obj.shape.dims}")
    if next(it, None) is not None:
        raise ValueError(f"dims {new.dims} do not refine {obj.shape.dims}")
    return _with_shape(obj, new)


def merge_positions(obj: SparsePureState | DensityOperator, dims: Sequence[int]) -> SparsePureState | DensityOperator:
    """Inverse of :func:`split_positions`: ``dims`` is the coarser shape."""
    coarse = SystemShape(tuple(dims))
    split_positions(_with_shape(obj, coarse), obj.shape.dims)
    return _with_shape(obj, coarse)


def _with_shape(obj, shape: SystemShape):
    if shape.total != obj.shape.total:
        raise ValueError("total dimension must be preserved")
    if isinstance(obj, SparsePureState):
        return SparsePureState(shape, obj.index, obj.amps, obj.normalized)
    return DensityOperator(shape, obj.index, obj.block, obj.factor)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Operator on the span of ``index``; exactly one of ``block``/``factor`` is set."""

    shape: SystemShape
    index: np.ndarray
    block: np.ndarray | None = None
    factor: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        if (self.block is None) == (self.factor is None):
            raise ValueError("give exactly one of block or factor")
        index = np.asarray(self.index, np.int64).ravel()
        if len(index) > 1 and (np.diff(index) <= 0).any():
            raise ValueError("support index must be strictly increasing")
        m = self.block if self.block is not None else self.factor
        m = np.asarray(m, np.complex128)
        if m.ndim != 2 or m.shape[0] != len(index) or (self.block is not None and m.shape[1] != len(index)):
            raise ValueError("matrix does not match support")
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "block" if self.block is not None else "factor", m)

    @classmethod
    def from_entries(cls, dims: Sequence[int] | SystemShape, entries: Mapping[tuple[Basis, Basis], complex]) -> DensityOperator:
        shape = dims if isinstance(dims, SystemShape) else SystemShape(tuple(dims))
        keys = list(entries)
        rows = shape.pack([k[0] for k in keys])
        cols = shape.pack([k[1] for k in keys])
        support = np.unique(np.concatenate([rows, cols]))
        block = np.zeros((len(support), len(support)), np.complex128)
        np.add.at(block, (np.searchsorted(support, rows), np.searchsorted(support, cols)), [entries[k] for k in keys])
        return cls(shape, support, block=block)

    @classmethod
    def from_dense(cls, matrix: np.ndarray, dims: Sequence[int] | None = None) -> DensityOperator:
        matrix = np.asarray(matrix, np.complex128)
        shape = SystemShape(tuple(dims) if dims is not None else (matrix.shape[0],))
        if matrix.shape != (shape.total, shape.total):
            raise ValueError("matrix does not match dims")
        return cls(shape, np.arange(shape.total), block=matrix)

    @classmethod
    def pure(cls, s: SparsePureState) -> DensityOperator:
        return cls(s.shape, s.index, factor=s.amps[:, None].copy())

    @property
    def rank_bound(self) -> int:
        return len(self.index) if self.factor is None else self.factor.shape[1]

    def matrix(self) -> np.ndarray:
        """Dense block over the support."""
        if self.block is not None:
            return self.block
        if "block" not in self._cache:
            self._cache["block"] = self.factor @ self.factor.conj().T
        return self._cache["block"]

    def compact(self) -> DensityOperator:
        """Switch to block form when the factor is at least as wide as it is tall."""
        if self.factor is not None and self.factor.shape[1] >= len(self.index):
            return DensityOperator(self.shape, self.index, block=self.matrix())
        return self

    @property
    def entries(self) -> dict[tuple[Basis, Basis], complex]:
        m = self.matrix()
        strings = [tuple(int(v) for v in row) for row in self.shape.unpack(self.index)]
        rows, cols = np.nonzero(np.abs(m) >= SPARSITY_FLOOR)
        return {(strings[i], strings[j]): complex(m[i, j]) for i, j in zip(rows, cols)}

    def entry(self, a: Basis, b: Basis) -> complex:
        ka, kb = self.shape.pack([a, b])
        ia, ib = np.searchsorted(self.index, [ka, kb])
        if max(ia, ib) >= len(self.index) or self.index[ia] != ka or self.index[ib] != kb:
            return 0j
        if self.block is not None:
            return complex(self.block[ia, ib])
        return complex(np.vdot(self.factor[ib], self.factor[ia]))

    def trace(self) -> complex:
        if self.block is not None:
            return complex(np.trace(self.block))
        return complex(np.sum(np.abs(self.factor) ** 2))

    def to_dense(self, limit: int = 1 << 14) -> np.ndarray:
        if self.shape.total > limit:
            raise ValueError(f"refusing to densify a {self.shape.total}-dimensional operator")
        out = np.zeros((self.shape.total, self.shape.total), np.complex128)
        out[np.ix_(self.index, self.index)] = self.matrix()
        return out

    def scaled(self, c: float) -> DensityOperator:
        if self.block is not None:
            return DensityOperator(self.shape, self.index, block=self.block * c)
        return DensityOperator(self.shape, self.index, factor=self.factor * math.sqrt(c))

    def _align(self, s: SparsePureState) -> np.ndarray:
        _same_shape(self.shape, s.shape)
        vec = np.zeros(len(self.index), np.complex128)
        if len(self.index):
            pos = np.clip(np.searchsorted(self.index, s.index), 0, len(self.index) - 1)
            hit = self.index[pos] == s.index
            vec[pos[hit]] = s.amps[hit]
        return vec

    def expectation(self, s: SparsePureState) -> complex:
        """``<s|rho|s>``."""
        v = self._align(s)
        if self.block is not None:
            return complex(np.vdot(v, self.block @ v))
        w = self.factor.conj().T @ v
        return complex(np.vdot(w, w))

    def check(self) -> dict[str, float]:
        """Hermiticity, trace and (when small enough) eigenvalue diagnostics."""
        out = {"trace_deviation": abs(self.trace() - 1.0)}
        if self.factor is not None:
            out["hermiticity_deviation"] = 0.0
        else:
            out["hermiticity_deviation"] = float(np.abs(self.block - self.block.conj().T).max(initial=0.0))
        if len(self.index) <= DENSE_LIMIT:
            m = self.matrix()
            out["min_eigenvalue"] = float(np.linalg.eigvalsh((m + m.conj().T) / 2).min(initial=0.0))
        return out

    def is_state(self, tol: float = NORM_TOL) -> bool:
        d = self.check()
        return d["trace_deviation"] <= tol and d["hermiticity_deviation"] <= tol and d.get("min_eigenvalue", 0.0) >= PSD_SLACK


def _as_density(obj: SparsePureState | DensityOperator) -> DensityOperator:
    return DensityOperator.pure(obj) if isinstance(obj, SparsePureState) else obj


def partial_trace(obj: SparsePureState | DensityOperator, keep: Iterable[int]) -> DensityOperator:
    """Trace out every position not in ``keep``; kept positions stay in order."""
    rho = _as_density(obj)
    shape = rho.shape
    keep = _positions(shape, keep)
    if not keep:
        raise ValueError("keep set must be non-empty")
    if len(keep) == shape.n:
        return rho.compact()
    kshape = shape.sub(keep)
    kept, traced = _split_index(shape, rho.index, keep)
    support, rows = np.unique(kept, return_inverse=True)
    if rho.factor is not None:
        tvals, tcols = np.unique(traced, return_inverse=True)
        r = rho.factor.shape[1]
        factor = np.zeros((len(support), len(tvals) * r), np.complex128)
        cols = tcols[:, None] * r + np.arange(r)[None, :]
        factor[rows[:, None], cols] = rho.factor
        out = DensityOperator(kshape, support, factor=factor)
        return out.compact()
    block = np.zeros((len(support), len(support)), np.complex128)
    order = np.argsort(traced, kind="stable")
    bounds = np.flatnonzero(np.diff(traced[order])) + 1
    for group in np.split(order, bounds):
        block[np.ix_(rows[group], rows[group])] += rho.block[np.ix_(group, group)]
    return DensityOperator(kshape, support, block=block)


@dataclass(frozen=True)
class Outcome:
    outcome: Basis
    probability: float
    post_state: DensityOperator | None


def measure_computational(rho: DensityOperator, positions: Iterable[int], threshold: float = 1e-12) -> list[Outcome]:
    """Projective measurement of ``positions`` in the computational basis.

    Outcomes are listed in increasing string order.  Post-measurement states
    live on the unmeasured positions (``None`` when every position is measured).
    """
    shape = rho.shape
    meas = _positions(shape, positions)
    if not meas:
        raise ValueError("positions must be non-empty")
    rest = [p for p in range(1, shape.n + 1) if p not in meas]
    mcode, rcode = _split_index(shape, rho.index, meas)
    mshape = shape.sub(meas)
    if rho.block is not None:
        diag = np.real(np.diag(rho.block))
    else:
        diag = np.sum(np.abs(rho.factor) ** 2, axis=1)
    total = float(np.sum(diag))
    results = []
    for value in np.unique(mcode):
        sel = np.flatnonzero(mcode == value)
        p = float(np.sum(diag[sel])) / total
        if p <= threshold:
            continue
        outcome = tuple(int(v) for v in mshape.unpack(np.array([value]))[0])
        post = None
        if rest:
            order = sel[np.argsort(rcode[sel])]
            idx = rcode[order]
            if rho.block is not None:
                post = DensityOperator(shape.sub(rest), idx, block=rho.block[np.ix_(order, order)] / (p * total))
            else:
                post = DensityOperator(shape.sub(rest), idx, factor=rho.factor[order] / math.sqrt(p * total)).compact()
        results.append(Outcome(outcome, p, post))
    return results


def fidelity(pure: SparsePureState, rho: DensityOperator) -> float:
    """``<pure|rho|pure>``."""
    return float(rho.expectation(pure).real)


def operator_deviation(a: SparsePureState | DensityOperator, b: SparsePureState | DensityOperator, chunk: int = 256) -> float:
    """Largest entrywise modulus of ``a - b``, computed blockwise."""
    a, b = _as_density(a), _as_density(b)
    _same_shape(a.shape, b.shape)
    support = np.union1d(a.index, b.index)

    def lift(rho: DensityOperator) -> tuple[np.ndarray | None, np.ndarray | None]:
        pos = np.searchsorted(support, rho.index)
        if rho.factor is not None:
            f = np.zeros((len(support), rho.factor.shape[1]), np.complex128)
            f[pos] = rho.factor
            return f, None
        m = np.zeros((len(support), len(support)), np.complex128)
        m[np.ix_(pos, pos)] = rho.block
        return None, m

    fa, ma = lift(a)
    fb, mb = lift(b)
    worst = 0.0
    for start in range(0, len(support), chunk):
        sl = slice(start, start + chunk)
        da = fa[sl] @ fa.conj().T if fa is not None else ma[sl]
        db = fb[sl] @ fb.conj().T if fb is not None else mb[sl]
        worst = max(worst, float(np.abs(da - db).max(initial=0.0)))
    return worst
