"""Permutation-invariant codes from type sets, erasure checks and recovery.

Decoding follows one recipe for every explicit codeword basis.  Each basis
state is split over the erased positions as ``phi_k = sum_a |a> (x) |u_{k,a}>``.
The erasure condition asks for ``<u_{k1,a1}|u_{k2,a2}> = delta_{k1,k2} G[a1,a2]``.
Given that, the eigenvectors of ``G`` turn the ``u`` vectors into an
orthonormal family ``w_{k,b}``.  A received state is then read out as
``rho_L[k1,k2] = sum_b <w_{k1,b}|rho|w_{k2,b}>``.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .hilbert import (
    DensityOperator,
    SparsePureState,
    SystemShape,
    _positions,
    _split_index,
    permute_positions,
    superpose,
)
from .typeclasses import TypeSet, class_sequences

CHECK_TOL = 1e-9
ORTHO_TOL = 1e-10


class NotCorrectableError(ValueError):
    def __init__(self, message: str, deviation: float):
        super().__init__(message)
        self.deviation = deviation


class DecodeFailure(RuntimeError):
    def __init__(self, message: str, leakage: float):
        super().__init__(message)
        self.leakage = leakage


def logical_state(alpha: Sequence[complex]) -> SparsePureState:
    return SparsePureState.from_vector(alpha)


def _check_alpha(alpha: Sequence[complex], M: int) -> np.ndarray:
    alpha = np.asarray(alpha, np.complex128).ravel()
    if len(alpha) != M:
        raise ValueError(f"expected {M} logical amplitudes, got {len(alpha)}")
    if abs(np.linalg.norm(alpha) - 1.0) > 1e-12:
        raise ValueError(f"logical amplitudes must have unit norm, got {np.linalg.norm(alpha)!r}")
    return alpha


def encode_basis(basis: Sequence[SparsePureState], alpha: Sequence[complex]) -> SparsePureState:
    alpha = _check_alpha(alpha, len(basis))
    return superpose(alpha, basis).normalize()


@dataclass(frozen=True, eq=False)
class BasisCode:
    """A code given by an explicit orthonormal basis of codewords."""

    basis: tuple[SparsePureState, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "basis", tuple(self.basis))
        _check_orthonormal(self.basis)

    @property
    def shape(self) -> SystemShape:
        return self.basis[0].shape

    @property
    def n(self) -> int:
        return self.shape.n

    @property
    def M(self) -> int:
        return len(self.basis)

    def encode(self, alpha: Sequence[complex]) -> SparsePureState:
        return encode_basis(self.basis, alpha)

    def to_json(self) -> dict:
        return {"kind": "basis_code", "dims": list(self.shape.dims), "vectors": [v.to_json() for v in self.basis]}

    @classmethod
    def from_json(cls, obj: dict) -> BasisCode:
        vecs = tuple(SparsePureState.from_json(v) for v in obj["vectors"])
        if any(list(v.shape.dims) != list(obj["dims"]) for v in vecs):
            raise ValueError("vector dims disagree with code dims")
        return cls(vecs)


@dataclass(frozen=True, eq=False)
class PiCode:
    type_set: TypeSet
    logical_basis: tuple[SparsePureState, ...]

    @classmethod
    def from_type_set(cls, ts: TypeSet) -> PiCode:
        """Uniform superposition over ``T([P_k])`` for each class."""
        dims = (ts.ell,) * ts.n
        basis = []
        for c in ts.classes:
            seqs = class_sequences(c)
            amp = 1.0 / math.sqrt(len(seqs))
            basis.append(SparsePureState.from_dict(dims, {x: amp for x in seqs}))
        return cls(ts, tuple(basis))

    @property
    def n(self) -> int:
        return self.type_set.n

    @property
    def ell(self) -> int:
        return self.type_set.ell

    @property
    def M(self) -> int:
        return self.type_set.M

    @property
    def basis(self) -> tuple[SparsePureState, ...]:
        return self.logical_basis

    def encode(self, alpha: Sequence[complex]) -> SparsePureState:
        return encode_basis(self.logical_basis, alpha)

    @cached_property
    def deletion_recovery(self) -> RecoveryMap:
        return build_recovery(self.logical_basis, [1])

    def to_json(self) -> dict:
        return {"kind": "pi_code", **self.type_set.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> PiCode:
        return cls.from_type_set(TypeSet.from_json(obj))


def encode(code: PiCode | BasisCode, alpha: Sequence[complex]) -> SparsePureState:
    return code.encode(alpha)


def _check_orthonormal(basis: Sequence[SparsePureState], tol: float = ORTHO_TOL) -> None:
    if not basis:
        raise ValueError("empty basis")
    shape = basis[0].shape
    for v in basis:
        if v.shape != shape:
            raise ValueError("basis states live on different systems")
    gram = np.array([[u.inner(v) for v in basis] for u in basis])
    dev = float(np.abs(gram - np.eye(len(basis))).max())
    if dev > tol:
        raise ValueError(f"basis is not orthonormal (deviation {dev:.3e})")


def check_permutation_invariance(code: PiCode | BasisCode) -> tuple[bool, float]:
    """Apply every adjacent transposition to every basis state."""
    worst = 0.0
    n = code.basis[0].shape.n
    for v in code.basis:
        for i in range(1, n):
            sigma = list(range(1, n + 1))
            sigma[i - 1], sigma[i] = sigma[i], sigma[i - 1]
            try:
                w = permute_positions(v, sigma)
            except ValueError:
                return False, math.inf
            if not np.array_equal(w.index, v.index):
                worst = max(worst, 2.0)
                continue
            worst = max(worst, float(np.abs(w.amps - v.amps).max(initial=0.0)))
    return worst == 0.0, worst


def _decompose(basis: Sequence[SparsePureState], erased: Sequence[int]):
    """Return kept shape, kept support and ``U[row, k, a]`` with ``phi_k = sum_a |a>|u_{k,a}>``."""
    shape = basis[0].shape
    kept_pos = [p for p in range(1, shape.n + 1) if p not in set(erased)]
    eshape_total = math.prod(shape.dims[p - 1] for p in erased)
    parts = [_split_index(shape, v.index, erased) for v in basis]
    support = np.unique(np.concatenate([kept for _, kept in parts]))
    U = np.zeros((len(support), len(basis), eshape_total), np.complex128)
    for k, ((a, kept), v) in enumerate(zip(parts, basis)):
        U[np.searchsorted(support, kept), k, a] = v.amps
    return shape.sub(kept_pos) if kept_pos else None, support, U


@dataclass(frozen=True)
class ErasureCheckReport:
    erased_set: tuple[int, ...]
    passed: bool
    max_cross_deviation: float
    max_equalness_deviation: float
    reduced_state_deviation_from_maximally_mixed: float

    def to_json(self) -> dict:
        return {
            "erased_set": list(self.erased_set),
            "pass": self.passed,
            "max_cross_deviation": self.max_cross_deviation,
            "max_equalness_deviation": self.max_equalness_deviation,
            "reduced_state_deviation_from_maximally_mixed": self.reduced_state_deviation_from_maximally_mixed,
        }


def reduced_operators(basis: Sequence[SparsePureState], erased: Iterable[int]) -> np.ndarray:
    """``R[k1, k2] = Tr_kept |phi_k1><phi_k2|`` as matrices on the erased subsystem."""
    shape = basis[0].shape
    erased = _positions(shape, erased)
    _, _, U = _decompose(basis, erased)
    # R[k1,k2][a1,a2] = <u_{k2,a2}|u_{k1,a1}>
    return np.einsum("rka,rlb->klab", U, U.conj())


def check_erasure_condition(basis: Sequence[SparsePureState], erased: Iterable[int], tol: float = CHECK_TOL) -> ErasureCheckReport:
    shape = basis[0].shape
    erased = _positions(shape, erased)
    if not erased or len(erased) >= shape.n:
        raise ValueError(f"erased set must be non-empty and proper, got {erased}")
    _check_orthonormal(basis)
    R = reduced_operators(basis, erased)
    M = len(basis)
    cross = max((float(np.abs(R[i, j]).max()) for i in range(M) for j in range(M) if i != j), default=0.0)
    equal = max((float(np.abs(R[k, k] - R[0, 0]).max()) for k in range(M)), default=0.0)
    dim = R.shape[-1]
    mixed = float(np.abs(R[0, 0] - np.eye(dim) / dim).max())
    return ErasureCheckReport(tuple(erased), cross <= tol and equal <= tol, cross, equal, mixed)


@dataclass(frozen=True, eq=False)
class RecoveryMap:
    """Orthonormal vectors ``w_{k,b}`` over the kept positions.

    ``vectors[row, k, b]`` holds the amplitude of ``w_{k,b}`` on basis string
    ``kept_index[row]``; ``junk_weights`` are the eigenvalues of the shared
    Gram matrix, in decreasing order.
    """

    erased_set: tuple[int, ...]
    kept_shape: SystemShape | None
    kept_index: np.ndarray
    vectors: np.ndarray
    junk_weights: np.ndarray

    @property
    def M(self) -> int:
        return self.vectors.shape[1]

    @property
    def junk_dim(self) -> int:
        return self.vectors.shape[2]

    def recovery_vector(self, k: int, b: int) -> SparsePureState:
        return SparsePureState(self.kept_shape, self.kept_index, self.vectors[:, k, b])

    def orthonormality_deviation(self) -> float:
        W = self.vectors.reshape(len(self.kept_index), -1)
        return float(np.abs(W.conj().T @ W - np.eye(W.shape[1])).max(initial=0.0))


def _fix_sign(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    if len(nz):
        v = v * (abs(v[nz[0]]) / v[nz[0]])
    return v


def build_recovery(basis: Sequence[SparsePureState], erased: Iterable[int], tol: float = ORTHO_TOL) -> RecoveryMap:
    """Recovery isometry for an erasure of the given positions (may be empty)."""
    shape = basis[0].shape
    erased = _positions(shape, erased)
    if len(erased) >= shape.n:
        raise ValueError("cannot recover after erasing every position")
    _check_orthonormal(basis)
    kshape, support, U = _decompose(basis, erased)
    M = len(basis)
    gram = np.einsum("rka,rlb->kalb", U.conj(), U)  # <u_{k,a}|u_{l,b}>
    G = gram[0, :, 0, :]
    dev = 0.0
    for k in range(M):
        for l in range(M):
            target = G if k == l else 0.0
            dev = max(dev, float(np.abs(gram[k, :, l, :] - target).max()))
    if dev > tol:
        raise NotCorrectableError(f"erasure of {erased} is not correctable (Gram deviation {dev:.3e})", dev)

    lam, vecs = np.linalg.eigh((G + G.conj().T) / 2)
    order = np.argsort(-lam, kind="stable")
    lam, vecs = lam[order], vecs[:, order]
    keep = lam > tol
    lam, vecs = lam[keep], vecs[:, keep]
    vecs = np.stack([_fix_sign(vecs[:, b]) for b in range(vecs.shape[1])], axis=1)
    W = np.einsum("rka,ab->rkb", U, vecs) / np.sqrt(lam)[None, None, :]
    rmap = RecoveryMap(tuple(erased), kshape, support, W, lam)
    ortho = rmap.orthonormality_deviation()
    if ortho > tol:
        raise NotCorrectableError(f"recovery vectors not orthonormal (deviation {ortho:.3e})", ortho)
    return rmap


def apply_recovery(r: RecoveryMap, rho: DensityOperator, leak_tol: float = CHECK_TOL) -> DensityOperator:
    """Logical density matrix ``sum_b <w_{k1,b}|rho|w_{k2,b}>``, normalised by ``Tr rho``."""
    if r.kept_shape is None or rho.shape != r.kept_shape:
        raise ValueError(f"received state shape {rho.shape.dims} does not match recovery shape")
    total = rho.trace().real
    pos = np.clip(np.searchsorted(r.kept_index, rho.index), 0, max(len(r.kept_index) - 1, 0))
    hit = (r.kept_index[pos] == rho.index) if len(r.kept_index) else np.zeros(len(rho.index), bool)
    W = np.zeros((len(rho.index), r.M * r.junk_dim), np.complex128)
    W[hit] = r.vectors[pos[hit]].reshape(int(hit.sum()), r.M * r.junk_dim)
    if rho.factor is not None:
        X = W.conj().T @ rho.factor
        S = X @ X.conj().T
    else:
        S = W.conj().T @ rho.block @ W
    S = S.reshape(r.M, r.junk_dim, r.M, r.junk_dim)
    logical = np.einsum("kblb->kl", S) / total
    leakage = float(1.0 - np.trace(logical).real)
    if leakage > leak_tol:
        raise DecodeFailure(f"received state leaks {leakage:.3e} outside the recovery subspace", leakage)
    return DensityOperator(SystemShape((r.M,)), np.arange(r.M), block=logical)


def correct_deletion(code: PiCode, rho: DensityOperator) -> DensityOperator:
    """Decode one deletion of unknown position by treating it as an erasure of position 1."""
    if rho.shape.n != code.n - 1:
        raise ValueError(f"expected a state on {code.n - 1} positions, got {rho.shape.n}")
    return apply_recovery(code.deletion_recovery, rho)


@dataclass(frozen=True)
class CodeMetrics:
    n: int
    ell: int
    M: int
    rate: float

    def to_json(self) -> dict:
        return {"n": self.n, "ell": self.ell, "M": self.M, "rate": self.rate}


def code_metrics(code) -> CodeMetrics:
    """Information rate ``log_ell(M) / n``; composite codes report their full local dimension."""
    from .composed import ComposedCode

    if isinstance(code, ComposedCode):
        n, ell, M = code.n, code.local_dim, code.M
    elif isinstance(code, PiCode):
        n, ell, M = code.n, code.ell, code.M
    else:
        dims = set(code.shape.dims)
        if len(dims) != 1:
            raise ValueError("rate needs a uniform local dimension")
        n, ell, M = code.n, dims.pop(), code.M
    return CodeMetrics(n, ell, M, math.log(M) / math.log(ell) / n)

