"""Marker composition: t-erasure codes over H_ell into t-deletion codes over H_{(t+1)ell}.

Each transmitted qudit has dimension ``(t+1) * ell`` and carries the symbol
``inner + ell * marker``.  Splitting it into the sub-positions ``(ell, t+1)``
exposes the inner qudit first and then the marker qudit, and packed indices
do not change (see :mod:`qdelcodes.hilbert`).
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .hilbert import (
    DensityOperator,
    SparsePureState,
    SystemShape,
    fidelity,
    measure_computational,
    partial_trace,
    split_positions,
)
from .marker import InconsistentMarker, MarkerWord, TooManyDeletions, recover_positions
from .picode import (
    BasisCode,
    DecodeFailure,
    NotCorrectableError,
    PiCode,
    apply_recovery,
    build_recovery,
    check_erasure_condition,
    correct_deletion,
    encode_basis,
    logical_state,
)
from .typeclasses import TypeSet


class ChannelCorruption(RuntimeError):
    """Marker outcome that no deletion pattern within budget explains."""


class ModelViolation(RuntimeError):
    """Marker subsystem is not in a computational basis state."""


@dataclass(frozen=True, eq=False)
class InnerCode:
    basis: tuple[SparsePureState, ...]
    t: int
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "basis", tuple(self.basis))
        dims = set(self.basis[0].shape.dims)
        if len(dims) != 1:
            raise ValueError("inner code needs a uniform local dimension")
        if self.t < 1 or self.t >= self.n:
            raise ValueError(f"erasure budget must satisfy 1 <= t < n, got t={self.t}")
        for k in range(1, self.t + 1):
            for erased in itertools.combinations(range(1, self.n + 1), k):
                rep = check_erasure_condition(self.basis, erased)
                if not rep.passed:
                    raise NotCorrectableError(
                        f"inner code does not correct erasure of {erased}",
                        max(rep.max_cross_deviation, rep.max_equalness_deviation),
                    )

    @property
    def n(self) -> int:
        return self.basis[0].shape.n

    @property
    def ell(self) -> int:
        return self.basis[0].shape.dims[0]

    @property
    def M(self) -> int:
        return len(self.basis)


@dataclass(frozen=True, eq=False)
class ComposedCode:
    inner: InnerCode
    marker: MarkerWord = field(default=None)  # type: ignore[assignment]
    _recoveries: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if self.marker is None:
            object.__setattr__(self, "marker", MarkerWord(self.inner.n, self.inner.t))
        if (self.marker.n, self.marker.t) != (self.inner.n, self.inner.t):
            raise ValueError("marker length/budget must match the inner code")

    @property
    def n(self) -> int:
        return self.inner.n

    @property
    def t(self) -> int:
        return self.inner.t

    @property
    def ell(self) -> int:
        return self.inner.ell

    @property
    def M(self) -> int:
        return self.inner.M

    @property
    def local_dim(self) -> int:
        return (self.t + 1) * self.ell

    @property
    def shape(self) -> SystemShape:
        return SystemShape((self.local_dim,) * self.n)

    def recovery(self, erased: tuple[int, ...]):
        if erased not in self._recoveries:
            self._recoveries[erased] = build_recovery(self.inner.basis, erased)
        return self._recoveries[erased]

    def encode(self, alpha: Sequence[complex]) -> SparsePureState:
        return compose_encode(self, alpha)


def compose_encode(code: ComposedCode, alpha: Sequence[complex]) -> SparsePureState:
    psi = encode_basis(code.inner.basis, alpha)
    inner_shape = psi.shape
    if inner_shape.n != code.marker.n:
        raise ValueError("inner code and marker lengths differ")
    digits = inner_shape.unpack(psi.index)
    composite = digits + code.ell * np.asarray(code.marker.symbols, np.int64)[None, :]
    return SparsePureState(code.shape, composite @ code.shape.strides, psi.amps)


def delete_qudits(s: SparsePureState, positions: Iterable[int], t: int | None = None) -> DensityOperator:
    """Trace out ``positions``; the survivors keep their relative order only."""
    positions = sorted(set(positions))
    if t is not None and len(positions) > t:
        raise ValueError(f"{len(positions)} deletions exceed budget {t}")
    if len(positions) >= s.shape.n:
        raise ValueError("cannot delete every qudit")
    keep = [p for p in range(1, s.shape.n + 1) if p not in positions]
    return partial_trace(s, keep)


def locate_and_strip(rho: DensityOperator, n: int, t: int, tol: float = 1e-12) -> tuple[tuple[int, ...], DensityOperator]:
    """Measure the marker qudits, find the deleted positions, return the inner state."""
    m = rho.shape.n
    d = rho.shape.dims[0]
    if any(x != d for x in rho.shape.dims) or d % (t + 1):
        raise ValueError(f"received dims {rho.shape.dims} are not composite ((t+1)*ell) qudits")
    ell = d // (t + 1)
    fine = split_positions(rho, [ell, t + 1] * m)
    outcomes = measure_computational(fine, [2 * i for i in range(1, m + 1)], threshold=tol)
    if len(outcomes) != 1 or abs(outcomes[0].probability - 1.0) > tol:
        probs = [o.probability for o in outcomes]
        raise ModelViolation(f"marker measurement is not deterministic: {probs}")
    y = outcomes[0].outcome
    try:
        deleted = recover_positions(y, n, t)
    except (TooManyDeletions, InconsistentMarker) as exc:
        raise ChannelCorruption(f"marker outcome {y} is inconsistent with <= {t} deletions: {exc}") from exc
    return deleted, outcomes[0].post_state


def full_decode(code: ComposedCode, rho: DensityOperator) -> DensityOperator:
    deleted, inner_rho = locate_and_strip(rho, code.n, code.t)
    return apply_recovery(code.recovery(tuple(deleted)), inner_rho)


# catalog ---------------------------------------------------------------------

NAKAHARA = TypeSet(((3, 0, 0), (1, 1, 1)), 1)
EXAMPLE_N7 = TypeSet(((7, 0, 0), (5, 1, 1), (3, 2, 2)), 1)
EXAMPLE_N8 = TypeSet(((8, 0, 0, 0), (6, 1, 1, 0), (4, 4, 0, 0), (4, 2, 1, 1)), 1)

_PAULI = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]]),
    "Z": np.array([[1, 0], [0, -1]]),
}
FIVE_QUBIT_STABILIZERS = ("XZZXI", "IXZZX", "XIXZZ", "ZXIXZ")


def _pauli_string(word: str) -> np.ndarray:
    # position 1 is the least significant bit, so it goes last in the kron
    out = np.eye(1)
    for ch in reversed(word):
        out = np.kron(out, _PAULI[ch])
    return out


def five_qubit_basis() -> tuple[SparsePureState, SparsePureState]:
    """Logical |0>, |1> of the five-qubit code from the stabilizer projector.

    Orthonormalised, then the phase is fixed so that the first
    largest-magnitude amplitude is positive real.
    """
    proj = np.eye(32)
    for g in FIVE_QUBIT_STABILIZERS:
        proj = proj @ (np.eye(32) + _pauli_string(g)) / 2
    seeds = [np.eye(32)[0], np.eye(32)[31]]
    vecs: list[np.ndarray] = []
    for s in seeds:
        v = proj @ s.astype(np.complex128)
        for u in vecs:
            v = v - np.vdot(u, v) * u
        v = v / np.linalg.norm(v)
        mags = np.abs(v)
        top = int(np.flatnonzero(mags >= mags.max() - 1e-12)[0])
        v = v * (abs(v[top]) / v[top])
        vecs.append(v)
    return tuple(SparsePureState.from_vector(np.where(np.abs(v) < 1e-15, 0, v), [2] * 5) for v in vecs)


def _nakahara_inner() -> InnerCode:
    return InnerCode(PiCode.from_type_set(NAKAHARA).basis, 1, "nakahara")


def _five_qubit_inner() -> InnerCode:
    return InnerCode(five_qubit_basis(), 2, "five_qubit")


_FACTORIES = {
    "nakahara": lambda: PiCode.from_type_set(NAKAHARA),
    "example_n7": lambda: PiCode.from_type_set(EXAMPLE_N7),
    "example_n8": lambda: PiCode.from_type_set(EXAMPLE_N8),
    "five_qubit": lambda: BasisCode(five_qubit_basis()),
    "nakahara_inner": _nakahara_inner,
    "five_qubit_inner": _five_qubit_inner,
    "composed_nakahara": lambda: ComposedCode(_nakahara_inner()),
    "composed_five_qubit": lambda: ComposedCode(_five_qubit_inner()),
}
CATALOG_NAMES = tuple(_FACTORIES)


def catalog_entry(name: str):
    if name not in _FACTORIES:
        raise KeyError(f"unknown catalog code {name!r}; known: {', '.join(CATALOG_NAMES)}")
    return _FACTORIES[name]()


def catalog() -> dict[str, object]:
    return {name: make() for name, make in _FACTORIES.items()}


# simulation ------------------------------------------------------------------


def haar_state(rng: np.random.Generator, M: int) -> np.ndarray:
    v = rng.normal(size=M) + 1j * rng.normal(size=M)
    return v / np.linalg.norm(v)


def deletion_patterns(n: int, t: int, include_empty: bool = True) -> list[tuple[int, ...]]:
    start = 0 if include_empty else 1
    return [s for k in range(start, t + 1) for s in itertools.combinations(range(1, n + 1), k)]


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    deleted_positions: tuple[int, ...]
    fidelity: float
    located: tuple[int, ...] | None = None
    error: str = ""


@dataclass
class SimulationReport:
    trials: int
    seed: int
    min_fidelity: float
    mean_fidelity: float
    failures: int
    records: list[TrialRecord]

    def to_json(self) -> dict:
        return {
            "trials": self.trials,
            "seed": self.seed,
            "min_fidelity": self.min_fidelity,
            "mean_fidelity": self.mean_fidelity,
            "failures": self.failures,
        }


def decode_trial(code, alpha: np.ndarray, deleted: tuple[int, ...]) -> tuple[float, tuple[int, ...] | None]:
    """Encode ``alpha``, delete ``deleted``, decode; return fidelity and located positions."""
    target = logical_state(alpha)
    if isinstance(code, ComposedCode):
        rho = delete_qudits(code.encode(alpha), deleted, code.t)
        located, inner_rho = locate_and_strip(rho, code.n, code.t)
        logical = apply_recovery(code.recovery(tuple(located)), inner_rho)
        return fidelity(target, logical), located
    if isinstance(code, PiCode):
        rho = delete_qudits(code.encode(alpha), deleted, 1)
        return fidelity(target, correct_deletion(code, rho)), None
    raise TypeError(f"cannot simulate deletions on {type(code).__name__}")


def end_to_end_simulate(code, trials: int, seed: int = 0, tol: float = 1e-9, threads: int = 1) -> SimulationReport:
    """Seeded Monte Carlo over Haar-random logical states and random deletions.

    Composed codes draw a uniformly random deletion set of size ``0..t``;
    permutation-invariant codes delete exactly one position.  Each trial owns
    a child seed, so the thread count does not change the draws.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if isinstance(code, ComposedCode):
        patterns = deletion_patterns(code.n, code.t, include_empty=True)
    else:
        patterns = deletion_patterns(code.n, 1, include_empty=False)
    children = np.random.SeedSequence(seed).spawn(trials)

    def run(i: int) -> TrialRecord:
        rng = np.random.default_rng(children[i])
        alpha = haar_state(rng, code.M)
        deleted = patterns[int(rng.integers(len(patterns)))]
        try:
            f, located = decode_trial(code, alpha, deleted)
        except (DecodeFailure, NotCorrectableError, ChannelCorruption, ModelViolation) as exc:
            return TrialRecord(i, deleted, 0.0, None, f"{type(exc).__name__}: {exc}")
        return TrialRecord(i, deleted, f, located)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            records = list(pool.map(run, range(trials)))
    else:
        records = [run(i) for i in range(trials)]
    fids = np.array([r.fidelity for r in records])
    failures = sum(1 for r in records if r.error or r.fidelity < 1 - tol or (r.located is not None and r.located != r.deleted_positions))
    return SimulationReport(trials, seed, float(fids.min()), float(fids.mean()), failures, records)

