"""System description and closed-form throughput quantities.

Resources and task types share one index space: ``0 .. g-1`` are the
general-purpose processors (GPs), ``g .. g+s-1`` the specialized
accelerators (SAs). All indices in this package are zero-based.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class ModelError(ValueError):
    """Base class for invalid system descriptions."""


class DimensionMismatch(ModelError):
    pass


class StructuralZeroViolated(ModelError):
    def __init__(self, i: int, j: int):
        super().__init__(f"entry ({i}, {j}) must be zero: resource {j} cannot run type {i}")
        self.i, self.j = i, j


class ColumnDominanceViolated(ModelError):
    def __init__(self, i: int, j: int):
        super().__init__(f"mu[{i}, {j}] exceeds mu[{j}, {j}]")
        self.i, self.j = i, j


class NonpositiveDiagonal(ModelError):
    def __init__(self, j: int):
        super().__init__(f"mu[{j}, {j}] must be positive")
        self.j = j


class RowSumMismatch(ModelError):
    def __init__(self, i: int, got: int, want: int):
        super().__init__(f"row {i} sums to {got}, population is {want}")
        self.i = i


class NegativeCount(ModelError):
    def __init__(self, i: int, j: int):
        super().__init__(f"count ({i}, {j}) is negative")
        self.i, self.j = i, j


class NonIntegerCount(ModelError):
    def __init__(self, i: int, j: int):
        super().__init__(f"count ({i}, {j}) is not an integer")
        self.i, self.j = i, j


class InfeasiblePlacement(ModelError):
    def __init__(self, i: int, j: int):
        super().__init__(f"type {i} cannot be placed on resource {j}")
        self.i, self.j = i, j


class TypeOutOfRange(ModelError):
    pass


class InvalidInstance(ModelError):
    pass


class MissingPriorities(ModelError):
    pass


class ZeroThroughput(ModelError):
    pass


class RowDominanceWarning(UserWarning):
    """Some task type runs faster on another resource than on its own."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SystemShape:
    num_gp: int
    num_sa: int = 0

    def __post_init__(self):
        if int(self.num_gp) != self.num_gp or self.num_gp < 1:
            raise InvalidInstance("need at least one general-purpose processor")
        if int(self.num_sa) != self.num_sa or self.num_sa < 0:
            raise InvalidInstance("number of accelerators must be nonnegative")

    @property
    def num_types(self) -> int:
        return self.num_gp + self.num_sa

    def is_gp(self, j: int) -> bool:
        return j < self.num_gp

    def allowed(self, i: int, j: int) -> bool:
        """True unless (i, j) is one of the structural zeros."""
        g = self.num_gp
        if j < g:
            return True
        return i == j


def feasible_columns(shape: SystemShape, i: int) -> tuple[int, ...]:
    """Resources that can execute type-``i`` tasks, in index order."""
    if not 0 <= i < shape.num_types:
        raise TypeOutOfRange(f"task type {i} outside 0..{shape.num_types - 1}")
    gps = tuple(range(shape.num_gp))
    return gps if i < shape.num_gp else gps + (i,)


def structure_mask(shape: SystemShape) -> np.ndarray:
    ell = shape.num_types
    mask = np.zeros((ell, ell), dtype=bool)
    mask[:, : shape.num_gp] = True
    idx = np.arange(shape.num_gp, ell)
    mask[idx, idx] = True
    return mask


@dataclass(frozen=True, eq=False)
class AffinityMatrix:
    """Processing rates; ``rates[i, j]`` is the speed of type ``i`` on resource ``j``."""

    rates: np.ndarray
    shape: SystemShape

    def __getitem__(self, ij):
        return self.rates[ij]

    def __eq__(self, other):
        if not isinstance(other, AffinityMatrix):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.rates, other.rates)

    def __hash__(self):
        return hash((self.shape, self.rates.tobytes()))

    @property
    def row_dominant(self) -> bool:
        diag = np.diag(self.rates)
        return bool(np.all(self.rates <= diag[:, None]))


def validate_affinity(rates, shape: SystemShape, warn: bool = True) -> AffinityMatrix:
    mu = np.array(rates, dtype=float)
    ell = shape.num_types
    if mu.shape != (ell, ell):
        raise DimensionMismatch(f"affinity matrix is {mu.shape}, expected {(ell, ell)}")
    if not np.all(np.isfinite(mu)) or np.any(mu < 0):
        raise ModelError("rates must be finite and nonnegative")
    mask = structure_mask(shape)
    for i, j in zip(*np.nonzero(~mask & (mu != 0))):
        raise StructuralZeroViolated(int(i), int(j))
    for j in range(ell):
        if mu[j, j] <= 0:
            raise NonpositiveDiagonal(j)
    for j in range(ell):
        for i in range(ell):
            if i != j and mu[i, j] > mu[j, j]:
                raise ColumnDominanceViolated(i, j)
    aff = AffinityMatrix(_readonly(mu), shape)
    if warn and not aff.row_dominant:
        warnings.warn(
            "affinity matrix is column-dominant but not row-dominant",
            RowDominanceWarning,
            stacklevel=2,
        )
    return aff


@dataclass(frozen=True, eq=False)
class SchedulingMatrix:
    """Integer task placement: ``counts[i, j]`` type-``i`` tasks resident on ``j``."""

    counts: np.ndarray

    def __getitem__(self, ij):
        return self.counts[ij]

    def __eq__(self, other):
        if not isinstance(other, SchedulingMatrix):
            return NotImplemented
        return np.array_equal(self.counts, other.counts)

    def __hash__(self):
        return hash((self.counts.shape, self.counts.tobytes()))

    def __repr__(self):
        return f"SchedulingMatrix({self.counts.tolist()})"

    def tolist(self) -> list[list[int]]:
        return self.counts.tolist()

    def moved(self, i: int, src: int, dst: int) -> "SchedulingMatrix":
        """Copy with one type-``i`` task moved from ``src`` to ``dst``."""
        c = self.counts.copy()
        c[i, src] -= 1
        c[i, dst] += 1
        return SchedulingMatrix(_readonly(c))


@dataclass(frozen=True, eq=False)
class Instance:
    shape: SystemShape
    affinity: AffinityMatrix
    populations: tuple[int, ...]
    priorities: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        ell = self.shape.num_types
        if len(self.populations) != ell:
            raise DimensionMismatch("need one population per task type")
        if any(int(p) != p or p < 0 for p in self.populations):
            raise InvalidInstance("populations must be nonnegative integers")
        if sum(self.populations) < 1:
            raise InvalidInstance("at least one task is required")
        if self.priorities is not None:
            if len(self.priorities) != ell:
                raise DimensionMismatch("need one priority per task type")
            if any(p < 0 for p in self.priorities):
                raise InvalidInstance("priorities must be nonnegative")
            if abs(sum(self.priorities) - 1.0) > 1e-9:
                raise InvalidInstance("priorities must sum to 1")

    @classmethod
    def build(
        cls,
        num_gp: int,
        num_sa: int,
        mu,
        populations: Sequence[int],
        priorities: Optional[Sequence[float]] = None,
        warn: bool = True,
    ) -> "Instance":
        shape = SystemShape(num_gp, num_sa)
        aff = validate_affinity(mu, shape, warn=warn)
        pri = None if priorities is None else tuple(float(p) for p in priorities)
        return cls(shape, aff, tuple(int(p) for p in populations), pri)

    @property
    def mu(self) -> np.ndarray:
        return self.affinity.rates

    @property
    def num_tasks(self) -> int:
        return sum(self.populations)

    def with_priorities(self, priorities: Optional[Sequence[float]]) -> "Instance":
        pri = None if priorities is None else tuple(float(p) for p in priorities)
        return Instance(self.shape, self.affinity, self.populations, pri)

    def diagonal(self) -> SchedulingMatrix:
        return SchedulingMatrix(_readonly(np.diag(np.array(self.populations, dtype=np.int64))))

    def _key(self):
        return (self.shape, self.affinity, self.populations, self.priorities)

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())


def validate_schedule(counts, inst: Instance) -> SchedulingMatrix:
    raw = np.asarray(counts)
    ell = inst.shape.num_types
    if raw.shape != (ell, ell):
        raise DimensionMismatch(f"schedule is {raw.shape}, expected {(ell, ell)}")
    for i in range(ell):
        for j in range(ell):
            v = raw[i, j]
            if v < 0:
                raise NegativeCount(i, j)
            if v != int(v):
                raise NonIntegerCount(i, j)
    n = raw.astype(np.int64)
    mask = structure_mask(inst.shape)
    for i, j in zip(*np.nonzero(~mask & (n != 0))):
        raise StructuralZeroViolated(int(i), int(j))
    for i, row in enumerate(n.sum(axis=1)):
        if row != inst.populations[i]:
            raise RowSumMismatch(i, int(row), inst.populations[i])
    return SchedulingMatrix(_readonly(n))


@dataclass(frozen=True, eq=False)
class ThroughputReport:
    system: float
    per_resource: np.ndarray
    per_type: np.ndarray
    per_cell: np.ndarray = field(repr=False)


def _throughput_arrays(mu: np.ndarray, n: np.ndarray, g: int):
    """Per-cell completion rates for a real-valued (possibly fractional) placement."""
    n = np.asarray(n, dtype=float)
    ell = mu.shape[0]
    cell = np.zeros((ell, ell))
    colsum = n[:, :g].sum(axis=0)
    busy = colsum > 0
    cell[:, :g][:, busy] = mu[:, :g][:, busy] * n[:, :g][:, busy] / colsum[busy]
    for i in range(g, ell):
        if n[i, i] > 0:
            cell[i, i] = mu[i, i]
    return cell


def system_throughput(inst: Instance, N: SchedulingMatrix) -> ThroughputReport:
    cell = _throughput_arrays(inst.mu, N.counts, inst.shape.num_gp)
    per_resource = cell.sum(axis=0)
    per_type = cell.sum(axis=1)
    return ThroughputReport(float(per_resource.sum()), per_resource, per_type, cell)


def column_throughput(mu: np.ndarray, n: np.ndarray, j: int, g: int) -> float:
    """Throughput of resource ``j`` under a real-valued placement ``n``."""
    if j < g:
        tot = float(np.sum(n[:, j]))
        return float(np.dot(mu[:, j], n[:, j]) / tot) if tot > 0 else 0.0
    return float(mu[j, j]) if n[j, j] > 0 else 0.0


def sensitivity(inst: Instance, N: SchedulingMatrix, tau: int, j: int) -> float:
    """Marginal gain of resource ``j``'s throughput from one more type-``tau`` task."""
    shape = inst.shape
    if j not in feasible_columns(shape, tau):
        raise InfeasiblePlacement(tau, j)
    mu = inst.mu
    if j >= shape.num_gp:
        return float(mu[tau, tau]) if N.counts[tau, tau] == 0 else 0.0
    col = N.counts[:, j]
    tot = int(col.sum())
    if tot == 0:
        return float(mu[tau, j])
    x = float(np.dot(mu[:, j], col)) / tot
    return (float(mu[tau, j]) - x) / tot


@dataclass(frozen=True)
class PriorityError:
    total: float
    terms: tuple[float, ...]
    ratios: tuple[float, ...]


def priority_terms(inst: Instance, N: SchedulingMatrix) -> PriorityError:
    if inst.priorities is None:
        raise MissingPriorities("instance carries no priorities")
    rep = system_throughput(inst, N)
    if rep.system <= 0:
        raise ZeroThroughput("schedule completes no work")
    ratios = rep.per_type / rep.system
    terms = (ratios - np.asarray(inst.priorities)) ** 2
    return PriorityError(float(terms.sum()), tuple(terms.tolist()), tuple(ratios.tolist()))


def priority_error(inst: Instance, N: SchedulingMatrix) -> float:
    """Sum over types of the squared gap between throughput share and priority."""
    return priority_terms(inst, N).total
