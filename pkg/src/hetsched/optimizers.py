"""Schedule optimizers: MAP, MIS and an exhaustive enumeration oracle."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterator, Optional

import numpy as np

from .model import (
    Instance,
    InvalidInstance,
    MissingPriorities,
    ModelError,
    SchedulingMatrix,
    feasible_columns,
    priority_error,
    system_throughput,
    validate_schedule,
)

# Moves whose exact gain is within this (relative) band of zero are rejected,
# so round-off cannot produce cycling "improvements".
_GAIN_TOL = 1e-12

MoveHook = Callable[[SchedulingMatrix, SchedulingMatrix, str], None]


class EnumerationTooLarge(ModelError):
    def __init__(self, count: int, cap: int):
        super().__init__(f"{count} feasible schedules exceed the enumeration cap {cap}")
        self.count, self.cap = count, cap


class InvalidInitial(ModelError):
    pass


@dataclass(frozen=True)
class SolveResult:
    schedule: SchedulingMatrix
    objective: float
    iterations: int
    converged: bool


class _Placement:
    """Mutable placement with cached per-column sums for O(1) move evaluation."""

    def __init__(self, inst: Instance, counts):
        self.g = inst.shape.num_gp
        self.ell = inst.shape.num_types
        self.mu = inst.mu.tolist()
        self.n = [list(map(int, row)) for row in np.asarray(counts).tolist()]
        self.cnt = [0] * self.ell
        self.wt = [0.0] * self.ell
        for j in range(self.ell):
            if j < self.g:
                self.cnt[j] = sum(self.n[i][j] for i in range(self.ell))
                self.wt[j] = sum(self.mu[i][j] * self.n[i][j] for i in range(self.ell))
            else:
                self.cnt[j] = self.n[j][j]

    def snapshot(self) -> SchedulingMatrix:
        c = np.array(self.n, dtype=np.int64)
        c.setflags(write=False)
        return SchedulingMatrix(c)

    def col_x(self, j: int) -> float:
        if j < self.g:
            return self.wt[j] / self.cnt[j] if self.cnt[j] else 0.0
        return self.mu[j][j] if self.cnt[j] else 0.0

    def _col_x_shifted(self, j: int, tau: int, d: int) -> float:
        c = self.cnt[j] + d
        if j < self.g:
            return (self.wt[j] + d * self.mu[tau][j]) / c if c else 0.0
        return self.mu[j][j] if c else 0.0

    def system(self) -> float:
        return sum(self.col_x(j) for j in range(self.ell))

    def sens(self, tau: int, j: int) -> float:
        if j >= self.g:
            return self.mu[tau][tau] if self.cnt[tau] == 0 else 0.0
        c = self.cnt[j]
        if c == 0:
            return self.mu[tau][j]
        return (self.mu[tau][j] - self.wt[j] / c) / c

    def gain(self, tau: int, src: int, dst: int) -> float:
        before = self.col_x(src) + self.col_x(dst)
        after = self._col_x_shifted(src, tau, -1) + self._col_x_shifted(dst, tau, +1)
        return after - before

    def improves(self, tau: int, src: int, dst: int) -> bool:
        g = self.gain(tau, src, dst)
        return g > _GAIN_TOL * max(1.0, self.system())

    def move(self, tau: int, src: int, dst: int) -> None:
        self.n[tau][src] -= 1
        self.n[tau][dst] += 1
        self.cnt[src] -= 1
        self.cnt[dst] += 1
        if src < self.g:
            self.wt[src] -= self.mu[tau][src]
        if dst < self.g:
            self.wt[dst] += self.mu[tau][dst]
        # keep cached sums exact for columns that become empty
        if self.cnt[src] == 0:
            self.wt[src] = 0.0

    def type_throughput(self, i: int) -> float:
        x = 0.0
        for j in range(self.g):
            if self.n[i][j]:
                x += self.mu[i][j] * self.n[i][j] / self.cnt[j]
        if i >= self.g and self.n[i][i]:
            x += self.mu[i][i]
        return x

    def squared_term(self, i: int, rho: float) -> float:
        total = self.system()
        if total <= 0:
            return math.inf
        return (self.type_throughput(i) / total - rho) ** 2

    def total_error(self, rho) -> float:
        total = self.system()
        if total <= 0:
            return math.inf
        return sum((self.type_throughput(i) / total - rho[i]) ** 2 for i in range(self.ell))


def _argmax(values, keys):
    best_k, best_v = None, -math.inf
    for k in keys:
        if values[k] > best_v:
            best_k, best_v = k, values[k]
    return best_k


def _argmin(values, keys):
    best_k, best_v = None, math.inf
    for k in keys:
        if values[k] < best_v:
            best_k, best_v = k, values[k]
    return best_k


def _opt_sa(p: _Placement, hook: Optional[MoveHook]) -> None:
    g = p.g
    for tau in range(g, p.ell):
        d = [p.sens(tau, j) for j in range(g)]
        j_max = _argmax(d, range(g))
        if p.n[tau][tau] >= 1 and p.improves(tau, tau, j_max):
            before = p.snapshot() if hook else None
            p.move(tau, tau, j_max)
            if hook:
                hook(before, p.snapshot(), "sa")


def _opt_gp(p: _Placement, hook: Optional[MoveHook]) -> None:
    g = p.g
    for tau in range(p.ell):
        d = [p.sens(tau, j) for j in range(g)]
        j_max = _argmax(d, range(g))
        j_min = _argmin(d, [j for j in range(g) if p.n[tau][j] >= 1])
        if j_min is None or j_min == j_max:
            continue
        if p.improves(tau, j_min, j_max):
            before = p.snapshot() if hook else None
            p.move(tau, j_min, j_max)
            if hook:
                hook(before, p.snapshot(), "gp")


def opt_sa(inst: Instance, N: SchedulingMatrix) -> SchedulingMatrix:
    """One pass offloading accelerator-type tasks onto their best GP."""
    p = _Placement(inst, N.counts)
    _opt_sa(p, None)
    return p.snapshot()


def opt_gp(inst: Instance, N: SchedulingMatrix) -> SchedulingMatrix:
    """One pass moving each type's task from its least to its most sensitive GP."""
    p = _Placement(inst, N.counts)
    _opt_gp(p, None)
    return p.snapshot()


def default_iteration_cap(inst: Instance) -> int:
    return 10 * inst.num_tasks


def map_solve(
    inst: Instance,
    max_outer_iters: Optional[int] = None,
    on_move: Optional[MoveHook] = None,
) -> SolveResult:
    """Maximize-SA-then-GP starting from the diagonal placement.

    Each outer iteration is one accelerator pass followed by one GP pass;
    moves are ranked by sensitivity and accepted only on strict throughput gain.
    """
    if not isinstance(inst, Instance):
        raise InvalidInstance("map_solve needs an Instance")
    cap = default_iteration_cap(inst) if max_outer_iters is None else max_outer_iters
    if cap < 1:
        raise ValueError("max_outer_iters must be at least 1")
    p = _Placement(inst, inst.diagonal().counts)
    converged = False
    it = 0
    while it < cap:
        it += 1
        before = [row[:] for row in p.n]
        _opt_sa(p, on_move)
        _opt_gp(p, on_move)
        if p.n == before:
            converged = True
            break
    sched = p.snapshot()
    return SolveResult(sched, system_throughput(inst, sched).system, it, converged)


def mis_solve(
    inst: Instance,
    N_init: Optional[SchedulingMatrix] = None,
    max_outer_iters: Optional[int] = None,
    on_move: Optional[MoveHook] = None,
) -> SolveResult:
    """Minimize each type's squared priority error independently.

    Types are visited in ascending priority. For the active type a task is
    moved from its least sensitive occupied resource to the most sensitive
    other feasible resource while that type's own squared term keeps falling.
    The returned schedule is the lowest total-error placement visited, so the
    result never does worse than ``N_init``.
    """
    if inst.priorities is None:
        raise MissingPriorities("priority-aware scheduling needs priorities")
    if N_init is None:
        N_init = map_solve(inst).schedule
    try:
        N_init = validate_schedule(N_init.counts, inst)
    except ModelError as exc:
        raise InvalidInitial(str(exc)) from exc
    cap = default_iteration_cap(inst) if max_outer_iters is None else max_outer_iters
    if cap < 1:
        raise ValueError("max_outer_iters must be at least 1")

    rho = inst.priorities
    shape = inst.shape
    p = _Placement(inst, N_init.counts)
    order = sorted(range(shape.num_types), key=lambda i: (rho[i], i))
    cols = {i: feasible_columns(shape, i) for i in order}

    best_err = p.total_error(rho)
    best = p.snapshot()
    converged = False
    it = 0
    while it < cap:
        it += 1
        changed = False
        for tau in order:
            while True:
                d = {j: p.sens(tau, j) for j in cols[tau]}
                j_min = _argmin(d, [j for j in cols[tau] if p.n[tau][j] >= 1])
                if j_min is None:
                    break
                j_max = _argmax(d, [j for j in cols[tau] if j != j_min])
                if j_max is None:
                    break
                old = p.squared_term(tau, rho[tau])
                before = p.snapshot() if on_move else None
                p.move(tau, j_min, j_max)
                new = p.squared_term(tau, rho[tau])
                if not new < old - 1e-15:
                    p.move(tau, j_max, j_min)
                    break
                changed = True
                if on_move:
                    on_move(before, p.snapshot(), "mis")
                err = p.total_error(rho)
                if err < best_err:
                    best_err, best = err, p.snapshot()
        if not changed:
            converged = True
            break
    return SolveResult(best, priority_error(inst, best), it, converged)


# -- enumeration -------------------------------------------------------------


def compositions(n: int, k: int) -> Iterator[tuple[int, ...]]:
    """Weak compositions of ``n`` into ``k`` parts, first part descending."""
    if k == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in compositions(n - first, k - 1):
            yield (first,) + rest


def _row_options(inst: Instance, i: int) -> np.ndarray:
    ell = inst.shape.num_types
    cols = feasible_columns(inst.shape, i)
    comps = list(compositions(inst.populations[i], len(cols)))
    rows = np.zeros((len(comps), ell), dtype=np.int64)
    rows[:, list(cols)] = np.array(comps, dtype=np.int64)
    return rows


def feasible_count(inst: Instance) -> int:
    """Number of schedules satisfying the row-sum and structural constraints."""
    total = 1
    for i in range(inst.shape.num_types):
        k = len(feasible_columns(inst.shape, i))
        total *= math.comb(inst.populations[i] + k - 1, k - 1)
    return total


def enumerate_feasible(inst: Instance) -> Iterator[SchedulingMatrix]:
    options = [_row_options(inst, i) for i in range(inst.shape.num_types)]
    for rows in itertools.product(*options):
        c = np.stack(rows)
        c.setflags(write=False)
        yield SchedulingMatrix(c)


def _batch_objective(inst: Instance, N: np.ndarray, objective: str) -> np.ndarray:
    """Objective for a stack of schedules of shape (B, l, l)."""
    mu = inst.mu
    g = inst.shape.num_gp
    ell = inst.shape.num_types
    gp = N[:, :, :g].astype(float)
    colsum = gp.sum(axis=1)
    safe = np.where(colsum > 0, colsum, 1.0)
    cells = mu[None, :, :g] * gp / safe[:, None, :]
    per_type = cells.sum(axis=2)
    if ell > g:
        sa = np.arange(g, ell)
        per_type[:, sa] += mu[sa, sa][None, :] * (N[:, sa, sa] > 0)
    system = per_type.sum(axis=1)
    if objective == "throughput":
        return system
    rho = np.asarray(inst.priorities)
    with np.errstate(invalid="ignore", divide="ignore"):
        err = ((per_type / system[:, None] - rho[None, :]) ** 2).sum(axis=1)
    return np.where(system > 0, err, np.inf)


def exhaustive_opt(
    inst: Instance,
    objective: str = "throughput",
    cap: int = 10**7,
    batch: int = 1 << 15,
) -> SolveResult:
    """Global optimum by full enumeration; ties go to the first schedule enumerated."""
    if objective not in ("throughput", "priority"):
        raise ValueError(f"unknown objective {objective!r}")
    if objective == "priority" and inst.priorities is None:
        raise MissingPriorities("priority objective needs priorities")
    total = feasible_count(inst)
    if total > cap:
        raise EnumerationTooLarge(total, cap)

    options = [_row_options(inst, i) for i in range(inst.shape.num_types)]
    dims = tuple(len(o) for o in options)
    maximize = objective == "throughput"
    best_val = -math.inf if maximize else math.inf
    best_idx = 0
    for start in range(0, total, batch):
        flat = np.arange(start, min(start + batch, total))
        idx = np.unravel_index(flat, dims)
        N = np.stack([options[i][idx[i]] for i in range(len(options))], axis=1)
        vals = _batch_objective(inst, N, objective)
        k = int(np.argmax(vals) if maximize else np.argmin(vals))
        if (vals[k] > best_val) if maximize else (vals[k] < best_val):
            best_val, best_idx = float(vals[k]), int(flat[k])

    idx = np.unravel_index(best_idx, dims)
    c = np.stack([options[i][idx[i]] for i in range(len(options))])
    c.setflags(write=False)
    sched = SchedulingMatrix(c)
    value = (
        system_throughput(inst, sched).system if maximize else priority_error(inst, sched)
    )
    return SolveResult(sched, value, total, True)
