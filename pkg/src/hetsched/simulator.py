"""Discrete-event simulation of the closed batch network.

Q persistent threads each keep exactly one task in the system; thread ``q``
has a fixed task type, and when its task completes the next one (fresh size)
is dispatched at once. A task of size ``W`` on resource ``j`` needs ``W``
work units at rate ``mu[i, j]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import _backend
from ._kernel_py import BF, FCFS, JSQ, LB, PS, QUOTA, RD
from .model import (
    Instance,
    ModelError,
    SchedulingMatrix,
    SystemShape,
    TypeOutOfRange,
    feasible_columns,
    validate_schedule,
)
from .workload import SizeDistribution, thread_streams

POLICY_CODES = {"bf": BF, "rd": RD, "lb": LB, "jsq": JSQ, "quota": QUOTA}
DISCIPLINE_CODES = {"ps": PS, "fcfs": FCFS}


class InvalidConfig(ModelError):
    pass


class NoCompletions(ModelError):
    pass


class InfeasibleType(TypeOutOfRange):
    pass


@dataclass(frozen=True)
class DispatchPolicy:
    kind: str
    target: Optional[SchedulingMatrix] = None

    def __post_init__(self):
        if self.kind not in POLICY_CODES:
            raise InvalidConfig(f"unknown policy {self.kind!r}")
        if (self.kind == "quota") != (self.target is not None):
            raise InvalidConfig("a target matrix is required for quota, and only for quota")

    @classmethod
    def quota(cls, target: SchedulingMatrix) -> "DispatchPolicy":
        return cls("quota", target)

    @property
    def name(self) -> str:
        return self.kind


BASELINES = tuple(DispatchPolicy(k) for k in ("bf", "rd", "lb", "jsq"))


def dispatch(
    policy: DispatchPolicy,
    shape: SystemShape,
    task_type: int,
    task_counts: Sequence[int],
    remaining_work: Sequence[float],
    resident_counts=None,
    u: float = 0.0,
) -> int:
    """Resource chosen for a new task of ``task_type``.

    ``task_counts`` and ``remaining_work`` are per resource; ``resident_counts``
    is the live type-by-resource matrix (quota only); ``u`` is a uniform in
    [0, 1) used by the random policy.
    """
    try:
        cols = feasible_columns(shape, task_type)
    except TypeOutOfRange as exc:
        raise InfeasibleType(str(exc)) from exc
    kind = policy.kind
    if kind == "bf":
        return task_type
    if kind == "rd":
        return cols[min(int(u * len(cols)), len(cols) - 1)]
    if kind == "lb":
        return min(cols, key=lambda j: (remaining_work[j], j))
    if kind == "jsq":
        return min(cols, key=lambda j: (task_counts[j], j))
    target = policy.target.counts
    C = np.asarray(resident_counts)
    return min(cols, key=lambda j: (-(target[task_type, j] - C[task_type, j]), j))


@dataclass(frozen=True)
class SimConfig:
    instance: Instance
    distribution: SizeDistribution = field(default_factory=SizeDistribution.exponential)
    discipline: str = "ps"
    policy: DispatchPolicy = field(default_factory=lambda: DispatchPolicy("bf"))
    horizon: float = 1e4
    warmup_fraction: float = 0.1
    seed: int = 0

    def validate(self) -> None:
        if self.discipline not in DISCIPLINE_CODES:
            raise InvalidConfig(f"unknown discipline {self.discipline!r}")
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise InvalidConfig("horizon must be positive and finite")
        if not 0 <= self.warmup_fraction < 1:
            raise InvalidConfig("warmup fraction must lie in [0, 1)")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidConfig("seed must be a 64-bit unsigned integer")
        if self.policy.kind == "quota":
            try:
                validate_schedule(self.policy.target.counts, self.instance)
            except ModelError as exc:
                raise InvalidConfig(f"quota target: {exc}") from exc


@dataclass(frozen=True)
class Metrics:
    throughput_system: float
    throughput_per_type: tuple[float, ...]
    mean_response_time: float
    energy: float
    edp: float
    little_product: float
    completed_tasks: int
    completed_per_type: tuple[int, ...]
    window: float
    mean_occupancy: tuple[tuple[float, ...], ...] = field(repr=False)
    capacity: tuple[float, ...] = field(repr=False)
    work_done: tuple[float, ...] = field(repr=False)


def thread_types(inst: Instance) -> np.ndarray:
    """Task type of each thread; threads are numbered type by type."""
    return np.repeat(np.arange(inst.shape.num_types, dtype=np.int64),
                     np.asarray(inst.populations, dtype=np.int64))


def _chunk_size(inst: Instance, horizon: float) -> int:
    Q = inst.num_tasks
    est = horizon * float(np.trace(inst.mu)) / Q * 1.25 + 16
    return int(min(max(est, 16), 8192))


def run_simulation(config: SimConfig, backend: Optional[str] = None,
                   chunk: Optional[int] = None) -> Metrics:
    """Simulate one configuration; identical configs give bit-identical metrics."""
    config.validate()
    kernel = _backend.get_kernel(backend)
    inst = config.instance
    ell = inst.shape.num_types
    ttype = thread_types(inst)
    Q = len(ttype)
    mu = np.array(inst.mu, dtype=float, order="C")
    target = np.zeros((ell, ell), dtype=np.int64)
    if config.policy.target is not None:
        target[:] = config.policy.target.counts
    horizon = float(config.horizon)
    warmup = config.warmup_fraction * horizon
    dist = config.distribution

    K = chunk or _chunk_size(inst, horizon)
    streams = thread_streams(int(config.seed), Q)
    sizes = np.empty((Q, K))
    unif = np.empty((Q, K))
    for q, (srng, drng) in enumerate(streams):
        sizes[q] = dist.from_uniform(srng.random(K))
        unif[q] = drng.random(K)
    cursor = np.zeros(Q, dtype=np.int64)

    st = dict(
        clock=np.zeros(1),
        res=np.full(Q, -1, dtype=np.int64),
        tag=np.zeros(Q),
        vstart=np.zeros(Q),
        size=np.zeros(Q),
        disp_t=np.zeros(Q),
        nxt=np.full(Q, -1, dtype=np.int64),
        vtime=np.zeros(ell),
        nres=np.zeros(ell, dtype=np.int64),
        rate_sum=np.zeros(ell),
        head=np.full(ell, -1, dtype=np.int64),
        tail=np.full(ell, -1, dtype=np.int64),
        C=np.zeros((ell, ell), dtype=np.int64),
        occ=np.zeros((ell, ell)),
        occ_last=np.zeros((ell, ell)),
        done_type=np.zeros(ell, dtype=np.int64),
        acc=np.zeros(2),
        cap=np.zeros(ell),
        work=np.zeros(ell),
        flags=np.zeros(2, dtype=np.int64),
    )
    pcode = POLICY_CODES[config.policy.kind]
    dcode = DISCIPLINE_CODES[config.discipline]
    while True:
        status = kernel(mu, ttype, inst.shape.num_gp, pcode, target, dcode, horizon, warmup,
                        sizes, unif, cursor, *st.values())
        if status == 0:
            break
        for q, (srng, drng) in enumerate(streams):
            c = int(cursor[q])
            if c == 0:
                continue
            sizes[q, : K - c] = sizes[q, c:]
            unif[q, : K - c] = unif[q, c:]
            sizes[q, K - c :] = dist.from_uniform(srng.random(c))
            unif[q, K - c :] = drng.random(c)
            cursor[q] = 0

    return _collect(config, st, ttype, mu, horizon - warmup)


def _in_progress_work(st, ttype, mu, dcode) -> np.ndarray:
    """Work already delivered to tasks still resident at the horizon."""
    ell = mu.shape[0]
    out = np.zeros(ell)
    t = st["clock"][0]
    for k in range(len(ttype)):
        r = st["res"][k]
        m = mu[ttype[k], r]
        if m <= 0:
            continue
        if dcode == PS:
            rem = (st["tag"][k] - st["vtime"][r]) * m
        elif st["head"][r] == k:
            rem = (st["tag"][k] - t) * m
        else:
            continue
        out[r] += st["size"][k] - max(rem, 0.0)
    return out


def _collect(config: SimConfig, st, ttype, mu, window: float) -> Metrics:
    done = st["done_type"]
    completed = int(done.sum())
    if completed == 0:
        raise NoCompletions("no task completed inside the measurement window")
    x = completed / window
    mean_t = float(st["acc"][0]) / completed
    energy = float(st["acc"][1])
    dcode = DISCIPLINE_CODES[config.discipline]
    work = st["work"] + _in_progress_work(st, ttype, mu, dcode)
    return Metrics(
        throughput_system=x,
        throughput_per_type=tuple(float(d) / window for d in done),
        mean_response_time=mean_t,
        energy=energy,
        edp=energy * mean_t,
        little_product=x * mean_t,
        completed_tasks=completed,
        completed_per_type=tuple(int(d) for d in done),
        window=window,
        mean_occupancy=tuple(tuple(row) for row in (st["occ"] / window).tolist()),
        capacity=tuple(st["cap"].tolist()),
        work_done=tuple(work.tolist()),
    )


def compare_policies(config: SimConfig, policies: Sequence[DispatchPolicy],
                     backend: Optional[str] = None) -> list[tuple[DispatchPolicy, Metrics]]:
    """Run every policy on the same seed, so per-thread size streams coincide."""
    if not policies:
        raise InvalidConfig("at least one policy is required")
    return [(p, run_simulation(replace(config, policy=p), backend=backend)) for p in policies]
