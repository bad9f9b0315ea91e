"""Random instance generation and experiment campaigns with CSV reports."""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .model import Instance, ModelError, SystemShape, priority_error, system_throughput
from .optimizers import EnumerationTooLarge, exhaustive_opt, feasible_count, map_solve, mis_solve
from .simulator import DispatchPolicy, SimConfig, run_simulation
from .workload import KINDS, SizeDistribution

CSV_COLUMNS = (
    "eta", "seed", "policy", "distribution", "discipline", "X_sys", "E_T", "energy",
    "EDP", "little_product", "analytic_X", "gap_vs_opt", "mis_error", "map_error",
)
# quota-style policies and the schedule each one tracks
TARGET_POLICIES = {"quota": "map", "opt": "opt", "mis": "mis"}
POLICY_NAMES = ("bf", "rd", "lb", "jsq") + tuple(TARGET_POLICIES)
FAILED = "FAILED"


class BadRange(ModelError):
    pass


class QTooSmall(ModelError):
    pass


def default_population(shape: SystemShape) -> int:
    """Two threads per cell of the scheduling matrix."""
    return 2 * shape.num_types**2


def gen_instance(
    shape: SystemShape,
    rng: np.random.Generator,
    rate_range: tuple[float, float] = (1.0, 10.0),
    total_q: Optional[int] = None,
    populations: Optional[Sequence[int]] = None,
    priorities: bool = False,
) -> Instance:
    """Random column-dominant instance.

    Diagonal rates are uniform on ``rate_range``; each permitted off-diagonal
    rate is uniform on ``(0, mu_jj]``. Populations are a uniform random
    composition of ``total_q`` into positive parts unless given explicitly.
    """
    lo, hi = rate_range
    if not (lo > 0 and lo < hi):
        raise BadRange(f"rate range {rate_range} must satisfy 0 < low < high")
    ell = shape.num_types
    g = shape.num_gp
    diag = rng.uniform(lo, hi, size=ell)
    mu = np.diag(diag)
    for i in range(ell):
        for j in range(g):
            if i != j:
                mu[i, j] = diag[j] * (1.0 - rng.random())
    if populations is None:
        q = default_population(shape) if total_q is None else int(total_q)
        if q < ell:
            raise QTooSmall(f"Q={q} cannot give every one of {ell} types a task")
        cuts = np.sort(rng.choice(q - 1, size=ell - 1, replace=False) + 1)
        pops = np.diff(np.concatenate(([0], cuts, [q])))
    else:
        pops = np.asarray(populations, dtype=np.int64)
        if len(pops) != ell:
            raise QTooSmall("one population per task type is required")
    pri = None
    if priorities:
        w = rng.dirichlet(np.ones(ell))
        pri = (w / w.sum()).tolist()
    return Instance.build(g, shape.num_sa, mu, pops.tolist(), pri, warn=False)


def sample_seed(base_seed: int, eta: int) -> int:
    """Per-sample 63-bit seed derived from the experiment's base seed."""
    ss = np.random.SeedSequence([int(base_seed), int(eta)])
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


@dataclass
class ExperimentSpec:
    shape: SystemShape
    num_samples: int = 1
    seed: int = 0
    distributions: list[str] = field(default_factory=lambda: ["exp"])
    policies: list[str] = field(default_factory=lambda: ["bf", "rd", "lb", "jsq", "quota"])
    disciplines: list[str] = field(default_factory=lambda: ["ps"])
    horizon: float = 1000.0
    warmup: float = 0.1
    rate_range: tuple[float, float] = (1.0, 10.0)
    population: Union[None, int, list[int]] = None
    priorities: bool = False
    exhaustive_cap: int = 10**7

    def __post_init__(self):
        if self.num_samples < 1:
            raise ModelError("num_samples must be at least 1")
        lo, hi = self.rate_range
        if not (lo > 0 and lo < hi):
            raise BadRange(f"rate range {self.rate_range} must satisfy 0 < low < high")
        for d in self.distributions:
            if d not in KINDS:
                raise ModelError(f"unknown distribution {d!r}")
        for p in self.policies:
            if p not in POLICY_NAMES:
                raise ModelError(f"unknown policy {p!r}")
        if "mis" in self.policies and not self.priorities:
            raise ModelError("policy 'mis' needs priorities: true")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        d = dict(d)
        s = d.pop("shape")
        shape = SystemShape(int(s["num_gp"]), int(s["num_sa"]))
        if "rate_range" in d:
            d["rate_range"] = tuple(float(x) for x in d["rate_range"])
        if "exhaustive_cap" in d:
            d["exhaustive_cap"] = int(d["exhaustive_cap"])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ModelError(f"unknown experiment keys: {sorted(unknown)}")
        return cls(shape=shape, **d)

    @classmethod
    def load(cls, path) -> "ExperimentSpec":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class SampleResult:
    eta: int
    seed: int
    rows: list[dict]
    map_gap: Optional[float]
    map_error: Optional[float]
    mis_error: Optional[float]
    error: Optional[str] = None


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def run_sample(spec: ExperimentSpec, eta: int) -> SampleResult:
    seed = sample_seed(spec.seed, eta)
    try:
        return _run_sample(spec, eta, seed)
    except ModelError as exc:
        return SampleResult(eta, seed, [], None, None, None, error=str(exc))


def _run_sample(spec: ExperimentSpec, eta: int, seed: int) -> SampleResult:
    rng = np.random.default_rng(seed)
    pop = spec.population
    inst = gen_instance(
        spec.shape, rng, spec.rate_range,
        total_q=pop if isinstance(pop, int) else None,
        populations=pop if isinstance(pop, list) else None,
        priorities=spec.priorities,
    )
    targets = {"map": map_solve(inst).schedule}
    x_map = system_throughput(inst, targets["map"]).system
    gap = None
    if feasible_count(inst) <= spec.exhaustive_cap:
        opt = exhaustive_opt(inst, cap=spec.exhaustive_cap)
        targets["opt"] = opt.schedule
        gap = (opt.objective - x_map) / opt.objective
    map_err = mis_err = None
    if inst.priorities is not None:
        targets["mis"] = mis_solve(inst, targets["map"]).schedule
        map_err = priority_error(inst, targets["map"])
        mis_err = priority_error(inst, targets["mis"])

    rows = []
    for dist in spec.distributions:
        sd = SizeDistribution.named(dist)
        for disc in spec.disciplines:
            for name in spec.policies:
                analytic = None
                if name in TARGET_POLICIES:
                    key = TARGET_POLICIES[name]
                    if key not in targets:
                        raise EnumerationTooLarge(feasible_count(inst), spec.exhaustive_cap)
                    policy = DispatchPolicy.quota(targets[key])
                    analytic = system_throughput(inst, targets[key]).system
                else:
                    policy = DispatchPolicy(name)
                cfg = SimConfig(inst, sd, disc, policy, spec.horizon, spec.warmup, seed)
                m = run_simulation(cfg)
                rows.append({
                    "eta": eta, "seed": seed, "policy": name, "distribution": dist,
                    "discipline": disc, "X_sys": m.throughput_system,
                    "E_T": m.mean_response_time, "energy": m.energy, "EDP": m.edp,
                    "little_product": m.little_product, "analytic_X": analytic,
                    "gap_vs_opt": gap, "mis_error": mis_err, "map_error": map_err,
                })
    if not spec.policies:
        rows.append({"eta": eta, "seed": seed, "policy": "none", "gap_vs_opt": gap,
                     "mis_error": mis_err, "map_error": map_err})
    return SampleResult(eta, seed, rows, gap, map_err, mis_err)


@dataclass
class Summary:
    samples: int
    failed: int
    mean_gap: Optional[float]
    max_gap: Optional[float]
    mean_mis_improvement: Optional[float]

    def lines(self) -> list[str]:
        def pct(v):
            return "n/a" if v is None else f"{100 * v:.4f}%"
        return [
            f"samples={self.samples} failed={self.failed}",
            f"mean MAP-vs-Opt gap: {pct(self.mean_gap)} (max {pct(self.max_gap)})",
            f"mean MIS squared-error improvement over MAP: {pct(self.mean_mis_improvement)}",
        ]


def summarize(results: Sequence[SampleResult]) -> Summary:
    gaps = [r.map_gap for r in results if r.map_gap is not None]
    imps = [
        (r.map_error - r.mis_error) / r.map_error
        for r in results
        if r.map_error is not None and r.map_error > 0
    ]
    return Summary(
        samples=len(results),
        failed=sum(r.error is not None for r in results),
        mean_gap=float(np.mean(gaps)) if gaps else None,
        max_gap=float(np.max(gaps)) if gaps else None,
        mean_mis_improvement=float(np.mean(imps)) if imps else None,
    )


def write_csv(results: Sequence[SampleResult], out) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in results:
        for row in r.rows:
            w.writerow([_fmt(row.get(c)) for c in CSV_COLUMNS])
        if r.error is not None:
            w.writerow([_fmt(r.eta), _fmt(r.seed), FAILED, r.error] + [""] * (len(CSV_COLUMNS) - 4))
        out.flush()


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> list[SampleResult]:
    """All samples in order; output does not depend on the worker count."""
    etas = range(spec.num_samples)
    if jobs <= 1:
        return [run_sample(spec, eta) for eta in etas]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_sample, [spec] * spec.num_samples, etas))


def experiment_csv(spec: ExperimentSpec, jobs: int = 1) -> tuple[str, Summary]:
    results = run_experiment(spec, jobs)
    buf = io.StringIO()
    write_csv(results, buf)
    return buf.getvalue(), summarize(results)

