"""End-to-end acceptance checks, one test per criterion.

Each test prints a ``[PASS]`` or ``[FAIL]`` line; the lines are repeated in
the terminal summary under "acceptance criteria".
"""

import math

import numpy as np
import pytest

from hetsched import (
    SimConfig,
    exhaustive_opt,
    map_solve,
    mis_solve,
    priority_error,
    run_simulation,
    sensitivity,
    system_throughput,
)
from hetsched.harness import ExperimentSpec, experiment_csv, gen_instance
from hetsched.model import Instance, SystemShape
from hetsched.optimizers import enumerate_feasible, feasible_count
from hetsched.simulator import BASELINES, DispatchPolicy
from hetsched.workload import KINDS, SizeDistribution

from oracles import continuous_column
from strategies import random_schedule

pytestmark = pytest.mark.acceptance

INST_A = Instance.build(2, 1, [[4, 2, 0], [1, 3, 0], [2, 1, 5]], [6, 6, 6])


def _instances(shape, n, seed, **kw):
    rng = np.random.default_rng(seed)
    return [gen_instance(shape, rng, **kw) for _ in range(n)]


def _gaps(shape, n, seed):
    out = []
    for inst in _instances(shape, n, seed):
        x_opt = exhaustive_opt(inst).objective
        out.append((x_opt - map_solve(inst).objective) / x_opt)
    return np.array(out)


def _quota(inst):
    return DispatchPolicy.quota(map_solve(inst).schedule)


def test_map_gap_two_gp_one_sa(report):
    gaps = _gaps(SystemShape(2, 1), 100, 101)
    ok = gaps.mean() <= 0.01 and gaps.max() <= 0.05
    report("1 MAP gap g=2 s=1", ok,
           f"n=100 mean={100 * gaps.mean():.4f}% max={100 * gaps.max():.4f}% (<=1%, <=5%)")


def test_map_gap_two_gp_two_sa(report):
    gaps = _gaps(SystemShape(2, 2), 50, 202)
    report("2 MAP gap g=2 s=2", gaps.mean() <= 0.015,
           f"n=50 mean={100 * gaps.mean():.4f}% (<=1.5%)")


def test_sensitivity_finite_differences(report):
    rng = np.random.default_rng(303)
    eps = 1e-6
    worst = 0.0
    done = 0
    while done < 1000:
        g = int(rng.integers(1, 4))
        s = int(rng.integers(0, 3))
        inst = gen_instance(SystemShape(g, s), rng, total_q=int(rng.integers(g + s, 40)))
        N = random_schedule(inst, rng)
        tau = int(rng.integers(g + s))
        j = int(rng.integers(g))
        n = N.counts[:, j].sum()
        if n == 0:
            continue
        mu = inst.mu.tolist()
        up = N.counts.astype(float)
        dn = N.counts.astype(float)
        up[tau, j] += eps
        dn[tau, j] -= eps
        fd = (continuous_column(mu, up.tolist(), j) - continuous_column(mu, dn.tolist(), j)) / (2 * eps)
        d = sensitivity(inst, N, tau, j)
        x = continuous_column(mu, N.counts.tolist(), j)
        scale = max(abs(d), (mu[tau][j] + x) / n)
        worst = max(worst, abs(fd - d) / scale)
        done += 1
    report("3 sensitivity vs finite differences", worst <= 1e-6,
           f"n=1000 worst relative error={worst:.3e} (<=1e-6)")


def test_simulated_throughput_below_optimum(report):
    worst = 0.0
    for k, inst in enumerate(_instances(SystemShape(2, 1), 20, 404)):
        x_opt = exhaustive_opt(inst).objective
        for pol in list(BASELINES) + [_quota(inst)]:
            cfg = SimConfig(inst, SizeDistribution.exponential(), "ps", pol, 1e4, 0.1, k)
            worst = max(worst, run_simulation(cfg).throughput_system / x_opt)
    report("4 simulated X_sys <= 1.03 X_opt", worst <= 1.03,
           f"20 instances x 5 policies, max X_sys/X_opt={worst:.4f}")


def test_analytic_agreement(report):
    worst = 0.0
    for k, inst in enumerate(_instances(SystemShape(2, 1), 10, 505)):
        pol = _quota(inst)
        analytic = system_throughput(inst, pol.target).system
        for dist in KINDS:
            for disc in ("ps", "fcfs"):
                cfg = SimConfig(inst, SizeDistribution.named(dist), disc, pol, 1e4, 0.1, k)
                x = run_simulation(cfg).throughput_system
                worst = max(worst, abs(x - analytic) / analytic)
    report("5 Quota(MAP) simulated vs analytic", worst <= 0.05,
           f"10 instances x 6 combos, max relative deviation={100 * worst:.3f}% (<=5%)")


def _little_dev(dist, horizon, seeds=range(5)):
    devs = []
    for seed in seeds:
        for pol in list(BASELINES) + [_quota(INST_A)]:
            cfg = SimConfig(INST_A, SizeDistribution.named(dist), "ps", pol, horizon, 0.1, seed)
            devs.append(abs(run_simulation(cfg).little_product - 18) / 18)
    return max(devs), float(np.mean(devs))


def test_littles_law(report):
    detail = []
    ok = True
    for dist, tol in (("exp", 0.03), ("uniform", 0.03), ("bpareto", 0.08)):
        worst, _ = _little_dev(dist, 1e4)
        ok &= worst <= tol
        detail.append(f"{dist} max dev={100 * worst:.3f}% (<={100 * tol:g}%)")
    _, short = _little_dev("bpareto", 1e4)
    _, long = _little_dev("bpareto", 1e5)
    ok &= long < short
    detail.append(f"bpareto mean dev {100 * short:.4f}% -> {100 * long:.4f}% at 10x horizon")
    report("6 Little's law", ok, "; ".join(detail))


def test_policy_ordering(report):
    insts = _instances(SystemShape(2, 1), 20, 707)
    means = {dist: {} for dist in KINDS}
    for dist in KINDS:
        sd = SizeDistribution.named(dist)
        totals = {}
        for inst in insts:
            pols = list(BASELINES) + [_quota(inst)]
            for seed in range(20):
                for pol in pols:
                    cfg = SimConfig(inst, sd, "ps", pol, 1000.0, 0.1, seed)
                    totals.setdefault(pol.kind, []).append(run_simulation(cfg).throughput_system)
        means[dist] = {k: float(np.mean(v)) for k, v in totals.items()}
    ok = all(m["quota"] >= m[k] for m in means.values() for k in ("bf", "rd", "lb", "jsq"))
    detail = "; ".join(
        f"{d}: " + " ".join(f"{k}={v:.3f}" for k, v in m.items()) for d, m in means.items()
    )
    report("7 Quota(MAP) mean X_sys >= baselines", ok, f"20 instances x 20 seeds; {detail}")


def test_mis_dominance_and_improvement(report):
    imps = []
    dominated = True
    for inst in _instances(SystemShape(2, 1), 120, 808, priorities=True):
        N0 = map_solve(inst).schedule
        e0 = priority_error(inst, N0)
        e1 = mis_solve(inst, N0).objective
        dominated &= e1 <= e0
        if e0 > 0:
            imps.append((e0 - e1) / e0)
    mean = float(np.mean(imps))
    report("8 MIS dominance and improvement", dominated and mean > 0,
           f"n=120 dominance on all={dominated} mean improvement={100 * mean:.2f}% "
           f"(reference value 46%, gate >0)")


def test_determinism(report):
    spec = ExperimentSpec(SystemShape(2, 1), num_samples=3, seed=9, horizon=300.0,
                          distributions=list(KINDS), priorities=True,
                          policies=["bf", "rd", "lb", "jsq", "quota", "mis"])
    a = experiment_csv(spec)[0]
    b = experiment_csv(spec)[0]
    cfg = SimConfig(INST_A, SizeDistribution.bounded_pareto(), "fcfs", DispatchPolicy("rd"),
                    2000.0, 0.1, 12)
    same_sim = run_simulation(cfg) == run_simulation(cfg)
    report("9 determinism", a == b and same_sim,
           f"experiment CSV byte-identical={a == b} ({len(a)} bytes), simulation bit-exact={same_sim}")


def _stars_and_bars(inst):
    g = inst.shape.num_gp
    total = 1
    for i, n in enumerate(inst.populations):
        parts = g if i < g else g + 1
        total *= math.comb(n + parts - 1, parts - 1)
    return total


def test_enumeration_count(report):
    rng = np.random.default_rng(1010)
    mismatches = 0
    for _ in range(20):
        g = int(rng.integers(1, 4))
        s = int(rng.integers(0, 3))
        ell = g + s
        inst = gen_instance(SystemShape(g, s), rng, total_q=int(rng.integers(ell, ell + 7)))
        yielded = sum(1 for _ in enumerate_feasible(inst))
        if not (yielded == feasible_count(inst) == _stars_and_bars(inst)):
            mismatches += 1
    report("10 enumeration count formula", mismatches == 0,
           f"20 random shapes, mismatches={mismatches}")
