"""``hetsched`` command line: gen, solve, simulate, experiment.

Exit status is 0 on success, 1 for data or infeasibility errors and 2 for
usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import io as hio
from .harness import ExperimentSpec, experiment_csv, gen_instance
from .model import ModelError, SystemShape, system_throughput
from .optimizers import exhaustive_opt, map_solve, mis_solve
from .simulator import DispatchPolicy, SimConfig, run_simulation
from .workload import KINDS, SizeDistribution


def _shape(text: str) -> SystemShape:
    try:
        g, s = (int(x) for x in text.split(","))
        return SystemShape(g, s)
    except (ValueError, ModelError) as exc:
        raise argparse.ArgumentTypeError(f"expected g,s with g >= 1, s >= 0: {exc}")


def _range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected low,high")
    return lo, hi


def _fraction(text: str) -> float:
    v = float(text)
    if not 0 <= v < 1:
        raise argparse.ArgumentTypeError("warmup must lie in [0, 1)")
    return v


def cmd_gen(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for k in range(args.count):
        rng = np.random.default_rng(np.random.SeedSequence([args.seed, k]))
        inst = gen_instance(args.shape, rng, args.rate_range, args.q, priorities=args.priorities)
        hio.save_instance(inst, out / f"inst_{k}.json")
    print(f"wrote {args.count} instances to {out} (seed={args.seed})")
    return 0


def _solve(inst, algo: str, args):
    if algo == "map":
        return map_solve(inst, args.max_iters)
    if algo == "mis":
        return mis_solve(inst, max_outer_iters=args.max_iters)
    return exhaustive_opt(inst, args.objective, cap=args.cap)


def cmd_solve(args) -> int:
    inst = hio.load_instance(args.instance)
    t0 = time.perf_counter()
    res = _solve(inst, args.algo, args)
    wall = time.perf_counter() - t0
    if args.out:
        hio.save_schedule(inst.shape, res.schedule, args.out)
    else:
        sys.stdout.write(hio.dumps_schedule(inst.shape, res.schedule))
    print(
        f"algo={args.algo} objective={res.objective!r} iterations={res.iterations} "
        f"converged={str(res.converged).lower()} wall_time={wall:.6f}s",
        file=sys.stderr if not args.out else sys.stdout,
    )
    return 0


def cmd_simulate(args) -> int:
    inst = hio.load_instance(args.instance)
    if args.policy == "quota":
        if args.schedule:
            target = hio.load_schedule(args.schedule, inst)
        else:
            target = _solve(inst, args.algo, args).schedule
        policy = DispatchPolicy.quota(target)
    else:
        policy = DispatchPolicy(args.policy)
    cfg = SimConfig(inst, SizeDistribution.named(args.dist), args.discipline, policy,
                    args.horizon, args.warmup, args.seed)
    m = run_simulation(cfg)
    report = {
        "policy": args.policy,
        "distribution": args.dist,
        "discipline": args.discipline,
        "seed": args.seed,
        "X_sys": m.throughput_system,
        "X_per_type": list(m.throughput_per_type),
        "E_T": m.mean_response_time,
        "energy": m.energy,
        "EDP": m.edp,
        "little_product": m.little_product,
        "completed_tasks": m.completed_tasks,
    }
    if policy.target is not None:
        report["analytic_X"] = system_throughput(inst, policy.target).system
    text = json.dumps(report, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_experiment(args) -> int:
    spec = ExperimentSpec.load(args.spec)
    if args.horizon is not None:
        spec.horizon = args.horizon
    if args.warmup is not None:
        spec.warmup = args.warmup
    if args.seed is not None:
        spec.seed = args.seed
    text, summary = experiment_csv(spec, jobs=args.jobs)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
    for line in summary.lines():
        print(line, file=sys.stderr)
    return 1 if summary.failed else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hetsched", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate random instance files")
    g.add_argument("--shape", type=_shape, required=True, help="g,s")
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--q", type=int, default=None, help="total threads (default 2*l^2)")
    g.add_argument("--rate-range", type=_range, default=(1.0, 10.0))
    g.add_argument("--priorities", action="store_true")
    g.add_argument("--out", default=".")
    g.set_defaults(func=cmd_gen)

    def solver_flags(sp, default_algo):
        sp.add_argument("--algo", choices=("map", "mis", "exhaustive"), default=default_algo)
        sp.add_argument("--objective", choices=("throughput", "priority"), default="throughput")
        sp.add_argument("--max-iters", type=int, default=None)
        sp.add_argument("--cap", type=int, default=10**7, help="enumeration cap")

    s = sub.add_parser("solve", help="optimize a schedule for one instance")
    s.add_argument("instance")
    solver_flags(s, "map")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_solve)

    m = sub.add_parser("simulate", help="simulate one instance under one policy")
    m.add_argument("instance")
    m.add_argument("--policy", choices=("bf", "rd", "lb", "jsq", "quota"), default="quota")
    m.add_argument("--schedule", default=None, help="quota target file (default: solve)")
    solver_flags(m, "map")
    m.add_argument("--dist", choices=KINDS, default="exp")
    m.add_argument("--discipline", choices=("ps", "fcfs"), default="ps")
    m.add_argument("--horizon", type=float, default=1e4)
    m.add_argument("--warmup", type=_fraction, default=0.1)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out", default=None)
    m.set_defaults(func=cmd_simulate)

    e = sub.add_parser("experiment", help="run a campaign described by a JSON spec")
    e.add_argument("spec")
    e.add_argument("--out", default=None)
    e.add_argument("--jobs", type=int, default=1)
    e.add_argument("--horizon", type=float, default=None)
    e.add_argument("--warmup", type=_fraction, default=None)
    e.add_argument("--seed", type=int, default=None)
    e.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ModelError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: IoError: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
