"""Time the compiled and pure-Python simulation kernels on the same runs.

    python benchmarks/bench_kernel.py --horizon 2000 --repeat 3
"""

import argparse
import time

import numpy as np

from hetsched import _backend
from hetsched.harness import gen_instance
from hetsched.model import SystemShape
from hetsched.optimizers import map_solve
from hetsched.simulator import DispatchPolicy, SimConfig, run_simulation
from hetsched.workload import SizeDistribution


def _best_of(cfg, backend, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        m = run_simulation(cfg, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, m


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--horizon", type=float, default=2000.0)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--shape", default="2,1")
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    g, s = (int(x) for x in args.shape.split(","))
    inst = gen_instance(SystemShape(g, s), np.random.default_rng(args.seed))
    backends = sorted(_backend.KERNELS)
    if "cython" not in backends:
        print("compiled kernel not built; only the Python kernel is available")

    print(f"Q={inst.num_tasks} horizon={args.horizon:g}")
    print(f"{'policy':8} {'disc':5} " + " ".join(f"{b:>10}" for b in backends) + "   speedup")
    for disc in ("ps", "fcfs"):
        for kind in ("bf", "rd", "lb", "jsq", "quota"):
            pol = (DispatchPolicy.quota(map_solve(inst).schedule) if kind == "quota"
                   else DispatchPolicy(kind))
            cfg = SimConfig(inst, SizeDistribution.exponential(), disc, pol, args.horizon,
                            0.1, args.seed)
            times, results = {}, {}
            for b in backends:
                times[b], results[b] = _best_of(cfg, b, args.repeat)
            if len(set(results.values())) != 1:
                raise SystemExit(f"backends disagree on {kind}/{disc}")
            speed = times["python"] / times["cython"] if "cython" in times else float("nan")
            cells = " ".join(f"{1e3 * times[b]:8.1f}ms" for b in backends)
            print(f"{kind:8} {disc:5} {cells}   {speed:6.1f}x")


if __name__ == "__main__":
    main()
