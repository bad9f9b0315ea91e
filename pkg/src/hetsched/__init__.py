"""Throughput-optimal scheduling for systems of GPs and specialized accelerators."""

from ._backend import DEFAULT as KERNEL_BACKEND
from .model import (
    AffinityMatrix,
    Instance,
    SchedulingMatrix,
    SystemShape,
    ThroughputReport,
    feasible_columns,
    priority_error,
    sensitivity,
    system_throughput,
    validate_affinity,
    validate_schedule,
)
from .optimizers import (
    SolveResult,
    enumerate_feasible,
    exhaustive_opt,
    feasible_count,
    map_solve,
    mis_solve,
    opt_gp,
    opt_sa,
)
from .simulator import (
    DispatchPolicy,
    Metrics,
    SimConfig,
    compare_policies,
    dispatch,
    run_simulation,
)
from .workload import SizeDistribution, draw_size

__version__ = "0.1.0"
