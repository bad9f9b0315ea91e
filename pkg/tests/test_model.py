from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings

from hetsched import (
    Instance,
    SchedulingMatrix,
    SystemShape,
    feasible_columns,
    priority_error,
    sensitivity,
    system_throughput,
    validate_affinity,
    validate_schedule,
)
from hetsched.model import (
    ColumnDominanceViolated,
    DimensionMismatch,
    InfeasiblePlacement,
    InvalidInstance,
    MissingPriorities,
    NegativeCount,
    NonIntegerCount,
    NonpositiveDiagonal,
    RowDominanceWarning,
    RowSumMismatch,
    StructuralZeroViolated,
    TypeOutOfRange,
    ZeroThroughput,
    priority_terms,
)
from hetsched.optimizers import enumerate_feasible, exhaustive_opt

from oracles import continuous_column, exact_per_type, exact_throughput
from strategies import instance_and_schedule

MU_A = [[4, 2, 0], [1, 3, 0], [2, 1, 5]]
SHAPE_A = SystemShape(2, 1)


class TestShape:
    def test_counts(self):
        assert SHAPE_A.num_types == 3

    def test_needs_gp(self):
        with pytest.raises(InvalidInstance):
            SystemShape(0, 2)

    @pytest.mark.parametrize(
        "g,s,i,expected",
        [(2, 1, 0, (0, 1)), (2, 1, 2, (0, 1, 2)), (1, 2, 1, (0, 1))],
    )
    def test_feasible_columns(self, g, s, i, expected):
        assert feasible_columns(SystemShape(g, s), i) == expected

    def test_type_out_of_range(self):
        with pytest.raises(TypeOutOfRange):
            feasible_columns(SHAPE_A, 3)


class TestValidateAffinity:
    def test_valid(self):
        aff = validate_affinity(MU_A, SHAPE_A, warn=False)
        assert aff.rates.tolist() == MU_A

    def test_structural_zero(self):
        mu = [[4, 2, 1], [1, 3, 0], [2, 1, 5]]
        with pytest.raises(StructuralZeroViolated) as err:
            validate_affinity(mu, SHAPE_A)
        assert (err.value.i, err.value.j) == (0, 2)

    def test_sa_cross_zero(self):
        mu = [[4, 2, 0, 0], [1, 3, 0, 0], [2, 1, 5, 1], [1, 1, 0, 4]]
        with pytest.raises(StructuralZeroViolated) as err:
            validate_affinity(mu, SystemShape(2, 2))
        assert (err.value.i, err.value.j) == (2, 3)

    def test_column_dominance(self):
        mu = [[4, 2, 0], [5, 3, 0], [2, 1, 5]]
        with pytest.raises(ColumnDominanceViolated) as err:
            validate_affinity(mu, SHAPE_A)
        assert (err.value.i, err.value.j) == (1, 0)

    def test_nonpositive_diagonal(self):
        with pytest.raises(NonpositiveDiagonal):
            validate_affinity([[0.0]], SystemShape(1, 0))

    def test_dimension(self):
        with pytest.raises(DimensionMismatch):
            validate_affinity([[1, 0], [0, 1]], SHAPE_A)

    def test_row_dominance_only_warns(self):
        # column-dominant, but type 1 runs faster on resource 0 than on its own
        mu = [[4, 1], [3, 2]]
        with pytest.warns(RowDominanceWarning):
            aff = validate_affinity(mu, SystemShape(2, 0))
        assert not aff.row_dominant


class TestValidateSchedule:
    def test_diagonal(self, inst_a):
        N = validate_schedule(np.diag([6, 6, 6]), inst_a)
        assert N == inst_a.diagonal()

    def test_row_sum(self, inst_a):
        with pytest.raises(RowSumMismatch) as err:
            validate_schedule(np.diag([5, 6, 6]), inst_a)
        assert err.value.i == 0

    def test_negative(self, inst_a):
        N = [[6, 0, 0], [0, 6, 0], [-1, 1, 6]]
        with pytest.raises(NegativeCount) as err:
            validate_schedule(N, inst_a)
        assert (err.value.i, err.value.j) == (2, 0)

    def test_structural(self, inst_a):
        with pytest.raises(StructuralZeroViolated):
            validate_schedule([[5, 0, 1], [0, 6, 0], [0, 0, 6]], inst_a)

    def test_fractional(self, inst_a):
        with pytest.raises(NonIntegerCount):
            validate_schedule([[5.5, 0.5, 0], [0, 6, 0], [0, 0, 6]], inst_a)


class TestInstance:
    def test_priorities_must_sum_to_one(self):
        with pytest.raises(InvalidInstance):
            Instance.build(2, 1, MU_A, [6, 6, 6], [0.5, 0.5, 0.5])

    def test_needs_a_task(self):
        with pytest.raises(InvalidInstance):
            Instance.build(2, 1, MU_A, [0, 0, 0])


class TestThroughput:
    def test_diagonal_instance_a(self, inst_a):
        rep = system_throughput(inst_a, inst_a.diagonal())
        assert rep.per_resource.tolist() == [4.0, 3.0, 5.0]
        assert rep.system == 12.0

    def test_single_resource(self):
        inst = Instance.build(1, 0, [[2]], [5])
        assert system_throughput(inst, inst.diagonal()).system == 2.0

    def test_mixed_column(self, inst_a):
        N = validate_schedule([[6, 0, 0], [0, 6, 0], [3, 0, 3]], inst_a)
        rep = system_throughput(inst_a, N)
        exact = exact_throughput(MU_A, N.tolist(), 2)
        assert exact == [Fraction(10, 3), Fraction(3), Fraction(5)]
        assert rep.per_resource == pytest.approx([float(x) for x in exact], rel=1e-15)
        assert rep.system == pytest.approx(34 / 3, rel=1e-15)

    def test_empty_accelerator_contributes_nothing(self, inst_a):
        N = validate_schedule([[6, 0, 0], [0, 6, 0], [3, 3, 0]], inst_a)
        assert system_throughput(inst_a, N).per_resource[2] == 0.0

    def test_empty_gp_column(self):
        inst = Instance.build(2, 0, [[4, 2], [1, 3]], [3, 0])
        rep = system_throughput(inst, inst.diagonal())
        assert rep.per_resource.tolist() == [4.0, 0.0]

    @settings(max_examples=200, deadline=None)
    @given(instance_and_schedule())
    def test_matches_exact_and_decomposes(self, case):
        inst, N = case
        rep = system_throughput(inst, N)
        mu = inst.mu.tolist()
        exact = exact_throughput(mu, N.tolist(), inst.shape.num_gp)
        per_type = exact_per_type(mu, N.tolist(), inst.shape.num_gp)
        assert rep.per_resource == pytest.approx([float(x) for x in exact], rel=1e-12, abs=1e-12)
        assert rep.per_type == pytest.approx([float(x) for x in per_type], rel=1e-12, abs=1e-12)
        scale = max(rep.system, 1e-300)
        assert abs(rep.per_resource.sum() - rep.system) <= 1e-12 * scale
        assert abs(rep.per_type.sum() - rep.system) <= 1e-12 * scale
        assert np.all(rep.per_resource >= 0) and np.all(rep.per_type >= 0)

    @settings(max_examples=100, deadline=None)
    @given(instance_and_schedule(max_gp=3))
    def test_gp_permutation_equivariance(self, case):
        inst, N = case
        g, ell = inst.shape.num_gp, inst.shape.num_types
        perm = np.random.default_rng(g * 31 + ell).permutation(g)
        full = np.concatenate([perm, np.arange(g, ell)])
        mu_p = inst.mu[np.ix_(full, full)]
        N_p = N.counts[np.ix_(full, full)]
        inst_p = Instance.build(g, inst.shape.num_sa, mu_p,
                                [inst.populations[k] for k in full], warn=False)
        rep = system_throughput(inst, N)
        rep_p = system_throughput(inst_p, SchedulingMatrix(N_p))
        assert rep_p.per_resource == pytest.approx(rep.per_resource[full], rel=1e-12, abs=1e-12)
        assert rep_p.system == pytest.approx(rep.system, rel=1e-12)

    @pytest.mark.parametrize("pops", [(2, 2, 2), (1, 3, 2), (4, 1, 1)])
    def test_no_schedule_beats_enumerated_optimum(self, pops):
        inst = Instance.build(2, 1, MU_A, list(pops))
        best = exhaustive_opt(inst).objective
        for N in enumerate_feasible(inst):
            assert system_throughput(inst, N).system <= best + 1e-12


class TestSensitivity:
    N_MIXED = [[6, 0, 0], [0, 6, 0], [3, 0, 3]]

    def test_own_type(self, inst_a):
        N = validate_schedule(self.N_MIXED, inst_a)
        assert sensitivity(inst_a, N, 0, 0) == pytest.approx(2 / 27, rel=1e-14)

    def test_slow_type(self, inst_a):
        N = validate_schedule(self.N_MIXED, inst_a)
        assert sensitivity(inst_a, N, 1, 0) == pytest.approx(-7 / 27, rel=1e-14)

    def test_empty_column(self):
        inst = Instance.build(2, 0, [[4, 2], [1, 3]], [3, 1])
        N = validate_schedule([[3, 0], [1, 0]], inst)
        assert sensitivity(inst, N, 0, 1) == 2.0
        assert sensitivity(inst, N, 1, 1) == 3.0

    def test_accelerator_column(self, inst_a):
        occupied = inst_a.diagonal()
        assert sensitivity(inst_a, occupied, 2, 2) == 0.0
        empty = validate_schedule([[6, 0, 0], [0, 6, 0], [6, 0, 0]], inst_a)
        assert sensitivity(inst_a, empty, 2, 2) == 5.0

    def test_infeasible(self, inst_a):
        with pytest.raises(InfeasiblePlacement):
            sensitivity(inst_a, inst_a.diagonal(), 0, 2)

    @settings(max_examples=200, deadline=None)
    @given(instance_and_schedule(min_pop=1))
    def test_central_difference(self, case):
        inst, N = case
        g = inst.shape.num_gp
        mu = inst.mu.tolist()
        eps = 1e-6
        for tau in range(inst.shape.num_types):
            for j in range(g):
                n = N.counts[:, j].astype(float)
                if n.sum() == 0:
                    continue
                up = N.counts.astype(float)
                dn = N.counts.astype(float)
                up[tau, j] += eps
                dn[tau, j] -= eps
                fd = (continuous_column(mu, up.tolist(), j)
                      - continuous_column(mu, dn.tolist(), j)) / (2 * eps)
                d = sensitivity(inst, N, tau, j)
                scale = max(abs(d), (mu[tau][j] + continuous_column(mu, N.counts.tolist(), j)) / n.sum())
                assert abs(fd - d) <= 1e-6 * scale


class TestPriorityError:
    def test_zero_when_matching(self):
        inst = Instance.build(2, 1, MU_A, [6, 6, 6], [1 / 3, 1 / 4, 5 / 12])
        assert priority_error(inst, inst.diagonal()) == pytest.approx(0.0, abs=1e-15)

    def test_value(self):
        inst = Instance.build(2, 1, MU_A, [6, 6, 6], [1 / 2, 1 / 4, 1 / 4])
        pe = priority_terms(inst, inst.diagonal())
        assert pe.total == pytest.approx(1 / 18, rel=1e-14)
        assert pe.terms == pytest.approx((1 / 36, 0.0, 1 / 36), abs=1e-15)

    def test_single_type(self):
        inst = Instance.build(1, 0, [[3]], [4], [1.0])
        assert priority_error(inst, inst.diagonal()) == 0.0

    def test_missing(self, inst_a):
        with pytest.raises(MissingPriorities):
            priority_error(inst_a, inst_a.diagonal())

    def test_zero_throughput(self):
        inst = Instance.build(2, 0, [[2, 0], [0, 2]], [1, 0], [0.5, 0.5])
        N = validate_schedule([[0, 1], [0, 0]], inst)
        with pytest.raises(ZeroThroughput):
            priority_error(inst, N)

    @settings(max_examples=100, deadline=None)
    @given(instance_and_schedule(priorities=True, min_pop=1))
    def test_nonnegative_and_zero_at_achieved_ratios(self, case):
        inst, N = case
        assert priority_error(inst, N) >= 0
        ratios = priority_terms(inst, N).ratios
        matched = inst.with_priorities(np.asarray(ratios) / sum(ratios))
        assert priority_error(matched, N) == pytest.approx(0.0, abs=1e-12)
