"""Staged pipeline: halving, interval splits, dominance routes, assembly."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from majorant import (
    DiagonalElement,
    StepProfile,
    FactorElement,
    Infeasible,
    PreconditionError,
    RealizationResult,
    StageTrace,
    ThompsonInstance,
    complete_dominance_solve,
    complete_dominance_step,
    dominance_solve,
    general_solve,
    good_interval_partition,
    in_two_sided_orbit,
    reduce_to_positive,
    singular_profile,
    strict_dominance_solve,
    zero_diagonal,
)
from majorant.oracle import gen_complete_dominance, gen_dominant, gen_feasible


def unitary_gap(m):
    n = m.shape[0]
    return np.max(np.abs(m.conj().T @ m - np.eye(n)))


def check_result(inst, result, tol=1e-9):
    n = inst.n
    assert unitary_gap(result.U.entries) <= n * 1e-8
    assert unitary_gap(result.V.entries) <= n * 1e-8
    product = result.U.entries @ inst.T.entries @ result.V.entries
    assert np.max(np.abs(product - result.S.entries)) <= n * 1e-9
    assert result.diag_residual <= result.truncation_error + n * tol
    assert result.sv_drift <= n * 1e-7


def test_instance_requires_power_of_two():
    with pytest.raises(PreconditionError):
        ThompsonInstance(
            DiagonalElement([1.0, 0.5, 0.2]), FactorElement(np.eye(3, dtype=complex))
        )


def test_instance_rejects_dimension_mismatch():
    with pytest.raises(ValueError):
        ThompsonInstance(
            DiagonalElement([1.0, 0.5]), FactorElement(np.eye(4, dtype=complex))
        )


def test_feasibility_report_evaluates_submajorization():
    inst = ThompsonInstance(
        DiagonalElement([1.0, 0.0]), FactorElement(np.eye(2, dtype=complex))
    )
    report = inst.feasibility_report()
    assert report.submajorized and not report.thompson_finite_ok


def test_instance_json_round_trip():
    inst = gen_feasible(1, 4)
    back = ThompsonInstance.from_json(inst.to_json())
    assert np.array_equal(back.A.diag, inst.A.diag)
    assert np.array_equal(back.T.entries, inst.T.entries)


@pytest.mark.parametrize("seed,n", [(0, 4), (1, 8), (2, 16), (3, 8)])
def test_complete_dominance_step_halves_the_problem(seed, n):
    inst = gen_complete_dominance(seed, n)
    P, U, V, A2, T2 = complete_dominance_step(inst.A, inst.T)
    assert unitary_gap(U.entries) <= n * 1e-9
    assert unitary_gap(V.entries) <= n * 1e-9
    S = U.entries @ inst.T.entries @ V.entries
    # processed coordinates carry the requested diagonal: P S P = A P
    p = P.entries
    assert np.max(np.abs(p @ S @ p - np.diag(inst.A.diag) @ p)) <= n * 1e-8
    assert A2.diag.size == n // 2
    assert T2.n == n // 2
    # the residual half-problem keeps dominance with room to spare
    slack = np.linalg.svd(T2.entries, compute_uv=False).min() - np.abs(A2.diag).max()
    assert slack >= -n * 1e-8


def test_complete_dominance_step_rejects_near_singular_blocks():
    A = DiagonalElement(np.zeros(2, dtype=complex))
    T = FactorElement(np.diag([1.0, 0.0]).astype(complex))
    with pytest.raises(PreconditionError):
        complete_dominance_step(A, T)


def test_zero_diagonal_kills_the_diagonal_exactly():
    # contract is for positive input, so conjugate a spectrum into place
    rng = np.random.default_rng(4)
    z = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    q, _ = np.linalg.qr(z)
    T = FactorElement((q * rng.uniform(0.5, 2.0, 8)) @ q.conj().T)
    u, v = zero_diagonal(T)
    S = u.entries @ T.entries @ v.entries
    assert np.max(np.abs(np.diagonal(S))) <= 8 * 1e-9
    assert unitary_gap(u.entries) <= 1e-9
    assert unitary_gap(v.entries) <= 1e-9


def test_zero_diagonal_is_exact_for_diagonal_input():
    T = FactorElement(np.diag([2.0, 1.5, 1.0, 0.5]).astype(complex))
    u, v = zero_diagonal(T)
    S = u.entries @ T.entries @ v.entries
    assert np.max(np.abs(np.diagonal(S))) == 0.0


@pytest.mark.parametrize("seed,n", [(5, 4), (6, 8), (7, 16), (8, 32)])
def test_complete_dominance_solve_realizes_the_diagonal(seed, n):
    inst = gen_complete_dominance(seed, n)
    result = complete_dominance_solve(inst.A, inst.T)
    check_result(inst, result)
    assert result.diag_residual <= n * 1e-8 + result.truncation_error
    diag = np.diagonal(result.S.entries)
    assert np.max(np.abs(diag - inst.A.diag)) <= result.truncation_error + n * 1e-8


def test_complete_dominance_left_increments_vanish_after_first():
    inst = gen_complete_dominance(9, 16)
    result = complete_dominance_solve(inst.A, inst.T)
    increments = result.trace.find("u_increments")
    assert increments is not None and len(increments) >= 2
    bound = [2.0 ** (-(m - 1)) + 1e-8 for m in range(len(increments))]
    assert all(inc <= b for inc, b in zip(increments[1:], bound[1:]))


def test_complete_dominance_depth_cap_reports_truncation():
    inst = gen_complete_dominance(10, 16)
    capped = complete_dominance_solve(inst.A, inst.T, depth=1)
    assert capped.diag_residual <= capped.truncation_error + 16 * 1e-9
    full = complete_dominance_solve(inst.A, inst.T)
    assert full.truncation_error <= capped.truncation_error + 1e-9


def test_complete_dominance_zero_route_for_tiny_spectra():
    A = DiagonalElement(np.zeros(4, dtype=complex))
    T = FactorElement(np.zeros((4, 4), dtype=complex))
    result = complete_dominance_solve(A, T)
    assert result.diag_residual <= 1e-12


def test_good_interval_partition_greedy_cuts():
    a = np.array([0.9, 0.35, 0.3, 0.1])
    t = np.array([1.0, 0.95, 0.4, 0.2])
    parts = good_interval_partition(StepProfile(a), StepProfile(t), 0.05)
    # a cut lands exactly where a target exceeds a later spectral value
    assert parts[0][0] == 0
    assert parts[-1][1] == 4
    covered = [i for s, e in parts for i in range(s, e)]
    assert covered == [0, 1, 2, 3]
    for s, e in parts:
        assert max(a[s:e]) <= min(t[s:e]) + 1e-12


def test_good_interval_partition_needs_the_gap():
    with pytest.raises(PreconditionError):
        good_interval_partition(
            StepProfile([1.0, 0.5]), StepProfile([1.0, 0.6]), 0.2
        )


@pytest.mark.parametrize("seed,n", [(11, 8), (12, 16)])
def test_strict_dominance_solve_small_instances(seed, n):
    rng = np.random.default_rng(seed)
    sig = np.sort(rng.uniform(1.0, 2.0, size=n))[::-1]
    a = sig - rng.uniform(0.3, 0.9, size=n)
    a = np.abs(a)
    delta = float(np.min(sig - a)) / 2
    inst = ThompsonInstance(
        DiagonalElement(a.astype(complex)),
        FactorElement(np.diag(sig).astype(complex)),
    )
    result = strict_dominance_solve(inst.A, inst.T, delta)
    check_result(inst, result)


@pytest.mark.parametrize("strategy", ["partition", "multiplicative"])
@pytest.mark.parametrize("seed,n", [(13, 8), (14, 16), (15, 32)])
def test_dominance_solve_both_strategies(strategy, seed, n):
    inst = gen_dominant(seed, n)
    result = dominance_solve(inst.A, inst.T, strategy=strategy)
    check_result(inst, result)


def test_dominance_solve_requires_cellwise_domination():
    A = DiagonalElement(np.array([2.0, 0.0], dtype=complex))
    T = FactorElement(np.diag([1.0, 1.0]).astype(complex))
    with pytest.raises(PreconditionError):
        dominance_solve(A, T)


def test_reduce_to_positive_strips_phases():
    inst = gen_feasible(16, 8)
    positive, phases = reduce_to_positive(inst)
    assert np.max(np.abs(np.abs(phases.diag) - 1.0)) <= 1e-9
    assert np.max(np.abs(positive.A.diag.imag)) <= 1e-9
    assert np.min(positive.A.diag.real) >= -1e-9
    # the positive part keeps the singular data of the original
    sp = singular_profile(positive.T)
    st_ = singular_profile(inst.T)
    assert np.max(np.abs(sp.values - st_.values)) <= 8 * 1e-8


@pytest.mark.parametrize("strategy", ["partition", "multiplicative"])
@pytest.mark.parametrize("seed,n", [(17, 8), (18, 16), (19, 32), (20, 64)])
def test_general_solve_on_generated_instances(strategy, seed, n):
    inst = gen_feasible(seed, n)
    result = general_solve(inst, strategy=strategy)
    check_result(inst, result)
    assert in_two_sided_orbit(result.S, inst.T, tol=1e-7)


def test_general_solve_certifies_infeasibility():
    from majorant.oracle import gen_infeasible

    inst = gen_infeasible(21, 8)
    with pytest.raises(Infeasible) as exc_info:
        general_solve(inst)
    assert exc_info.value.margin < 0
    assert exc_info.value.report is not None


def test_general_solve_trace_equality_stays_positive():
    from majorant.oracle import gen_trace_equality

    inst = gen_trace_equality(22, 16)
    result = general_solve(inst)
    check_result(inst, result)
    smat = (result.S.entries + result.S.entries.conj().T) / 2.0
    assert np.min(np.linalg.eigvalsh(smat)) >= -1e-7


def test_general_solve_canonical_two_cell_witness():
    # feasible in the trace model, not realizable at resolution two: the
    # defect is genuine and must be charged to truncation
    inst = ThompsonInstance(
        DiagonalElement([1.0, 0.0]), FactorElement(np.eye(2, dtype=complex))
    )
    result = general_solve(inst)
    assert result.diag_residual <= result.truncation_error + 1e-9
    # no 2x2 unitary product can reach (1, 0) from the identity: both
    # diagonal moduli of a unitary agree, so the defect is at least 1/2
    assert result.diag_residual >= 0.5 - 1e-9


def test_general_solve_resolves_the_witness_at_higher_resolution():
    for n in (4, 16):
        a = np.zeros(n, dtype=complex)
        a[: n // 2] = 1.0
        inst = ThompsonInstance(
            DiagonalElement(a), FactorElement(np.eye(n, dtype=complex))
        )
        result = general_solve(inst)
        assert result.diag_residual <= n * 1e-9


def test_stage_trace_round_trips_through_json():
    inst = gen_feasible(23, 16)
    result = general_solve(inst)
    back = RealizationResult.from_json(result.to_json())
    assert np.array_equal(back.U.entries, result.U.entries)
    assert back.trace.to_dict() == result.trace.to_dict()
    kinds = [rec.kind for rec in back.trace.stages]
    assert "general-split" in kinds


def test_stage_trace_rejects_unknown_kinds():
    trace = StageTrace()
    with pytest.raises(ValueError):
        trace.add("not-a-stage")


@given(st.integers(0, 2**31), st.sampled_from([4, 8, 16]))
@settings(max_examples=25, deadline=None)
def test_general_solve_invariants_hold_for_random_instances(seed, n):
    inst = gen_feasible(seed, n)
    result = general_solve(inst)
    assert unitary_gap(result.U.entries) <= n * 1e-8
    assert unitary_gap(result.V.entries) <= n * 1e-8
    assert result.diag_residual <= result.truncation_error + n * 1e-9
    assert result.sv_drift <= n * 1e-7
