from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gts.constraints import Chk, Def, Eq, Sub, TagC, generate, open_world_constraints
from gts.generator import gen_program
from gts.insert import insert_checks
from gts.solver import (
    NoProgress,
    SolverTrace,
    Unsatisfiable,
    apply_solution,
    simplify,
    solvable,
    solve,
    termination_measure,
    validate,
)
from gts.types import DYN, INT, ContractViolation, Fun, Ref, Tag, TVar, VarSupply

A, B, C = TVar(0), TVar(1), TVar(2)

# Names from the hand-solved example: delta, epsilon, zeta, eta, theta, omega.
DE, EP, ZE, ET, TH, OM = (TVar(i) for i in range(6))
WORKED = [Sub(Fun(EP, ZE), DE), Chk(DE, Tag.FUN, Fun(ET, TH)), Sub(INT, ET), Sub(Ref(OM), ET), Sub(INT, ZE)]


def test_ref_below_dyn_defines_content():
    assert simplify([Sub(Ref(A), DYN)]) == {Def(A, DYN)}


def test_equal_function_types_vanish():
    assert simplify([Eq(Fun(DYN, DYN), Fun(DYN, DYN))]) == set()


def test_mismatched_tag_and_check_drops_check():
    trace = SolverTrace()
    simplify([TagC(A, Tag.FUN), Chk(A, Tag.INT, INT)], trace=trace)
    first = trace.steps[0]
    assert first.rule == "14"
    assert first.consumed == (Chk(A, Tag.INT, INT),) and first.produced == ()
    assert str(first) == "RULE 14: {a0 ▷int⊳ int} ==> {}"


def test_mismatched_tag_forces_parts_to_dyn():
    assert simplify([TagC(A, Tag.INT), Chk(A, Tag.FUN, Fun(B, C))]) == {Def(A, INT), Def(B, DYN), Def(C, DYN)}


def test_function_subtyping_decomposes():
    assert simplify([Sub(Fun(A, B), Fun(C, DYN))]) == {Sub(C, A), Sub(B, DYN)}
    assert simplify([Sub(Fun(A, B), DYN)]) == {Sub(DYN, A), Sub(B, DYN)}


def test_reference_subtyping_is_invariant():
    assert simplify([Sub(Ref(A), Ref(DYN))]) == {Def(A, DYN)}
    assert simplify([Sub(Ref(A), Ref(B)), Sub(INT, B)]) == {Def(A, B), Sub(INT, B)}


def test_duplicate_checks_are_merged():
    out = simplify([Chk(A, Tag.FUN, Fun(B, C)), Chk(A, Tag.FUN, Fun(DYN, DYN))])
    assert out == {Chk(A, Tag.FUN, Fun(DYN, DYN)), Def(B, DYN), Def(C, DYN)}


def test_substitution_records_definition_once():
    out = simplify([Eq(A, INT), Sub(A, B)])
    assert out == {Def(A, INT), Sub(INT, B)}


def test_unsatisfiable_constraints():
    with pytest.raises(Unsatisfiable):
        simplify([Sub(INT, Ref(A))])
    with pytest.raises(Unsatisfiable):
        simplify([Eq(INT, Fun(DYN, DYN))])
    with pytest.raises(Unsatisfiable):
        simplify([Eq(A, Fun(A, DYN))])


def test_solve_examples():
    assert solve([Sub(INT, A)]) == {A: INT}
    assert solve([]) == {}


def test_solve_worked_example():
    sigma = solve(WORKED)
    assert sigma == {DE: Fun(DYN, INT), ET: DYN, TH: INT, ZE: INT, EP: DYN, OM: DYN}
    assert validate(WORKED, sigma)


def test_solve_joins_lower_bound_tags():
    assert solve([Sub(INT, A), Sub(Fun(B, C), A), Sub(DYN, B), Sub(C, DYN)])[A] == DYN


def test_solve_collapses_subtyping_cycles():
    trace = SolverTrace()
    sigma = solve([Sub(A, B), Sub(B, A), Sub(INT, A)], trace=trace)
    assert sigma == {A: INT, B: INT}
    assert any(step.rule == "cycle" for step in trace.steps)


def test_no_progress_on_nested_self_flow():
    omega = [Sub(Fun(A, B), C), Sub(Fun(DYN, C), A), Sub(INT, A)]
    with pytest.raises(NoProgress):
        solve(omega)


def test_solvable_condition():
    assert solvable([Sub(INT, A), Sub(A, B)], A) == (True, [INT])
    assert solvable([Sub(B, A)], A) == (False, [])
    assert solvable([Sub(Fun(A, DYN), B)], A) == (False, [])
    assert solvable([Chk(A, Tag.FUN, Fun(A, B))], A) == (False, [])


def test_validate_examples():
    assert validate([Sub(INT, A)], {A: INT})
    verdict = validate([Sub(INT, A)], {A: Ref(DYN)})
    assert not verdict and "clause 1" in verdict.violation
    assert not validate([Chk(A, Tag.FUN, Fun(B, C))], {A: INT, B: INT, C: DYN})
    assert validate([Chk(A, Tag.FUN, Fun(B, C))], {A: INT, B: DYN, C: DYN})
    assert not validate([TagC(A, Tag.INT)], {A: DYN})
    assert not validate([Def(A, Fun(B, DYN))], {A: Fun(DYN, DYN), B: INT})
    assert not validate([Sub(INT, A)], {})


def test_apply_solution_examples():
    assert apply_solution({A: INT}, Fun(A, DYN)) == Fun(INT, DYN)
    assert apply_solution({}, INT) == INT
    assert apply_solution({B: DYN}, Ref(B)) == Ref(DYN)
    with pytest.raises(ContractViolation):
        apply_solution({}, A)


def _omega(seed: int, open_world: bool):
    fresh = VarSupply()
    d, _ = insert_checks({}, gen_program(seed, 30), fresh)
    result, omega = generate({}, d, fresh)
    if open_world:
        omega.update(open_world_constraints(result))
    return omega, fresh


seeds = st.integers(min_value=0, max_value=10**6)


@given(seeds, st.booleans())
def test_trace_replay_reproduces_final_state(seed, open_world):
    omega, fresh = _omega(seed, open_world)
    trace = SolverTrace()
    final = simplify(omega, fresh, trace)
    assert trace.replay(omega) == set(final)


@given(seeds, st.booleans())
def test_every_simplification_step_decreases_the_measure(seed, open_world):
    omega, fresh = _omega(seed, open_world)
    trace = SolverTrace()
    simplify(omega, fresh, trace)
    state = set(omega)
    for step in trace.steps:
        before = termination_measure(state)
        state = (state - set(step.consumed)) | set(step.produced)
        assert termination_measure(state) < before, str(step)


@given(seeds, st.booleans())
def test_substitution_never_redefines(seed, open_world):
    omega, fresh = _omega(seed, open_world)
    trace = SolverTrace()
    try:
        solve(omega, trace, fresh)
    except NoProgress:
        pass
    state = set(omega)
    for step in trace.steps:
        state = (state - set(step.consumed)) | set(step.produced)
        heads = [c.var for c in state if isinstance(c, Def)]
        assert len(heads) == len(set(heads)), str(step)


@given(seeds, st.booleans())
def test_solutions_validate_and_are_deterministic(seed, open_world):
    results = []
    for _ in range(2):
        omega, fresh = _omega(seed, open_world)
        try:
            sigma = solve(omega, fresh=fresh)
        except NoProgress:
            results.append(None)
            continue
        assert validate(omega, sigma)
        results.append(sigma)
    assert results[0] == results[1]
