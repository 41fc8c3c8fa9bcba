from __future__ import annotations

from hypothesis import given
from hypothesis import strategies as st

from gts.frontend import parse
from gts.generator import gen_program
from gts.machine import Failed, Running, Stats, agree, has_tag, run, step
from gts.pipeline import compile_expr
from gts.syntax import Add, Addr, App, Check, Deref, Fail, IntLit, Lam, RefNew, Var
from gts.types import Tag

IDENT = Lam("x", Var("x"))


def test_has_tag_examples():
    assert has_tag(IntLit(5), Tag.INT)
    assert has_tag(IDENT, Tag.DYN)
    assert not has_tag(Addr(0), Tag.FUN)
    assert has_tag(Addr(0), Tag.REF)
    assert not has_tag(IntLit(1), Tag.FUN)


def test_step_examples():
    stats = Stats()
    assert step(Running(Check(IntLit(5), Tag.INT)), stats) == Running(IntLit(5), {})
    assert stats.checks_executed == 1 and stats.checks_failed == 0
    assert step(Running(Check(IDENT, Tag.INT)), stats) == Failed()
    assert stats.checks_failed == 1
    assert step(Failed()) == Failed()


def test_allocation_and_dereference():
    s1 = step(Running(RefNew(IntLit(1))))
    assert s1 == Running(Addr(0), {0: IntLit(1)})
    s2 = step(Running(Deref(Addr(0)), {0: IntLit(1)}))
    assert s2 == Running(IntLit(1), {0: IntLit(1)})


def test_step_does_not_mutate_input_store():
    store = {0: IntLit(1)}
    step(Running(RefNew(IntLit(2)), store))
    assert store == {0: IntLit(1)}


def test_run_examples():
    out = run(Add(IntLit(2), IntLit(3)), 100)
    assert out.kind == "value" and out.value == IntLit(5)
    assert out.stats.steps == 1 and out.stats.checks_executed == 0
    out = run(App(Lam("x", Add(Var("x"), IntLit(1))), IntLit(4)), 100)
    assert out.describe() == "value 5"


def test_terminal_kinds():
    assert run(App(IntLit(1), IntLit(2))).kind == "stuck"
    assert run(Fail()).kind == "fail"
    assert run(Add(IntLit(1), IntLit(2)), 0).kind == "fuel"
    assert run(RefNew(IntLit(0))).describe() == "value <ref #0>"
    assert run(IDENT).describe() == "value <fun>"


def test_assignment_returns_zero():
    out = run(parse("(ref<int> 1) := 5"))
    assert out.value == IntLit(0)


def test_observation_ignores_function_identity():
    a, b = run(IDENT), run(Lam("y", IntLit(3)))
    assert agree(a, b)
    assert not agree(run(IntLit(1)), run(IntLit(2)))
    assert not agree(run(IntLit(1)), run(Fail()))


def test_dyn_checks_are_counted_separately():
    out = run(Check(Check(IntLit(1), Tag.DYN), Tag.INT))
    assert out.stats.checks_executed == 2
    assert out.stats.dyn_tag_checks == 1
    assert out.stats.tagged_checks == 1


@given(st.integers(min_value=0, max_value=10**6))
def test_store_grows_monotonically_and_evaluation_is_deterministic(seed):
    program = compile_expr(gen_program(seed, 30)).erased
    seen: list[set[int]] = []
    out = run(program, 10_000, on_step=lambda e, store: seen.append(set(store)))
    for before, after in zip(seen, seen[1:]):
        assert before <= after
    again = run(program, 10_000)
    assert (out.kind, out.stats) == (again.kind, again.stats)
    assert out.stats.checks_failed <= 1
    assert out.stats.checks_executed >= out.stats.checks_failed
