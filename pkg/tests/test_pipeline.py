from __future__ import annotations

import pytest

import gts.pipeline as pipeline
from gts.constraints import Sub
from gts.frontend import parse
from gts.optimize import check_census
from gts.pipeline import compile_expr, compile_source
from gts.programs import path
from gts.solver import NoProgress, Unsatisfiable, validate
from gts.syntax import binder_vars, pretty
from gts.types import DYN, INT, Fun, TVar

IDENTITY = "fun (a: int) -> int { a }"


def test_closed_world_identity_drops_its_check():
    comp = compile_source(IDENTITY)
    assert comp.solution == {TVar(0): INT, TVar(1): INT}
    assert pretty(comp.optimized) == "fun a { let a = a in a }"


def test_open_world_identity_keeps_its_check():
    comp = compile_source(IDENTITY, open_world=True)
    assert comp.solution[TVar(0)] == DYN
    assert pretty(comp.optimized) == "fun a { let a = a▷int in a }"
    assert Sub(DYN, TVar(0)) in comp.constraints


def test_solution_covers_every_binder_variable():
    comp = compile_source("(fun (x: dyn) -> dyn { 1 }) (ref<int> 2)")
    assert set(binder_vars(comp.transient)) <= set(comp.solution)
    assert validate(comp.constraints, comp.solution)


def test_unsatisfiable_falls_back_to_erased(monkeypatch):
    def boom(*args, **kwargs):
        raise Unsatisfiable(Sub(INT, TVar(0)), "forced")

    monkeypatch.setattr(pipeline, "solve", boom)
    comp = compile_source(IDENTITY)
    assert comp.fallback == "erased"
    assert comp.optimized == comp.erased
    assert comp.warnings and comp.warnings[0].startswith("warn: ")


def test_no_progress_uses_validated_dyn_solution():
    comp = compile_expr(parse("(fun (x: dyn) -> dyn { x x }) (fun (y: dyn) -> dyn { y })"))
    assert comp.fallback in (None, "dyn-solution")
    if comp.fallback == "dyn-solution":
        assert validate(comp.constraints, comp.solution)


def test_no_progress_without_valid_dyn_solution_keeps_all_checks(monkeypatch):
    def stuck(omega, trace=None, fresh=None):
        raise NoProgress(omega)

    monkeypatch.setattr(pipeline, "solve", stuck)
    monkeypatch.setattr(pipeline, "validate", lambda omega, sigma: False)
    comp = compile_source(IDENTITY)
    assert comp.fallback == "erased" and comp.optimized == comp.erased


def test_make_eq_solution_shape():
    comp = compile_source(path("make_eq_fail").read_text())
    sigma = comp.solution
    assert comp.fallback is None
    # makeEq's codomain, the call-site domain and the inner parameter
    assert sigma[TVar(6)] == Fun(DYN, INT)
    assert sigma[TVar(11)] == DYN
    assert sigma[TVar(7)] == DYN
    assert sigma[TVar(5)] == INT
    assert check_census(comp.optimized).static_checks == 1
    assert "m▷int" in pretty(comp.optimized)


def test_compile_is_deterministic():
    src = path("benchmarks/stage_chain").read_text()
    a, b = compile_source(src), compile_source(src)
    assert a.solution == b.solution and a.optimized == b.optimized
    assert a.trace.render() == b.trace.render()


@pytest.mark.parametrize("name", ["id", "make_eq_fail", "benchmarks/twice_pipeline"])
def test_bundled_programs_compile(name):
    comp = compile_source(path(name).read_text())
    assert validate(comp.constraints, comp.solution)
