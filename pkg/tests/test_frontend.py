from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import surface_types
from gts.frontend import ParseError, SurfaceTypeError, parse, parse_type, tokenize, typecheck_surface
from gts.generator import gen_program
from gts.syntax import Add, App, Assign, Deref, IntLit, Lam, RefNew, Var, pretty
from gts.types import DYN, INT, Fun, Ref


def test_parse_examples():
    assert parse("2 + 3") == Add(IntLit(2), IntLit(3))
    assert parse("fun (x: int) -> int { x }") == Lam("x", Var("x"), INT, INT)
    assert parse("!(ref<int> 5)") == Deref(RefNew(IntLit(5), INT))


def test_precedence_and_associativity():
    assert parse("1 + 2 + 3") == Add(Add(IntLit(1), IntLit(2)), IntLit(3))
    assert parse("f x y") == App(App(Var("f"), Var("x")), Var("y"))
    assert parse("f x + g y") == Add(App(Var("f"), Var("x")), App(Var("g"), Var("y")))
    assert parse("r := s := 1") == Assign(Var("r"), Assign(Var("s"), IntLit(1)))
    assert parse("r := 1 + 2") == Assign(Var("r"), Add(IntLit(1), IntLit(2)))


def test_type_grammar():
    assert parse_type("int -> int -> int") == Fun(INT, Fun(INT, INT))
    assert parse_type("ref int -> dyn") == Fun(Ref(INT), DYN)
    assert parse_type("(int -> int) -> int") == Fun(Fun(INT, INT), INT)
    assert parse_type("ref ref dyn") == Ref(Ref(DYN))


def test_comments_and_negative_literals():
    assert parse("# header\n1 + -2 # trailing\n") == Add(IntLit(1), IntLit(-2))


def test_parse_error_reports_position_and_expected_tokens():
    with pytest.raises(ParseError) as info:
        parse("fun (x: int) -> int x }")
    err = info.value
    assert (err.span.line, err.span.col) == (1, 21)
    assert "{" in err.expected
    with pytest.raises(ParseError):
        parse("1 +")
    with pytest.raises(ParseError):
        parse("1 2 )")


def test_spans_do_not_affect_equality():
    a, b = parse("1 + x"), parse("\n\n  1   +   x")
    assert a == b
    assert a.span != b.span


def test_tokenizer_keywords():
    toks = tokenize("fun ref dyn int x")
    assert [(t.kind, t.text) for t in toks[:5]] == [
        ("kw", "fun"),
        ("kw", "ref"),
        ("kw", "dyn"),
        ("kw", "int"),
        ("ident", "x"),
    ]


def test_typecheck_examples():
    assert typecheck_surface({}, parse("5")) == INT
    assert typecheck_surface({}, parse("(fun (x: dyn) -> dyn { x }) 7")) == DYN
    assert typecheck_surface({}, parse("fun (x: int) -> int { x }")) == Fun(INT, INT)
    assert typecheck_surface({}, parse("!(ref<int> 5)")) == INT
    assert typecheck_surface({"y": DYN}, parse("y := 3")) == INT


def test_typecheck_rejects_update_of_int():
    with pytest.raises(SurfaceTypeError) as info:
        typecheck_surface({}, parse("fun (x: int) -> int { x := 1 }"))
    assert info.value.rule == "SUpdt"
    assert info.value.span is not None


@pytest.mark.parametrize(
    "src, rule",
    [
        ("1 2", "SApp"),
        ("(fun (x: int) -> int { x }) (ref<int> 1)", "SApp"),
        ("fun (x: int) -> ref int { x }", "SAbs"),
        ("!5", "SDeref"),
        ("ref<int> (ref<int> 1)", "SRef"),
        ("(fun (x: int) -> int { x }) + 1", "SAdd"),
        ("z", "SVar"),
    ],
)
def test_typecheck_errors_name_the_rule(src, rule):
    with pytest.raises(SurfaceTypeError) as info:
        typecheck_surface({}, parse(src))
    assert info.value.rule == rule


def test_shadowing_uses_innermost_binding():
    src = "fun (x: int) -> ref int { (fun (x: ref int) -> ref int { x }) (ref<int> x) }"
    assert typecheck_surface({}, parse(src)) == Fun(INT, Ref(INT))


@given(surface_types())
def test_type_print_parse_round_trip(t):
    assert parse_type(str(t)) == t


@given(st.integers(min_value=0, max_value=10**6), st.integers(min_value=1, max_value=40))
def test_program_print_parse_round_trip(seed, budget):
    s = gen_program(seed, budget)
    again = parse(pretty(s))
    assert again == s
    assert typecheck_surface({}, again) == typecheck_surface({}, s)
