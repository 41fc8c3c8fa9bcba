"""Transient terms to target terms: check-removing translation and plain erasure."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .syntax import Add, App, Assign, Check, Deref, Expr, Fail, IntLit, Lam, Let, RefNew, Span, Var, walk
from .types import (
    INT,
    ContractViolation,
    Dyn,
    Fun,
    Ref,
    Tag,
    TVar,
    Type,
    subtype,
    tag_of_full,
    tag_precise,
    up_tag,
)


@dataclass(frozen=True)
class FailWarning:
    span: Span | None
    scrutinee_type: Type
    tag: Tag

    def __str__(self) -> str:
        where = str(self.span) if self.span is not None else "?"
        return f"warn: check always fails at {where}: {self.scrutinee_type} vs {self.tag}"


def _require_subtype(t1: Type, t2: Type, rule: str) -> None:
    if not subtype(t1, t2):
        raise ContractViolation(f"{rule}: {t1} is not a subtype of {t2}")


def optimize(
    env: Mapping[str, Type],
    d: Expr,
    sigma: Mapping[TVar, Type],
    warnings: list[FailWarning] | None = None,
) -> tuple[Expr, Type]:
    """Translate ``d`` under solution ``sigma``, dropping checks it proves redundant."""
    sink: list[FailWarning] = warnings if warnings is not None else []

    def sig(v: Type) -> Type:
        if not isinstance(v, TVar) or v not in sigma:
            raise ContractViolation(f"solution does not map {v}")
        return sigma[v]

    def go(env: Mapping[str, Type], d: Expr) -> tuple[Expr, Type]:
        match d:
            case IntLit():
                return d, INT
            case Var(name):
                if name not in env:
                    raise ContractViolation(f"unbound variable {name}")
                return d, env[name]
            case Lam(param, body, a, b):
                e, t = go({**env, param: sig(a)}, body)
                _require_subtype(t, sig(b), "DAbs")
                return Lam(param, e, span=d.span), Fun(sig(a), sig(b))
            case Let(name, bound, body):
                e1, t1 = go(env, bound)
                e2, t2 = go({**env, name: t1}, body)
                return Let(name, e1, e2, span=d.span), t2
            case App(fn, arg):
                e1, t = go(env, fn)
                if not isinstance(t, Fun):
                    raise ContractViolation(f"DApp: callee has type {t}")
                e2, t_arg = go(env, arg)
                _require_subtype(t_arg, t.dom, "DApp")
                return App(e1, e2, span=d.span), t.cod
            case RefNew(init, a):
                e, t = go(env, init)
                _require_subtype(t, sig(a), "DRef")
                return RefNew(e, span=d.span), Ref(sig(a))
            case Deref(r):
                e, t = go(env, r)
                if not isinstance(t, Ref):
                    raise ContractViolation(f"DDeref: subject has type {t}")
                return Deref(e, span=d.span), t.inner
            case Assign(r, v):
                e1, t = go(env, r)
                if not isinstance(t, Ref):
                    raise ContractViolation(f"DUpdt: subject has type {t}")
                e2, t_v = go(env, v)
                _require_subtype(t_v, t.inner, "DUpdt")
                return Assign(e1, e2, span=d.span), INT
            case Add(l, r):
                e1, t1 = go(env, l)
                e2, t2 = go(env, r)
                if t1 != INT or t2 != INT:
                    raise ContractViolation(f"DAdd: operands have types {t1}, {t2}")
                return Add(e1, e2, span=d.span), INT
            case Check(inner, tag):
                e, t = go(env, inner)
                if tag_precise(tag_of_full(t), tag):
                    return e, t
                if isinstance(t, Dyn):
                    return Check(e, tag, span=d.span), up_tag(tag)
                sink.append(FailWarning(d.span, t, tag))
                return Fail(span=d.span), up_tag(tag)
        raise ContractViolation(f"not a transient expression: {type(d).__name__}")

    return go(env, d)


def erase(d: Expr) -> Expr:
    """Drop type-variable annotations, keeping every check."""
    match d:
        case IntLit() | Var():
            return d
        case Lam(param, body):
            return Lam(param, erase(body), span=d.span)
        case Let(name, bound, body):
            return Let(name, erase(bound), erase(body), span=d.span)
        case App(fn, arg):
            return App(erase(fn), erase(arg), span=d.span)
        case RefNew(init):
            return RefNew(erase(init), span=d.span)
        case Deref(r):
            return Deref(erase(r), span=d.span)
        case Assign(r, v):
            return Assign(erase(r), erase(v), span=d.span)
        case Add(l, r):
            return Add(erase(l), erase(r), span=d.span)
        case Check(inner, tag):
            return Check(erase(inner), tag, span=d.span)
    raise ContractViolation(f"not a transient expression: {type(d).__name__}")


@dataclass(frozen=True)
class Census:
    static_checks: int
    fail_nodes: int


def check_census(e: Expr) -> Census:
    checks = fails = 0
    for node in walk(e):
        if isinstance(node, Check):
            checks += 1
        elif isinstance(node, Fail):
            fails += 1
    return Census(checks, fails)
