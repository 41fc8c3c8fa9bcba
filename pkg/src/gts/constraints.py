"""Constraint generation over transient terms.

Subtype and check constraints come out of :func:`generate`; equality,
tag and definition constraints only appear during simplification.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Iterable, Iterator, Mapping, Union

from .syntax import Add, App, Assign, Check, Deref, Expr, IntLit, Lam, Let, RefNew, Var
from .types import (
    DYN,
    INT,
    ContractViolation,
    Dyn,
    Fun,
    Int,
    Ref,
    Tag,
    TVar,
    Type,
    VarSupply,
    cfun,
    cref,
    is_leaf,
    is_shallow,
    type_vars,
)


def _shallow(t: Type) -> Type:
    if not is_shallow(t):
        raise ContractViolation(f"constraint type {t} is not shallow")
    return t


@dataclass(frozen=True, slots=True)
class Sub:
    lhs: Type
    rhs: Type

    def __post_init__(self) -> None:
        _shallow(self.lhs)
        _shallow(self.rhs)

    def __str__(self) -> str:
        return f"{self.lhs} <: {self.rhs}"


@dataclass(frozen=True, slots=True)
class Chk:
    scrutinee: Type
    tag: Tag
    result: Type

    def __post_init__(self) -> None:
        _shallow(self.scrutinee)
        _shallow(self.result)

    def __str__(self) -> str:
        return f"{self.scrutinee} ▷{self.tag}⊳ {self.result}"


@dataclass(frozen=True, slots=True)
class Eq:
    lhs: Type
    rhs: Type

    def __post_init__(self) -> None:
        _shallow(self.lhs)
        _shallow(self.rhs)

    def __str__(self) -> str:
        return f"{self.lhs} = {self.rhs}"


@dataclass(frozen=True, slots=True)
class TagC:
    var: TVar
    tag: Tag

    def __str__(self) -> str:
        return f"{self.var} : {self.tag}"


@dataclass(frozen=True, slots=True)
class Def:
    var: TVar
    body: Type

    def __str__(self) -> str:
        return f"{self.var} := {self.body}"


Constraint = Union[Sub, Chk, Eq, TagC, Def]


class ConstraintSet:
    """Insertion-ordered set of constraints."""

    def __init__(self, items: Iterable[Constraint] = ()) -> None:
        self._items: dict[Constraint, None] = dict.fromkeys(items)

    def add(self, c: Constraint) -> None:
        self._items[c] = None

    def update(self, cs: Iterable[Constraint]) -> None:
        for c in cs:
            self._items[c] = None

    def discard(self, c: Constraint) -> None:
        self._items.pop(c, None)

    def __contains__(self, c: object) -> bool:
        return c in self._items

    def __iter__(self) -> Iterator[Constraint]:
        return iter(list(self._items))

    def __len__(self) -> int:
        return len(self._items)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, ConstraintSet):
            return set(self._items) == set(other._items)
        if isinstance(other, (set, frozenset)):
            return set(self._items) == other
        return NotImplemented

    def __repr__(self) -> str:
        return "{" + ", ".join(map(str, self._items)) + "}"

    def copy(self) -> ConstraintSet:
        return ConstraintSet(self._items)


def constraint_vars(c: Constraint) -> Iterator[TVar]:
    match c:
        case Sub(a, b) | Eq(a, b):
            yield from type_vars(a)
            yield from type_vars(b)
        case Chk(a, _, b):
            yield from type_vars(a)
            yield from type_vars(b)
        case TagC(v, _):
            yield v
        case Def(v, body):
            yield v
            yield from type_vars(body)


def vars_of(cs: Iterable[Constraint]) -> set[TVar]:
    return {v for c in cs for v in constraint_vars(c)}


# -- generation ---------------------------------------------------------------

class ShapeError(Exception):
    """An elimination form's subject has the wrong constraint-type shape."""


def match_tag(a: Type, s: Tag, fresh: VarSupply) -> Type:
    """Most general constraint type with tag ``s`` compatible with ``a``."""
    if s is Tag.DYN:
        return a
    match s, a:
        case Tag.FUN, Fun():
            return a
        case Tag.FUN, TVar():
            return cfun(fresh.fresh(), fresh.fresh())
        case Tag.REF, Ref():
            return a
        case Tag.REF, TVar():
            return cref(fresh.fresh())
        case Tag.INT, Int() | TVar() | Dyn():
            return INT
    raise ContractViolation(f"{a} cannot be matched against tag {s}")


def generate(env: Mapping[str, Type], d: Expr, fresh: VarSupply) -> tuple[Type, ConstraintSet]:
    """Constraint type of ``d`` and the constraints it generates."""
    out = ConstraintSet()
    result = _gen(dict(env), d, fresh, out)
    return result, out


def _gen(env: dict[str, Type], d: Expr, fresh: VarSupply, out: ConstraintSet) -> Type:
    match d:
        case IntLit():
            return INT
        case Var(name):
            if name not in env:
                raise ShapeError(f"unbound variable {name}")
            return env[name]
        case Check(inner, tag):
            a1 = _gen(env, inner, fresh, out)
            a2 = match_tag(a1, tag, fresh)
            out.add(Chk(a1, tag, a2))
            return a2
        case Lam(param, body, TVar() as a, TVar() as b):
            body_t = _gen({**env, param: a}, body, fresh, out)
            out.add(Sub(body_t, b))
            return cfun(a, b)
        case Let(name, bound, body):
            bound_t = _gen(env, bound, fresh, out)
            return _gen({**env, name: bound_t}, body, fresh, out)
        case App(fn, arg):
            fn_t = _gen(env, fn, fresh, out)
            if not isinstance(fn_t, Fun):
                raise ShapeError(f"applied expression has type {fn_t}, not a function type")
            arg_t = _gen(env, arg, fresh, out)
            out.add(Sub(arg_t, fn_t.dom))
            return fn_t.cod
        case RefNew(init, TVar() as a):
            init_t = _gen(env, init, fresh, out)
            out.add(Sub(init_t, a))
            return cref(a)
        case Deref(r):
            ref_t = _gen(env, r, fresh, out)
            if not isinstance(ref_t, Ref):
                raise ShapeError(f"dereferenced expression has type {ref_t}, not a reference type")
            return ref_t.inner
        case Assign(r, v):
            ref_t = _gen(env, r, fresh, out)
            if not isinstance(ref_t, Ref):
                raise ShapeError(f"assigned expression has type {ref_t}, not a reference type")
            v_t = _gen(env, v, fresh, out)
            out.add(Sub(v_t, ref_t.inner))
            return INT
        case Add(l, r):
            for operand in (l, r):
                t = _gen(env, operand, fresh, out)
                if not isinstance(t, Int):
                    raise ShapeError(f"addition operand has type {t}, not int")
            return INT
    raise ShapeError(f"not a transient expression: {type(d).__name__}")


def open_world_constraints(a: Type) -> ConstraintSet:
    """Constraints protecting a program of type ``a`` from untyped callers."""
    match a:
        case Int():
            return ConstraintSet()
        case Ref(v):
            return ConstraintSet([Sub(v, DYN), Sub(DYN, v)])
        case Fun(v1, v2):
            return ConstraintSet([Sub(DYN, v1), Sub(v2, DYN)])
        case _ if is_leaf(a):
            return ConstraintSet([Sub(a, DYN)])
    raise ContractViolation(f"{a} is not a constraint type")


# -- JSON ---------------------------------------------------------------------

def type_to_json(t: Type) -> dict[str, Any]:
    match t:
        case Dyn():
            return {"k": "dyn"}
        case Int():
            return {"k": "int"}
        case TVar(i):
            return {"k": "var", "id": i}
        case Ref(inner):
            return {"k": "ref", "of": type_to_json(inner)}
        case Fun(dom, cod):
            return {"k": "fun", "dom": type_to_json(dom), "cod": type_to_json(cod)}
    raise TypeError(f"not a type: {t!r}")


def type_from_json(obj: Mapping[str, Any]) -> Type:
    k = obj["k"]
    if k == "dyn":
        return DYN
    if k == "int":
        return INT
    if k == "var":
        return TVar(obj["id"])
    if k == "ref":
        return Ref(type_from_json(obj["of"]))
    if k == "fun":
        return Fun(type_from_json(obj["dom"]), type_from_json(obj["cod"]))
    raise ValueError(f"unknown type kind {k!r}")


_TAG_JSON = {Tag.DYN: "dyn", Tag.INT: "int", Tag.REF: "ref", Tag.FUN: "fun"}
_TAG_FROM_JSON = {v: k for k, v in _TAG_JSON.items()}


def constraint_to_json(c: Constraint) -> dict[str, Any]:
    match c:
        case Sub(a, b):
            return {"k": "sub", "lhs": type_to_json(a), "rhs": type_to_json(b)}
        case Chk(a, s, b):
            return {"k": "chk", "scrutinee": type_to_json(a), "tag": _TAG_JSON[s], "result": type_to_json(b)}
        case Eq(a, b):
            return {"k": "eq", "lhs": type_to_json(a), "rhs": type_to_json(b)}
        case TagC(v, s):
            return {"k": "tag", "var": v.index, "tag": _TAG_JSON[s]}
        case Def(v, body):
            return {"k": "def", "var": v.index, "body": type_to_json(body)}
    raise TypeError(f"not a constraint: {c!r}")


def constraint_from_json(obj: Mapping[str, Any]) -> Constraint:
    k = obj["k"]
    if k == "sub":
        return Sub(type_from_json(obj["lhs"]), type_from_json(obj["rhs"]))
    if k == "chk":
        return Chk(type_from_json(obj["scrutinee"]), _TAG_FROM_JSON[obj["tag"]], type_from_json(obj["result"]))
    if k == "eq":
        return Eq(type_from_json(obj["lhs"]), type_from_json(obj["rhs"]))
    if k == "tag":
        return TagC(TVar(obj["var"]), _TAG_FROM_JSON[obj["tag"]])
    if k == "def":
        return Def(TVar(obj["var"]), type_from_json(obj["body"]))
    raise ValueError(f"unknown constraint kind {k!r}")


def dump_constraints(result: Type, cs: Iterable[Constraint]) -> str:
    doc = {"result": type_to_json(result), "constraints": [constraint_to_json(c) for c in cs]}
    return json.dumps(doc, indent=2)
