"""Expression trees for the surface, transient and target calculi.

The three calculi share most node shapes, so they share node classes.
What differs is what a :class:`Lam` or :class:`RefNew` carries:

=============  ==========================  ==================
calculus       ``Lam.dom`` / ``Lam.cod``   ``RefNew.ann``
=============  ==========================  ==================
surface        surface types               surface type
transient      fresh ``TVar`` s            fresh ``TVar``
target         ``None``                    ``None``
=============  ==========================  ==================

``Let`` and ``Check`` only occur in transient and target terms; ``Addr``
and ``Fail`` only in target terms. Source spans are carried for
diagnostics and never take part in equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from .types import Tag, TVar, Type


@dataclass(frozen=True, slots=True)
class Span:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


_span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class Var:
    name: str
    span: Optional[Span] = _span


@dataclass(frozen=True, slots=True)
class IntLit:
    value: int
    span: Optional[Span] = _span


@dataclass(frozen=True, slots=True)
class Add:
    left: Expr
    right: Expr
    span: Optional[Span] = _span


@dataclass(frozen=True, slots=True)
class Lam:
    param: str
    body: Expr
    dom: Optional[Type] = None
    cod: Optional[Type] = None
    span: Optional[Span] = _span


@dataclass(frozen=True, slots=True)
class App:
    fn: Expr
    arg: Expr
    span: Optional[Span] = _span


@dataclass(frozen=True, slots=True)
class Let:
    name: str
    bound: Expr
    body: Expr
    span: Optional[Span] = _span


@dataclass(frozen=True, slots=True)
class RefNew:
    init: Expr
    ann: Optional[Type] = None
    span: Optional[Span] = _span


@dataclass(frozen=True, slots=True)
class Deref:
    ref: Expr
    span: Optional[Span] = _span


@dataclass(frozen=True, slots=True)
class Assign:
    ref: Expr
    value: Expr
    span: Optional[Span] = _span


@dataclass(frozen=True, slots=True)
class Check:
    expr: Expr
    tag: Tag
    span: Optional[Span] = _span


@dataclass(frozen=True, slots=True)
class Addr:
    addr: int
    span: Optional[Span] = _span


@dataclass(frozen=True, slots=True)
class Fail:
    span: Optional[Span] = _span


Expr = Union[Var, IntLit, Add, Lam, App, Let, RefNew, Deref, Assign, Check, Addr, Fail]


def children(e: Expr) -> tuple[Expr, ...]:
    match e:
        case Add(l, r) | App(l, r) | Assign(l, r):
            return (l, r)
        case Lam(body=body):
            return (body,)
        case Let(_, b, body):
            return (b, body)
        case RefNew(init):
            return (init,)
        case Deref(r):
            return (r,)
        case Check(inner, _):
            return (inner,)
        case _:
            return ()


def walk(e: Expr) -> Iterator[Expr]:
    """Pre-order traversal."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def node_count(e: Expr) -> int:
    return sum(1 for _ in walk(e))


def binder_vars(e: Expr) -> list[TVar]:
    """Type variables attached to lambdas and reference cells, in pre-order."""
    out: list[TVar] = []
    for node in walk(e):
        match node:
            case Lam(dom=TVar() as a, cod=TVar() as b):
                out += [a, b]
            case RefNew(ann=TVar() as a):
                out.append(a)
    return out


# -- printing -----------------------------------------------------------------
#
# Precedence levels: 0 assign, 1 add, 2 app, 3 postfix check, 4 atom.

def pretty(e: Expr) -> str:
    """Render an expression of any calculus in the concrete syntax."""
    return _pp(e, 0)


def _paren(text: str, needed: bool) -> str:
    return f"({text})" if needed else text


def _ann(t: Type) -> str:
    return str(t)


def _pp(e: Expr, prec: int) -> str:
    match e:
        case Var(name):
            return name
        case IntLit(value):
            return str(value)
        case Addr(a):
            return f"#{a}"
        case Fail():
            return "fail"
        case Add(l, r):
            return _paren(f"{_pp(l, 1)} + {_pp(r, 2)}", prec > 1)
        case App(f, a):
            return _paren(f"{_pp(f, 2)} {_pp(a, 3)}", prec > 2)
        case Assign(r, v):
            return _paren(f"{_pp(r, 1)} := {_pp(v, 0)}", prec > 0)
        case Check(inner, tag):
            return _paren(f"{_pp(inner, 4)}▷{tag}", prec > 3)
        case Deref(r):
            return f"!{_pp(r, 4)}"
        case RefNew(init, ann):
            if ann is None:
                head = "ref"
            elif isinstance(ann, TVar):
                head = f"ref⟨{ann}⟩"
            else:
                head = f"ref<{_ann(ann)}>"
            return _paren(f"{head} {_pp(init, 4)}", prec > 3)
        case Lam(param, body, dom, cod):
            if dom is None:
                return f"fun {param} {{ {_pp(body, 0)} }}"
            if isinstance(dom, TVar):
                return f"fun⟨{dom},{cod}⟩ {param} {{ {_pp(body, 0)} }}"
            return f"fun ({param}: {_ann(dom)}) -> {_ann(cod)} {{ {_pp(body, 0)} }}"
        case Let(name, b, body):
            return _paren(f"let {name} = {_pp(b, 0)} in {_pp(body, 0)}", prec > 0)
    raise TypeError(f"not an expression: {e!r}")
