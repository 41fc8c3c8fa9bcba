"""Small-step evaluation of target terms with a mutable-reference store."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from .syntax import Add, Addr, App, Assign, Check, Deref, Expr, Fail, IntLit, Lam, Let, RefNew, Var
from .types import Tag

DEFAULT_FUEL = 1_000_000

Value = Union[IntLit, Lam, Addr]
Store = dict[int, Value]


def is_value(e: Expr) -> bool:
    return isinstance(e, (IntLit, Lam, Addr))


def has_tag(v: Value, s: Tag) -> bool:
    if s is Tag.DYN:
        return True
    match v:
        case IntLit():
            return s is Tag.INT
        case Lam():
            return s is Tag.FUN
        case Addr():
            return s is Tag.REF
    return False


@dataclass
class Stats:
    steps: int = 0
    checks_executed: int = 0
    checks_failed: int = 0
    dyn_tag_checks: int = 0  # subset of checks_executed against dyn; these never fail

    @property
    def tagged_checks(self) -> int:
        """Executed checks against int, ref or function tags."""
        return self.checks_executed - self.dyn_tag_checks


@dataclass(frozen=True)
class Running:
    expr: Expr
    store: Store = field(default_factory=dict)


@dataclass(frozen=True)
class Failed:
    pass


MachineState = Union[Running, Failed]


class StuckState(Exception):
    def __init__(self, expr: Expr) -> None:
        self.expr = expr
        super().__init__(f"no rule applies to {type(expr).__name__}")


class _CheckFailed(Exception):
    pass


def subst(e: Expr, name: str, v: Value) -> Expr:
    """``e[name/v]`` for a closed value ``v``."""
    match e:
        case Var(n):
            return v if n == name else e
        case IntLit() | Addr() | Fail():
            return e
        case Lam(param, body):
            if param == name:
                return e
            return Lam(param, subst(body, name, v), span=e.span)
        case Let(n, bound, body):
            new_body = body if n == name else subst(body, name, v)
            return Let(n, subst(bound, name, v), new_body, span=e.span)
        case Add(l, r):
            return Add(subst(l, name, v), subst(r, name, v), span=e.span)
        case App(f, a):
            return App(subst(f, name, v), subst(a, name, v), span=e.span)
        case RefNew(init):
            return RefNew(subst(init, name, v), span=e.span)
        case Deref(r):
            return Deref(subst(r, name, v), span=e.span)
        case Assign(r, val):
            return Assign(subst(r, name, v), subst(val, name, v), span=e.span)
        case Check(inner, tag):
            return Check(subst(inner, name, v), tag, span=e.span)
    raise TypeError(f"not a target expression: {e!r}")


def _reduce(e: Expr, store: Store, stats: Stats) -> Expr:
    """One reduction of the leftmost-innermost redex; mutates ``store``."""
    match e:
        case Fail():
            raise _CheckFailed
        case Check(inner, tag):
            if not is_value(inner):
                return Check(_reduce(inner, store, stats), tag, span=e.span)
            stats.checks_executed += 1
            if tag is Tag.DYN:
                stats.dyn_tag_checks += 1
            if has_tag(inner, tag):
                return inner
            stats.checks_failed += 1
            raise _CheckFailed
        case Add(l, r):
            if not is_value(l):
                return Add(_reduce(l, store, stats), r, span=e.span)
            if not is_value(r):
                return Add(l, _reduce(r, store, stats), span=e.span)
            if isinstance(l, IntLit) and isinstance(r, IntLit):
                return IntLit(l.value + r.value)
            raise StuckState(e)
        case App(f, a):
            if not is_value(f):
                return App(_reduce(f, store, stats), a, span=e.span)
            if not is_value(a):
                return App(f, _reduce(a, store, stats), span=e.span)
            if isinstance(f, Lam):
                return subst(f.body, f.param, a)
            raise StuckState(e)
        case Let(name, bound, body):
            if not is_value(bound):
                return Let(name, _reduce(bound, store, stats), body, span=e.span)
            return subst(body, name, bound)
        case RefNew(init):
            if not is_value(init):
                return RefNew(_reduce(init, store, stats), span=e.span)
            a = len(store)
            store[a] = init
            return Addr(a)
        case Deref(r):
            if not is_value(r):
                return Deref(_reduce(r, store, stats), span=e.span)
            if isinstance(r, Addr) and r.addr in store:
                return store[r.addr]
            raise StuckState(e)
        case Assign(r, v):
            if not is_value(r):
                return Assign(_reduce(r, store, stats), v, span=e.span)
            if not is_value(v):
                return Assign(r, _reduce(v, store, stats), span=e.span)
            if isinstance(r, Addr) and r.addr in store:
                store[r.addr] = v
                return IntLit(0)
            raise StuckState(e)
    raise StuckState(e)


def step(state: MachineState, stats: Stats | None = None) -> MachineState:
    """Advance one step; ``Failed`` is absorbing. Raises :class:`StuckState`."""
    if isinstance(state, Failed):
        return state
    if is_value(state.expr):
        raise StuckState(state.expr)
    stats = stats if stats is not None else Stats()
    store = dict(state.store)
    try:
        e = _reduce(state.expr, store, stats)
    except _CheckFailed:
        stats.steps += 1
        return Failed()
    stats.steps += 1
    return Running(e, store)


@dataclass(frozen=True)
class Outcome:
    kind: str  # "value", "fail", "fuel" or "stuck"
    stats: Stats
    value: Optional[Value] = None
    store: Optional[Store] = None
    expr: Optional[Expr] = None

    def describe(self) -> str:
        if self.kind == "value":
            match self.value:
                case IntLit(n):
                    return f"value {n}"
                case Lam():
                    return "value <fun>"
                case Addr(a):
                    return f"value <ref #{a}>"
        return self.kind

    def observation(self) -> tuple[str, Optional[int | str]]:
        """Observable result: terminal kind plus the integer, or the value kind."""
        if self.kind != "value":
            return (self.kind, None)
        match self.value:
            case IntLit(n):
                return ("value", n)
            case Lam():
                return ("value", "fun")
        return ("value", "ref")


def run(
    e: Expr,
    fuel: int = DEFAULT_FUEL,
    on_step: Callable[[Expr, Store], None] | None = None,
) -> Outcome:
    """Evaluate ``e`` for at most ``fuel`` steps."""
    if fuel < 0:
        raise ValueError("fuel must be non-negative")
    stats = Stats()
    store: Store = {}
    expr = e
    while True:
        if on_step is not None:
            on_step(expr, store)
        if is_value(expr):
            return Outcome("value", stats, value=expr, store=store)
        if stats.steps >= fuel:
            return Outcome("fuel", stats, expr=expr)
        try:
            expr = _reduce(expr, store, stats)
        except _CheckFailed:
            stats.steps += 1
            return Outcome("fail", stats)
        except StuckState:
            return Outcome("stuck", stats, expr=expr)
        stats.steps += 1


def agree(a: Outcome, b: Outcome) -> bool:
    return a.observation() == b.observation()
