"""Types, tags and the relations shared by every stage of the pipeline.

One family of immutable type nodes serves all three roles:

* surface types ``U``   -- built from Dyn, Int, Ref, Fun (no variables)
* constraint types ``A`` -- shallow: Ref/Fun arguments are leaves (TVar or Dyn)
* full types ``T``       -- arbitrary nesting, variables allowed

The role is a property of the value, checked by :func:`is_surface`,
:func:`is_shallow` and :func:`is_ground`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, Union


class Tag(enum.Enum):
    DYN = "dyn"
    INT = "int"
    REF = "ref"
    FUN = "->"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, slots=True)
class Dyn:
    def __str__(self) -> str:
        return "dyn"


@dataclass(frozen=True, slots=True)
class Int:
    def __str__(self) -> str:
        return "int"


@dataclass(frozen=True, slots=True, order=True)
class TVar:
    index: int

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError(f"type variable index must be non-negative, got {self.index}")

    def __str__(self) -> str:
        return f"a{self.index}"


@dataclass(frozen=True, slots=True)
class Ref:
    inner: Type

    def __str__(self) -> str:
        return f"ref {_wrap_arrow(self.inner)}"


@dataclass(frozen=True, slots=True)
class Fun:
    dom: Type
    cod: Type

    def __str__(self) -> str:
        return f"{_wrap_arrow(self.dom)} -> {self.cod}"


Type = Union[Dyn, Int, TVar, Ref, Fun]

DYN = Dyn()
INT = Int()


def _wrap_arrow(t: Type) -> str:
    return f"({t})" if isinstance(t, Fun) else str(t)


class ContractViolation(Exception):
    """An internal invariant was broken; indicates a bug upstream."""


class VarSupply:
    """Monotone counter for fresh type variables within one pipeline run."""

    def __init__(self, start: int = 0) -> None:
        self._next = start

    def fresh(self) -> TVar:
        v = TVar(self._next)
        self._next += 1
        return v

    @property
    def next_index(self) -> int:
        return self._next


# -- shape predicates ---------------------------------------------------------

def is_leaf(t: Type) -> bool:
    return isinstance(t, (TVar, Dyn))


def is_shallow(t: Type) -> bool:
    match t:
        case Ref(inner):
            return is_leaf(inner)
        case Fun(dom, cod):
            return is_leaf(dom) and is_leaf(cod)
        case _:
            return True


def is_surface(t: Type) -> bool:
    match t:
        case TVar():
            return False
        case Ref(inner):
            return is_surface(inner)
        case Fun(dom, cod):
            return is_surface(dom) and is_surface(cod)
        case _:
            return True


def type_vars(t: Type) -> Iterator[TVar]:
    match t:
        case TVar():
            yield t
        case Ref(inner):
            yield from type_vars(inner)
        case Fun(dom, cod):
            yield from type_vars(dom)
            yield from type_vars(cod)


def is_ground(t: Type) -> bool:
    return next(type_vars(t), None) is None


def cref(v: Type) -> Ref:
    """Shallow reference constraint type; the argument must be a leaf."""
    if not is_leaf(v):
        raise ContractViolation(f"constraint type ref {v} is not shallow")
    return Ref(v)


def cfun(v1: Type, v2: Type) -> Fun:
    """Shallow function constraint type; both arguments must be leaves."""
    if not (is_leaf(v1) and is_leaf(v2)):
        raise ContractViolation(f"constraint type {v1} -> {v2} is not shallow")
    return Fun(v1, v2)


def substitute(t: Type, mapping: dict[TVar, Type]) -> Type:
    match t:
        case TVar():
            return mapping.get(t, t)
        case Ref(inner):
            return Ref(substitute(inner, mapping))
        case Fun(dom, cod):
            return Fun(substitute(dom, mapping), substitute(cod, mapping))
        case _:
            return t


# -- relations on surface types -----------------------------------------------

def consistent(u1: Type, u2: Type) -> bool:
    match u1, u2:
        case Dyn(), _:
            return True
        case _, Dyn():
            return True
        case Int(), Int():
            return True
        case Fun(a1, b1), Fun(a2, b2):
            return consistent(a1, a2) and consistent(b1, b2)
        case Ref(a1), Ref(a2):
            return consistent(a1, a2)
        case _:
            return False


def match_fun(u: Type) -> tuple[Type, Type] | None:
    match u:
        case Fun(dom, cod):
            return dom, cod
        case Dyn():
            return DYN, DYN
        case _:
            return None


def match_ref(u: Type) -> Type | None:
    match u:
        case Ref(inner):
            return inner
        case Dyn():
            return DYN
        case _:
            return None


# -- tags ---------------------------------------------------------------------

def tag_of(t: Type) -> Tag:
    """Constructor head of a type; variables have no tag."""
    match t:
        case Dyn():
            return Tag.DYN
        case Int():
            return Tag.INT
        case Ref():
            return Tag.REF
        case Fun():
            return Tag.FUN
        case TVar():
            raise ContractViolation(f"tag of unresolved variable {t}")
    raise TypeError(f"not a type: {t!r}")


def tag_of_surface(u: Type) -> Tag:
    return tag_of(u)


def tag_of_full(t: Type) -> Tag:
    return tag_of(t)


def tag_of_ctype(a: Type) -> Tag:
    return tag_of(a)


def tag_precise(s1: Tag, s2: Tag) -> bool:
    """``s1`` is at least as precise as ``s2``."""
    return s1 == s2 or s2 is Tag.DYN


def tag_join(s1: Tag, s2: Tag) -> Tag:
    return s1 if s1 == s2 else Tag.DYN


def up_tag(s: Tag) -> Type:
    """Most general full type carrying tag ``s``."""
    return {
        Tag.DYN: DYN,
        Tag.INT: INT,
        Tag.REF: Ref(DYN),
        Tag.FUN: Fun(DYN, DYN),
    }[s]


def parts(a: Type) -> frozenset[TVar]:
    match a:
        case Ref(TVar() as v):
            return frozenset({v})
        case Fun(dom, cod):
            return frozenset(v for v in (dom, cod) if isinstance(v, TVar))
        case _:
            return frozenset()


# -- subtyping on full types --------------------------------------------------

def subtype(t1: Type, t2: Type) -> bool:
    """Subtyping on variable-free full types; ``dyn`` is not a top type."""
    match t1, t2:
        case TVar(), _:
            raise ContractViolation(f"subtype on unresolved variable {t1}")
        case _, TVar():
            raise ContractViolation(f"subtype on unresolved variable {t2}")
        case Int(), Int():
            return True
        case Dyn(), Dyn():
            return True
        case Int(), Dyn():
            return True
        case Fun(d1, c1), Fun(d2, c2):
            return subtype(d2, d1) and subtype(c1, c2)
        case Ref(i1), Ref(i2):
            return subtype(i1, i2) and subtype(i2, i1)
        case Fun(), Dyn():
            return subtype(t1, Fun(DYN, DYN))
        case Ref(), Dyn():
            return subtype(t1, Ref(DYN))
        case _:
            return False


def parse_tag(text: str) -> Tag:
    for tag in Tag:
        if tag.value == text or tag.name.lower() == text:
            return tag
    raise ValueError(f"unknown tag {text!r}")
