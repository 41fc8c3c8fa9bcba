"""Transient check insertion: surface terms to transient terms."""

from __future__ import annotations

from typing import Mapping

from .frontend import SurfaceTypeError, TypeEnv
from .syntax import Add, App, Assign, Check, Deref, Expr, IntLit, Lam, Let, RefNew, Var
from .types import INT, Fun, Ref, Tag, Type, VarSupply, consistent, match_fun, match_ref, tag_of_surface


def insert_checks(env: TypeEnv, s: Expr, fresh: VarSupply) -> tuple[Expr, Type]:
    """Translate ``s`` into a transient term, returning it with its surface type.

    Checks go at function entry, call sites (callee and result),
    dereferences (reference and result), assignment targets and addition
    operands. Checks against ``dyn`` are kept; the optimizer drops them.
    """
    match s:
        case IntLit():
            return s, INT
        case Var(name):
            if name not in env:
                raise SurfaceTypeError("SVar", f"unbound variable {name}", s.span)
            return s, env[name]
        case Lam(param, body, dom, cod):
            a, b = fresh.fresh(), fresh.fresh()
            d, body_t = insert_checks({**env, param: dom}, body, fresh)
            if not consistent(body_t, cod):
                raise SurfaceTypeError("SAbs", f"body type {body_t} is inconsistent with {cod}", s.span)
            entry = Check(Var(param, span=s.span), tag_of_surface(dom), span=s.span)
            return Lam(param, Let(param, entry, d, span=s.span), a, b, span=s.span), Fun(dom, cod)
        case App(fn, arg):
            d1, fn_t = insert_checks(env, fn, fresh)
            matched = match_fun(fn_t)
            if matched is None:
                raise SurfaceTypeError("SApp", f"{fn_t} is not a function type", s.span)
            dom, cod = matched
            d2, arg_t = insert_checks(env, arg, fresh)
            if not consistent(arg_t, dom):
                raise SurfaceTypeError("SApp", f"{arg_t} is inconsistent with {dom}", s.span)
            call = App(Check(d1, Tag.FUN, span=s.span), d2, span=s.span)
            return Check(call, tag_of_surface(cod), span=s.span), cod
        case RefNew(init, ann):
            a = fresh.fresh()
            d, init_t = insert_checks(env, init, fresh)
            if not consistent(init_t, ann):
                raise SurfaceTypeError("SRef", f"{init_t} is inconsistent with {ann}", s.span)
            return RefNew(d, a, span=s.span), Ref(ann)
        case Deref(r):
            d, ref_t = insert_checks(env, r, fresh)
            inner = match_ref(ref_t)
            if inner is None:
                raise SurfaceTypeError("SDeref", f"{ref_t} is not a reference type", s.span)
            read = Deref(Check(d, Tag.REF, span=s.span), span=s.span)
            return Check(read, tag_of_surface(inner), span=s.span), inner
        case Assign(r, v):
            d1, ref_t = insert_checks(env, r, fresh)
            inner = match_ref(ref_t)
            if inner is None:
                raise SurfaceTypeError("SUpdt", f"{ref_t} is not a reference type", s.span)
            d2, v_t = insert_checks(env, v, fresh)
            if not consistent(v_t, inner):
                raise SurfaceTypeError("SUpdt", f"{v_t} is inconsistent with {inner}", s.span)
            return Assign(Check(d1, Tag.REF, span=s.span), d2, span=s.span), INT
        case Add(l, r):
            d1, t1 = insert_checks(env, l, fresh)
            d2, t2 = insert_checks(env, r, fresh)
            for t in (t1, t2):
                if not consistent(t, INT):
                    raise SurfaceTypeError("SAdd", f"{t} is inconsistent with int", s.span)
            return Add(Check(d1, Tag.INT, span=s.span), Check(d2, Tag.INT, span=s.span), span=s.span), INT
    raise SurfaceTypeError("syntax", f"not a surface expression: {type(s).__name__}", getattr(s, "span", None))


class ShallowTypeError(Exception):
    pass


def shallow_typecheck(d: Expr, env: Mapping[str, Tag] | None = None) -> Tag:
    """Tag of a transient term in the simple tag-level type system.

    Every variable is ``dyn``-tagged. A position requiring ``dyn`` accepts
    any tag; ``int``, ``ref`` and ``->`` positions need an exact match.
    """
    env = {} if env is None else env

    def need(sub: Expr, tag: Tag, rule: str) -> None:
        got = shallow_typecheck(sub, env)
        if tag is not Tag.DYN and got is not tag:
            raise ShallowTypeError(f"{rule}: expected tag {tag}, got {got}")

    match d:
        case IntLit():
            return Tag.INT
        case Var(name):
            if name not in env:
                raise ShallowTypeError(f"PVar: unbound variable {name}")
            return env[name]
        case Lam(param, body):
            shallow_typecheck(body, {**env, param: Tag.DYN})
            return Tag.FUN
        case App(fn, arg):
            need(fn, Tag.FUN, "PApp")
            need(arg, Tag.DYN, "PApp")
            return Tag.DYN
        case RefNew(init):
            need(init, Tag.DYN, "PRef")
            return Tag.REF
        case Deref(r):
            need(r, Tag.REF, "PDeref")
            return Tag.DYN
        case Assign(r, v):
            need(r, Tag.REF, "PUpdt")
            need(v, Tag.DYN, "PUpdt")
            return Tag.INT
        case Add(l, r):
            need(l, Tag.INT, "PAdd")
            need(r, Tag.INT, "PAdd")
            return Tag.INT
        case Let(name, bound, body):
            need(bound, Tag.DYN, "PLet")
            return shallow_typecheck(body, {**env, name: Tag.DYN})
        case Check(inner, tag):
            need(inner, Tag.DYN, "PCheck")
            return tag
    raise ShallowTypeError(f"not a transient expression: {type(d).__name__}")
