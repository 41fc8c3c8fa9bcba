"""Concrete syntax and static typing for surface programs (``.gts`` files).

Grammar::

    type   := arrow
    arrow  := prim ("->" arrow)?
    prim   := "dyn" | "int" | "ref" prim | "(" type ")"
    expr   := assign
    assign := add (":=" assign)?
    add    := app ("+" app)*
    app    := atom atom*
    atom   := INT | IDENT | "!" atom | "ref" "<" type ">" atom
            | "fun" "(" IDENT ":" type ")" "->" type "{" expr "}"
            | "(" expr ")"

``#`` starts a comment that runs to the end of the line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping

from .syntax import Add, App, Assign, Deref, Expr, IntLit, Lam, RefNew, Span, Var
from .types import DYN, INT, Fun, Ref, Type, consistent, match_fun, match_ref

KEYWORDS = frozenset({"dyn", "int", "ref", "fun"})

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<int>-?[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>->|:=|[()<>{}:+!])
    """,
    re.VERBOSE,
)


class ParseError(Exception):
    def __init__(self, message: str, span: Span, expected: Iterable[str] = ()) -> None:
        self.span = span
        self.expected = sorted(set(expected))
        detail = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{span}: {message}{detail}")


class SurfaceTypeError(Exception):
    def __init__(self, rule: str, message: str, span: Span | None, types: tuple[Type, ...] = ()) -> None:
        self.rule = rule
        self.span = span
        self.types = types
        where = f"{span}: " if span else ""
        super().__init__(f"{where}{rule}: {message}")


@dataclass(frozen=True)
class Token:
    kind: str  # "int", "ident", "kw", "sym", "eof"
    text: str
    span: Span


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        span = Span(line, pos - line_start + 1)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", span)
        kind = m.lastgroup
        lexeme = m.group()
        if kind == "ident" and lexeme in KEYWORDS:
            kind = "kw"
        if kind != "ws":
            tokens.append(Token(kind, lexeme, span))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            line_start = pos + lexeme.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", Span(line, pos - line_start + 1)))
    return tokens


_ATOM_START = {"int", "ident", "!", "ref", "fun", "("}


class _Parser:
    def __init__(self, text: str) -> None:
        self.toks = tokenize(text)
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def _key(self, tok: Token) -> str:
        return tok.kind if tok.kind in ("int", "ident", "eof") else tok.text

    def at(self, *keys: str) -> bool:
        return self._key(self.tok) in keys

    def expect(self, key: str) -> Token:
        if not self.at(key):
            self.fail({key})
        tok = self.tok
        self.pos += 1
        return tok

    def fail(self, expected: Iterable[str]) -> None:
        tok = self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ParseError(f"unexpected {found}", tok.span, expected)

    # types
    def type_(self) -> Type:
        dom = self.prim_type()
        if self.at("->"):
            self.pos += 1
            return Fun(dom, self.type_())
        return dom

    def prim_type(self) -> Type:
        if self.at("dyn"):
            self.pos += 1
            return DYN
        if self.at("int"):
            self.pos += 1
            return INT
        if self.at("ref"):
            self.pos += 1
            return Ref(self.prim_type())
        if self.at("("):
            self.pos += 1
            t = self.type_()
            self.expect(")")
            return t
        self.fail({"dyn", "int", "ref", "("})

    # expressions
    def expr(self) -> Expr:
        lhs = self.add()
        if self.at(":="):
            span = self.tok.span
            self.pos += 1
            return Assign(lhs, self.expr(), span=span)
        return lhs

    def add(self) -> Expr:
        e = self.app()
        while self.at("+"):
            span = self.tok.span
            self.pos += 1
            e = Add(e, self.app(), span=span)
        return e

    def app(self) -> Expr:
        e = self.atom()
        while self.at(*_ATOM_START):
            span = self.tok.span
            e = App(e, self.atom(), span=span)
        return e

    def atom(self) -> Expr:
        tok = self.tok
        key = self._key(tok)
        if key == "int":
            self.pos += 1
            return IntLit(int(tok.text), span=tok.span)
        if key == "ident":
            self.pos += 1
            return Var(tok.text, span=tok.span)
        if key == "!":
            self.pos += 1
            return Deref(self.atom(), span=tok.span)
        if key == "ref":
            self.pos += 1
            self.expect("<")
            ann = self.type_()
            self.expect(">")
            return RefNew(self.atom(), ann, span=tok.span)
        if key == "fun":
            self.pos += 1
            self.expect("(")
            param = self.expect("ident").text
            self.expect(":")
            dom = self.type_()
            self.expect(")")
            self.expect("->")
            cod = self.type_()
            self.expect("{")
            body = self.expr()
            self.expect("}")
            return Lam(param, body, dom, cod, span=tok.span)
        if key == "(":
            self.pos += 1
            e = self.expr()
            self.expect(")")
            return e
        self.fail(_ATOM_START)


def parse(text: str) -> Expr:
    p = _Parser(text)
    e = p.expr()
    p.expect("eof")
    return e


def parse_type(text: str) -> Type:
    p = _Parser(text)
    t = p.type_()
    p.expect("eof")
    return t


def parse_file(path: str) -> Expr:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


# -- surface typing -----------------------------------------------------------

TypeEnv = Mapping[str, Type]


def typecheck_surface(env: TypeEnv, s: Expr) -> Type:
    """Type of ``s`` under ``env`` in the gradual surface type system."""
    match s:
        case IntLit():
            return INT
        case Var(name):
            if name not in env:
                raise SurfaceTypeError("SVar", f"unbound variable {name}", s.span)
            return env[name]
        case Lam(param, body, dom, cod):
            body_t = typecheck_surface({**env, param: dom}, body)
            if not consistent(body_t, cod):
                raise SurfaceTypeError(
                    "SAbs", f"body type {body_t} is inconsistent with return type {cod}", s.span, (body_t, cod)
                )
            return Fun(dom, cod)
        case App(fn, arg):
            fn_t = typecheck_surface(env, fn)
            matched = match_fun(fn_t)
            if matched is None:
                raise SurfaceTypeError("SApp", f"{fn_t} is not a function type", s.span, (fn_t,))
            dom, cod = matched
            arg_t = typecheck_surface(env, arg)
            if not consistent(arg_t, dom):
                raise SurfaceTypeError(
                    "SApp", f"argument type {arg_t} is inconsistent with parameter type {dom}", s.span, (arg_t, dom)
                )
            return cod
        case RefNew(init, ann):
            init_t = typecheck_surface(env, init)
            if not consistent(init_t, ann):
                raise SurfaceTypeError(
                    "SRef", f"initializer type {init_t} is inconsistent with {ann}", s.span, (init_t, ann)
                )
            return Ref(ann)
        case Deref(r):
            ref_t = typecheck_surface(env, r)
            inner = match_ref(ref_t)
            if inner is None:
                raise SurfaceTypeError("SDeref", f"{ref_t} is not a reference type", s.span, (ref_t,))
            return inner
        case Assign(r, v):
            ref_t = typecheck_surface(env, r)
            inner = match_ref(ref_t)
            if inner is None:
                raise SurfaceTypeError("SUpdt", f"{ref_t} is not a reference type", s.span, (ref_t,))
            v_t = typecheck_surface(env, v)
            if not consistent(v_t, inner):
                raise SurfaceTypeError(
                    "SUpdt", f"assigned type {v_t} is inconsistent with {inner}", s.span, (v_t, inner)
                )
            return INT
        case Add(l, r):
            for operand in (l, r):
                t = typecheck_surface(env, operand)
                if not consistent(t, INT):
                    raise SurfaceTypeError("SAdd", f"operand type {t} is inconsistent with int", s.span, (t, INT))
            return INT
    raise SurfaceTypeError("syntax", f"not a surface expression: {type(s).__name__}", getattr(s, "span", None))
