"""Constraint simplification, the solve loop and an independent solution checker.

Simplification applies the first matching rule, scanning the rules in
order and the constraints in insertion order, until none applies. Rule
names in traces are the rule's position in that order:

====  =====================================================================
1     ``V1->V2 <: dyn``            =>  ``dyn <: V1``, ``V2 <: dyn``
2     ``V1->V2 <: V3->V4``         =>  ``V3 <: V1``, ``V2 <: V4``
3     ``ref V <: dyn``             =>  ``V = dyn``
4     ``ref V1 <: ref V2``         =>  ``V1 = V2``
5     ``A <: A``                   =>  (dropped)
6     ``int <: dyn``               =>  (dropped)
7     ``V1->V2 = V3->V4``          =>  ``V1 = V3``, ``V2 = V4``
8     ``ref V1 = ref V2``          =>  ``V1 = V2``
9     ``A = A``                    =>  (dropped)
10    ``A = a``  (A not a var)     =>  ``a = A``
11    ``a = A``                    =>  substitute ``a`` by ``A`` everywhere, record ``a := A``
12    ``A |>S A``                  =>  (dropped)
12a   ``A |>S B`` (A not a var)    =>  ``A = B`` if A has tag S, else parts of B are dyn
13    ``a:S``, ``a |>S A`` (last)  =>  ``a = A``
14    ``a:S1``, ``a |>S2 A``       =>  keep ``a:S1``; parts of A are dyn
15    ``a |>S A1``, ``a |>S A2``   =>  keep the first; ``A2 = A1``
16    ``a:S`` alone                =>  ``a = match(a, S)``
====  =====================================================================

When no variable is solvable, each cycle of variable-to-variable subtyping
constraints is collapsed by equating its members with the least-indexed
one (traced as rule ``cycle``). Subtyping is antisymmetric, so every
solution already gives the members of a cycle the same type.

Rule 5 covers every syntactically equal pair (``int <: int`` arises after
substitution), rule 12a handles check constraints whose scrutinee was
substituted by a constructor type, and rule 16 with ``S = dyn`` emits
``a = dyn``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import networkx as nx

from .constraints import (
    Chk,
    Constraint,
    ConstraintSet,
    Def,
    Eq,
    Sub,
    TagC,
    constraint_vars,
    match_tag,
    type_to_json,
    vars_of,
)
from .types import (
    DYN,
    ContractViolation,
    Dyn,
    Fun,
    Int,
    Ref,
    Tag,
    TVar,
    Type,
    VarSupply,
    is_ground,
    parts,
    substitute,
    subtype,
    tag_join,
    tag_of,
    type_vars,
)

Solution = dict[TVar, Type]


class SolverError(Exception):
    pass


class Unsatisfiable(SolverError):
    def __init__(self, constraint: Constraint, reason: str = "no solution") -> None:
        self.constraint = constraint
        super().__init__(f"unsatisfiable constraint {constraint}: {reason}")


class NoProgress(SolverError):
    def __init__(self, remaining: ConstraintSet, reason: str = "no solvable variable") -> None:
        self.remaining = remaining
        super().__init__(f"{reason}; {len(remaining)} constraints remain")


@dataclass(frozen=True)
class TraceStep:
    rule: str
    consumed: tuple[Constraint, ...]
    produced: tuple[Constraint, ...]

    def __str__(self) -> str:
        def fmt(cs: tuple[Constraint, ...]) -> str:
            return "{" + ", ".join(map(str, cs)) + "}"

        return f"RULE {self.rule}: {fmt(self.consumed)} ==> {fmt(self.produced)}"


@dataclass
class SolverTrace:
    steps: list[TraceStep] = field(default_factory=list)

    def record(self, rule: str, consumed: Iterable[Constraint], produced: Iterable[Constraint]) -> None:
        self.steps.append(TraceStep(rule, tuple(consumed), tuple(produced)))

    def replay(self, omega: Iterable[Constraint]) -> set[Constraint]:
        state = set(omega)
        for step in self.steps:
            state.difference_update(step.consumed)
            state.update(step.produced)
        return state

    def render(self) -> str:
        return "".join(f"{s}\n" for s in self.steps)


def _is_var(t: Type) -> bool:
    return isinstance(t, TVar)


def _fresh_supply(cs: Iterable[Constraint]) -> VarSupply:
    vs = vars_of(cs)
    return VarSupply(max((v.index for v in vs), default=-1) + 1)


def termination_measure(cs: Iterable[Constraint]) -> tuple[int, ...]:
    """Lexicographic measure that every simplification step decreases.

    (tag constraints, check constraints, variables other than definition
    heads, constructors in subtype/equality constraints, misoriented
    equalities, non-definition constraints)
    """
    cs = list(cs)

    def ctors(t: Type) -> int:
        match t:
            case Int():
                return 1
            case Ref(i):
                return 1 + ctors(i)
            case Fun(a, b):
                return 1 + ctors(a) + ctors(b)
            case _:
                return 0

    n_tag = sum(isinstance(c, TagC) for c in cs)
    n_chk = sum(isinstance(c, Chk) for c in cs)
    live: set[TVar] = set()
    for c in cs:
        if isinstance(c, Def):
            live.update(type_vars(c.body))
        else:
            live.update(constraint_vars(c))
    n_ctor = sum(ctors(c.lhs) + ctors(c.rhs) for c in cs if isinstance(c, (Sub, Eq)))
    n_misoriented = sum(isinstance(c, Eq) and not _is_var(c.lhs) and _is_var(c.rhs) for c in cs)
    n_open = sum(not isinstance(c, Def) for c in cs)
    return (n_tag, n_chk, len(live), n_ctor, n_misoriented, n_open)


def _parts_dyn(a: Type) -> list[Constraint]:
    return [Eq(v, DYN) for v in sorted(parts(a))]


class _Simplifier:
    def __init__(self, cs: Iterable[Constraint], fresh: VarSupply, trace: SolverTrace | None) -> None:
        self.items: dict[Constraint, None] = dict.fromkeys(cs)
        self.fresh = fresh
        self.trace = trace

    def _replace(self, rule: str, consumed: list[Constraint], produced: list[Constraint]) -> None:
        for c in consumed:
            del self.items[c]
        for c in produced:
            self.items[c] = None
        if self.trace is not None:
            self.trace.record(rule, consumed, produced)

    def run(self) -> None:
        while self._step():
            pass

    def _step(self) -> bool:
        items = list(self.items)
        for rule in self._RULES:
            if rule(self, items):
                return True
        return False

    # -- subtype decomposition ------------------------------------------------
    def _r1(self, items: list[Constraint]) -> bool:
        for c in items:
            if isinstance(c, Sub) and isinstance(c.lhs, Fun) and isinstance(c.rhs, Dyn):
                self._replace("1", [c], [Sub(DYN, c.lhs.dom), Sub(c.lhs.cod, DYN)])
                return True
        return False

    def _r2(self, items: list[Constraint]) -> bool:
        for c in items:
            if isinstance(c, Sub) and isinstance(c.lhs, Fun) and isinstance(c.rhs, Fun):
                self._replace("2", [c], [Sub(c.rhs.dom, c.lhs.dom), Sub(c.lhs.cod, c.rhs.cod)])
                return True
        return False

    def _r3(self, items: list[Constraint]) -> bool:
        for c in items:
            if isinstance(c, Sub) and isinstance(c.lhs, Ref) and isinstance(c.rhs, Dyn):
                self._replace("3", [c], [Eq(c.lhs.inner, DYN)])
                return True
        return False

    def _r4(self, items: list[Constraint]) -> bool:
        for c in items:
            if isinstance(c, Sub) and isinstance(c.lhs, Ref) and isinstance(c.rhs, Ref):
                self._replace("4", [c], [Eq(c.lhs.inner, c.rhs.inner)])
                return True
        return False

    def _r5(self, items: list[Constraint]) -> bool:
        for c in items:
            if isinstance(c, Sub) and c.lhs == c.rhs:
                self._replace("5", [c], [])
                return True
        return False

    def _r6(self, items: list[Constraint]) -> bool:
        for c in items:
            if isinstance(c, Sub) and isinstance(c.lhs, Int) and isinstance(c.rhs, Dyn):
                self._replace("6", [c], [])
                return True
        return False

    # -- equalities -------------------------------------------------------------
    def _r7(self, items: list[Constraint]) -> bool:
        for c in items:
            if isinstance(c, Eq) and isinstance(c.lhs, Fun) and isinstance(c.rhs, Fun):
                self._replace("7", [c], [Eq(c.lhs.dom, c.rhs.dom), Eq(c.lhs.cod, c.rhs.cod)])
                return True
        return False

    def _r8(self, items: list[Constraint]) -> bool:
        for c in items:
            if isinstance(c, Eq) and isinstance(c.lhs, Ref) and isinstance(c.rhs, Ref):
                self._replace("8", [c], [Eq(c.lhs.inner, c.rhs.inner)])
                return True
        return False

    def _r9(self, items: list[Constraint]) -> bool:
        for c in items:
            if isinstance(c, Eq) and c.lhs == c.rhs:
                self._replace("9", [c], [])
                return True
        return False

    def _r10(self, items: list[Constraint]) -> bool:
        for c in items:
            if isinstance(c, Eq) and not _is_var(c.lhs) and _is_var(c.rhs):
                self._replace("10", [c], [Eq(c.rhs, c.lhs)])
                return True
        return False

    def _r11(self, items: list[Constraint]) -> bool:
        defined = {c.var for c in items if isinstance(c, Def)}
        for c in items:
            if not (isinstance(c, Eq) and _is_var(c.lhs)):
                continue
            var, body = c.lhs, c.rhs
            if var in defined or var in set(type_vars(body)):
                continue
            self._substitute(c, var, body)
            return True
        return False

    def _substitute(self, eq: Eq, var: TVar, body: Type) -> None:
        mapping = {var: body}
        consumed: list[Constraint] = [eq]
        produced: list[Constraint] = []
        rebuilt: dict[Constraint, None] = {}
        for c in self.items:
            if c == eq:
                continue
            if var not in set(constraint_vars(c)):
                rebuilt[c] = None
                continue
            new = _subst_constraint(c, mapping)
            consumed.append(c)
            if new is not None:
                produced.append(new)
                rebuilt[new] = None
        definition = Def(var, body)
        produced.append(definition)
        rebuilt[definition] = None
        self.items = rebuilt
        if self.trace is not None:
            self.trace.record("11", consumed, produced)

    # -- check and tag constraints ------------------------------------------------
    def _r12(self, items: list[Constraint]) -> bool:
        for c in items:
            if isinstance(c, Chk) and c.scrutinee == c.result:
                self._replace("12", [c], [])
                return True
        return False

    def _r12a(self, items: list[Constraint]) -> bool:
        for c in items:
            if isinstance(c, Chk) and not _is_var(c.scrutinee):
                if tag_of(c.scrutinee) is c.tag:
                    produced = [Eq(c.scrutinee, c.result)]
                else:
                    produced = _parts_dyn(c.result)
                self._replace("12a", [c], produced)
                return True
        return False

    def _r13(self, items: list[Constraint]) -> bool:
        for t in items:
            if not isinstance(t, TagC):
                continue
            checks = [c for c in items if isinstance(c, Chk) and c.scrutinee == t.var]
            if len(checks) == 1 and checks[0].tag is t.tag and checks[0].result != t.var:
                self._replace("13", [t, checks[0]], [Eq(t.var, checks[0].result)])
                return True
        return False

    def _r14(self, items: list[Constraint]) -> bool:
        for t in items:
            if not isinstance(t, TagC):
                continue
            for c in items:
                if isinstance(c, Chk) and c.scrutinee == t.var and c.tag is not t.tag:
                    self._replace("14", [c], _parts_dyn(c.result))
                    return True
        return False

    def _r15(self, items: list[Constraint]) -> bool:
        seen: dict[tuple[Type, Tag], Chk] = {}
        for c in items:
            if isinstance(c, Chk) and _is_var(c.scrutinee):
                key = (c.scrutinee, c.tag)
                if key in seen:
                    self._replace("15", [c], [Eq(c.result, seen[key].result)])
                    return True
                seen[key] = c
        return False

    def _r16(self, items: list[Constraint]) -> bool:
        for t in items:
            if not isinstance(t, TagC):
                continue
            blocked = any(
                (isinstance(c, Chk) and c.scrutinee == t.var)
                or (isinstance(c, Def) and c.var == t.var)
                or (isinstance(c, Eq) and c.lhs == t.var)
                for c in items
            )
            if blocked:
                continue
            shape = DYN if t.tag is Tag.DYN else match_tag(t.var, t.tag, self.fresh)
            self._replace("16", [t], [Eq(t.var, shape)])
            return True
        return False

    _RULES = (_r1, _r2, _r3, _r4, _r5, _r6, _r7, _r8, _r9, _r10, _r11, _r12, _r12a, _r13, _r14, _r15, _r16)


def _subst_constraint(c: Constraint, mapping: Mapping[TVar, Type]) -> Constraint | None:
    """Apply ``mapping`` to ``c``; ``None`` when the constraint is discharged."""
    try:
        match c:
            case Sub(a, b):
                return Sub(substitute(a, mapping), substitute(b, mapping))
            case Eq(a, b):
                return Eq(substitute(a, mapping), substitute(b, mapping))
            case Chk(a, s, b):
                return Chk(substitute(a, mapping), s, substitute(b, mapping))
            case Def(v, body):
                return Def(v, substitute(body, mapping))
            case TagC(v, s):
                new = substitute(v, mapping)
                if isinstance(new, TVar):
                    return TagC(new, s)
                if tag_of(new) is s:
                    return None
                raise Unsatisfiable(c, f"{v} := {new} contradicts tag {s}")
    except ContractViolation as exc:
        # Substituting a constructor under another constructor leaves the
        # shallow fragment the rewrite rules are defined on.
        raise NoProgress(ConstraintSet([c]), f"substitution leaves the shallow fragment: {exc}") from exc
    raise TypeError(f"not a constraint: {c!r}")


def _check_normal_form(cs: Iterable[Constraint]) -> None:
    for c in cs:
        match c:
            case Sub(a, b) if not _is_var(a) and not _is_var(b):
                raise Unsatisfiable(c, f"{a} is not a subtype of {b}")
            case Eq(a, b) if not _is_var(a) and not _is_var(b):
                raise Unsatisfiable(c, f"{a} and {b} have different constructors")
            case Eq(TVar() as a, b) if a in set(type_vars(b)):
                raise Unsatisfiable(c, "occurs check")


def simplify(
    omega: Iterable[Constraint],
    fresh: VarSupply | None = None,
    trace: SolverTrace | None = None,
) -> ConstraintSet:
    """Rewrite ``omega`` to a normal form where no simplification rule applies."""
    items = list(omega)
    s = _Simplifier(items, fresh if fresh is not None else _fresh_supply(items), trace)
    s.run()
    result = ConstraintSet(s.items)
    _check_normal_form(result)
    return result


def _classify(c: Constraint, var: TVar) -> str | Type:
    """How ``c`` bears on solving ``var``: a lower bound, "ok", or "blocked"."""
    match c:
        case Sub(a, b) if b == var and not _is_var(a) and var not in set(type_vars(a)):
            return a
        case Sub(a, b) if a == var and isinstance(b, (TVar, Dyn)):
            return "ok"
        case Def(v, _) if v != var:
            return "ok"
        case Chk(a, _, b) if a == var and var not in set(type_vars(b)):
            return "ok"
    return "blocked"


def solvable_vars(cs: Iterable[Constraint]) -> dict[TVar, list[Type]]:
    """Every variable that may be solved now, with its non-variable lower bounds."""
    lower: dict[TVar, list[Type]] = {}
    blocked: set[TVar] = set()
    for c in cs:
        for var in set(constraint_vars(c)):
            if var in blocked:
                continue
            verdict = _classify(c, var)
            if isinstance(verdict, str):
                if verdict == "blocked":
                    blocked.add(var)
                    lower.pop(var, None)
                else:
                    lower.setdefault(var, [])
            else:
                lower.setdefault(var, []).append(verdict)
    return lower


def solvable(cs: Iterable[Constraint], var: TVar) -> tuple[bool, list[Type]]:
    """Whether ``var`` may be solved now, and its non-variable lower bounds."""
    found = solvable_vars(c for c in cs if var in set(constraint_vars(c)))
    if var in found:
        return True, found[var]
    return False, []


def _pick_tag(cs: Iterable[Constraint], var: TVar, lower: list[Type]) -> Tag:
    if lower:
        tag = tag_of(lower[0])
        for a in lower[1:]:
            tag = tag_join(tag, tag_of(a))
        return tag
    # No value ever flows into var: agree with the first check on it, if any.
    for c in cs:
        if isinstance(c, Chk) and c.scrutinee == var:
            return c.tag
    return Tag.DYN


def solve(
    omega: Iterable[Constraint],
    trace: SolverTrace | None = None,
    fresh: VarSupply | None = None,
) -> Solution:
    """Solve ``omega``; raises :class:`Unsatisfiable` or :class:`NoProgress`."""
    cs = ConstraintSet(omega)
    original_vars = vars_of(cs)
    fresh = fresh if fresh is not None else _fresh_supply(cs)
    while True:
        cs = simplify(cs, fresh, trace)
        if all(isinstance(c, Def) for c in cs):
            sigma = {c.var: c.body for c in cs}
            if all(is_ground(t) for t in sigma.values()):
                # variables that only occurred in dropped trivial constraints
                sigma.update({v: DYN for v in original_vars if v not in sigma})
                return dict(sorted(sigma.items()))
        defined = {c.var for c in cs if isinstance(c, Def)}
        ready = solvable_vars(cs)
        candidates = sorted(set(ready) - defined)
        if candidates:
            var = candidates[0]
            tag_c = TagC(var, _pick_tag(cs, var, ready[var]))
            cs.add(tag_c)
            if trace is not None:
                trace.record("solve", (), (tag_c,))
        else:
            eqs = _cycle_equations(cs)
            if not eqs:
                raise NoProgress(cs)
            cs.update(eqs)
            if trace is not None:
                trace.record("cycle", (), eqs)


def _cycle_equations(cs: Iterable[Constraint]) -> list[Eq]:
    """Equate the members of each cycle of ``a <: b`` constraints with its least member."""
    graph = nx.DiGraph()
    graph.add_edges_from((c.lhs, c.rhs) for c in cs if isinstance(c, Sub) and _is_var(c.lhs) and _is_var(c.rhs))
    eqs: list[Eq] = []
    for component in sorted(nx.strongly_connected_components(graph), key=min):
        if len(component) > 1:
            rep = min(component)
            eqs.extend(Eq(v, rep) for v in sorted(component) if v != rep)
    return eqs


# -- applying and checking solutions -------------------------------------------

def apply_solution(sigma: Mapping[TVar, Type], a: Type) -> Type:
    for v in type_vars(a):
        if v not in sigma:
            raise ContractViolation(f"solution does not map {v}")
    return substitute(a, sigma)


@dataclass(frozen=True)
class Verdict:
    ok: bool
    violation: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def validate(omega: Iterable[Constraint], sigma: Mapping[TVar, Type]) -> Verdict:
    """Check every constraint of ``omega`` against ``sigma`` clause by clause."""
    for v, t in sigma.items():
        if not is_ground(t):
            return Verdict(False, f"{v} maps to non-ground type {t}")
    for c in omega:
        missing = [v for v in constraint_vars(c) if v not in sigma]
        if missing:
            return Verdict(False, f"{c}: {missing[0]} is unmapped")
        match c:
            case Sub(a, b):
                if not subtype(apply_solution(sigma, a), apply_solution(sigma, b)):
                    return Verdict(False, f"clause 1 (subtype) fails for {c}")
            case Chk(a, s, b):
                ta = apply_solution(sigma, a)
                if tag_of(ta) is s:
                    if ta != apply_solution(sigma, b):
                        return Verdict(False, f"clause 2a (check, matching tag) fails for {c}")
                elif any(sigma[v] != DYN for v in parts(b)):
                    return Verdict(False, f"clause 2b (check, other tag) fails for {c}")
            case Eq(a, b):
                if apply_solution(sigma, a) != apply_solution(sigma, b):
                    return Verdict(False, f"clause 3 (equality) fails for {c}")
            case Def(v, body):
                if sigma[v] != apply_solution(sigma, body):
                    return Verdict(False, f"clause 4 (definition) fails for {c}")
            case TagC(v, s):
                if tag_of(sigma[v]) is not s:
                    return Verdict(False, f"clause 5 (tag) fails for {c}")
    return Verdict(True)


def solution_to_json(sigma: Mapping[TVar, Type]) -> str:
    return json.dumps({str(v): type_to_json(t) for v, t in sorted(sigma.items())}, indent=2)
