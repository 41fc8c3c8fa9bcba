"""Random well-typed surface programs for differential testing.

Programs are built top-down from a goal type along a typing derivation,
so every output typechecks by construction. Each annotation constructor is
independently kept or replaced by ``dyn`` with probability 1/2, which lets
dynamically typed values reach checks that reject them.
"""

from __future__ import annotations

import numpy as np

from .frontend import typecheck_surface
from .syntax import Add, App, Assign, Deref, Expr, IntLit, Lam, RefNew, Var, node_count
from .types import DYN, INT, Dyn, Fun, Ref, Type, consistent, match_fun, match_ref

DYN_PROB = 0.5


def _min_size(t: Type) -> int:
    """Nodes needed to build a closed term of a type consistent with ``t``."""
    match t:
        case Ref(inner):
            return 1 + _min_size(inner)
        case Fun(_, cod):
            return 1 + _min_size(cod)
        case _:
            return 1


class _Builder:
    def __init__(self, rng: np.random.Generator) -> None:
        self.rng = rng
        self.names = 0

    def chance(self, p: float) -> bool:
        return bool(self.rng.random() < p)

    def pick(self, options: list, weights: list[float]):
        w = np.asarray(weights, dtype=float)
        return options[int(self.rng.choice(len(options), p=w / w.sum()))]

    def fresh_name(self) -> str:
        name = f"x{self.names}"
        self.names += 1
        return name

    # -- types ------------------------------------------------------------------
    def random_type(self, depth: int = 2) -> Type:
        kinds = ["int", "dyn"] + (["fun", "ref"] if depth > 0 else [])
        weights = [4.0, 2.0] + ([3.0, 1.5] if depth > 0 else [])
        kind = self.pick(kinds, weights)
        if kind == "int":
            return INT
        if kind == "dyn":
            return DYN
        if kind == "ref":
            return Ref(self.random_type(depth - 1))
        return Fun(self.random_type(depth - 1), self.random_type(depth - 1))

    def vary(self, goal: Type, depth: int = 2) -> Type:
        """A random annotation consistent with ``goal``."""
        if isinstance(goal, Dyn):
            return self.vary(self.random_type(depth), depth) if self.chance(0.4) else DYN
        if self.chance(DYN_PROB):
            return DYN
        match goal:
            case Ref(inner):
                return Ref(self.vary(inner, depth - 1))
            case Fun(dom, cod):
                return Fun(self.vary(dom, depth - 1), self.vary(cod, depth - 1))
        return goal

    # -- expressions ------------------------------------------------------------
    def split(self, total: int, first_min: int, second_min: int) -> tuple[int, int]:
        lo, hi = first_min, total - second_min
        first = int(self.rng.integers(lo, hi + 1))
        return first, total - first

    def gen(self, env: dict[str, Type], goal: Type, budget: int) -> tuple[Expr, Type]:
        options: list[str] = []
        weights: list[float] = []

        def offer(kind: str, weight: float) -> None:
            options.append(kind)
            weights.append(weight)

        usable = [n for n, t in env.items() if consistent(t, goal)]
        if usable:
            offer("var", 3.0 if budget <= 2 else 1.0)
        if consistent(goal, INT):
            offer("int", 2.0 if budget <= 2 else 0.5)
            if budget >= 3:
                offer("add", 1.5)
            if budget >= 5:
                offer("assign", 0.8)
        if isinstance(goal, (Fun, Dyn)) and budget >= (_min_size(goal) if isinstance(goal, Fun) else 2):
            offer("lam", 2.0)
        if isinstance(goal, (Ref, Dyn)) and budget >= (_min_size(goal) if isinstance(goal, Ref) else 2):
            offer("ref", 1.0)
        if budget >= 1 + _min_size(Fun(DYN, goal)) + 1:
            offer("app", 2.5)
        if budget >= 1 + _min_size(Ref(goal)):
            offer("deref", 0.8)
        while options:
            kind = self.pick(options, weights)
            try:
                return self.build(kind, env, goal, budget, usable)
            except _NoFit:
                i = options.index(kind)
                del options[i], weights[i]
        raise _NoFit

    def build(
        self, kind: str, env: dict[str, Type], goal: Type, budget: int, usable: list[str]
    ) -> tuple[Expr, Type]:
        if kind == "var":
            name = usable[int(self.rng.integers(len(usable)))]
            return Var(name), env[name]
        if kind == "int":
            return IntLit(int(self.rng.integers(0, 10))), INT
        if kind == "add":
            b1, _ = self.split(budget - 1, 1, 1)
            l, _ = self.gen(env, INT, b1)
            r, _ = self.gen(env, INT, budget - 1 - node_count(l))
            return Add(l, r), INT
        if kind == "lam":
            if isinstance(goal, Fun):
                ann = Fun(self.vary(goal.dom), self.vary(goal.cod))
            else:
                ann = Fun(self.vary(self.random_type(1)), self.vary(self.random_type(1)))
            if _min_size(ann) > budget:
                ann = goal if isinstance(goal, Fun) else Fun(ann.dom, DYN)
            param = self.fresh_name()
            body, _ = self.gen({**env, param: ann.dom}, ann.cod, budget - 1)
            return Lam(param, body, ann.dom, ann.cod), ann
        if kind == "ref":
            ann = self.vary(goal.inner) if isinstance(goal, Ref) else self.vary(self.random_type(1))
            if _min_size(ann) > budget - 1:
                ann = goal.inner if isinstance(goal, Ref) else DYN
            init, _ = self.gen(env, ann, budget - 1)
            return RefNew(init, ann), Ref(ann)
        if kind == "deref":
            r, r_t = self.gen(env, Ref(goal), budget - 1)
            return Deref(r), match_ref(r_t)
        if kind == "assign":
            target = self.random_type(1)
            b1, _ = self.split(budget - 1, _min_size(Ref(target)), 1)
            r, r_t = self.gen(env, Ref(target), b1)
            v, _ = self.fit(env, match_ref(r_t), budget - 1 - node_count(r))
            return Assign(r, v), INT
        # application
        fn_goal = Fun(self.random_type(1), goal)
        b1, _ = self.split(budget - 1, _min_size(fn_goal), 1)
        f, f_t = self.gen(env, fn_goal, b1)
        dom, cod = match_fun(f_t)
        a, _ = self.fit(env, dom, budget - 1 - node_count(f))
        return App(f, a), cod

    def fit(self, env: dict[str, Type], goal: Type, budget: int) -> tuple[Expr, Type]:
        if budget < _min_size(goal):
            raise _NoFit
        return self.gen(env, goal, budget)


class _NoFit(Exception):
    pass


def gen_program(seed: int, size_budget: int = 30) -> Expr:
    """A closed, well-typed surface program with at most ``size_budget`` nodes."""
    if size_budget < 1:
        raise ValueError("size budget must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))
    b = _Builder(rng)
    goal = b.pick([INT, DYN, "fun", "ref"], [4.0, 2.0, 2.0, 1.0])
    if goal == "fun":
        goal = Fun(b.random_type(1), b.random_type(1))
    elif goal == "ref":
        goal = Ref(b.random_type(1))
    if _min_size(goal) > size_budget:
        goal = INT
    e, _ = b.gen({}, goal, size_budget)
    typecheck_surface({}, e)
    assert node_count(e) <= size_budget
    return e
