"""Typing-lattice sampling: type weight, random dynamization and per-configuration metrics.

Randomness comes from numpy's PCG64 bit generator seeded through
``SeedSequence``. Every configuration derives its own seed from the master
seed and its id, so configurations can be measured in any order or in
parallel without changing results.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .machine import DEFAULT_FUEL, agree, run
from .optimize import check_census
from .pipeline import compile_expr
from .syntax import Add, App, Assign, Deref, Expr, IntLit, Lam, RefNew, Var
from .types import DYN, Dyn, Fun, Int, Ref, Type

MAX_RESTARTS = 100

CSV_HEADER = (
    "config_id",
    "seed",
    "interval_lo",
    "interval_hi",
    "type_weight",
    "static_unopt",
    "static_opt",
    "dyn_unopt",
    "dyn_opt",
    "outcome_unopt",
    "outcome_opt",
    "agree",
    "solver_fallback",
)


class IntervalUnreachable(Exception):
    def __init__(self, interval: tuple[int, int], attempts: int) -> None:
        self.interval = interval
        self.attempts = attempts
        super().__init__(f"no dynamization reached weight in [{interval[0]},{interval[1]}) after {attempts} attempts")


@dataclass(frozen=True)
class Configuration:
    id: int
    seed: int
    target_interval: tuple[int, int]
    achieved_weight: int
    program: Expr


@dataclass(frozen=True)
class ConfigMetrics:
    static_checks_unopt: int
    static_checks_opt: int
    dyn_checks_unopt: int
    dyn_checks_opt: int
    outcome_unopt: str
    outcome_opt: str
    agree: bool
    solver_fallback: bool = False


# -- annotations --------------------------------------------------------------


def _weight(t: Type) -> int:
    match t:
        case Dyn():
            return 0
        case Int():
            return 1
        case Ref(inner):
            return 1 + _weight(inner)
        case Fun(dom, cod):
            return 1 + _weight(dom) + _weight(cod)
    raise TypeError(f"not a surface type: {t}")


def annotations(s: Expr) -> list[Type]:
    """Every annotation of ``s`` in pre-order: lambda domain, codomain, then reference type."""
    out: list[Type] = []

    def go(e: Expr) -> None:
        match e:
            case Lam(_, body, dom, cod):
                out.extend((dom, cod))
                go(body)
            case RefNew(init, ann):
                out.append(ann)
                go(init)
            case IntLit() | Var():
                pass
            case Add(l, r) | App(l, r) | Assign(l, r):
                go(l)
                go(r)
            case Deref(r):
                go(r)
            case _:
                raise TypeError(f"not a surface expression: {e!r}")

    go(s)
    return out


def with_annotations(s: Expr, anns: Iterable[Type]) -> Expr:
    """``s`` with its annotations replaced, in the order :func:`annotations` lists them."""
    it = iter(anns)

    def go(e: Expr) -> Expr:
        match e:
            case Lam(param, body, _, _):
                dom, cod = next(it), next(it)
                return Lam(param, go(body), dom, cod, span=e.span)
            case RefNew(init, _):
                ann = next(it)
                return RefNew(go(init), ann, span=e.span)
            case IntLit() | Var():
                return e
            case Add(l, r):
                return Add(go(l), go(r), span=e.span)
            case App(l, r):
                return App(go(l), go(r), span=e.span)
            case Assign(l, r):
                return Assign(go(l), go(r), span=e.span)
            case Deref(r):
                return Deref(go(r), span=e.span)
        raise TypeError(f"not a surface expression: {e!r}")

    out = go(s)
    if next(it, None) is not None:
        raise ValueError("too many annotations")
    return out


def type_weight(s: Expr) -> int:
    """Number of non-dyn type constructors across all annotations of ``s``."""
    return sum(_weight(t) for t in annotations(s))


def _positions(t: Type, path: tuple[int, ...] = ()) -> Iterable[tuple[int, ...]]:
    match t:
        case Int():
            yield path
        case Ref(inner):
            yield path
            yield from _positions(inner, path + (0,))
        case Fun(dom, cod):
            yield path
            yield from _positions(dom, path + (0,))
            yield from _positions(cod, path + (1,))


def _erase_at(t: Type, path: tuple[int, ...]) -> Type:
    if not path:
        return DYN
    head, rest = path[0], path[1:]
    match t:
        case Ref(inner):
            return Ref(_erase_at(inner, rest))
        case Fun(dom, cod):
            return Fun(_erase_at(dom, rest), cod) if head == 0 else Fun(dom, _erase_at(cod, rest))
    raise ValueError(f"no constructor at {path} in {t}")


# -- sampling -----------------------------------------------------------------


def _rng(*entropy: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(entropy))))


def derive_seed(seed: int, config_id: int) -> int:
    return int(np.random.SeedSequence([seed, config_id]).generate_state(1)[0])


def dynamize(s: Expr, interval: tuple[int, int], seed: int, config_id: int = 0) -> Configuration:
    """Erase random annotation constructors until the weight drops below ``interval[1]``."""
    lo, hi = interval
    full = annotations(s)
    if lo > sum(_weight(t) for t in full):
        raise ValueError(f"interval lower bound {lo} exceeds the program's weight")
    for attempt in range(MAX_RESTARTS + 1):
        rng = _rng(seed, attempt)
        anns = list(full)
        weight = sum(_weight(t) for t in anns)
        while weight >= hi:
            sites = [(i, p) for i, t in enumerate(anns) for p in _positions(t)]
            i, path = sites[int(rng.integers(len(sites)))]
            anns[i] = _erase_at(anns[i], path)
            weight = sum(_weight(t) for t in anns)
        if weight >= lo:
            return Configuration(config_id, seed, (lo, hi), weight, with_annotations(s, anns))
    raise IntervalUnreachable(interval, MAX_RESTARTS + 1)


def intervals_for(weight: int, intervals: int) -> list[tuple[int, int]]:
    k = min(intervals, weight)
    bounds = [(i * weight) // k for i in range(k + 1)] if k else [0]
    return [(bounds[i], bounds[i + 1]) for i in range(k)]


def sample_lattice(
    s: Expr,
    intervals: int = 100,
    per_interval: int = 10,
    seed: int = 0,
    skipped: list[IntervalUnreachable] | None = None,
) -> list[Configuration]:
    """Stratified random configurations of ``s`` plus the fully typed original (last)."""
    if not 1 <= intervals <= 100:
        raise ValueError("intervals must be between 1 and 100")
    if per_interval < 1:
        raise ValueError("per_interval must be positive")
    weight = type_weight(s)
    configs: list[Configuration] = []
    config_id = 0
    for interval in intervals_for(weight, intervals):
        for _ in range(per_interval):
            try:
                configs.append(dynamize(s, interval, derive_seed(seed, config_id), config_id))
            except IntervalUnreachable as exc:
                if skipped is not None:
                    skipped.append(exc)
            config_id += 1
    configs.append(Configuration(config_id, derive_seed(seed, config_id), (weight, weight + 1), weight, s))
    return configs


# -- measurement --------------------------------------------------------------


def measure(c: Configuration, open_world: bool = False, fuel: int = DEFAULT_FUEL) -> ConfigMetrics:
    comp = compile_expr(c.program, open_world=open_world)
    unopt = run(comp.erased, fuel)
    opt = run(comp.optimized, fuel)
    census_opt = check_census(comp.optimized)
    return ConfigMetrics(
        static_checks_unopt=check_census(comp.erased).static_checks,
        static_checks_opt=census_opt.static_checks + census_opt.fail_nodes,
        dyn_checks_unopt=unopt.stats.tagged_checks,
        dyn_checks_opt=opt.stats.tagged_checks,
        outcome_unopt=unopt.describe(),
        outcome_opt=opt.describe(),
        agree=agree(unopt, opt),
        solver_fallback=comp.solver_fallback,
    )


def _measure_job(args: tuple[Configuration, bool, int]) -> ConfigMetrics:
    return measure(*args)


def measure_all(
    configs: list[Configuration], open_world: bool = False, fuel: int = DEFAULT_FUEL, workers: int = 1
) -> list[ConfigMetrics]:
    """Metrics for each configuration, in input order."""
    jobs = [(c, open_world, fuel) for c in configs]
    if workers <= 1:
        return [_measure_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_measure_job, jobs, chunksize=8))


def _flag(b: bool) -> str:
    return "true" if b else "false"


def csv_rows(configs: list[Configuration], metrics: list[ConfigMetrics]) -> list[list[object]]:
    return [
        [
            c.id,
            c.seed,
            c.target_interval[0],
            c.target_interval[1],
            c.achieved_weight,
            m.static_checks_unopt,
            m.static_checks_opt,
            m.dyn_checks_unopt,
            m.dyn_checks_opt,
            m.outcome_unopt,
            m.outcome_opt,
            _flag(m.agree),
            _flag(m.solver_fallback),
        ]
        for c, m in zip(configs, metrics, strict=True)
    ]


def to_csv(configs: list[Configuration], metrics: list[ConfigMetrics]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(csv_rows(configs, metrics))
    return buf.getvalue()
