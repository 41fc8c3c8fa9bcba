"""End-to-end acceptance checks; each prints one PASS/FAIL line."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import pytest
from scipy.stats import spearmanr

from gts.cli import main
from gts.constraints import ShapeError
from gts.frontend import parse
from gts.generator import gen_program
from gts.lattice import measure_all, sample_lattice
from gts.machine import run
from gts.optimize import check_census
from gts.pipeline import compile_expr, compile_source
from gts.programs import BENCHMARKS, path
from gts.solver import validate
from gts.syntax import pretty
from gts.types import DYN, INT, Fun, TVar

CORPUS_SEEDS = range(1000)
BUDGET = 30
FUEL = 100_000
GOLDEN = Path(__file__).parent / "golden"


def report(capsys, criterion: int, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")


@dataclass
class CorpusResult:
    runs: int = 0
    invalid: list[str] = field(default_factory=list)
    fallbacks: int = 0
    disagreements: list[str] = field(default_factory=list)
    stuck: list[str] = field(default_factory=list)
    shape_errors: list[str] = field(default_factory=list)
    seconds: float = 0.0


@pytest.fixture(scope="module")
def corpus() -> CorpusResult:
    res = CorpusResult()
    start = time.perf_counter()
    for seed in CORPUS_SEEDS:
        program = gen_program(seed, BUDGET)
        for open_world in (False, True):
            tag = f"seed {seed} {'open' if open_world else 'closed'}"
            res.runs += 1
            try:
                comp = compile_expr(program, open_world=open_world)
            except ShapeError as exc:
                res.shape_errors.append(f"{tag}: {exc}")
                continue
            if comp.solution is not None:
                if not validate(comp.constraints, comp.solution):
                    res.invalid.append(tag)
            res.fallbacks += comp.solver_fallback
            unopt, opt = run(comp.erased, FUEL), run(comp.optimized, FUEL)
            if unopt.observation() != opt.observation():
                res.disagreements.append(f"{tag}: {unopt.describe()} vs {opt.describe()}")
            if "stuck" in (unopt.kind, opt.kind):
                res.stuck.append(tag)
    res.seconds = time.perf_counter() - start
    return res


@pytest.fixture(scope="module")
def lattices():
    out = {}
    for name in BENCHMARKS:
        start = time.perf_counter()
        configs = sample_lattice(parse(path(f"benchmarks/{name}").read_text()), 100, 5, seed=0)
        out[name] = (configs, measure_all(configs), time.perf_counter() - start)
    return out


def test_criterion_1_solver_soundness(corpus, capsys):
    ok = not corpus.invalid and corpus.seconds <= 120
    report(capsys, 1, ok, f"{corpus.runs} compilations, {len(corpus.invalid)} invalid solutions, "
           f"{corpus.fallbacks} fallbacks, {corpus.seconds:.1f}s")
    assert corpus.invalid == []
    assert corpus.seconds <= 120


def test_criterion_2_check_removal_preserves_outcomes(corpus, capsys):
    ok = not corpus.disagreements
    report(capsys, 2, ok, f"{corpus.runs - len(corpus.disagreements)}/{corpus.runs} erased/optimized agree")
    assert corpus.disagreements == []


def test_criterion_3_fully_static_benchmarks_have_no_checks(capsys):
    results = {}
    for name in BENCHMARKS:
        comp = compile_source(path(f"benchmarks/{name}").read_text())
        census = check_census(comp.optimized)
        dyn = run(comp.optimized, FUEL).stats.tagged_checks
        results[name] = (census.static_checks + census.fail_nodes, dyn)
    ok = all(v == (0, 0) for v in results.values())
    report(capsys, 3, ok, ", ".join(f"{n}: static={s} dyn={d}" for n, (s, d) in results.items()))
    assert ok


def test_criterion_4_lattice_trend(lattices, capsys):
    details, ok = [], True
    for name, (configs, metrics, seconds) in lattices.items():
        rho = spearmanr([c.achieved_weight for c in configs], [m.dyn_checks_unopt for m in metrics]).statistic
        dominated = all(m.dyn_checks_opt <= m.dyn_checks_unopt for m in metrics)
        good = len(configs) >= 50 and rho >= 0.9 and dominated and seconds <= 300
        ok &= good
        details.append(f"{name}: n={len(configs)} rho={rho:.3f} opt<=unopt={dominated} {seconds:.0f}s")
    report(capsys, 4, ok, "; ".join(details))
    assert ok


def test_criterion_5_worked_example(capsys):
    comp = compile_source(path("make_eq_fail").read_text())
    sigma = comp.solution
    program = pretty(comp.optimized)
    outcomes = (run(comp.erased, FUEL).kind, run(comp.optimized, FUEL).kind)
    golden_ok = True
    for argv, golden in (
        (["compile", str(path("make_eq_fail")), "--dump-solution", "--emit=optimized"], "compile"),
        (["compile", str(path("make_eq_fail")), "--dump-transient", "--emit=erased"], "erased"),
    ):
        main(argv)
        golden_ok &= capsys.readouterr().out == (GOLDEN / f"make_eq_fail.{golden}.txt").read_text()
    shape = (
        sigma is not None
        and sigma[TVar(6)] == Fun(DYN, INT)
        and sigma[TVar(11)] == DYN
        and sigma[TVar(7)] == DYN
    )
    checks = check_census(comp.optimized).static_checks == 1 and "m▷int" in program
    ok = shape and checks and outcomes == ("fail", "fail") and golden_ok
    report(capsys, 5, ok, f"solution shape={shape} one inner check={checks} outcomes={outcomes} golden={golden_ok}")
    assert ok


def test_criterion_6_progress(corpus, lattices, capsys):
    lattice_stuck = [
        f"{name} config {c.id}"
        for name, (configs, metrics, _) in lattices.items()
        for c, m in zip(configs, metrics)
        if "stuck" in (m.outcome_unopt, m.outcome_opt)
    ]
    stuck = corpus.stuck + lattice_stuck
    report(capsys, 6, not stuck, f"{len(stuck)} stuck outcomes")
    assert stuck == []


def test_criterion_7_translation_typability(corpus, capsys):
    report(capsys, 7, not corpus.shape_errors, f"{len(corpus.shape_errors)} shape errors in {corpus.runs} compilations")
    assert corpus.shape_errors == []


def test_criterion_8_open_world_protection(capsys):
    src = "fun (a: int) -> int { a }"
    closed = pretty(compile_source(src).optimized)
    opened = pretty(compile_source(src, open_world=True).optimized)
    ok = "a▷int" in opened and "▷" not in closed
    report(capsys, 8, ok, f"closed: {closed} | open: {opened}")
    assert ok
