"""Command-line entry point: check, compile, run, solve, lattice and fuzz."""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Sequence, TextIO

from .constraints import ShapeError, dump_constraints
from .frontend import ParseError, SurfaceTypeError, parse, typecheck_surface
from .generator import gen_program
from .lattice import IntervalUnreachable, measure_all, sample_lattice, to_csv
from .machine import DEFAULT_FUEL, agree, run
from .pipeline import compile_expr
from .solver import SolverTrace, solution_to_json
from .syntax import pretty
from .types import ContractViolation

EXIT_OK = 0
EXIT_USER = 1
EXIT_INTERNAL = 2


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _open_out(path: str | None) -> TextIO:
    return open(path, "w", encoding="utf-8", newline="\n") if path else sys.stdout


def _warn(lines: Sequence[str]) -> None:
    for line in lines:
        print(line, file=sys.stderr)


def cmd_check(args: argparse.Namespace) -> int:
    t = typecheck_surface({}, parse(_read(args.file)))
    print(f"ok: {t}")
    return EXIT_OK


def cmd_compile(args: argparse.Namespace) -> int:
    trace = SolverTrace()
    comp = compile_expr(parse(_read(args.file)), open_world=args.open_world, trace=trace)
    _warn(comp.warnings)
    emit = "erased" if args.no_opt else args.emit
    out = _open_out(args.output)
    try:
        if args.dump_transient:
            print(pretty(comp.transient), file=out)
        if args.dump_constraints:
            print(dump_constraints(comp.result_type, comp.constraints), file=out)
        if args.dump_solution:
            print(solution_to_json(comp.solution or {}), file=out)
        if args.trace:
            out.write(trace.render())
        print(pretty(comp.erased if emit == "erased" else comp.optimized), file=out)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    comp = compile_expr(parse(_read(args.file)), open_world=args.open_world)
    _warn(comp.warnings)
    program = comp.erased if args.no_opt else comp.optimized

    def show(expr, store) -> None:
        print(f"⟨{pretty(expr)}⟩ | store-size={len(store)}")

    outcome = run(program, args.fuel, on_step=show if args.trace_eval else None)
    print(outcome.describe())
    if args.count_checks:
        print(f"checks: executed={outcome.stats.checks_executed} failed={outcome.stats.checks_failed}")
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    comp = compile_expr(parse(_read(args.file)), open_world=args.open_world)
    _warn(comp.warnings)
    print(dump_constraints(comp.result_type, comp.constraints))
    print(solution_to_json(comp.solution or {}))
    return EXIT_OK


def cmd_lattice(args: argparse.Namespace) -> int:
    program = parse(_read(args.file))
    typecheck_surface({}, program)
    skipped: list[IntervalUnreachable] = []
    configs = sample_lattice(program, args.intervals, args.samples, args.seed, skipped)
    _warn([f"warn: {exc}; interval skipped" for exc in skipped])
    metrics = measure_all(configs, open_world=args.open_world, fuel=args.fuel, workers=args.jobs)
    out = _open_out(args.out)
    try:
        out.write(to_csv(configs, metrics))
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def fuzz_one(seed: int, budget: int, fuel: int) -> str | None:
    """Differential check of one generated program; a description of any disagreement."""
    program = gen_program(seed, budget)
    for open_world in (False, True):
        comp = compile_expr(program, open_world=open_world)
        unopt, opt = run(comp.erased, fuel), run(comp.optimized, fuel)
        if not agree(unopt, opt) or "stuck" in (unopt.kind, opt.kind):
            world = "open" if open_world else "closed"
            return f"seed {seed} ({world} world): erased {unopt.describe()}, optimized {opt.describe()}"
    return None


def _fuzz_job(job: tuple[int, int, int]) -> str | None:
    return fuzz_one(*job)


def cmd_fuzz(args: argparse.Namespace) -> int:
    jobs = [(args.seed + i, args.budget, args.fuel) for i in range(args.count)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_fuzz_job, jobs, chunksize=16))
    else:
        results = [_fuzz_job(j) for j in jobs]
    failures = [r for r in results if r is not None]
    _warn([f"disagree: {r}" for r in failures])
    print(f"{args.count - len(failures)}/{args.count} agree")
    return EXIT_OK if not failures else EXIT_USER


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gts", description="Transient gradual typing with check removal.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="typecheck a surface program")
    p.add_argument("file")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("compile", help="insert checks, solve and translate")
    p.add_argument("file")
    p.add_argument("--no-opt", action="store_true", help="emit the erased program")
    p.add_argument("--open-world", action="store_true")
    p.add_argument("--emit", choices=("erased", "optimized"), default="optimized")
    p.add_argument("--dump-transient", action="store_true")
    p.add_argument("--dump-constraints", action="store_true")
    p.add_argument("--dump-solution", action="store_true")
    p.add_argument("--trace", action="store_true", help="print the solver trace")
    p.add_argument("-o", "--output", metavar="OUT")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("run", help="compile and evaluate")
    p.add_argument("file")
    p.add_argument("--no-opt", action="store_true")
    p.add_argument("--open-world", action="store_true")
    p.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    p.add_argument("--count-checks", action="store_true")
    p.add_argument("--trace-eval", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("solve", help="print constraints and their solution")
    p.add_argument("file")
    p.add_argument("--open-world", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("lattice", help="sample the typing lattice and write metrics as CSV")
    p.add_argument("file")
    p.add_argument("--intervals", type=int, default=100)
    p.add_argument("--samples", type=int, default=10, help="configurations per interval")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", metavar="CSV")
    p.add_argument("--open-world", action="store_true")
    p.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser("fuzz", help="differential test on generated programs")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=30)
    p.add_argument("--fuel", type=int, default=100_000)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_fuzz)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, SurfaceTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except (ContractViolation, ShapeError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
