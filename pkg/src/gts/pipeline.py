"""End-to-end compilation: parse, typecheck, insert checks, solve, translate."""

from __future__ import annotations

from dataclasses import dataclass, field

from .constraints import ConstraintSet, Def, generate, open_world_constraints, vars_of
from .frontend import parse, typecheck_surface
from .insert import insert_checks
from .optimize import FailWarning, erase, optimize
from .solver import NoProgress, Solution, SolverTrace, Unsatisfiable, solve, validate
from .syntax import Expr, binder_vars
from .types import DYN, Type, VarSupply, substitute, type_vars


@dataclass
class Compilation:
    surface: Expr
    surface_type: Type
    transient: Expr
    result_type: Type
    constraints: ConstraintSet
    erased: Expr
    optimized: Expr
    solution: Solution | None
    trace: SolverTrace
    fallback: str | None = None  # None, "dyn-solution" or "erased"
    warnings: list[str] = field(default_factory=list)

    @property
    def solver_fallback(self) -> bool:
        return self.fallback is not None


def _dyn_completion(sigma: Solution, variables) -> Solution:
    """Extend ``sigma`` to ``variables``, mapping everything unsolved to dyn."""
    unsolved = {v: DYN for v in variables if v not in sigma}
    out = {v: substitute(t, unsolved) for v, t in sigma.items()}
    # definition bodies may mention variables that are neither solved nor listed
    leftovers = {v: DYN for t in out.values() for v in type_vars(t)}
    out = {v: substitute(t, leftovers) for v, t in out.items()}
    out.update(unsolved)
    return dict(sorted(out.items()))


def compile_expr(s: Expr, open_world: bool = False, trace: SolverTrace | None = None) -> Compilation:
    surface_type = typecheck_surface({}, s)
    fresh = VarSupply()
    d, _ = insert_checks({}, s, fresh)
    result_type, omega = generate({}, d, fresh)
    if open_world:
        omega.update(open_world_constraints(result_type))
    trace = trace if trace is not None else SolverTrace()
    erased = erase(d)
    program_vars = set(binder_vars(d)) | vars_of(omega)
    warnings: list[str] = []
    fallback = None
    sigma: Solution | None
    try:
        sigma = _dyn_completion(solve(omega, trace=trace, fresh=fresh), program_vars)
    except Unsatisfiable as exc:
        warnings.append(f"warn: {exc}; keeping all checks")
        sigma, fallback = None, "erased"
    except NoProgress as exc:
        partial = {c.var: c.body for c in exc.remaining if isinstance(c, Def)}
        sigma = None
        for candidate in (_dyn_completion(partial, program_vars), _dyn_completion({}, program_vars)):
            if validate(omega, candidate):
                sigma, fallback = candidate, "dyn-solution"
                break
        if sigma is None:
            warnings.append(f"warn: solver made no progress ({exc}); keeping all checks")
            fallback = "erased"
    if sigma is None:
        optimized = erased
    else:
        fail_warnings: list[FailWarning] = []
        optimized, _ = optimize({}, d, sigma, fail_warnings)
        warnings += [str(w) for w in fail_warnings]
    return Compilation(
        surface=s,
        surface_type=surface_type,
        transient=d,
        result_type=result_type,
        constraints=omega,
        erased=erased,
        optimized=optimized,
        solution=sigma,
        trace=trace,
        fallback=fallback,
        warnings=warnings,
    )


def compile_source(text: str, open_world: bool = False, trace: SolverTrace | None = None) -> Compilation:
    return compile_expr(parse(text), open_world=open_world, trace=trace)
