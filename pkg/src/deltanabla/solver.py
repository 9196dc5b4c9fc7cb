"""Newton solution of isoperimetric stationarity systems on finite scales.

On a finite time scale the constrained variational problem is a plain
finite-dimensional problem: unknowns are the interior values of y plus
the multiplier.  The solver drives the exact gradient of the product
functionals to a multiple of the constraint gradient while meeting the
constraint level, using damped Newton iterations with a forward
difference Jacobian and seeded multistart.  The bracket-constancy
residuals from the functional module serve as an independent
certificate of every solution; they are never the solve target.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from .expressions import EvaluationError, constant_lagrangian, make_lagrangian
from .functional import (
    DeltaNablaFunctional,
    EL1,
    EL2,
    EvaluationBreakdown,
    eval_functional,
    is_extremal_for_K,
    iso_residual,
    slot_tables,
)
from .timescale import GridFunction, TimeScale

Classification = Literal["normal", "abnormal", "unknown"]


@dataclass(frozen=True)
class IsoperimetricProblem:
    """Problem data: extremize the objective subject to y(a) = alpha,
    y(b) = beta, and constraint(y) = k."""

    scale: TimeScale
    alpha: float
    beta: float
    objective: DeltaNablaFunctional
    constraint: DeltaNablaFunctional
    k: float

    def __post_init__(self) -> None:
        if len(self.scale) < 3:
            raise ValueError("isoperimetric problem needs interior points")
        for name in ("alpha", "beta", "k"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def assemble(self, interior: np.ndarray) -> GridFunction:
        """Grid function with the given interior values and fixed ends."""
        values = np.concatenate(([self.alpha], interior, [self.beta]))
        return GridFunction(self.scale, values)

    def interior_count(self) -> int:
        return len(self.scale) - 2


@dataclass(frozen=True)
class SolverOptions:
    """Newton and multistart controls.

    feas_tol bounds |constraint - k|, stat_tol bounds the stationarity
    rows and the residual defect.  Multistart draws interior
    perturbations uniformly from [-spread, spread] with the given seed;
    the unperturbed linear interpolant is always tried first.
    """

    feas_tol: float = 1e-8
    stat_tol: float = 1e-8
    max_iter: int = 100
    multistart: int = 8
    seed: int = 0
    spread: float = 1.0
    fd_step: float = 1e-7
    damping: float = 0.5
    min_step: float = 1e-12


@dataclass(frozen=True)
class StationaryPoint:
    """Distinct converged iterate kept for diagnostics."""

    values: np.ndarray
    lam: float
    objective_product: float


@dataclass(frozen=True)
class SolveResult:
    y: GridFunction
    lam: float
    lam0: float
    objective_value: EvaluationBreakdown
    constraint_value: EvaluationBreakdown
    el_defect: float
    kkt_residual_norm: float
    classification: Classification
    iterations: int
    converged: bool
    message: str = ""
    stationary_points: tuple[StationaryPoint, ...] = ()


def discrete_gradient(
    functional: DeltaNablaFunctional, y: GridFunction
) -> np.ndarray:
    """Exact gradient of the product functional in the interior values.

    Product rule: grad = J_nabla * grad(J_delta) + J_delta *
    grad(J_nabla), where each interior value y(t_i) enters two delta
    slots (as shifted value and in two difference quotients) and two
    nabla slots.
    """
    if len(y) < 3:
        raise ValueError("gradient needs at least one interior point")
    tab = slot_tables(functional, y)
    w = tab.weights
    grad_delta = tab.delta_du[:-1] * w[:-1] + tab.delta_dv[:-1] - tab.delta_dv[1:]
    grad_nabla = tab.nabla_du[1:] * w[1:] - tab.nabla_dv[1:] + tab.nabla_dv[:-1]
    return tab.j_nabla * grad_delta + tab.j_delta * grad_nabla


def _fd_jacobian(
    fun: Callable[[np.ndarray], np.ndarray],
    z: np.ndarray,
    f0: np.ndarray,
    step: float,
) -> np.ndarray:
    jac = np.empty((f0.size, z.size))
    for i in range(z.size):
        h = step * (1.0 + abs(z[i]))
        zp = z.copy()
        zp[i] += h
        jac[:, i] = (fun(zp) - f0) / h
    return jac


@dataclass
class _NewtonRun:
    z: np.ndarray
    f: np.ndarray
    iterations: int
    status: str  # "ok", "stalled", "singular", "maxiter", "error"


def _newton(
    fun: Callable[[np.ndarray], np.ndarray],
    z0: np.ndarray,
    opts: SolverOptions,
    square: bool,
) -> _NewtonRun:
    """Damped Newton (or Gauss-Newton via least squares when the system
    is rectangular).  Iterates until the step search can no longer
    reduce ||f||, which polishes converged roots to rounding level."""
    try:
        z = np.asarray(z0, dtype=float)
        f = fun(z)
    except EvaluationError as exc:
        return _NewtonRun(
            np.asarray(z0, dtype=float), np.full(1, np.inf), 0, f"error: {exc}"
        )
    status = "maxiter"
    it = 0
    for it in range(1, opts.max_iter + 1):
        norm = np.linalg.norm(f)
        if norm == 0.0:
            status = "ok"
            break
        try:
            jac = _fd_jacobian(fun, z, f, opts.fd_step)
        except EvaluationError as exc:
            status = f"error: {exc}"
            break
        if square:
            try:
                step = np.linalg.solve(jac, -f)
            except np.linalg.LinAlgError:
                status = "singular"
                break
        else:
            step = np.linalg.lstsq(jac, -f, rcond=None)[0]
        alpha = 1.0
        moved = False
        while alpha >= opts.min_step:
            z_try = z + alpha * step
            try:
                f_try = fun(z_try)
            except EvaluationError:
                f_try = None
            if f_try is not None and np.linalg.norm(f_try) < norm:
                z, f = z_try, f_try
                moved = True
                break
            alpha *= opts.damping
        if not moved:
            # No direction of decrease at this resolution: either the
            # root is polished to rounding level or the start is stuck.
            status = "stalled"
            break
    return _NewtonRun(z, f, it, status)


def _starts(p: IsoperimetricProblem, opts: SolverOptions) -> list[np.ndarray]:
    t = p.scale.points
    base = p.alpha + (p.beta - p.alpha) * (t[1:-1] - t[0]) / (t[-1] - t[0])
    rng = np.random.default_rng(opts.seed)
    starts = [base]
    for _ in range(opts.multistart):
        starts.append(base + rng.uniform(-opts.spread, opts.spread, base.size))
    return starts


def _certify(
    p: IsoperimetricProblem,
    y: GridFunction,
    lam0: float,
    lam: float,
    opts: SolverOptions,
) -> tuple[float, float, Classification]:
    """Defect of the combined bracket in both forms, the exact KKT
    residual norm, and the normal/abnormal classification."""
    r1 = iso_residual(p.objective, p.constraint, y, lam0, lam, EL1)
    r2 = iso_residual(p.objective, p.constraint, y, lam0, lam, EL2)
    defect = max(r1.defect, r2.defect)
    gl = discrete_gradient(p.objective, y)
    gk = discrete_gradient(p.constraint, y)
    kkt = float(np.max(np.abs(lam0 * gl - lam * gk)))
    check = is_extremal_for_K(p.constraint, y, opts.stat_tol)
    cls: Classification = "abnormal" if check.is_extremal else "normal"
    return defect, kkt, cls


def solve_normal(
    p: IsoperimetricProblem, opts: SolverOptions | None = None
) -> SolveResult:
    """Solve for a stationary point with multiplier pair (1, lambda).

    Unknowns are the interior values plus lambda; equations are the
    stationarity rows grad(objective) - lambda * grad(constraint) and
    the feasibility row constraint - k.  Starts are the boundary
    interpolant and seeded perturbations of it; among converged starts
    the one with smallest objective product is returned, with all
    distinct stationary points kept as diagnostics.
    """
    opts = opts or SolverOptions()
    n = p.interior_count()

    def residual(z: np.ndarray) -> np.ndarray:
        y = p.assemble(z[:n])
        lam = z[n]
        rows = discrete_gradient(p.objective, y) - lam * discrete_gradient(
            p.constraint, y
        )
        gap = eval_functional(p.constraint, y).product - p.k
        return np.concatenate((rows, [gap]))

    runs: list[_NewtonRun] = []
    for start in _starts(p, opts):
        runs.append(_newton(residual, np.append(start, 0.0), opts, square=True))

    converged_runs = []
    for run in runs:
        if run.f.size != n + 1 or not np.all(np.isfinite(run.f)):
            continue
        stat_ok = float(np.max(np.abs(run.f[:n]))) <= opts.stat_tol if n else True
        feas_ok = abs(float(run.f[n])) <= opts.feas_tol
        if stat_ok and feas_ok:
            converged_runs.append(run)

    points: list[StationaryPoint] = []
    for run in converged_runs:
        values = run.z[:n]
        if any(
            np.max(np.abs(values - sp.values)) <= 1e-6 for sp in points
        ):
            continue
        y = p.assemble(values)
        points.append(
            StationaryPoint(
                values=values.copy(),
                lam=float(run.z[n]),
                objective_product=eval_functional(p.objective, y).product,
            )
        )

    if converged_runs:
        best = min(
            converged_runs,
            key=lambda run: eval_functional(
                p.objective, p.assemble(run.z[:n])
            ).product,
        )
        y = p.assemble(best.z[:n])
        lam = float(best.z[n])
        defect, kkt, cls = _certify(p, y, 1.0, lam, opts)
        obj = eval_functional(p.objective, y)
        con = eval_functional(p.constraint, y)
        converged = (
            defect <= opts.stat_tol and abs(con.product - p.k) <= opts.feas_tol
        )
        message = "" if converged else (
            f"stationary rows met but bracket defect {defect:.3e} "
            f"exceeds stat_tol"
        )
        return SolveResult(
            y=y,
            lam=lam,
            lam0=1.0,
            objective_value=obj,
            constraint_value=con,
            el_defect=defect,
            kkt_residual_norm=kkt,
            classification=cls,
            iterations=best.iterations,
            converged=converged,
            message=message,
            stationary_points=tuple(points),
        )

    # No start converged: report the best iterate for inspection.
    best = min(runs, key=lambda run: float(np.max(np.abs(run.f))))
    y = p.assemble(best.z[:n])
    lam = float(best.z[n])
    obj = eval_functional(p.objective, y)
    con = eval_functional(p.constraint, y)
    try:
        defect, kkt, _ = _certify(p, y, 1.0, lam, opts)
    except EvaluationError:
        defect, kkt = float("nan"), float("nan")
    statuses = "; ".join(
        f"start {i}: {run.status}" for i, run in enumerate(runs)
    )
    return SolveResult(
        y=y,
        lam=lam,
        lam0=1.0,
        objective_value=obj,
        constraint_value=con,
        el_defect=defect,
        kkt_residual_norm=kkt,
        classification="unknown",
        iterations=best.iterations,
        converged=False,
        message=statuses,
        stationary_points=(),
    )


def find_abnormal(
    p: IsoperimetricProblem, opts: SolverOptions | None = None
) -> list[SolveResult]:
    """Search for functions that are extremal for the constraint itself.

    Solves grad(constraint) = 0 together with constraint = k for the
    interior values (one more equation than unknowns, handled by
    Gauss-Newton least squares).  Every converged, distinct solution is
    re-verified with is_extremal_for_K before being reported; an empty
    list means no abnormal candidates were found.
    """
    opts = opts or SolverOptions()
    n = p.interior_count()

    def residual(z: np.ndarray) -> np.ndarray:
        y = p.assemble(z)
        rows = discrete_gradient(p.constraint, y)
        gap = eval_functional(p.constraint, y).product - p.k
        return np.concatenate((rows, [gap]))

    found: list[SolveResult] = []
    kept_values: list[np.ndarray] = []
    for start in _starts(p, opts):
        run = _newton(residual, start, opts, square=False)
        if run.f.size != n + 1 or not np.all(np.isfinite(run.f)):
            continue
        if float(np.max(np.abs(run.f[:n]))) > opts.stat_tol:
            continue
        if abs(float(run.f[n])) > opts.feas_tol:
            continue
        if any(np.max(np.abs(run.z - v)) <= 1e-6 for v in kept_values):
            continue
        y = p.assemble(run.z)
        check = is_extremal_for_K(p.constraint, y, opts.stat_tol)
        if not check.is_extremal:
            continue
        defect, kkt, _ = _certify(p, y, 0.0, 1.0, opts)
        kept_values.append(run.z.copy())
        found.append(
            SolveResult(
                y=y,
                lam=1.0,
                lam0=0.0,
                objective_value=eval_functional(p.objective, y),
                constraint_value=eval_functional(p.constraint, y),
                el_defect=defect,
                kkt_residual_norm=kkt,
                classification="abnormal",
                iterations=run.iterations,
                converged=True,
            )
        )
    return found


# ---------------------------------------------------------------------------
# Built-in quadratic example family


@dataclass(frozen=True)
class ClosedFormMeta:
    """Factor values and recovered multiplier of a closed-form extremal."""

    delta_factor: float
    nabla_factor: float
    lam: float


def example_problem(m: int) -> IsoperimetricProblem:
    """Built-in example on the integer scale {0, ..., m}: objective
    integrands v^2 (delta side) and v^2 + v (nabla side), constraint
    t*v against the constant 1/m, level k = 1, boundary y(0) = 0,
    y(m) = m."""
    if m < 2:
        raise ValueError("example needs m >= 2")
    scale = TimeScale(np.arange(m + 1, dtype=float))
    objective = DeltaNablaFunctional(
        make_lagrangian("v^2"), make_lagrangian("v^2 + v")
    )
    constraint = DeltaNablaFunctional(
        make_lagrangian("t*v"), constant_lagrangian(1.0 / m)
    )
    return IsoperimetricProblem(
        scale=scale,
        alpha=0.0,
        beta=float(m),
        objective=objective,
        constraint=constraint,
        k=1.0,
    )


def closed_form_example(m: int) -> tuple[GridFunction, ClosedFormMeta]:
    """The known extremal of example_problem(m).

    y(t) = (4m^2 - 7m - 3mt + 6t) t / (m(m-1)) sampled at t = 0..m.
    The multiplier in the meta block is recovered from the gradients at
    the sampled grid (least squares of grad(objective) against
    grad(constraint)), not from any closed-form multiplier expression.
    """
    if m < 2:
        raise ValueError("example needs m >= 2")
    p = example_problem(m)
    t = p.scale.points
    values = (4 * m * m - 7 * m - 3 * m * t + 6 * t) * t / (m * (m - 1))
    y = GridFunction(p.scale, values)
    obj = eval_functional(p.objective, y)
    gl = discrete_gradient(p.objective, y)
    gk = discrete_gradient(p.constraint, y)
    denom = float(gk @ gk)
    lam = float(gl @ gk) / denom if denom > 0.0 else 0.0
    return y, ClosedFormMeta(
        delta_factor=obj.delta_factor,
        nabla_factor=obj.nabla_factor,
        lam=lam,
    )
