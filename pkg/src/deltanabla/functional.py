"""Product functionals of a delta and a nabla integral, and their
stationarity residuals.

A functional here is J(y) = (sum of L_delta(t, y_sigma, y_delta) * mu)
* (sum of L_nabla(t, y_rho, y_nabla) * nu).  Stationarity of such a
product under fixed boundary values is equivalent to a bracket
expression being constant in t; this module evaluates that bracket
pointwise (two index conventions, EL1 and EL2), reports its departure
from constancy (the defect), and combines brackets of an objective and
a constraint with multipliers (lambda0, lambda) for constrained
stationarity checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .expressions import Lagrangian
from .timescale import GridFunction, TimeScale

Form = Literal["EL1", "EL2"]

EL1: Form = "EL1"
EL2: Form = "EL2"

DEFAULT_TOL = 1e-8
"""Default absolute tolerance on the constancy defect."""


class ResidualFormMismatch(RuntimeError):
    """Raised when the two residual forms disagree on stationarity.

    The two forms evaluate the same bracket on shifted index windows,
    so disagreement indicates a numerical pathology worth surfacing
    rather than silently picking one answer.
    """


@dataclass(frozen=True)
class DeltaNablaFunctional:
    """Pair of integrands: l_delta feeds the forward (delta) integral
    with slots (t, y_sigma, y_delta); l_nabla feeds the backward
    (nabla) integral with slots (t, y_rho, y_nabla)."""

    l_delta: Lagrangian
    l_nabla: Lagrangian


@dataclass(frozen=True)
class EvaluationBreakdown:
    """Functional value split into its two integral factors."""

    delta_factor: float
    nabla_factor: float
    product: float


@dataclass(frozen=True)
class ResidualReport:
    """Pointwise residual of a "bracket = const" condition.

    The residual grid function lives on the sub-scale where the chosen
    form applies: all points but the maximum for EL2, all but the
    minimum for EL1.  defect = max - min measures departure from
    constancy; constant_estimate is the mean.
    """

    form: Form
    residual: GridFunction
    defect: float
    constant_estimate: float


@dataclass(frozen=True)
class ExtremalCheck:
    """Outcome of testing whether y makes a functional's bracket constant."""

    is_extremal: bool
    el1: ResidualReport
    el2: ResidualReport


@dataclass(frozen=True)
class SlotTables:
    """Integrand and partial values on the two slot sequences.

    Delta entries are indexed by the left point of each gap
    (positions 0..N-2), nabla entries by the right point
    (positions 1..N-1, stored at array offset 0..N-2).  weights holds
    the gap widths, which serve as both mu and nu.
    """

    weights: np.ndarray
    delta_value: np.ndarray
    delta_du: np.ndarray
    delta_dv: np.ndarray
    nabla_value: np.ndarray
    nabla_du: np.ndarray
    nabla_dv: np.ndarray
    j_delta: float
    j_nabla: float


def slot_tables(functional: DeltaNablaFunctional, y: GridFunction) -> SlotTables:
    """Evaluate both integrands and their partials on every slot of y."""
    t = y.scale.points
    v = y.values
    dt = np.diff(t)
    quot = np.diff(v) / dt
    n = dt.size

    ld = functional.l_delta
    ln = functional.l_nabla
    d_val = np.empty(n)
    d_du = np.empty(n)
    d_dv = np.empty(n)
    n_val = np.empty(n)
    n_du = np.empty(n)
    n_dv = np.empty(n)
    for i in range(n):
        args_d = (t[i], v[i + 1], quot[i])
        args_n = (t[i + 1], v[i], quot[i])
        d_val[i] = ld(*args_d)
        d_du[i] = ld.du(*args_d)
        d_dv[i] = ld.dv(*args_d)
        n_val[i] = ln(*args_n)
        n_du[i] = ln.du(*args_n)
        n_dv[i] = ln.dv(*args_n)
    return SlotTables(
        weights=dt,
        delta_value=d_val,
        delta_du=d_du,
        delta_dv=d_dv,
        nabla_value=n_val,
        nabla_du=n_du,
        nabla_dv=n_dv,
        j_delta=float(d_val @ dt),
        j_nabla=float(n_val @ dt),
    )


def eval_functional(
    functional: DeltaNablaFunctional, y: GridFunction
) -> EvaluationBreakdown:
    """Value of the product functional, with both factors reported."""
    t = y.scale.points
    v = y.values
    dt = np.diff(t)
    quot = np.diff(v) / dt
    ld = functional.l_delta
    ln = functional.l_nabla
    j_delta = 0.0
    j_nabla = 0.0
    for i in range(dt.size):
        j_delta += ld(t[i], v[i + 1], quot[i]) * dt[i]
        j_nabla += ln(t[i + 1], v[i], quot[i]) * dt[i]
    return EvaluationBreakdown(
        float(j_delta), float(j_nabla), float(j_delta * j_nabla)
    )


def bracket_values(
    functional: DeltaNablaFunctional, y: GridFunction
) -> np.ndarray:
    """Raw stationarity bracket, one value per gap of the scale.

    Entry i combines the delta bracket at point i with the nabla
    bracket at point i+1:

        J_nabla * (d3 L_delta(i) - sum_{j<i} d2 L_delta(j) mu_j)
        + J_delta * (d3 L_nabla(i+1) - sum_{1<=j<=i+1} d2 L_nabla(j) nu_j)

    Read on points 0..N-2 this is the EL2 residual; the EL1 residual is
    the same array read on points 1..N-1.  The inner sums are prefix
    sums computed once.
    """
    tab = slot_tables(functional, y)
    delta_prefix = np.concatenate(([0.0], np.cumsum(tab.delta_du * tab.weights)))
    delta_bracket = tab.delta_dv - delta_prefix[:-1]
    nabla_prefix = np.cumsum(tab.nabla_du * tab.weights)
    nabla_bracket = tab.nabla_dv - nabla_prefix
    return tab.j_nabla * delta_bracket + tab.j_delta * nabla_bracket


def _report(values: np.ndarray, points: np.ndarray, form: Form) -> ResidualReport:
    residual = GridFunction(TimeScale(points), values)
    return ResidualReport(
        form=form,
        residual=residual,
        defect=float(np.max(values) - np.min(values)),
        constant_estimate=float(np.mean(values)),
    )


def _form_points(scale: TimeScale, form: Form) -> np.ndarray:
    if form == EL2:
        return scale.points[:-1]
    if form == EL1:
        return scale.points[1:]
    raise ValueError(f"unknown residual form {form!r}")


def el_residual(
    functional: DeltaNablaFunctional, y: GridFunction, form: Form
) -> ResidualReport:
    """Stationarity residual of a single functional in the given form."""
    if len(y) < 3:
        raise ValueError("residual evaluation needs at least 3 points")
    points = _form_points(y.scale, form)
    return _report(bracket_values(functional, y), points, form)


def iso_residual(
    objective: DeltaNablaFunctional,
    constraint: DeltaNablaFunctional,
    y: GridFunction,
    lambda0: float,
    lam: float,
    form: Form,
) -> ResidualReport:
    """Constrained stationarity residual lambda0 * R_obj - lam * R_con.

    The combination is taken pointwise at each t, so the report's
    defect measures constancy of the combined bracket, not a difference
    of separate defects.
    """
    if lambda0 == 0.0 and lam == 0.0:
        raise ValueError("multipliers (lambda0, lambda) must not both be zero")
    if len(y) < 3:
        raise ValueError("residual evaluation needs at least 3 points")
    points = _form_points(y.scale, form)
    values = lambda0 * bracket_values(objective, y) - lam * bracket_values(
        constraint, y
    )
    return _report(values, points, form)


def is_extremal_for_K(
    constraint: DeltaNablaFunctional, y: GridFunction, tol: float = DEFAULT_TOL
) -> ExtremalCheck:
    """Whether y makes the constraint's bracket constant (both forms).

    Both residual forms are evaluated and must agree on the verdict;
    a disagreement raises ResidualFormMismatch.
    """
    if tol <= 0.0:
        raise ValueError("tolerance must be positive")
    el1 = el_residual(constraint, y, EL1)
    el2 = el_residual(constraint, y, EL2)
    ok1 = el1.defect <= tol
    ok2 = el2.defect <= tol
    if ok1 != ok2:
        raise ResidualFormMismatch(
            f"residual forms disagree: EL1 defect {el1.defect:.3e}, "
            f"EL2 defect {el2.defect:.3e}, tol {tol:.3e}"
        )
    return ExtremalCheck(ok1 and ok2, el1, el2)
