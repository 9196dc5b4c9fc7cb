"""Tests for the product-form functional: evaluation breakdown, the two
stationarity residual forms, combined multiplier residuals, and the
degenerate reductions to single-integral problems."""

import numpy as np
import pytest

from deltanabla import (
    EL1,
    EL2,
    DeltaNablaFunctional,
    GridFunction,
    TimeScale,
    constant_lagrangian,
    el_residual,
    eval_functional,
    is_extremal_for_K,
    iso_residual,
    make_lagrangian,
)
from deltanabla.solver import closed_form_example, example_problem


@pytest.fixture
def m3():
    p = example_problem(3)
    y, meta = closed_form_example(3)
    return p, y, meta


def test_breakdown_on_m3_extremal(m3):
    p, y, _ = m3
    assert np.array_equal(y.values, [0.0, 2.0, 3.0, 3.0])
    out = eval_functional(p.objective, y)
    assert out.delta_factor == 5.0
    assert out.nabla_factor == 8.0
    assert out.product == 40.0
    con = eval_functional(p.constraint, y)
    assert con.delta_factor == 1.0
    assert con.nabla_factor == 1.0
    assert con.product == 1.0


def test_breakdown_linear_velocity():
    scale = TimeScale(np.arange(4.0))
    y = GridFunction.sample(scale, lambda t: t)
    F = DeltaNablaFunctional(make_lagrangian("v"), make_lagrangian("v"))
    out = eval_functional(F, y)
    assert out.delta_factor == 3.0
    assert out.nabla_factor == 3.0
    assert out.product == 9.0


def test_breakdown_constant_integrand():
    scale = TimeScale(np.arange(4.0))
    y = GridFunction(scale, np.zeros(4))
    F = DeltaNablaFunctional(constant_lagrangian(0.5), constant_lagrangian(0.5))
    out = eval_functional(F, y)
    assert out.delta_factor == 1.5
    assert out.nabla_factor == 1.5
    assert out.product == 2.25


def test_breakdown_scales_linearly_in_each_factor(m3):
    p, y, _ = m3
    base = eval_functional(p.objective, y)
    tripled = DeltaNablaFunctional(
        make_lagrangian("3*v^2"), p.objective.l_nabla
    )
    out = eval_functional(tripled, y)
    assert out.delta_factor == pytest.approx(3.0 * base.delta_factor, rel=1e-15)
    assert out.nabla_factor == base.nabla_factor
    assert out.product == pytest.approx(3.0 * base.product, rel=1e-15)


def test_el_residual_forms_on_m3(m3):
    p, y, _ = m3
    r2 = el_residual(p.objective, y, EL2)
    assert np.array_equal(r2.residual.scale.points, [0.0, 1.0, 2.0])
    assert np.array_equal(r2.residual.values, [57.0, 31.0, 5.0])
    assert r2.defect == 52.0
    assert r2.constant_estimate == pytest.approx(31.0)
    assert r2.form == EL2
    r1 = el_residual(p.objective, y, EL1)
    assert np.array_equal(r1.residual.scale.points, [1.0, 2.0, 3.0])
    assert np.array_equal(r1.residual.values, [57.0, 31.0, 5.0])


def test_el_forms_agree_under_the_point_shift():
    # the two forms read the same slot bracket at shifted points, so
    # their value arrays coincide entry by entry
    rng = np.random.default_rng(5)
    F = DeltaNablaFunctional(
        make_lagrangian("v^2 + u*t"), make_lagrangian("v^2 - 0.5*u + 1")
    )
    for _ in range(20):
        size = int(rng.integers(3, 12))
        pts = np.sort(rng.uniform(0.0, 2.0, size))
        if np.any(np.diff(pts) <= 0.0):
            continue
        scale = TimeScale(pts)
        y = GridFunction(scale, rng.uniform(-1.0, 1.0, size))
        r1 = el_residual(F, y, EL1)
        r2 = el_residual(F, y, EL2)
        assert np.array_equal(r1.residual.values, r2.residual.values)
        assert r1.defect == r2.defect


def test_el_residual_needs_an_interior_point():
    scale = TimeScale(np.array([0.0, 1.0]))
    y = GridFunction(scale, np.array([0.0, 1.0]))
    F = DeltaNablaFunctional(make_lagrangian("v^2"), make_lagrangian("v^2"))
    with pytest.raises(ValueError):
        el_residual(F, y, EL2)


def test_iso_residual_constant_at_the_extremal(m3):
    p, y, meta = m3
    assert meta.lam == -26.0
    r = iso_residual(p.objective, p.constraint, y, 1.0, meta.lam, EL2)
    assert np.allclose(r.residual.values, 57.0, atol=1e-12)
    assert r.defect <= 1e-12
    assert r.constant_estimate == pytest.approx(57.0)
    r1 = iso_residual(p.objective, p.constraint, y, 1.0, meta.lam, EL1)
    assert r1.defect <= 1e-12


def test_iso_residual_with_zero_lambda_matches_raw(m3):
    p, y, _ = m3
    raw = el_residual(p.objective, y, EL2)
    iso = iso_residual(p.objective, p.constraint, y, 1.0, 0.0, EL2)
    assert np.array_equal(iso.residual.values, raw.residual.values)


def test_iso_residual_abnormal_pair_isolates_the_constraint(m3):
    p, y, _ = m3
    r = iso_residual(p.objective, p.constraint, y, 0.0, 1.0, EL2)
    # the constraint bracket is t on this scale, so (0, 1) flips the sign
    assert np.array_equal(r.residual.values, [0.0, -1.0, -2.0])
    assert r.defect == 2.0


def test_iso_residual_rejects_the_zero_multiplier_pair(m3):
    p, y, _ = m3
    with pytest.raises(ValueError):
        iso_residual(p.objective, p.constraint, y, 0.0, 0.0, EL2)


def test_extremal_check_for_constraint(m3):
    p, y, _ = m3
    check = is_extremal_for_K(p.constraint, y)
    assert not check.is_extremal
    assert check.el2.defect == 2.0  # m - 1
    assert check.el1.form == EL1 and check.el2.form == EL2


def test_extremal_check_degenerate_constraints():
    scale = TimeScale(np.arange(4.0))
    y = GridFunction(scale, np.array([0.0, 0.3, -0.2, 1.0]))
    # d/dv of v is 1, state-free: bracket is constant for every y
    K = DeltaNablaFunctional(make_lagrangian("v"), constant_lagrangian(1.0 / 3.0))
    assert is_extremal_for_K(K, y).is_extremal
    # constants have identically zero brackets
    K0 = DeltaNablaFunctional(constant_lagrangian(2.0), constant_lagrangian(0.5))
    assert is_extremal_for_K(K0, y).is_extremal


def _delta_only_bracket(L, y):
    # classical forward-difference stationarity bracket, written from
    # scratch: dL/dv at each slot minus the running sum of dL/du * mu
    t = y.scale.points
    w = np.diff(t)
    q = np.diff(y.values) / w
    du = np.array([L.du(t[i], y.values[i + 1], q[i]) for i in range(len(w))])
    dv = np.array([L.dv(t[i], y.values[i + 1], q[i]) for i in range(len(w))])
    prefix = np.concatenate(([0.0], np.cumsum(du * w)))
    return dv - prefix[:-1]


def test_reduction_to_pure_delta_problem():
    rng = np.random.default_rng(9)
    L = make_lagrangian("v^2 + 0.5*u*t - u^2")
    for _ in range(10):
        size = int(rng.integers(4, 10))
        pts = np.sort(rng.uniform(0.0, 3.0, size))
        if np.any(np.diff(pts) <= 0.0):
            continue
        scale = TimeScale(pts)
        span = scale.b - scale.a
        y = GridFunction(scale, rng.uniform(-1.0, 1.0, size))
        # unit nabla factor: the product collapses to the delta integral
        F = DeltaNablaFunctional(L, constant_lagrangian(1.0 / span))
        out = eval_functional(F, y)
        assert out.nabla_factor == pytest.approx(1.0, rel=1e-14)
        assert out.product == pytest.approx(out.delta_factor, rel=1e-13)
        want = _delta_only_bracket(L, y)
        got = el_residual(F, y, EL2).residual.values
        assert np.max(np.abs(got - want)) <= 1e-12 * max(1.0, np.max(np.abs(want)))


def test_reduction_to_pure_nabla_problem():
    rng = np.random.default_rng(10)
    L = make_lagrangian("v^2 + u")
    for _ in range(10):
        size = int(rng.integers(4, 10))
        pts = np.sort(rng.uniform(0.0, 3.0, size))
        if np.any(np.diff(pts) <= 0.0):
            continue
        scale = TimeScale(pts)
        span = scale.b - scale.a
        y = GridFunction(scale, rng.uniform(-1.0, 1.0, size))
        F = DeltaNablaFunctional(constant_lagrangian(1.0 / span), L)
        out = eval_functional(F, y)
        assert out.delta_factor == pytest.approx(1.0, rel=1e-14)
        assert out.product == pytest.approx(out.nabla_factor, rel=1e-13)
        # backward bracket, independent recomputation on nabla slots
        t = scale.points
        w = np.diff(t)
        q = np.diff(y.values) / w
        du = np.array(
            [L.du(t[i + 1], y.values[i], q[i]) for i in range(len(w))]
        )
        dv = np.array(
            [L.dv(t[i + 1], y.values[i], q[i]) for i in range(len(w))]
        )
        want = dv - np.cumsum(du * w)
        got = el_residual(F, y, EL1).residual.values
        assert np.max(np.abs(got - want)) <= 1e-12 * max(1.0, np.max(np.abs(want)))
