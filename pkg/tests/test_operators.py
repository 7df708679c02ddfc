"""Operator catalog, proximal maps, and sampled class checks."""

import math

import numpy as np
import pytest

from tikflow import operators
from tikflow.operators import (
    DomainError,
    IndicatorProx,
    L1Prox,
    Operator,
    OperatorFamily,
    ParameterError,
    QuadraticProx,
    SeparableProx,
    affine_op,
    check_baillon_haddad,
    check_class,
    check_forward_backward_inequality,
    constant_family,
    make_forward_backward,
    projection_op,
    prox,
    prox_op,
    residual,
    scaled_rotation_op,
    translation_op,
)
from tikflow.spaces import Ball, Box, Hyperplane, WholeSpace


def soft_threshold_oracle(x, th, grid=None):
    """Brute-force 1-D prox of th*|.| by grid search of the prox objective."""
    if grid is None:
        grid = np.linspace(-5.0, 5.0, 100001)
    vals = th * np.abs(grid) + 0.5 * (grid - x) ** 2
    return grid[np.argmin(vals)]


def test_l1_prox_matches_grid_oracle():
    spec = L1Prox(weight=0.7)
    for x in (-2.3, -0.2, 0.0, 0.5, 3.1):
        mu = 1.3
        got = prox(spec, [x], mu)[0]
        want = soft_threshold_oracle(x, mu * 0.7)
        assert got == pytest.approx(want, abs=2e-4)


def test_quadratic_prox_stationarity():
    spec = QuadraticProx([1.0, -2.0], weight=0.8)
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = 3.0 * rng.standard_normal(2)
        mu = float(rng.uniform(0.1, 2.0))
        p = prox(spec, x, mu)
        # Optimality: w*(p - center) + (p - x)/mu = 0.
        grad = 0.8 * (p - spec.center) + (p - x) / mu
        assert np.linalg.norm(grad) <= 1e-12


def test_indicator_prox_is_projection():
    box = Box([0.0, 0.0], [1.0, 1.0])
    spec = IndicatorProx(box)
    x = np.array([2.0, -1.0])
    assert np.allclose(prox(spec, x, 0.3), box.project(x))


def test_separable_prox_blocks():
    spec = SeparableProx(
        ((L1Prox(1.0), (0,)), (QuadraticProx([2.0], 1.0), (1,)))
    )
    got = prox(spec, [3.0, 0.0], 1.0)
    assert got[0] == pytest.approx(2.0)
    assert got[1] == pytest.approx(1.0)


def test_separable_prox_rejects_overlap():
    with pytest.raises(ParameterError):
        SeparableProx(((L1Prox(1.0), (0, 1)), (L1Prox(1.0), (1,))))


def test_prox_parameter_validation():
    with pytest.raises(ParameterError):
        prox(L1Prox(1.0), [1.0], 0.0)
    with pytest.raises(ParameterError):
        L1Prox(-1.0)
    with pytest.raises(ParameterError):
        QuadraticProx([0.0], 0.0)


def test_prox_operator_firmly_nonexpansive():
    spec = L1Prox(1.0)
    T = prox_op(spec, 0.7, WholeSpace(2))
    rep = check_class(T, "firmly-nonexpansive", rng=np.random.default_rng(1), pairs=500)
    assert rep.passed


def _lasso_fb(mu=1.0):
    b = np.array([2.0, 0.5])
    B = affine_op(WholeSpace(2), None, -b, "cocoercive", 1.0, name="B")
    return make_forward_backward(L1Prox(1.0), B, mu), B, b


def test_lasso_forward_backward_fixed_point():
    T, B, b = _lasso_fb()
    fp = np.array([1.0, 0.0])
    assert np.linalg.norm(T(fp) - fp) <= 1e-12
    # Subgradient optimality: -B(fp) must be an l1 subgradient at fp.
    g = -B(fp)
    assert g[0] == pytest.approx(1.0)  # fp[0] > 0 forces the subgradient 1
    assert abs(g[1]) <= 1.0 + 1e-12   # fp[1] == 0 allows anything in [-1, 1]


def test_box_forward_backward_fixed_point_is_projection():
    b = np.array([2.0, 0.5])
    box = Box([0.0, 0.0], [1.0, 1.0])
    B = affine_op(WholeSpace(2), None, -b, "cocoercive", 1.0)
    T = make_forward_backward(IndicatorProx(box), B, 1.0)
    fp = box.project(b)
    assert np.allclose(fp, [1.0, 0.5])
    assert np.linalg.norm(T(fp) - fp) <= 1e-12
    # KKT: the gradient residual lies in the normal cone at fp.
    r = b - fp
    assert r[0] >= 0.0 and fp[0] == box.hi[0]  # active upper bound
    assert r[1] == pytest.approx(0.0)          # interior coordinate


def test_forward_backward_step_validation():
    _, B, _ = _lasso_fb()
    with pytest.raises(ParameterError):
        make_forward_backward(L1Prox(1.0), B, 2.0)
    with pytest.raises(ParameterError):
        make_forward_backward(L1Prox(1.0), B, 0.0)
    plainB = affine_op(WholeSpace(2), None, [-1.0, 0.0])
    with pytest.raises(ParameterError):
        make_forward_backward(L1Prox(1.0), plainB, 0.5)


def test_forward_backward_inequality_nondegenerate_step():
    T, B, _ = _lasso_fb(mu=0.5)
    rep = check_forward_backward_inequality(
        T, B, 0.5, rng=np.random.default_rng(2), pairs=500, tol=1e-9
    )
    assert rep.passed, rep.worst_margin


def test_check_class_detects_expansion():
    T = Operator(WholeSpace(2), lambda x: 2.0 * x, "unclassified")
    rep = check_class(T, "nonexpansive", rng=np.random.default_rng(3), pairs=200)
    assert not rep.passed
    assert rep.witness is not None
    x, y = rep.witness
    assert np.linalg.norm(2 * x - 2 * y) > np.linalg.norm(x - y)
    assert "fail" in rep.line("class.check")


def test_check_class_contraction_modulus():
    T = scaled_rotation_op(0.5, math.radians(30.0))
    rep = check_class(T, "contraction", rng=np.random.default_rng(4), pairs=300)
    assert rep.passed
    # The declared modulus is tight: a smaller one must fail.
    rep = check_class(
        T, "contraction", rng=np.random.default_rng(4), pairs=300, modulus=0.4
    )
    assert not rep.passed


def test_baillon_haddad_gradient_maps():
    # Gradient of 0.5*(x1^2 + 4*x2^2) is 4-Lipschitz hence 1/4-cocoercive.
    A = np.diag([1.0, 4.0])
    g = affine_op(WholeSpace(2), A, None)
    rep = check_baillon_haddad(g, 0.25, rng=np.random.default_rng(5), pairs=500)
    assert rep.passed
    assert not rep.details["inconsistent"]


def test_baillon_haddad_flags_non_gradient():
    # Norm-preserving but non-monotone: Lipschitz side holds, cocoercive fails.
    g = affine_op(WholeSpace(2), np.diag([-1.0, 1.0]), None)
    rep = check_baillon_haddad(g, 1.0, rng=np.random.default_rng(6), pairs=500)
    assert not rep.passed
    assert rep.details["inconsistent"]
    assert rep.details["lipschitz_margin"] <= 1e-9
    assert rep.details["cocoercive_margin"] > 1e-9


def test_residual_and_domain():
    T = projection_op(Hyperplane([0.0, 1.0], 0.0), Ball([0.0, 0.0], 5.0))
    assert np.allclose(residual(T, [3.0, 0.0]), 0.0)
    assert np.allclose(residual(T, [3.0, 4.0]), [0.0, 4.0])
    with pytest.raises(DomainError):
        residual(T, [10.0, 10.0])


def test_residual_nonincreasing_along_iteration():
    T = projection_op(Ball([2.0, 0.0], 1.0))
    x = np.array([-4.0, 3.0])
    norms = []
    for _ in range(40):
        norms.append(float(np.linalg.norm(x - T(x))))
        x = T(x)
    assert all(b <= a + 1e-10 for a, b in zip(norms, norms[1:]))


def test_operator_family_drift():
    D = WholeSpace(2)
    limit = translation_op(D, [1.0, 0.0])
    fam = OperatorFamily(
        lambda t: translation_op(D, [1.0 + 1.0 / (1.0 + t), 0.0]), limit
    )
    assert fam.drift(0.0, [0.0, 0.0]) == pytest.approx(1.0)
    assert fam.drift(9.0, [5.0, 5.0]) == pytest.approx(0.1)
    assert constant_family(limit).drift(3.0, [1.0, 1.0]) == 0.0


def test_operator_parameter_validation():
    with pytest.raises(ParameterError):
        scaled_rotation_op(1.0, 0.1)
    with pytest.raises(ParameterError):
        Operator(WholeSpace(2), lambda x: x, "contraction")
    with pytest.raises(ParameterError):
        Operator(WholeSpace(2), lambda x: x, "no-such-class")
