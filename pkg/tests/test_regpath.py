"""Regularized-equation solver and path following."""

import io

import numpy as np
import pytest

from tikflow import regpath
from tikflow.operators import (
    ParameterError,
    constant_op,
    domain_sampler,
    projection_op,
    translation_op,
)
from tikflow.regpath import (
    check_fejer_triple,
    check_path_lipschitz,
    check_resolvent_identity,
    equation_residual,
    follow_path,
    geometric_epsilons,
    path_to_csv,
    solve_reg_point,
)
from tikflow.spaces import Ball, Box, Hyperplane, WholeSpace


def line_op():
    return projection_op(Hyperplane([0.0, 1.0], 0.0))


def test_solve_matches_line_closed_form():
    # For projection onto the horizontal axis the solution is
    # (y1, eps*y2/(1+eps)).
    T = line_op()
    y = np.array([3.0, 4.0])
    for eps in (2.0, 1.0, 0.25, 1e-3):
        rp = solve_reg_point(T, eps, y, tol=1e-12)
        exact = np.array([3.0, 4.0 * eps / (1.0 + eps)])
        assert np.linalg.norm(rp.point - exact) <= 1e-11
        assert rp.residual_norm <= 1e-12 * eps


def test_solve_matches_constant_closed_form():
    c = np.array([1.0, -2.0])
    T = constant_op(WholeSpace(2), c)
    y = np.array([5.0, 5.0])
    eps = 0.5
    rp = solve_reg_point(T, eps, y, tol=1e-12)
    exact = (eps * y + c) / (1.0 + eps)
    assert np.linalg.norm(rp.point - exact) <= 1e-12


def test_solve_parameter_validation():
    T = line_op()
    with pytest.raises(ParameterError):
        solve_reg_point(T, 0.0, [0.0, 0.0])
    with pytest.raises(ParameterError):
        solve_reg_point(T, 1.0, [0.0, 0.0], tol=0.0)
    boxed = projection_op(Hyperplane([0.0, 1.0], 0.0), Box([0.0, 0.0], [1.0, 1.0]))
    with pytest.raises(ParameterError):
        solve_reg_point(boxed, 1.0, [5.0, 5.0])
    with pytest.raises(ParameterError):
        solve_reg_point(boxed, 1.0, [0.5, 0.5], warm_start=[9.0, 9.0])


def test_equation_residual_definition():
    T = line_op()
    x = np.array([3.0, 1.0])
    y = np.array([3.0, 4.0])
    # eps*(x - y) + x - T(x) evaluated by hand.
    want = np.linalg.norm(np.array([0.0, 0.5 * (1.0 - 4.0) + 1.0]))
    assert equation_residual(T, 0.5, y, x) == pytest.approx(want)


def test_geometric_epsilons():
    eps = geometric_epsilons(1.0, 0.5, 4)
    assert eps == [1.0, 0.5, 0.25, 0.125]
    with pytest.raises(ParameterError):
        geometric_epsilons(1.0, 1.5, 4)


def test_follow_path_converges_to_projection():
    T = line_op()
    result = follow_path(T, [3.0, 4.0], geometric_epsilons(1.0, 0.5, 21), tol=1e-8)
    assert not result.diverged
    assert result.stop_reason == "exhausted"
    assert np.linalg.norm(result.limit_estimate - [3.0, 0.0]) <= 1e-5
    gaps = [np.linalg.norm(rp.anchor - rp.point) for rp in result.points]
    # Distance from the anchor grows as the regularization vanishes.
    assert all(b >= a - 1e-9 for a, b in zip(gaps, gaps[1:]))


def test_follow_path_divergence_flag():
    T = translation_op(WholeSpace(2), [1.0, 0.0])
    result = follow_path(
        T, [0.0, 0.0], geometric_epsilons(1.0, 0.5, 21),
        tol=1e-8, divergence_radius=1e3,
    )
    assert result.diverged
    assert result.limit_estimate is None
    assert result.stop_reason == "diverged"
    for rp in result.points:
        # Closed form: the solution norm is exactly 1/eps.
        assert np.linalg.norm(rp.point) * rp.epsilon == pytest.approx(1.0, rel=1e-2)


def test_follow_path_eps_min_stop():
    T = constant_op(WholeSpace(2), [1.0, 0.0])
    result = follow_path(T, [0.0, 0.0], [1e-6, 1e-9], tol=1e-8)
    assert result.stop_reason == "eps_min"
    assert len(result.points) == 1


def test_follow_path_path_tol_stop():
    T = constant_op(WholeSpace(2), [1.0, 0.0])
    result = follow_path(
        T, [0.0, 0.0], geometric_epsilons(1.0, 0.5, 21), tol=1e-10, path_tol=0.05
    )
    assert result.stop_reason == "path_tol"
    assert len(result.points) < 21


def test_follow_path_requires_decreasing_epsilons():
    with pytest.raises(ParameterError):
        follow_path(line_op(), [0.0, 0.0], [0.5, 1.0])


def test_resolvent_identity_small_defect():
    rng = np.random.default_rng(0)
    T = line_op()
    sampler = domain_sampler(T.domain, rng)
    for _ in range(20):
        lam = float(rng.uniform(0.1, 1.0))
        mu = lam * float(rng.uniform(1.2, 3.0))
        assert check_resolvent_identity(T, lam, mu, sampler(), tol=1e-10) <= 1e-9
    with pytest.raises(ParameterError):
        check_resolvent_identity(T, 1.0, 0.5, [0.0, 0.0])


def test_path_lipschitz_bound():
    rng = np.random.default_rng(1)
    T = line_op()
    sampler = domain_sampler(T.domain, rng)
    for _ in range(30):
        e1, e2 = rng.uniform(0.05, 3.0, size=2)
        rep = check_path_lipschitz(T, sampler(), float(e1), float(e2))
        assert rep.passed, (rep.lhs, rep.rhs)


def test_fejer_triple_inequality():
    rng = np.random.default_rng(2)
    T = line_op()
    sampler = domain_sampler(T.domain, rng)
    for _ in range(30):
        eps = float(rng.uniform(0.1, 2.0))
        fp = np.array([float(rng.uniform(-3.0, 3.0)), 0.0])
        rep = check_fejer_triple(T, eps, sampler(), fp)
        assert rep.passed
    with pytest.raises(ValueError):
        check_fejer_triple(T, 1.0, [0.0, 0.0], [1.0, 1.0])


def test_path_map_firmly_nonexpansive_in_anchor():
    rng = np.random.default_rng(3)
    T = projection_op(Ball([1.0, 0.0], 1.0))
    sampler = domain_sampler(T.domain, rng)
    eps = 0.7
    for _ in range(100):
        y1, y2 = sampler(), sampler()
        p1 = solve_reg_point(T, eps, y1, tol=1e-11).point
        p2 = solve_reg_point(T, eps, y2, tol=1e-11).point
        lhs = (
            np.linalg.norm(p1 - p2) ** 2
            + np.linalg.norm((y1 - p1) - (y2 - p2)) ** 2
        )
        assert lhs <= np.linalg.norm(y1 - y2) ** 2 + 1e-9


def test_anchor_gap_decreasing_in_epsilon():
    T = line_op()
    y = np.array([3.0, 4.0])
    eps_grid = [0.1, 0.5, 1.0, 2.0, 5.0]
    gaps = [
        np.linalg.norm(y - solve_reg_point(T, e, y, tol=1e-11).point)
        for e in eps_grid
    ]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_warm_start_reduces_iterations():
    T = line_op()
    y = np.array([3.0, 4.0])
    cold = solve_reg_point(T, 0.01, y, tol=1e-10)
    warm = solve_reg_point(T, 0.01, y, tol=1e-10, warm_start=cold.point)
    assert warm.iterations < cold.iterations


def test_path_csv_format():
    T = line_op()
    result = follow_path(T, [3.0, 4.0], [1.0, 0.5, 0.25], tol=1e-9)
    buf = io.StringIO()
    path_to_csv(result, buf)
    lines = buf.getvalue().strip().split("\n")
    assert lines[0] == "k,epsilon,x0,x1,residual_norm,iterations,dist_to_anchor"
    assert len(lines) == 4
    first = lines[1].split(",")
    assert first[0] == "0"
    assert float(first[1]) == 1.0
    # Coordinates round-trip exactly through repr.
    assert float(first[2]) == result.points[0].point[0]
