"""Solve the regularized equation ``eps*x + (x - T(x)) = eps*y`` and follow eps -> 0.

The inner solver is plain contraction iteration: the equation is equivalent
to the fixed point of ``x -> eta*y + (1-eta)*T(x)`` with ``eta =
eps/(1+eps)``, a contraction with factor ``1/(1+eps)``.  The equation
residual is required to fall below ``tol*eps``; the 1/eps conditioning of
the equation then keeps the error of the computed point below ``tol``
uniformly along the path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .operators import Operator, ParameterError
from .spaces import as_vector

#: Membership slack used when validating anchors and warm starts.
_ANCHOR_TOL = 1e-7


class ConvergenceError(RuntimeError):
    """The contraction iteration did not meet its residual target."""

    def __init__(self, message, last_point=None, residual_norm=None,
                 iterations=None, expected_iterations=None, path_index=None):
        super().__init__(message)
        self.last_point = last_point
        self.residual_norm = residual_norm
        self.iterations = iterations
        self.expected_iterations = expected_iterations
        self.path_index = path_index


@dataclass(eq=False)
class RegPoint:
    """Solution of the regularized equation at one regularization level."""

    epsilon: float
    anchor: np.ndarray
    point: np.ndarray
    residual_norm: float
    iterations: int


@dataclass(eq=False)
class PathResult:
    """Warm-started solutions along a decreasing epsilon sequence.

    ``diverged`` and a finite ``limit_estimate`` are mutually exclusive: a
    diverged path (point norm beyond the divergence radius, the empty
    fixed-point-set signal) carries no limit estimate.
    """

    epsilons: list
    points: list
    limit_estimate: np.ndarray | None
    diverged: bool
    stop_reason: str


def equation_residual(T: Operator, epsilon: float, y, x) -> float:
    """Norm of ``eps*x + (x - T(x)) - eps*y`` at the candidate point ``x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(np.linalg.norm(epsilon * (x - y) + x - T(x)))


def solve_reg_point(
    T: Operator,
    epsilon: float,
    y,
    tol: float = 1e-10,
    max_iter: int | None = None,
    warm_start=None,
) -> RegPoint:
    """Solve ``eps*x + (x - T(x)) = eps*y`` by contraction iteration.

    Stops once the distance between successive iterates falls below
    ``tol*eps``, which bounds the equation residual by the same quantity.
    When ``max_iter`` is omitted, an a-priori bound derived from the
    contraction factor ``1/(1+eps)`` and the first step length is used.
    """
    if epsilon <= 0:
        raise ParameterError("epsilon must be positive")
    if tol <= 0:
        raise ParameterError("tol must be positive")
    y = as_vector(y, T.domain.dim)
    if not T.domain.contains(y, _ANCHOR_TOL):
        raise ParameterError("anchor y must lie in the operator domain")

    eta = epsilon / (1.0 + epsilon)
    if warm_start is None:
        x = y.copy()
    else:
        x = as_vector(warm_start, T.domain.dim)
        if not T.domain.contains(x, _ANCHOR_TOL):
            raise ParameterError("warm start must lie in the operator domain")

    target = tol * epsilon
    limit = max_iter
    first_delta = None
    iterations = 0
    while True:
        xn = eta * y + (1.0 - eta) * T(x)
        delta = float(np.linalg.norm(xn - x))
        x = xn
        iterations += 1
        if delta <= target:
            break
        if first_delta is None:
            first_delta = delta
            if limit is None:
                # Distance to the fixed point is at most first_delta*(1+eps)/eps;
                # double the geometric-decay estimate as safety margin.
                needed = math.log(first_delta * (1 + epsilon) / (epsilon * target))
                limit = max(64, int(2 * needed / math.log1p(epsilon)) + 16)
        if iterations >= limit:
            expected = None
            if first_delta is not None and first_delta > target:
                expected = math.log(first_delta / target) / math.log1p(epsilon)
            raise ConvergenceError(
                f"no convergence after {iterations} iterations at eps={epsilon} "
                f"(a-priori iteration estimate: {expected})",
                last_point=x,
                residual_norm=equation_residual(T, epsilon, y, x),
                iterations=iterations,
                expected_iterations=expected,
            )

    return RegPoint(
        epsilon=float(epsilon),
        anchor=y.copy(),
        point=x,
        residual_norm=equation_residual(T, epsilon, y, x),
        iterations=iterations,
    )


def geometric_epsilons(eps0: float = 1.0, ratio: float = 0.5, count: int = 21) -> list:
    """The decreasing grid ``eps0 * ratio**k`` for ``k = 0 .. count-1``."""
    if eps0 <= 0 or not 0 < ratio < 1 or count < 1:
        raise ParameterError("need eps0 > 0, ratio in (0, 1) and count >= 1")
    return [eps0 * ratio**k for k in range(count)]


def follow_path(
    T: Operator,
    y,
    epsilons,
    tol: float = 1e-8,
    divergence_radius: float | None = None,
    path_tol: float | None = None,
    eps_min: float = 1e-8,
    max_iter: int | None = None,
) -> PathResult:
    """Warm-started solves along a decreasing epsilon sequence.

    Stops early when the point norm exceeds ``divergence_radius`` (the empty
    fixed-point-set signal), when consecutive points differ by less than
    ``path_tol``, or when epsilon drops below ``eps_min``; the stop reason is
    recorded in the result.
    """
    y = as_vector(y, T.domain.dim)
    if divergence_radius is None:
        divergence_radius = 1e6 * (1.0 + float(np.linalg.norm(y)))
    if divergence_radius <= 0:
        raise ParameterError("divergence_radius must be positive")

    epsilons = [float(e) for e in epsilons]
    if any(b >= a for a, b in zip(epsilons, epsilons[1:])):
        raise ParameterError("epsilon sequence must be strictly decreasing")

    points: list[RegPoint] = []
    used: list[float] = []
    diverged = False
    reason = "exhausted"
    warm = None
    prev = None
    for k, eps in enumerate(epsilons):
        if eps < eps_min:
            reason = "eps_min"
            break
        try:
            rp = solve_reg_point(T, eps, y, tol=tol, max_iter=max_iter, warm_start=warm)
        except ConvergenceError as exc:
            exc.path_index = k
            raise
        points.append(rp)
        used.append(eps)
        if float(np.linalg.norm(rp.point)) > divergence_radius:
            diverged = True
            reason = "diverged"
            break
        if path_tol is not None and prev is not None:
            if float(np.linalg.norm(rp.point - prev)) < path_tol:
                reason = "path_tol"
                break
        prev = rp.point
        warm = rp.point

    limit_estimate = None
    if not diverged and points:
        limit_estimate = points[-1].point
    return PathResult(used, points, limit_estimate, diverged, reason)


def check_resolvent_identity(
    T: Operator, lam: float, mu: float, y, tol: float = 1e-10
) -> float:
    """Defect of the two-level consistency identity linking the path to itself.

    The solution at level ``lam`` must equal the solution at level ``mu``
    anchored at the convex combination ``(lam/mu)*y + (1-lam/mu)*x_lam``.
    Both sides are solved to tolerance ``tol``; a defect within ``10*tol``
    is expected.
    """
    if not mu > lam > 0:
        raise ParameterError("need mu > lam > 0")
    y = as_vector(y, T.domain.dim)
    lhs = solve_reg_point(T, lam, y, tol=tol)
    blended = (lam / mu) * y + (1.0 - lam / mu) * lhs.point
    rhs = solve_reg_point(T, mu, blended, tol=tol, warm_start=lhs.point)
    return float(np.linalg.norm(lhs.point - rhs.point))


@dataclass
class BoundReport:
    """Result of a two-sided inequality check with explicit slack."""

    lhs: float
    rhs: float
    slack: float
    passed: bool


def check_path_lipschitz(
    T: Operator, x, eps1: float, eps2: float, tol: float = 1e-10
) -> BoundReport:
    """Check the path increment bound between two regularization levels.

    ``||x(eps2) - x(eps1)||`` must not exceed ``|eps2-eps1|/min(eps1,eps2)``
    times the distance from the anchor to the point at the smaller level.
    """
    if eps1 <= 0 or eps2 <= 0:
        raise ParameterError("epsilons must be positive")
    x = as_vector(x, T.domain.dim)
    p1 = solve_reg_point(T, eps1, x, tol=tol)
    p2 = solve_reg_point(T, eps2, x, tol=tol, warm_start=p1.point)
    eps_lo = min(eps1, eps2)
    p_lo = p1 if eps1 <= eps2 else p2
    lhs = float(np.linalg.norm(p2.point - p1.point))
    rhs = abs(eps2 - eps1) / eps_lo * float(np.linalg.norm(x - p_lo.point))
    slack = 10.0 * tol
    return BoundReport(lhs, rhs, slack, lhs <= rhs + slack)


def check_fejer_triple(
    T: Operator, epsilon: float, y, fixed_point, tol: float = 1e-10
) -> BoundReport:
    """Check the three-point inequality tying anchor, path point, and a fixed point.

    ``||y - x_eps||^2 + ||x_eps - x*||^2 <= ||y - x*||^2`` for any fixed
    point ``x*`` of ``T``; the supplied fixed point must satisfy its own
    residual check first.
    """
    y = as_vector(y, T.domain.dim)
    fp = as_vector(fixed_point, T.domain.dim)
    if float(np.linalg.norm(fp - T(fp))) > tol:
        raise ValueError("fixed_point fails its own residual check")
    rp = solve_reg_point(T, epsilon, y, tol=tol)
    lhs = (
        float(np.linalg.norm(y - rp.point)) ** 2
        + float(np.linalg.norm(rp.point - fp)) ** 2
    )
    rhs = float(np.linalg.norm(y - fp)) ** 2
    slack = 10.0 * tol
    return BoundReport(lhs, rhs, slack, lhs <= rhs + slack)


def path_to_csv(result: PathResult, out) -> None:
    """Write a path as CSV: k, epsilon, coords, residual_norm, iterations, dist_to_anchor."""
    close = False
    if isinstance(out, (str, bytes)):
        out = open(out, "w", encoding="utf-8", newline="")
        close = True
    try:
        dim = result.points[0].point.size if result.points else 0
        coord_cols = ",".join(f"x{i}" for i in range(dim))
        header = "k,epsilon"
        if coord_cols:
            header += "," + coord_cols
        header += ",residual_norm,iterations,dist_to_anchor\n"
        out.write(header)
        for k, rp in enumerate(result.points):
            coords = ",".join(repr(float(v)) for v in rp.point)
            dist = float(np.linalg.norm(rp.anchor - rp.point))
            out.write(
                f"{k},{rp.epsilon!r},{coords},{rp.residual_norm!r},"
                f"{rp.iterations},{dist!r}\n"
            )
    finally:
        if close:
            out.close()
