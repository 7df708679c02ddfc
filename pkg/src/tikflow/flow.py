"""Flows driven by nonexpansive operators and their Tikhonov regularization.

The integrated vector field is always the projection-extended one: the state
is projected onto the invariant set before the operator and the regularizing
pull are evaluated.  This keeps the set-invariance diagnostic meaningful
instead of circular.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .operators import Operator, OperatorFamily, ParameterError, constant_family
from .regpath import solve_reg_point
from .spaces import ConvexSet, as_vector


class StiffnessError(RuntimeError):
    """Adaptive step size underflowed; the problem is too stiff at this time."""

    def __init__(self, message, t):
        super().__init__(message)
        self.t = t


class DivergenceError(RuntimeError):
    """The state became non-finite during integration."""

    def __init__(self, message, t):
        super().__init__(message)
        self.t = t


# ---------------------------------------------------------------------------
# Schedules
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class Schedule:
    """Regularization data: eps(t) with derivative, anchor path with derivative.

    ``kind`` tags the catalog member; ``eps0`` is the initial regularization
    level, used for step-size bounds.
    """

    eps: Callable[[float], float]
    eps_dot: Callable[[float], float]
    y: Callable[[float], np.ndarray]
    y_dot: Callable[[float], np.ndarray]
    y_limit: np.ndarray
    kind: str
    eps0: float


def power_schedule(eps0: float, beta: float, anchor) -> Schedule:
    """``eps(t) = eps0 * (1+t)**(-beta)`` with a constant anchor.

    Requires ``beta`` in (0, 1): the integral of eps then diverges while
    ``eps_dot/eps**2`` still vanishes, so the schedule certifies itself
    without any time rescaling.
    """
    if eps0 <= 0:
        raise ParameterError("eps0 must be positive")
    if not 0 < beta < 1:
        raise ParameterError("beta must lie in (0, 1)")
    y = as_vector(anchor)
    zero = np.zeros_like(y)
    return Schedule(
        eps=lambda t: eps0 * (1.0 + t) ** (-beta),
        eps_dot=lambda t: -beta * eps0 * (1.0 + t) ** (-beta - 1.0),
        y=lambda t: y,
        y_dot=lambda t: zero,
        y_limit=y,
        kind="power",
        eps0=float(eps0),
    )


def constant_eps_schedule(value: float, anchor) -> Schedule:
    """Constant regularization level; does not vanish, for degenerate tests only."""
    if value < 0:
        raise ParameterError("eps must be nonnegative")
    y = as_vector(anchor)
    zero = np.zeros_like(y)
    return Schedule(
        eps=lambda t: float(value),
        eps_dot=lambda t: 0.0,
        y=lambda t: y,
        y_dot=lambda t: zero,
        y_limit=y,
        kind="constant-eps",
        eps0=float(value),
    )


def moving_anchor_schedule(
    eps0: float, beta: float, y0, y_limit, rate: float
) -> Schedule:
    """Power-law eps with an anchor relaxing exponentially onto its limit."""
    if rate <= 0:
        raise ParameterError("anchor rate must be positive")
    base = power_schedule(eps0, beta, y_limit)
    y_lim = base.y_limit
    v = as_vector(y0, y_lim.size) - y_lim
    return Schedule(
        eps=base.eps,
        eps_dot=base.eps_dot,
        y=lambda t: y_lim + math.exp(-rate * t) * v,
        y_dot=lambda t: -rate * math.exp(-rate * t) * v,
        y_limit=y_lim,
        kind="moving-anchor",
        eps0=float(eps0),
    )


# ---------------------------------------------------------------------------
# Vector fields
# ---------------------------------------------------------------------------


def field_plain(T: Operator, D: ConvexSet, t: float, x) -> np.ndarray:
    """Right-hand side ``-(p - T(p))`` with ``p`` the projection of x onto D."""
    p = D.project(np.asarray(x, dtype=float))
    return T(p) - p


def field_tikhonov(
    family: OperatorFamily, D: ConvexSet, sched: Schedule, t: float, x
) -> np.ndarray:
    """Projection-extended regularized field; equals the plain field when eps == 0."""
    p = D.project(np.asarray(x, dtype=float))
    return family.member(t)(p) - p - sched.eps(t) * (p - sched.y(t))


def make_plain_field(T: Operator, D: ConvexSet):
    project = D.project
    fn = T.fn
    def rhs(t, x):
        p = project(x)
        return fn(p) - p
    return rhs


def make_tikhonov_field(family: OperatorFamily, D: ConvexSet, sched: Schedule):
    project = D.project
    member = family.member
    eps = sched.eps
    anchor = sched.y
    def rhs(t, x):
        p = project(x)
        return member(t)(p) - p - eps(t) * (p - anchor(t))
    return rhs


def rescale(family: OperatorFamily, sched: Schedule):
    """Reparametrize family and anchor through ``t -> 1/eps(t)``.

    Returns the reparametrized family together with the new anchor path and
    its derivative; evaluating the result at ``t`` equals evaluating the
    input at ``1/eps(t)``.
    """
    eps, eps_dot = sched.eps, sched.eps_dot
    fam = OperatorFamily(lambda t: family.member(1.0 / eps(t)), family.limit)
    y, y_dot = sched.y, sched.y_dot

    def y_hat(t):
        return y(1.0 / eps(t))

    def y_hat_dot(t):
        return -y_dot(1.0 / eps(t)) * (eps_dot(t) / eps(t) ** 2)

    return fam, y_hat, y_hat_dot


# ---------------------------------------------------------------------------
# Assumption monitor
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class MonitorSample:
    """One sample of the selection-convergence monitor."""

    psi: float
    psi_over_eps: float
    reg_point: np.ndarray


def psi_monitor(
    t: float,
    family: OperatorFamily,
    sched: Schedule,
    fix_distance: float,
    reg_tol: float = 1e-10,
    warm_start=None,
) -> MonitorSample:
    """Evaluate the convergence monitor combining anchor drift, operator drift,
    anchor velocity, and the schedule decay term.

    ``fix_distance`` is the distance from the limit anchor to the fixed-point
    set; it is an analytic input (or a path-following estimate) and is never
    estimated silently.  The monitor divided by eps must trend to zero for a
    scenario to be certified for strong selection.
    """
    if fix_distance < 0:
        raise ParameterError("fix_distance must be nonnegative")
    eps = sched.eps(t)
    rp = solve_reg_point(
        family.limit, eps, sched.y_limit, tol=reg_tol, warm_start=warm_start
    )
    w = family.drift(t, rp.point)
    anchor_gap = float(np.linalg.norm(sched.y(t) - sched.y_limit))
    anchor_speed = float(np.linalg.norm(sched.y_dot(t)))
    psi = (
        2.0 * anchor_gap
        + w
        + anchor_speed
        - (sched.eps_dot(t) / eps) * (2.0 * anchor_gap + fix_distance)
    )
    return MonitorSample(psi=psi, psi_over_eps=psi / eps, reg_point=rp.point)


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------

# Fehlberg 4(5) embedded pair.
_RKF_C = (0.0, 0.25, 3.0 / 8.0, 12.0 / 13.0, 1.0, 0.5)
_RKF_A = (
    (),
    (0.25,),
    (3.0 / 32.0, 9.0 / 32.0),
    (1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0),
    (439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0),
    (-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0),
)
_RKF_B5 = (16.0 / 135.0, 0.0, 6656.0 / 12825.0, 28561.0 / 56430.0, -9.0 / 50.0, 2.0 / 55.0)
_RKF_B4 = (25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -0.2, 0.0)

METHODS = ("rk4", "euler", "rk45")


def stable_step_bound(eps0: float) -> float:
    """Fixed-step bound for regularized fields; eps0 inflates the Lipschitz constant."""
    return 0.1 / (2.0 + eps0)


@dataclass(eq=False)
class Trajectory:
    """Time-stamped states of an integrated flow plus per-sample diagnostics."""

    times: np.ndarray
    states: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def endpoint(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self, out) -> None:
        """Write samples as CSV: t, coordinates, then diagnostic columns."""
        close = False
        if isinstance(out, (str, bytes)):
            out = open(out, "w", encoding="utf-8", newline="")
            close = True
        try:
            dim = self.states.shape[1]
            cols = ["t"] + [f"x{i}" for i in range(dim)] + list(self.diagnostics)
            out.write(",".join(cols) + "\n")
            for i, t in enumerate(self.times):
                row = [repr(float(t))]
                row += [repr(float(v)) for v in self.states[i]]
                row += [repr(float(self.diagnostics[k][i])) for k in self.diagnostics]
                out.write(",".join(row) + "\n")
        finally:
            if close:
                out.close()


def _rk4_step(rhs, t, x, h):
    k1 = rhs(t, x)
    k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2)
    k4 = rhs(t + h, x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _rkf45_step(rhs, t, x, h):
    ks = []
    for i in range(6):
        xi = x
        for aij, kj in zip(_RKF_A[i], ks):
            xi = xi + (h * aij) * kj
        ks.append(rhs(t + _RKF_C[i] * h, xi))
    x5 = x
    err = np.zeros_like(x)
    for b5, b4, k in zip(_RKF_B5, _RKF_B4, ks):
        x5 = x5 + (h * b5) * k
        err = err + (h * (b5 - b4)) * k
    return x5, float(np.linalg.norm(err))


def integrate(
    field,
    x0,
    t_end: float,
    method: str = "rk4",
    h: float = 1e-3,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    max_step: float | None = None,
    min_step: float = 1e-13,
    sample_times=None,
    diagnostics=None,
) -> Trajectory:
    """Integrate ``x' = field(t, x)`` from 0 to ``t_end`` and sample the result.

    ``method`` is one of ``rk4`` and ``euler`` (fixed step ``h``) or ``rk45``
    (embedded adaptive pair controlled by ``rtol``/``atol``).  Samples are
    hit exactly by clamping the step to each sample boundary.  ``diagnostics``
    is an optional callable ``(t, x) -> dict`` evaluated at every sample.
    Deterministic for fixed inputs and method.
    """
    if method not in METHODS:
        raise ParameterError(f"unknown method {method!r}; choose from {METHODS}")
    if t_end <= 0:
        raise ParameterError("t_end must be positive")
    if method in ("rk4", "euler") and h <= 0:
        raise ParameterError("fixed step h must be positive")
    if method == "rk45" and (rtol <= 0 or atol <= 0):
        raise ParameterError("rk45 tolerances must be positive")

    x = as_vector(x0).copy()
    if sample_times is None:
        sample_times = np.linspace(0.0, t_end, 501)
    sample_times = np.asarray(sample_times, dtype=float)
    if sample_times[0] != 0.0 or np.any(np.diff(sample_times) <= 0):
        raise ParameterError("sample grid must start at 0 and increase strictly")
    if abs(sample_times[-1] - t_end) > 1e-12 * max(1.0, t_end):
        raise ParameterError("sample grid must end at t_end")

    states = [x.copy()]
    diag_rows = [diagnostics(0.0, x) if diagnostics else None]

    t = 0.0
    h_cur = h if method != "rk45" else min(
        h, max_step if max_step is not None else h
    )
    if method == "rk45":
        h_cur = min(1e-2, t_end)
        if max_step is not None:
            h_cur = min(h_cur, max_step)

    for target in sample_times[1:]:
        while t < target * (1.0 - 1e-15) and target - t > 1e-14 * max(1.0, target):
            if method in ("rk4", "euler"):
                step = min(h, target - t)
                if method == "rk4":
                    x = _rk4_step(field, t, x, step)
                else:
                    x = x + step * field(t, x)
                t += step
                if not np.all(np.isfinite(x)):
                    raise DivergenceError(f"state became non-finite at t={t}", t)
            else:
                step = min(h_cur, target - t)
                x_new, err = _rkf45_step(field, t, x, step)
                if not np.isfinite(err) or not np.all(np.isfinite(x_new)):
                    raise DivergenceError(f"state became non-finite at t={t}", t)
                scale = atol + rtol * max(
                    float(np.linalg.norm(x)), float(np.linalg.norm(x_new))
                )
                ratio = err / scale
                if ratio <= 1.0:
                    t += step
                    x = x_new
                    grow = 4.0 if ratio == 0.0 else min(4.0, 0.9 * ratio ** -0.2)
                    h_cur = step * max(0.2, grow)
                else:
                    h_cur = step * max(0.2, 0.9 * ratio ** -0.2)
                if max_step is not None:
                    h_cur = min(h_cur, max_step)
                if h_cur < min_step:
                    raise StiffnessError(f"step size underflow at t={t}", t)
        states.append(x.copy())
        diag_rows.append(diagnostics(float(target), x) if diagnostics else None)

    traj = Trajectory(sample_times.copy(), np.array(states))
    if diagnostics:
        keys = list(diag_rows[0])
        traj.diagnostics = {
            k: np.array([row[k] for row in diag_rows], dtype=float) for k in keys
        }
    return traj


# ---------------------------------------------------------------------------
# Diagnostics and convenience runners
# ---------------------------------------------------------------------------


class FlowDiagnostics:
    """Per-sample diagnostics with warm-started regularized solves.

    Always emits the full column set (residual_t, residual_limit, d_D,
    lyapunov, psi_over_eps); entries that need data not supplied (a schedule
    for the tracking distance, an analytic fixed-set distance for the
    monitor) are reported as NaN rather than silently estimated.
    """

    def __init__(
        self,
        T: Operator | None = None,
        family: OperatorFamily | None = None,
        D: ConvexSet | None = None,
        sched: Schedule | None = None,
        fix_distance: float | None = None,
        reg_tol: float = 1e-8,
        lyapunov: bool = False,
    ):
        if family is None:
            if T is None:
                raise ParameterError("need an operator or an operator family")
            family = constant_family(T)
        self.family = family
        self.D = D if D is not None else family.limit.domain
        self.sched = sched
        self.fix_distance = fix_distance
        self.reg_tol = reg_tol
        self.lyapunov = lyapunov and sched is not None
        self._warm_track = None
        self._warm_monitor = None

    def __call__(self, t, x):
        fam = self.family
        res_limit = float(np.linalg.norm(x - fam.limit(x)))
        res_t = float(np.linalg.norm(x - fam.member(t)(x)))
        out = {
            "residual_t": res_t,
            "residual_limit": res_limit,
            "d_D": self.D.distance(x),
            "lyapunov": math.nan,
            "psi_over_eps": math.nan,
        }
        if self.lyapunov:
            rp = solve_reg_point(
                fam.limit,
                self.sched.eps(t),
                self.sched.y(t),
                tol=self.reg_tol,
                warm_start=self._warm_track,
            )
            self._warm_track = rp.point
            out["lyapunov"] = float(np.linalg.norm(x - rp.point))
        if self.sched is not None and self.fix_distance is not None:
            sample = psi_monitor(
                t,
                fam,
                self.sched,
                self.fix_distance,
                reg_tol=self.reg_tol,
                warm_start=self._warm_monitor,
            )
            self._warm_monitor = sample.reg_point
            out["psi_over_eps"] = sample.psi_over_eps
        return out


def run_plain_flow(
    T: Operator,
    D: ConvexSet,
    x0,
    t_end: float,
    method: str = "rk4",
    h: float = 1e-3,
    sample_times=None,
    diagnostics: bool | FlowDiagnostics = True,
    **kwargs,
) -> Trajectory:
    """Integrate the plain flow from ``x0 in D`` with standard diagnostics."""
    x0 = as_vector(x0, D.dim)
    if not D.contains(x0, 1e-9):
        raise ParameterError("x0 must lie in D")
    if method in ("rk4", "euler") and h > stable_step_bound(0.0):
        raise ParameterError(
            f"fixed step {h} exceeds the stability bound {stable_step_bound(0.0)}"
        )
    diag = diagnostics if isinstance(diagnostics, FlowDiagnostics) else (
        FlowDiagnostics(T=T, D=D) if diagnostics else None
    )
    return integrate(
        make_plain_field(T, D), x0, t_end, method=method, h=h,
        sample_times=sample_times, diagnostics=diag, **kwargs,
    )


def run_tikhonov_flow(
    operator: Operator | OperatorFamily,
    D: ConvexSet,
    sched: Schedule,
    x0,
    t_end: float,
    method: str = "rk4",
    h: float = 1e-3,
    sample_times=None,
    diagnostics: bool | FlowDiagnostics = True,
    fix_distance: float | None = None,
    lyapunov: bool = False,
    **kwargs,
) -> Trajectory:
    """Integrate the regularized flow from ``x0 in D`` with standard diagnostics.

    In fixed-step mode the step is checked against the stability bound,
    which shrinks with the initial regularization level.
    """
    family = operator if isinstance(operator, OperatorFamily) else constant_family(operator)
    x0 = as_vector(x0, D.dim)
    if not D.contains(x0, 1e-9):
        raise ParameterError("x0 must lie in D")
    if method in ("rk4", "euler") and h > stable_step_bound(sched.eps0):
        raise ParameterError(
            f"fixed step {h} exceeds the stability bound {stable_step_bound(sched.eps0)}"
        )
    diag = diagnostics if isinstance(diagnostics, FlowDiagnostics) else (
        FlowDiagnostics(
            family=family, D=D, sched=sched,
            fix_distance=fix_distance, lyapunov=lyapunov,
        )
        if diagnostics
        else None
    )
    return integrate(
        make_tikhonov_field(family, D, sched), x0, t_end, method=method, h=h,
        sample_times=sample_times, diagnostics=diag, **kwargs,
    )
