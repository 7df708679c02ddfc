"""Operator catalog, proximal maps, and sampled property checkers.

Operators are pure value objects carrying their domain and a declared
regularity class.  Class membership is never assumed silently: the checkers
in this module evaluate the defining inequalities on seeded random samples
and report a concrete witness on failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .spaces import Ball, Box, ConvexSet, WholeSpace, as_vector

OPERATOR_CLASSES = (
    "nonexpansive",
    "firmly-nonexpansive",
    "contraction",
    "cocoercive",
    "unclassified",
)

#: Defaults for sampling-based property checks.
DEFAULT_PAIRS = 1000
DEFAULT_CHECK_TOL = 1e-9


class DomainError(ValueError):
    """A point lies outside the operator's domain."""


class ParameterError(ValueError):
    """An operator or prox parameter violates its admissible range."""


class ConfigurationError(ValueError):
    """A checker or scenario was configured inconsistently."""


@dataclass(eq=False)
class Operator:
    """A map from its convex domain into R^n with a declared regularity class."""

    domain: ConvexSet
    fn: Callable[[np.ndarray], np.ndarray]
    declared_class: str = "unclassified"
    modulus: float | None = None
    name: str = ""

    def __post_init__(self):
        if self.declared_class not in OPERATOR_CLASSES:
            raise ParameterError(f"unknown operator class {self.declared_class!r}")
        if self.declared_class == "contraction":
            if self.modulus is None or not 0 <= self.modulus < 1:
                raise ParameterError("a contraction needs a modulus in [0, 1)")
        if self.declared_class == "cocoercive":
            if self.modulus is None or self.modulus <= 0:
                raise ParameterError("a cocoercive operator needs a modulus > 0")

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)


def identity_op(domain: ConvexSet) -> Operator:
    return Operator(domain, lambda x: x, "nonexpansive", name="identity")


def constant_op(domain: ConvexSet, value) -> Operator:
    c = as_vector(value, domain.dim)
    return Operator(domain, lambda x: c, "contraction", 0.0, name="constant")


def projection_op(target: ConvexSet, domain: ConvexSet | None = None) -> Operator:
    """Projection onto ``target``, defined on ``domain`` (default: all of R^n)."""
    domain = domain if domain is not None else WholeSpace(target.dim)
    return Operator(
        domain, target.project, "firmly-nonexpansive", name="projection"
    )


def translation_op(domain: ConvexSet, shift) -> Operator:
    s = as_vector(shift, domain.dim)
    return Operator(domain, lambda x: x + s, "nonexpansive", name="translation")


def affine_op(
    domain: ConvexSet,
    matrix=None,
    offset=None,
    declared_class: str = "unclassified",
    modulus: float | None = None,
    name: str = "affine",
) -> Operator:
    """The map ``x -> A x + b`` (missing parts default to identity / zero)."""
    A = None if matrix is None else np.asarray(matrix, dtype=float)
    b = None if offset is None else as_vector(offset, domain.dim)

    if A is None and b is None:
        fn = lambda x: x
    elif A is None:
        fn = lambda x: x + b
    elif b is None:
        fn = lambda x: A @ x
    else:
        fn = lambda x: A @ x + b
    return Operator(domain, fn, declared_class, modulus, name=name)


def scaled_rotation_op(alpha: float, angle: float) -> Operator:
    """``alpha`` times the planar rotation by ``angle`` radians; a contraction for alpha < 1."""
    if not 0 <= alpha < 1:
        raise ParameterError("scaled rotation requires alpha in [0, 1)")
    c, s = math.cos(angle), math.sin(angle)
    A = alpha * np.array([[c, -s], [s, c]])
    return affine_op(
        WholeSpace(2), A, None, "contraction", alpha, name="scaled-rotation"
    )


def residual(T: Operator, x, tol: float = 1e-9) -> np.ndarray:
    """The displacement ``x - T(x)``; zero exactly at fixed points of ``T``."""
    x = as_vector(x, T.domain.dim)
    if not T.domain.contains(x, tol):
        raise DomainError(f"point {x} lies outside the operator domain")
    return x - T(x)


# ---------------------------------------------------------------------------
# Proximal maps (separable, closed-form catalog)
# ---------------------------------------------------------------------------


class ProxSpec:
    """A convex function with a closed-form proximal map."""

    def prox(self, x: np.ndarray, mu: float) -> np.ndarray:
        raise NotImplementedError


@dataclass(eq=False)
class IndicatorProx(ProxSpec):
    """Indicator of a convex set; the prox is the projection at every step."""

    set: ConvexSet

    def prox(self, x, mu):
        return self.set.project(x)


@dataclass(eq=False)
class L1Prox(ProxSpec):
    """Weighted l1 norm; the prox is coordinatewise soft thresholding."""

    weight: float = 1.0

    def __post_init__(self):
        if self.weight <= 0:
            raise ParameterError("l1 weight must be positive")

    def prox(self, x, mu):
        th = mu * self.weight
        return np.sign(x) * np.maximum(np.abs(x) - th, 0.0)


@dataclass(eq=False)
class QuadraticProx(ProxSpec):
    """``(weight/2) ||x - center||^2``; the prox shrinks toward the center."""

    center: np.ndarray
    weight: float = 1.0

    def __post_init__(self):
        self.center = as_vector(self.center)
        if self.weight <= 0:
            raise ParameterError("quadratic weight must be positive")

    def prox(self, x, mu):
        w = mu * self.weight
        return (x + w * self.center) / (1.0 + w)


@dataclass(eq=False)
class SeparableProx(ProxSpec):
    """Blockwise combination: each part applies to its own coordinate indices."""

    parts: tuple

    def __post_init__(self):
        seen = set()
        for spec, idx in self.parts:
            if not isinstance(spec, ProxSpec):
                raise ParameterError("separable parts must be ProxSpec instances")
            for i in idx:
                if i in seen:
                    raise ParameterError("separable blocks must not overlap")
                seen.add(i)

    def prox(self, x, mu):
        out = np.array(x, dtype=float)
        for spec, idx in self.parts:
            idx = list(idx)
            out[idx] = spec.prox(out[idx], mu)
        return out


def prox(spec: ProxSpec, x, mu: float) -> np.ndarray:
    """Evaluate the proximal map of ``spec`` with step ``mu > 0`` at ``x``."""
    if mu <= 0:
        raise ParameterError("prox step mu must be positive")
    return np.asarray(spec.prox(as_vector(x), float(mu)), dtype=float)


def prox_op(spec: ProxSpec, mu: float, domain: ConvexSet) -> Operator:
    """The prox of ``spec`` as a firmly nonexpansive catalog operator."""
    if mu <= 0:
        raise ParameterError("prox step mu must be positive")
    return Operator(
        domain, lambda x: spec.prox(x, mu), "firmly-nonexpansive", name="prox"
    )


def make_forward_backward(phi: ProxSpec, B: Operator, mu: float) -> Operator:
    """Compose a prox step of ``phi`` with a forward step of cocoercive ``B``.

    Requires ``mu`` strictly between 0 and twice the cocoercivity modulus of
    ``B``; the result is nonexpansive on the domain of ``B``.
    """
    if B.declared_class != "cocoercive" or B.modulus is None:
        raise ParameterError("B must be declared cocoercive with a modulus")
    beta = B.modulus
    if not 0 < mu < 2 * beta:
        raise ParameterError(f"mu must lie in (0, {2 * beta}), got {mu}")
    mu = float(mu)

    def fn(x):
        return phi.prox(x - mu * B(x), mu)

    return Operator(B.domain, fn, "nonexpansive", name="forward-backward")


# ---------------------------------------------------------------------------
# Time-indexed families
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class OperatorFamily:
    """A time-indexed family of operators approaching a limit operator.

    Members share the limit's domain; ``t -> member(t)(x)`` is assumed
    piecewise continuous for fixed ``x``.  ``drift_bound`` is an optional
    user-supplied envelope used for monitoring only; tests evaluate the
    drift exactly.
    """

    member: Callable[[float], Operator]
    limit: Operator
    drift_bound: Callable[[float], float] | None = None

    def drift(self, t: float, x) -> float:
        """Exact pointwise gap between the member at time ``t`` and the limit."""
        x = np.asarray(x, dtype=float)
        return float(np.linalg.norm(self.member(t)(x) - self.limit(x)))


def constant_family(T: Operator) -> OperatorFamily:
    return OperatorFamily(lambda t: T, T)


# ---------------------------------------------------------------------------
# Sampled property checks
# ---------------------------------------------------------------------------


def domain_sampler(domain: ConvexSet, rng: np.random.Generator, scale: float = 2.0):
    """Seeded point sampler: uniform on boxes and balls, projected Gaussian otherwise."""
    if isinstance(domain, Box):
        lo, hi = domain.lo, domain.hi
        return lambda: rng.uniform(lo, hi)
    if isinstance(domain, Ball):
        def sample_ball():
            d = rng.standard_normal(domain.dim)
            n = np.linalg.norm(d)
            if n == 0.0:
                return domain.center.copy()
            r = domain.radius * rng.uniform() ** (1.0 / domain.dim)
            return domain.center + d * (r / n)
        return sample_ball
    return lambda: domain.project(scale * rng.standard_normal(domain.dim))


@dataclass
class ClassCheckReport:
    """Outcome of a sampled operator-class check."""

    claim: str
    passed: bool
    worst_margin: float
    tol: float
    pairs: int
    witness: tuple | None = None
    details: dict = field(default_factory=dict)

    def line(self, check_id: str = "class") -> str:
        status = "pass" if self.passed else "fail"
        return f"{check_id} {status} measured={self.worst_margin!r} threshold={self.tol!r}"


def _class_margin(claim: str, modulus, x, y, Tx, Ty) -> float:
    dxy = np.linalg.norm(x - y)
    dT = np.linalg.norm(Tx - Ty)
    if claim == "nonexpansive":
        return dT - dxy
    if claim == "contraction":
        return dT - modulus * dxy
    if claim == "firmly-nonexpansive":
        dres = np.linalg.norm((x - Tx) - (y - Ty))
        return dT**2 + dres**2 - dxy**2
    if claim == "cocoercive":
        return modulus * dT**2 - float((Tx - Ty) @ (x - y))
    raise ParameterError(f"cannot check class {claim!r}")


def check_class(
    T: Operator,
    claim: str,
    sampler=None,
    pairs: int = DEFAULT_PAIRS,
    tol: float = DEFAULT_CHECK_TOL,
    modulus: float | None = None,
    rng: np.random.Generator | None = None,
) -> ClassCheckReport:
    """Evaluate the defining inequality of ``claim`` on sampled domain pairs.

    The worst margin over all pairs is reported; a positive margin above
    ``tol`` fails the check and the offending pair is kept as a witness.
    """
    if pairs < 1:
        raise ConfigurationError("need at least one sample pair")
    if sampler is None:
        sampler = domain_sampler(T.domain, rng if rng is not None else np.random.default_rng(0))
    if modulus is None:
        modulus = T.modulus
    if claim in ("contraction", "cocoercive") and modulus is None:
        raise ParameterError(f"class {claim!r} needs a modulus")

    worst = -math.inf
    witness = None
    for _ in range(pairs):
        x, y = sampler(), sampler()
        m = _class_margin(claim, modulus, x, y, T(x), T(y))
        if m > worst:
            worst = m
            witness = (x, y)
    passed = worst <= tol
    return ClassCheckReport(claim, passed, float(worst), tol, pairs, None if passed else witness)


def check_baillon_haddad(
    f_grad: Operator,
    beta: float,
    sampler=None,
    pairs: int = DEFAULT_PAIRS,
    tol: float = DEFAULT_CHECK_TOL,
    rng: np.random.Generator | None = None,
) -> ClassCheckReport:
    """Check that ``1/beta``-Lipschitz continuity and ``beta``-cocoercivity agree.

    Both inequalities are evaluated on the same sample pairs; the check
    passes only if both hold.  One direction failing while the other holds
    flags a non-convex or mis-declared gradient map.
    """
    if beta <= 0:
        raise ParameterError("beta must be positive")
    if pairs < 1:
        raise ConfigurationError("need at least one sample pair")
    if sampler is None:
        sampler = domain_sampler(
            f_grad.domain, rng if rng is not None else np.random.default_rng(0)
        )

    worst_lip = -math.inf
    worst_coco = -math.inf
    witness = None
    for _ in range(pairs):
        x, y = sampler(), sampler()
        gx, gy = f_grad(x), f_grad(y)
        lip = np.linalg.norm(gx - gy) - np.linalg.norm(x - y) / beta
        coco = _class_margin("cocoercive", beta, x, y, gx, gy)
        if max(lip, coco) > max(worst_lip, worst_coco):
            witness = (x, y)
        worst_lip = max(worst_lip, lip)
        worst_coco = max(worst_coco, coco)

    lip_ok = worst_lip <= tol
    coco_ok = worst_coco <= tol
    passed = lip_ok and coco_ok
    return ClassCheckReport(
        "baillon-haddad",
        passed,
        float(max(worst_lip, worst_coco)),
        tol,
        pairs,
        None if passed else witness,
        details={
            "lipschitz_margin": float(worst_lip),
            "cocoercive_margin": float(worst_coco),
            "inconsistent": lip_ok != coco_ok,
        },
    )


def check_forward_backward_inequality(
    T: Operator,
    B: Operator,
    mu: float,
    sampler=None,
    pairs: int = DEFAULT_PAIRS,
    tol: float = DEFAULT_CHECK_TOL,
    rng: np.random.Generator | None = None,
) -> ClassCheckReport:
    """Sampled check of the cocoercive composite bound.

    For the forward-backward operator built from ``B`` with step ``mu`` the
    strengthened estimate ``||Tx-Ty||^2 + mu (2 beta - mu) ||Bx-By||^2 <=
    ||x-y||^2`` must hold on every pair.
    """
    if B.modulus is None:
        raise ParameterError("B must carry a cocoercivity modulus")
    beta = B.modulus
    if sampler is None:
        sampler = domain_sampler(T.domain, rng if rng is not None else np.random.default_rng(0))
    coeff = mu * (2 * beta - mu)
    worst = -math.inf
    witness = None
    for _ in range(pairs):
        x, y = sampler(), sampler()
        lhs = (
            np.linalg.norm(T(x) - T(y)) ** 2
            + coeff * np.linalg.norm(B(x) - B(y)) ** 2
        )
        m = lhs - np.linalg.norm(x - y) ** 2
        if m > worst:
            worst = m
            witness = (x, y)
    passed = worst <= tol
    return ClassCheckReport(
        "forward-backward-inequality", passed, float(worst), tol, pairs,
        None if passed else witness,
    )
