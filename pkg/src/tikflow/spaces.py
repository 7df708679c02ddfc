"""Closed convex subsets of R^n with exact projections and distances.

Every set in the catalog has a closed-form projection; there is no inner
iterative solver anywhere in this module.  Sets are immutable value objects
and all operations are pure.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

#: Default absolute membership tolerance (in distance units).
MEMBERSHIP_TOL = 1e-9

#: Vertex enumeration limit for exact box-to-box Hausdorff distances.
_MAX_VERTEX_DIM = 16


class UnsupportedSetError(ValueError):
    """No closed-form formula is available for the requested set or pair."""


def as_vector(x, dim: int | None = None) -> np.ndarray:
    """Validate ``x`` as a finite 1-D float vector, optionally of dimension ``dim``."""
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1 or v.size < 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite coordinates")
    if dim is not None and v.size != dim:
        raise ValueError(f"expected a vector of dimension {dim}, got {v.size}")
    return v


class ConvexSet:
    """A nonempty closed convex subset of R^n with an exact projection."""

    dim: int

    def project(self, x) -> np.ndarray:
        raise NotImplementedError

    def distance(self, x) -> float:
        x = as_vector(x, self.dim)
        return float(np.linalg.norm(x - self.project(x)))

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        return self.distance(x) <= tol


@dataclass(eq=False)
class WholeSpace(ConvexSet):
    """All of R^n; projection is the identity."""

    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")

    def project(self, x):
        return np.asarray(x, dtype=float)

    def distance(self, x) -> float:
        as_vector(x, self.dim)
        return 0.0


@dataclass(eq=False)
class Box(ConvexSet):
    """Axis-aligned box ``{x : lo <= x <= hi}`` (coordinatewise)."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.lo = as_vector(self.lo)
        self.hi = as_vector(self.hi, self.lo.size)
        if np.any(self.lo > self.hi):
            raise ValueError("box requires lo <= hi in every coordinate")
        self.dim = self.lo.size

    def project(self, x):
        return np.clip(np.asarray(x, dtype=float), self.lo, self.hi)

    def vertices(self) -> np.ndarray:
        if self.dim > _MAX_VERTEX_DIM:
            raise UnsupportedSetError(
                f"vertex enumeration limited to dimension {_MAX_VERTEX_DIM}"
            )
        return np.array(list(itertools.product(*zip(self.lo, self.hi))))


@dataclass(eq=False)
class Ball(ConvexSet):
    """Euclidean ball with the given center and radius."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        self.center = as_vector(self.center)
        self.radius = float(self.radius)
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")
        self.dim = self.center.size

    def project(self, x):
        x = np.asarray(x, dtype=float)
        d = x - self.center
        n = float(np.linalg.norm(d))
        if n <= self.radius:
            return x
        return self.center + d * (self.radius / n)


@dataclass(eq=False)
class Halfspace(ConvexSet):
    """Halfspace ``{x : <a, x> <= b}`` with a nonzero normal."""

    a: np.ndarray
    b: float

    def __post_init__(self):
        self.a = as_vector(self.a)
        self.b = float(self.b)
        self._nsq = float(self.a @ self.a)
        if self._nsq == 0.0:
            raise ValueError("halfspace normal must be nonzero")
        self.dim = self.a.size

    def project(self, x):
        x = np.asarray(x, dtype=float)
        excess = float(self.a @ x) - self.b
        if excess <= 0.0:
            return x
        return x - (excess / self._nsq) * self.a


@dataclass(eq=False)
class Hyperplane(ConvexSet):
    """Hyperplane ``{x : <a, x> = b}`` with a nonzero normal."""

    a: np.ndarray
    b: float

    def __post_init__(self):
        self.a = as_vector(self.a)
        self.b = float(self.b)
        self._nsq = float(self.a @ self.a)
        if self._nsq == 0.0:
            raise ValueError("hyperplane normal must be nonzero")
        self.dim = self.a.size

    def project(self, x):
        x = np.asarray(x, dtype=float)
        return x - ((float(self.a @ x) - self.b) / self._nsq) * self.a


@dataclass(eq=False)
class AffineSubspace(ConvexSet):
    """Affine subspace through ``base`` spanned by orthonormal ``directions`` (rows)."""

    base: np.ndarray
    directions: np.ndarray

    def __post_init__(self):
        self.base = as_vector(self.base)
        V = np.atleast_2d(np.asarray(self.directions, dtype=float))
        if V.shape[1] != self.base.size:
            raise ValueError("direction rows must match the base dimension")
        gram = V @ V.T
        if not np.allclose(gram, np.eye(V.shape[0]), atol=1e-12):
            raise ValueError("spanning directions must be orthonormal")
        self.directions = V
        self.dim = self.base.size

    def project(self, x):
        x = np.asarray(x, dtype=float)
        d = x - self.base
        return self.base + self.directions.T @ (self.directions @ d)


@dataclass(eq=False)
class TranslateDilate(ConvexSet):
    """The set ``shift + scale * inner`` for ``scale > 0``."""

    inner: ConvexSet
    shift: np.ndarray
    scale: float

    def __post_init__(self):
        self.shift = as_vector(self.shift, self.inner.dim)
        self.scale = float(self.scale)
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        self.dim = self.inner.dim

    def project(self, x):
        x = np.asarray(x, dtype=float)
        inner_p = self.inner.project((x - self.shift) / self.scale)
        return self.shift + self.scale * inner_p


def _canonical(s: ConvexSet) -> ConvexSet:
    """Fold translate-dilate wrappers of boxes and balls into plain sets."""
    if isinstance(s, TranslateDilate):
        inner = _canonical(s.inner)
        if isinstance(inner, Ball):
            return Ball(s.shift + s.scale * inner.center, s.scale * inner.radius)
        if isinstance(inner, Box):
            return Box(s.shift + s.scale * inner.lo, s.shift + s.scale * inner.hi)
    return s


def _sup_distance_box(a: Box, b: Box) -> float:
    # d(., b) is convex, so its sup over the box a is attained at a vertex.
    return max(b.distance(v) for v in a.vertices())


def hausdorff(a: ConvexSet, b: ConvexSet) -> float:
    """Exact Hausdorff distance for supported analytic pairs.

    Supported: two balls, two boxes of equal dimension, and translate-dilate
    wrappers of either.  Anything else raises :class:`UnsupportedSetError`.
    """
    a, b = _canonical(a), _canonical(b)
    if a.dim != b.dim:
        raise ValueError("sets must live in the same dimension")
    if isinstance(a, Ball) and isinstance(b, Ball):
        return float(np.linalg.norm(a.center - b.center)) + abs(a.radius - b.radius)
    if isinstance(a, Box) and isinstance(b, Box):
        return max(_sup_distance_box(a, b), _sup_distance_box(b, a))
    raise UnsupportedSetError(
        f"no closed-form Hausdorff distance for {type(a).__name__}/{type(b).__name__}"
    )


@dataclass(eq=False)
class SetFamily:
    """A time-indexed family of convex sets shrinking onto a base set.

    ``member(t)`` contains the base set for every ``t >= 0`` and the gap is
    controlled by the nonnegative, nonincreasing function ``delta``.  All
    members fit inside the common bounding box ``bound``.
    """

    base: ConvexSet
    member: Callable[[float], ConvexSet]
    delta: Callable[[float], float]
    bound: Box

    def hausdorff_to_base(self, t: float) -> float:
        return hausdorff(self.member(t), self.base)


_DELTA_CHECK_TIMES = (0.0, 1.0, 10.0, 100.0, 1e4)


def _check_delta(delta):
    values = [float(delta(t)) for t in _DELTA_CHECK_TIMES]
    if any(v < 0 for v in values):
        raise ValueError("delta must be nonnegative")
    if any(b > a + 1e-15 for a, b in zip(values, values[1:])):
        raise ValueError("delta must be nonincreasing")
    return values[0]


def inflated_box_family(base: Box, delta) -> SetFamily:
    """Family of boxes ``[lo, hi + delta(t)]`` shrinking onto ``base``."""
    d0 = _check_delta(delta)
    bound = Box(base.lo, base.hi + d0)
    ones = np.ones(base.dim)

    def member(t):
        return Box(base.lo, base.hi + float(delta(t)) * ones)

    return SetFamily(base, member, delta, bound)


def dilated_ball_family(base: Ball, delta) -> SetFamily:
    """Family of balls with radius ``r + delta(t)`` shrinking onto ``base``."""
    d0 = _check_delta(delta)
    r0 = base.radius + d0
    bound = Box(base.center - r0, base.center + r0)

    def member(t):
        return Ball(base.center, base.radius + float(delta(t)))

    return SetFamily(base, member, delta, bound)
