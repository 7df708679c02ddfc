"""Projections, distances, and exact Hausdorff formulas."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tikflow import spaces
from tikflow.operators import check_class, domain_sampler, projection_op
from tikflow.spaces import (
    AffineSubspace,
    Ball,
    Box,
    Halfspace,
    Hyperplane,
    TranslateDilate,
    UnsupportedSetError,
    WholeSpace,
    as_vector,
    hausdorff,
    inflated_box_family,
)

CATALOG = [
    Box([-1.0, 0.0], [2.0, 3.0]),
    Ball([1.0, -2.0], 1.5),
    Halfspace([1.0, 2.0], 3.0),
    Hyperplane([0.0, 1.0], 1.0),
    AffineSubspace([1.0, 0.0], [[1.0, 0.0]]),
    WholeSpace(2),
    TranslateDilate(Ball([0.0, 0.0], 1.0), [2.0, 2.0], 3.0),
]


@pytest.mark.parametrize("s", CATALOG, ids=lambda s: type(s).__name__)
def test_projection_idempotent_and_member(s):
    rng = np.random.default_rng(1)
    for _ in range(50):
        x = 5.0 * rng.standard_normal(2)
        p = s.project(x)
        assert s.contains(p, 1e-9)
        assert np.linalg.norm(s.project(p) - p) <= 1e-10


@pytest.mark.parametrize("s", CATALOG, ids=lambda s: type(s).__name__)
def test_projection_variational_inequality(s):
    # <x - p, z - p> <= 0 for every z in the set characterizes the projection.
    rng = np.random.default_rng(2)
    sample = domain_sampler(s, rng)
    for _ in range(50):
        x = 5.0 * rng.standard_normal(2)
        p = s.project(x)
        for _ in range(10):
            z = sample()
            assert float((x - p) @ (z - p)) <= 1e-10


@pytest.mark.parametrize("s", CATALOG, ids=lambda s: type(s).__name__)
def test_projection_firmly_nonexpansive(s):
    rep = check_class(
        projection_op(s), "firmly-nonexpansive",
        rng=np.random.default_rng(3), pairs=300, tol=1e-10,
    )
    assert rep.passed, rep.worst_margin


@given(
    st.lists(st.floats(-10, 10), min_size=2, max_size=2),
)
@settings(max_examples=50, deadline=None)
def test_box_projection_is_clip(x):
    box = Box([-1.0, 0.0], [2.0, 3.0])
    p = box.project(x)
    assert np.array_equal(p, np.clip(x, box.lo, box.hi))


def test_distance_squared_gradient():
    # grad of d^2 is 2*(x - proj(x)); compare against central differences.
    s = Ball([0.5, -0.5], 1.0)
    rng = np.random.default_rng(4)
    h = 1e-5
    for _ in range(20):
        x = 4.0 * rng.standard_normal(2)
        grad = 2.0 * (x - s.project(x))
        for i in range(2):
            e = np.zeros(2)
            e[i] = h
            fd = (s.distance(x + e) ** 2 - s.distance(x - e) ** 2) / (2 * h)
            assert fd == pytest.approx(grad[i], rel=1e-5, abs=1e-5)


def test_hausdorff_balls_closed_form():
    a = Ball([0.0, 0.0], 1.0)
    b = Ball([3.0, 4.0], 2.5)
    assert hausdorff(a, b) == pytest.approx(5.0 + 1.5)
    assert hausdorff(b, a) == hausdorff(a, b)


def test_hausdorff_boxes_exact_and_sampled():
    a = Box([0.0, 0.0], [1.0, 1.0])
    b = Box([0.5, -1.0], [2.0, 0.5])
    exact = hausdorff(a, b)
    assert exact == pytest.approx(math.sqrt(2.0))
    # Grid oracle: sup of point-to-set distances over dense grids in each box.
    gx = np.linspace(0.0, 1.0, 101)
    oracle_ab = max(b.distance([x, y]) for x in gx for y in gx)
    gx2 = np.linspace(0.5, 2.0, 101)
    gy2 = np.linspace(-1.0, 0.5, 101)
    oracle_ba = max(a.distance([x, y]) for x in gx2 for y in gy2)
    oracle = max(oracle_ab, oracle_ba)
    assert oracle <= exact + 1e-12
    assert exact == pytest.approx(oracle, abs=2e-2)


def test_hausdorff_triangle_inequality():
    balls = [Ball([0.0, 0.0], 1.0), Ball([2.0, 1.0], 0.5), Ball([-1.0, 3.0], 2.0)]
    a, b, c = balls
    assert hausdorff(a, c) <= hausdorff(a, b) + hausdorff(b, c) + 1e-12


def test_hausdorff_translate_dilate_folding():
    inner = Ball([0.0, 0.0], 1.0)
    wrapped = TranslateDilate(inner, [1.0, 1.0], 2.0)
    direct = Ball([1.0, 1.0], 2.0)
    assert hausdorff(wrapped, direct) == pytest.approx(0.0)


def test_hausdorff_unsupported_pair():
    with pytest.raises(UnsupportedSetError):
        hausdorff(Ball([0.0, 0.0], 1.0), Box([0.0, 0.0], [1.0, 1.0]))


def test_inflated_box_family_gap():
    base = Box([0.0, 0.0], [1.0, 1.0])
    delta = lambda t: (1.0 + t) ** -1.5
    fam = spaces.inflated_box_family(base, delta)
    for t in (0.0, 1.0, 7.0):
        # Largest gap sits at the inflated upper vertex: delta in each coordinate.
        assert fam.hausdorff_to_base(t) == pytest.approx(delta(t) * math.sqrt(2.0))
        assert fam.member(t).contains([1.0 + delta(t), 1.0], 1e-12)


def test_inflated_box_family_moreau_inequality():
    base = Box([0.0, 0.0], [1.0, 1.0])
    fam = inflated_box_family(base, lambda t: (1.0 + t) ** -1.5)
    rng = np.random.default_rng(5)
    for t in (0.5, 2.0, 10.0):
        Ct = fam.member(t)
        haus = fam.hausdorff_to_base(t)
        for _ in range(200):
            z = rng.uniform(-2.0, 3.0, size=2)
            gap = np.linalg.norm(Ct.project(z) - base.project(z))
            assert gap**2 <= 2.0 * (Ct.distance(z) + base.distance(z)) * haus + 1e-9


def test_set_family_delta_validation():
    base = Box([0.0, 0.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        inflated_box_family(base, lambda t: -1.0)
    with pytest.raises(ValueError):
        inflated_box_family(base, lambda t: t)


def test_degenerate_sets_rejected():
    with pytest.raises(ValueError):
        Box([1.0, 0.0], [0.0, 1.0])
    with pytest.raises(ValueError):
        Ball([0.0], -1.0)
    with pytest.raises(ValueError):
        Halfspace([0.0, 0.0], 1.0)
    with pytest.raises(ValueError):
        AffineSubspace([0.0, 0.0], [[1.0, 1.0]])


def test_as_vector_validation():
    with pytest.raises(ValueError):
        as_vector([[1.0, 2.0], [3.0, 4.0]])
    with pytest.raises(ValueError):
        as_vector([1.0, float("nan")])
    with pytest.raises(ValueError):
        as_vector([1.0, 2.0], dim=3)
    assert as_vector(1.5).shape == (1,)
