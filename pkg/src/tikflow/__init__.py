"""Fixed points of nonexpansive operators via Tikhonov-regularized flows."""

__version__ = "0.1.0"

from .spaces import (
    Ball,
    Box,
    ConvexSet,
    Halfspace,
    Hyperplane,
    SetFamily,
    UnsupportedSetError,
    WholeSpace,
    hausdorff,
)
from .operators import (
    Operator,
    OperatorFamily,
    make_forward_backward,
    prox,
    residual,
)
from .regpath import PathResult, RegPoint, follow_path, solve_reg_point
from .flow import Schedule, Trajectory, integrate, power_schedule

__all__ = [
    "Ball",
    "Box",
    "ConvexSet",
    "Halfspace",
    "Hyperplane",
    "Operator",
    "OperatorFamily",
    "PathResult",
    "RegPoint",
    "Schedule",
    "SetFamily",
    "Trajectory",
    "UnsupportedSetError",
    "WholeSpace",
    "follow_path",
    "hausdorff",
    "integrate",
    "make_forward_backward",
    "power_schedule",
    "prox",
    "residual",
    "solve_reg_point",
]
