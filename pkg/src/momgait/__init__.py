"""Geometric gait analysis and optimization for planar inertia-dominated
locomoting systems carrying nonzero net spatial momentum."""

from momgait.se2 import AlgebraVector, Covector, GroupElement
from momgait.linkage import LinkGeometry, SystemModel, snake, swimmer
from momgait.gait import Gait

__all__ = [
    "AlgebraVector",
    "Covector",
    "GroupElement",
    "LinkGeometry",
    "SystemModel",
    "snake",
    "swimmer",
    "Gait",
]
