"""Skeleton topology and ellipsoid primitives for the 21-keypoint hand.

The hand is a graph of 21 keypoints joined by 21 edges; each edge becomes
one prolate ellipsoid whose long axis connects the two keypoints and whose
short radius is a fixed fraction of the long one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneratePrimitive

N_KEYPOINTS = 21
N_PRIMITIVES = 21

# short-to-long half-axis ratio of every primitive; configurable for
# sensitivity studies, 1/2 by default
DEFAULT_RADIUS_RATIO = 0.5

# wrist -> thumb chain, then index / middle / ring / pinky chains with the
# palm edges (0,5), (5,9), (9,13), (13,17), (0,17) tying them together
_DEFAULT_EDGES = (
    (0, 1), (1, 2), (2, 3), (3, 4),
    (0, 5), (5, 6), (6, 7), (7, 8),
    (5, 9), (9, 10), (10, 11), (11, 12),
    (9, 13), (13, 14), (14, 15), (15, 16),
    (13, 17), (0, 17), (17, 18), (18, 19), (19, 20),
)


@dataclass(frozen=True)
class SkeletonTopology:
    """Ordered list of keypoint index pairs, one per primitive."""

    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if len(self.edges) != N_PRIMITIVES:
            raise ValueError(f"expected {N_PRIMITIVES} edges, got {len(self.edges)}")
        seen = set()
        adjacency = {i: set() for i in range(N_KEYPOINTS)}
        for i, j in self.edges:
            if not (0 <= i < N_KEYPOINTS and 0 <= j < N_KEYPOINTS):
                raise ValueError(f"edge ({i},{j}) outside 0..{N_KEYPOINTS - 1}")
            if i == j:
                raise ValueError(f"self-edge ({i},{j})")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate edge ({i},{j})")
            seen.add(key)
            adjacency[i].add(j)
            adjacency[j].add(i)
        reached = {0}
        stack = [0]
        while stack:
            for nxt in adjacency[stack.pop()]:
                if nxt not in reached:
                    reached.add(nxt)
                    stack.append(nxt)
        if len(reached) != N_KEYPOINTS:
            raise ValueError("edge graph is not connected")

    def as_arrays(self):
        """Edge endpoints as two int64 index vectors."""
        e = np.asarray(self.edges, dtype=np.int64)
        return e[:, 0], e[:, 1]


def default_topology() -> SkeletonTopology:
    """The standard 21-edge hand-landmark connection list."""
    return SkeletonTopology(_DEFAULT_EDGES)


@dataclass(frozen=True)
class Primitive:
    """One ellipsoid: center, half lengths and unit long-axis direction."""

    center: np.ndarray
    half_length_long: float
    half_length_short: float
    axis: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not self.half_length_long > 0.0:
            raise ValueError("half_length_long must be positive")
        if abs(np.sqrt(np.sum(self.axis * self.axis)) - 1.0) > 1e-12:
            raise ValueError("axis must be a unit vector")


def build_primitives(keypoints, topology: SkeletonTopology,
                     radius_ratio: float = DEFAULT_RADIUS_RATIO) -> list[Primitive]:
    """Turn one snapshot's 21 keypoints into 21 ellipsoid primitives.

    For edge (i, j): center is the midpoint, the long half-axis is half the
    keypoint separation, the short half-axis is radius_ratio times that,
    and the axis points from j to i.

    Raises DegeneratePrimitive when an edge's endpoints coincide within
    1e-9 m, which signals corrupt keypoint data.
    """
    pts = np.asarray(keypoints, dtype=float)
    if pts.shape != (N_KEYPOINTS, 3):
        raise ValueError(f"expected ({N_KEYPOINTS}, 3) keypoints, got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("keypoints must be finite")
    prims = []
    for n, (i, j) in enumerate(topology.edges):
        d = pts[i] - pts[j]
        seg = float(np.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]))
        if seg <= 1e-9:
            raise DegeneratePrimitive(
                f"edge {n} ({i},{j}): keypoints coincide (separation {seg:.3e} m)")
        half_long = 0.5 * seg
        prims.append(Primitive(
            center=0.5 * (pts[i] + pts[j]),
            half_length_long=half_long,
            half_length_short=radius_ratio * half_long,
            axis=d / seg,
        ))
    return prims
