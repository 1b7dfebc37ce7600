"""
Oriented box geometry and the points-in-boxes query.

``points_in_boxes`` builds one k-d tree per cloud, narrows each box down to
the points inside its circumscribed sphere, and then tests only those
survivors against a fixed tetrahedral decomposition of the box. Both
paths work on the same normalized box-frame coordinates and apply the same
face tolerance, so they return identical sets.
``points_in_boxes_bruteforce`` transforms every point into each box frame
and serves both as the correctness oracle and as the speed baseline.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence

import numpy as np

from ..models.geometry import OrientedBox, PointCloud
from ..utils.timing import StageTimer, log_timing
from .kdtree import SpatialIndex, build_index

logger = logging.getLogger(__name__)

# Slack on box faces, in units of the box dimension, shared by both paths.
FACE_TOLERANCE = 1e-9

# Extra radius of the candidate ball query in meters.
QUERY_MARGIN = 1e-6

# Corner k has local sign (x, y, z) = bits (0, 1, 2) of k, bit set meaning +.
CORNER_SIGNS = np.array([[1 if k & 1 else -1,
                          1 if k & 2 else -1,
                          1 if k & 4 else -1] for k in range(8)], dtype=np.float64)

# Six tetrahedra sharing the diagonal from corner 0 to corner 7, one per
# ordering of the axes walked along the cube edges.
TETRAHEDRA = np.array([
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
], dtype=np.int64)


def box_circumradius(box: OrientedBox) -> float:
    """
    Radius of the sphere circumscribing a box.

    Args:
        box: The oriented box

    Returns:
        Half the length of the box diagonal in meters
    """
    return 0.5 * math.sqrt(box.width ** 2 + box.length ** 2 + box.height ** 2)


def box_corners(box: OrientedBox) -> np.ndarray:
    """
    Corners of a box in the cloud frame.

    Corner ``k`` sits at local offset ``(±w/2, ±l/2, ±h/2)`` where bit 0 of
    ``k`` selects the sign of x, bit 1 the sign of y and bit 2 the sign of z
    (bit set = positive). Corner 0 is therefore ``(-,-,-)`` and corner 7 is
    ``(+,+,+)``.

    Args:
        box: The oriented box

    Returns:
        (8, 3) array of corner coordinates
    """
    local = CORNER_SIGNS * (0.5 * box.size)
    return local @ box.rotation.T + box.center


def box_tetrahedra(box: OrientedBox) -> np.ndarray:
    """
    Decompose a box into six tetrahedra.

    Returns:
        (6, 4, 3) array of tetrahedron vertices
    """
    return box_corners(box)[TETRAHEDRA]


def _walk_axes(tetrahedron: np.ndarray) -> List[int]:
    """Axes crossed by the three edges of a tetrahedron walking from corner 0 to 7."""
    return [int(np.log2(b - a)) for a, b in zip(tetrahedron[:-1], tetrahedron[1:])]


# Axis order of each tetrahedron's edge walk. The walk x, y, z covers the
# points whose normalized coordinates satisfy 1 >= u_x >= u_y >= u_z >= 0.
TETRAHEDRON_AXES = np.array([_walk_axes(t) for t in TETRAHEDRA], dtype=np.int64)


def box_frame_coordinates(points: np.ndarray, box: OrientedBox) -> np.ndarray:
    """
    Normalized box-frame coordinates of points.

    Coordinate ``u`` is 0 on a box's negative face and 1 on its positive face
    along each local axis. The rotation is applied with elementwise
    operations, so a point gets bit-identical coordinates whether it is
    passed alone or within a larger array.

    Args:
        points: (M, 3) points in the cloud frame
        box: The oriented box

    Returns:
        (M, 3) normalized coordinates
    """
    offsets = np.asarray(points, dtype=np.float64).reshape(-1, 3) - box.center
    rotation = box.rotation
    size = box.size
    local = np.empty_like(offsets)
    for k in range(3):
        local[:, k] = offsets[:, 0] * rotation[0, k] + offsets[:, 1] * rotation[1, k] \
            + offsets[:, 2] * rotation[2, k]
    return (local + 0.5 * size) / size


def points_in_tetrahedra(coordinates: np.ndarray, tolerance: float = FACE_TOLERANCE) -> np.ndarray:
    """
    Test which points fall inside the box's tetrahedral decomposition.

    In normalized coordinates the barycentric coordinates of a point in the
    tetrahedron walking axes ``a, b, c`` are ``1 - u_a``, ``u_a - u_b``,
    ``u_b - u_c`` and ``u_c``. The two outer ones may go down to
    ``-tolerance``; the inner ones compare exactly.

    Args:
        coordinates: (M, 3) output of ``box_frame_coordinates``
        tolerance: Slack on the box faces, in units of the box dimension

    Returns:
        Boolean array of length M
    """
    u = np.asarray(coordinates, dtype=np.float64).reshape(-1, 3)
    inside = np.zeros(u.shape[0], dtype=bool)
    for a, b, c in TETRAHEDRON_AXES:
        inside |= (u[:, a] <= 1.0 + tolerance) & (u[:, a] >= u[:, b]) \
            & (u[:, b] >= u[:, c]) & (u[:, c] >= -tolerance)
    return inside


def _box_frame_inside(points: np.ndarray, box: OrientedBox,
                      tolerance: float = FACE_TOLERANCE) -> np.ndarray:
    """Box-frame containment test with inclusive bounds."""
    u = box_frame_coordinates(points, box)
    return ((u >= -tolerance) & (u <= 1.0 + tolerance)).all(axis=1)


def points_in_box(index: SpatialIndex, box: OrientedBox) -> np.ndarray:
    """
    Indices of indexed points inside one box.

    Args:
        index: Spatial index over the cloud
        box: The oriented box

    Returns:
        Sorted array of point indices
    """
    radius = box_circumradius(box) * (1.0 + 4.0 * FACE_TOLERANCE) + QUERY_MARGIN
    candidates = index.query_ball(box.center, radius)
    if candidates.size == 0:
        return candidates
    inside = points_in_tetrahedra(box_frame_coordinates(index.points[candidates], box))
    return candidates[inside]


def points_in_boxes(cloud: PointCloud, boxes: Sequence[OrientedBox],
                    index: Optional[SpatialIndex] = None, workers: int = 1,
                    timer: Optional[StageTimer] = None) -> List[np.ndarray]:
    """
    Find the points inside each of a list of boxes.

    Args:
        cloud: The point cloud
        boxes: Boxes to query
        index: Prebuilt index over ``cloud`` (built here when omitted)
        workers: Number of threads used for per-box queries
        timer: Optional StageTimer collecting stage durations

    Returns:
        One sorted index array per box, in box order
    """
    if index is None:
        with log_timing("index build", timer):
            index = build_index(cloud)

    with log_timing("points-in-boxes (k-d tree)", timer):
        if workers > 1 and len(boxes) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(lambda box: points_in_box(index, box), boxes))
        else:
            results = [points_in_box(index, box) for box in boxes]
    return results


def points_in_boxes_bruteforce(cloud: PointCloud, boxes: Sequence[OrientedBox],
                               timer: Optional[StageTimer] = None) -> List[np.ndarray]:
    """
    Reference implementation testing every point against every box.

    Each point is rotated into the box frame and compared with the half
    extents on all three axes.

    Args:
        cloud: The point cloud
        boxes: Boxes to query
        timer: Optional StageTimer collecting stage durations

    Returns:
        One sorted index array per box, in box order
    """
    with log_timing("points-in-boxes (brute force)", timer):
        return [np.flatnonzero(_box_frame_inside(cloud.points, box)) for box in boxes]


def label_points(cloud: PointCloud, boxes: Sequence[OrientedBox],
                 index: Optional[SpatialIndex] = None) -> np.ndarray:
    """
    Assign each point the index of the box containing it.

    Points inside several boxes take the first box in list order.

    Returns:
        Integer array of length N holding a box index or -1
    """
    labels = np.full(len(cloud), -1, dtype=np.int64)
    for box_index, members in reversed(list(enumerate(points_in_boxes(cloud, boxes, index)))):
        labels[members] = box_index
    return labels
