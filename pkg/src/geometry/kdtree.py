"""
Balanced k-d tree for exact radius and nearest-neighbour queries.

The tree is stored as flat arrays so that traversal can run as a compiled
kernel. Each node covers a contiguous range of ``order`` (a permutation of
the original point indices) and keeps the bounding box of its points for
pruning. Internal nodes split at the median of their widest axis.
"""

import logging
from typing import Tuple, Union

import numpy as np

from ..models.errors import DataError
from ..models.geometry import PointCloud, as_point3
from ..utils.accel import HAS_NUMBA, njit

logger = logging.getLogger(__name__)

DEFAULT_LEAF_SIZE = 16


@njit(cache=True)
def _box_distance2(lo, hi, node, q0, q1, q2):
    """Squared distance from a query point to a node's bounding box."""
    d2 = 0.0
    if q0 < lo[node, 0]:
        d2 += (lo[node, 0] - q0) ** 2
    elif q0 > hi[node, 0]:
        d2 += (q0 - hi[node, 0]) ** 2
    if q1 < lo[node, 1]:
        d2 += (lo[node, 1] - q1) ** 2
    elif q1 > hi[node, 1]:
        d2 += (q1 - hi[node, 1]) ** 2
    if q2 < lo[node, 2]:
        d2 += (lo[node, 2] - q2) ** 2
    elif q2 > hi[node, 2]:
        d2 += (q2 - hi[node, 2]) ** 2
    return d2


@njit(cache=True)
def _ball_kernel(points, order, lo, hi, left, right, start, end,
                 center, radius, stack_size, out):
    r2 = radius * radius
    q0, q1, q2 = center[0], center[1], center[2]
    stack = np.empty(stack_size, np.int64)
    stack[0] = 0
    sp = 1
    count = 0
    while sp > 0:
        sp -= 1
        node = stack[sp]
        if _box_distance2(lo, hi, node, q0, q1, q2) > r2:
            continue
        if left[node] < 0:
            for i in range(start[node], end[node]):
                idx = order[i]
                dx = points[idx, 0] - q0
                dy = points[idx, 1] - q1
                dz = points[idx, 2] - q2
                if dx * dx + dy * dy + dz * dz <= r2:
                    out[count] = idx
                    count += 1
        else:
            stack[sp] = left[node]
            stack[sp + 1] = right[node]
            sp += 2
    return count


@njit(cache=True)
def _nearest_kernel(points, order, lo, hi, left, right, start, end,
                    queries, stack_size, out_d2, out_idx):
    stack = np.empty(stack_size, np.int64)
    for q in range(queries.shape[0]):
        q0, q1, q2 = queries[q, 0], queries[q, 1], queries[q, 2]
        best = np.inf
        best_idx = -1
        stack[0] = 0
        sp = 1
        while sp > 0:
            sp -= 1
            node = stack[sp]
            if _box_distance2(lo, hi, node, q0, q1, q2) > best:
                continue
            if left[node] < 0:
                for i in range(start[node], end[node]):
                    idx = order[i]
                    dx = points[idx, 0] - q0
                    dy = points[idx, 1] - q1
                    dz = points[idx, 2] - q2
                    d2 = dx * dx + dy * dy + dz * dz
                    if d2 < best or (d2 == best and idx < best_idx):
                        best = d2
                        best_idx = idx
            else:
                near, far = left[node], right[node]
                if _box_distance2(lo, hi, far, q0, q1, q2) < _box_distance2(lo, hi, near, q0, q1, q2):
                    near, far = far, near
                # nearer child on top of the stack
                stack[sp] = far
                stack[sp + 1] = near
                sp += 2
        out_d2[q] = best
        out_idx[q] = best_idx


@njit(cache=True)
def _select_kernel(points, order, s, e, k, axis):
    """Quickselect: reorder order[s:e] so position k holds its median along axis."""
    lo, hi = s, e - 1
    while lo < hi:
        pivot = points[order[(lo + hi) // 2], axis]
        i, j = lo, hi
        while i <= j:
            while points[order[i], axis] < pivot:
                i += 1
            while points[order[j], axis] > pivot:
                j -= 1
            if i <= j:
                order[i], order[j] = order[j], order[i]
                i += 1
                j -= 1
        if k <= j:
            hi = j
        elif k >= i:
            lo = i
        else:
            break


@njit(cache=True)
def _build_kernel(points, leaf_size, order, start, end, left, right, lo, hi, depth):
    n = points.shape[0]
    stack = np.empty(start.shape[0], np.int64)
    start[0] = 0
    end[0] = n
    depth[0] = 0
    count = 1
    max_depth = 0
    stack[0] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        s, e = start[node], end[node]
        left[node] = -1
        right[node] = -1
        for a in range(3):
            lo[node, a] = np.inf
            hi[node, a] = -np.inf
        for i in range(s, e):
            for a in range(3):
                value = points[order[i], a]
                if value < lo[node, a]:
                    lo[node, a] = value
                if value > hi[node, a]:
                    hi[node, a] = value
        if e - s <= leaf_size:
            continue
        axis = 0
        for a in range(1, 3):
            if hi[node, a] - lo[node, a] > hi[node, axis] - lo[node, axis]:
                axis = a
        if hi[node, axis] == lo[node, axis]:
            continue
        mid = (e - s) // 2
        _select_kernel(points, order, s, e, s + mid, axis)
        child_depth = depth[node] + 1
        if child_depth > max_depth:
            max_depth = child_depth
        for child in range(2):
            start[count] = s + mid if child else s
            end[count] = e if child else s + mid
            depth[count] = child_depth
            stack[sp] = count
            sp += 1
            count += 1
        left[node] = count - 2
        right[node] = count - 1
    return count, max_depth


class SpatialIndex:
    """
    Immutable k-d tree over a fixed set of points.

    The index stores original point indices, so query results refer to
    positions in the source cloud. It is safe to share between threads.
    """

    def __init__(self, points: np.ndarray, leaf_size: int = DEFAULT_LEAF_SIZE):
        """
        Build the tree.

        Args:
            points: (N, 3) point coordinates
            leaf_size: Maximum number of points stored in a leaf
        """
        if leaf_size < 1:
            raise DataError(f"Leaf size must be positive, got {leaf_size}")
        points = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 3)
        self.points = points
        self.leaf_size = leaf_size
        self._build()
        for array in (self.points, self.order, self.lo, self.hi,
                      self.left, self.right, self.start, self.end):
            array.flags.writeable = False

    @property
    def size(self) -> int:
        """Number of indexed points."""
        return self.points.shape[0]

    @property
    def node_count(self) -> int:
        """Number of tree nodes."""
        return self.start.shape[0]

    def _build(self) -> None:
        """Split nodes at the median of their widest axis until leaves are small."""
        if HAS_NUMBA and self.points.shape[0]:
            self._build_compiled()
            return
        n = self.points.shape[0]
        order = np.arange(n, dtype=np.int64)
        starts, ends, lefts, rights, los, his = [0], [n], [-1], [-1], [None], [None]
        depths = [0]
        max_depth = 0
        pending = [0] if n else []

        while pending:
            node = pending.pop()
            s, e = starts[node], ends[node]
            idx = order[s:e]
            pts = self.points[idx]
            lo, hi = pts.min(axis=0), pts.max(axis=0)
            los[node], his[node] = lo, hi
            if e - s <= self.leaf_size:
                continue
            axis = int(np.argmax(hi - lo))
            if hi[axis] == lo[axis]:
                # all points coincide
                continue
            mid = (e - s) // 2
            order[s:e] = idx[np.argpartition(pts[:, axis], mid)]

            depth = depths[node] + 1
            max_depth = max(max_depth, depth)
            for child_start, child_end in ((s, s + mid), (s + mid, e)):
                starts.append(child_start)
                ends.append(child_end)
                lefts.append(-1)
                rights.append(-1)
                los.append(None)
                his.append(None)
                depths.append(depth)
                pending.append(len(starts) - 1)
            lefts[node] = len(starts) - 2
            rights[node] = len(starts) - 1

        if n == 0:
            starts, ends, lefts, rights = [], [], [], []
            los, his = [], []

        self.order = order
        self.start = np.asarray(starts, dtype=np.int64)
        self.end = np.asarray(ends, dtype=np.int64)
        self.left = np.asarray(lefts, dtype=np.int64)
        self.right = np.asarray(rights, dtype=np.int64)
        self.lo = np.asarray(los, dtype=np.float64).reshape(-1, 3)
        self.hi = np.asarray(his, dtype=np.float64).reshape(-1, 3)
        self.max_depth = max_depth
        self._stack_size = 2 * (max_depth + 2)
        logger.debug(f"Built k-d tree over {n} points with {len(starts)} nodes, depth {max_depth}")

    def _build_compiled(self) -> None:
        n = self.points.shape[0]
        capacity = 2 * n
        self.order = np.arange(n, dtype=np.int64)
        start = np.empty(capacity, dtype=np.int64)
        end = np.empty(capacity, dtype=np.int64)
        left = np.empty(capacity, dtype=np.int64)
        right = np.empty(capacity, dtype=np.int64)
        depth = np.empty(capacity, dtype=np.int64)
        lo = np.empty((capacity, 3), dtype=np.float64)
        hi = np.empty((capacity, 3), dtype=np.float64)
        count, max_depth = _build_kernel(self.points, self.leaf_size, self.order, start, end,
                                         left, right, lo, hi, depth)
        self.start, self.end = start[:count].copy(), end[:count].copy()
        self.left, self.right = left[:count].copy(), right[:count].copy()
        self.lo, self.hi = lo[:count].copy(), hi[:count].copy()
        self.max_depth = int(max_depth)
        self._stack_size = 2 * (self.max_depth + 2)
        logger.debug(f"Built k-d tree over {n} points with {count} nodes, depth {max_depth}")

    def query_ball(self, center: np.ndarray, radius: float) -> np.ndarray:
        """
        Find all points within ``radius`` of ``center``.

        Args:
            center: Query point
            radius: Search radius in meters (>= 0)

        Returns:
            Sorted array of original point indices
        """
        if radius < 0:
            raise DataError(f"Query radius must be non-negative, got {radius}")
        if self.size == 0:
            return np.empty(0, dtype=np.int64)
        center = as_point3(center)
        out = np.empty(self.size, dtype=np.int64)
        count = _ball_kernel(self.points, self.order, self.lo, self.hi, self.left,
                             self.right, self.start, self.end, center, float(radius),
                             self._stack_size, out)
        return np.sort(out[:count])

    def query_nearest(self, queries: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Find the nearest indexed point for each query point.

        Ties are resolved towards the lowest point index.

        Args:
            queries: (M, 3) query points

        Returns:
            Tuple of squared distances and point indices, each of length M

        Raises:
            DataError: If the index is empty
        """
        if self.size == 0:
            raise DataError("Nearest-neighbour query on an empty index")
        queries = np.ascontiguousarray(queries, dtype=np.float64).reshape(-1, 3)
        out_d2 = np.empty(queries.shape[0], dtype=np.float64)
        out_idx = np.empty(queries.shape[0], dtype=np.int64)
        _nearest_kernel(self.points, self.order, self.lo, self.hi, self.left, self.right,
                        self.start, self.end, queries, self._stack_size, out_d2, out_idx)
        return out_d2, out_idx


def build_index(cloud: Union[PointCloud, np.ndarray],
                leaf_size: int = DEFAULT_LEAF_SIZE) -> SpatialIndex:
    """
    Build a reusable spatial index over a cloud.

    Args:
        cloud: PointCloud or (N, 3) array
        leaf_size: Maximum points per leaf

    Returns:
        SpatialIndex answering exact radius queries over all points
    """
    points = cloud.points if isinstance(cloud, PointCloud) else cloud
    return SpatialIndex(points, leaf_size)


def query_ball(index: SpatialIndex, center: np.ndarray, radius: float) -> np.ndarray:
    """Exact set of point indices within ``radius`` of ``center``."""
    return index.query_ball(center, radius)
