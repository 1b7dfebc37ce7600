"""
Ground segmentation by per-zone plane fitting.

The x-y plane around the sensor is split into concentric rings and angular
sectors. In each zone a plane ``z = a*x + b*y + d`` is fitted by least
squares to the lowest points, refined on its own inliers, and every point
within ``distance_threshold`` of its zone plane is labelled ground.
"""

import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np

from ..models.geometry import PointCloud
from ..models.roi import RoiMask

logger = logging.getLogger(__name__)

DEFAULT_RING_EDGES = (0.0, 8.0, 18.0, 32.0, math.inf)
DEFAULT_SECTORS = 16
DEFAULT_SEED_QUANTILE = 0.2
DEFAULT_DISTANCE_THRESHOLD = 0.2

Plane = Tuple[float, float, float]


class GroundSegmenter:
    """
    Ring-sector ground segmenter.

    Attributes:
        ring_edges: Increasing ring boundaries in meters (first 0, last inf)
        num_sectors: Number of angular sectors per ring
        seed_quantile: Fraction of lowest points used to seed a zone's plane
        distance_threshold: Maximum distance to the plane for ground points
        num_iter: Number of refits on the plane's inliers
        min_points: Zones with fewer points use the global plane
    """

    def __init__(self, ring_edges: Sequence[float] = DEFAULT_RING_EDGES,
                 num_sectors: int = DEFAULT_SECTORS,
                 seed_quantile: float = DEFAULT_SEED_QUANTILE,
                 distance_threshold: float = DEFAULT_DISTANCE_THRESHOLD,
                 num_iter: int = 3, min_points: int = 10):
        """
        Initialize the segmenter.

        Args:
            ring_edges: Ring boundaries in meters
            num_sectors: Sectors per ring
            seed_quantile: Lowest-z fraction used as the initial plane seed
            distance_threshold: Ground height margin in meters
            num_iter: Inlier refits per zone
            min_points: Minimum points for a zone-specific plane
        """
        self.ring_edges = np.asarray(ring_edges, dtype=np.float64)
        self.num_sectors = num_sectors
        self.seed_quantile = seed_quantile
        self.distance_threshold = distance_threshold
        self.num_iter = num_iter
        self.min_points = min_points

    @staticmethod
    def _fit_plane(points: np.ndarray) -> Plane:
        """Least-squares plane z = a*x + b*y + d."""
        design = np.column_stack([points[:, 0], points[:, 1], np.ones(points.shape[0])])
        (a, b, d), _, _, _ = np.linalg.lstsq(design, points[:, 2], rcond=None)
        return float(a), float(b), float(d)

    @staticmethod
    def _distance(points: np.ndarray, plane: Plane) -> np.ndarray:
        """Perpendicular distance of points to a plane."""
        a, b, d = plane
        return np.abs(a * points[:, 0] + b * points[:, 1] - points[:, 2] + d) / math.sqrt(a * a + b * b + 1.0)

    def _seed_plane(self, points: np.ndarray) -> Plane:
        """Plane through the lowest points of a zone."""
        count = max(3, int(math.ceil(self.seed_quantile * points.shape[0])))
        lowest = np.argsort(points[:, 2], kind="stable")[:count]
        return self._fit_plane(points[lowest])

    def _refine(self, points: np.ndarray, plane: Plane) -> Plane:
        """Refit the plane on its own inliers."""
        for _ in range(self.num_iter):
            inliers = self._distance(points, plane) <= self.distance_threshold
            if inliers.sum() < 3:
                break
            plane = self._fit_plane(points[inliers])
        return plane

    def zones(self, points: np.ndarray) -> np.ndarray:
        """Zone index (ring * num_sectors + sector) of each point."""
        radius = np.hypot(points[:, 0], points[:, 1])
        rings = np.clip(np.searchsorted(self.ring_edges, radius, side="right") - 1,
                        0, len(self.ring_edges) - 2)
        angle = np.arctan2(points[:, 1], points[:, 0]) + math.pi
        sectors = np.floor(angle / (2.0 * math.pi) * self.num_sectors).astype(np.int64) % self.num_sectors
        return rings * self.num_sectors + sectors

    def segment(self, points: np.ndarray) -> np.ndarray:
        """
        Label ground points.

        Args:
            points: (N, 3) points in the sensor frame

        Returns:
            Boolean array, True for ground
        """
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        ground = np.zeros(points.shape[0], dtype=bool)
        if points.shape[0] < 3:
            return ground

        global_plane = self._refine(points, self._seed_plane(points))
        zones = self.zones(points)
        for zone in np.unique(zones):
            members = np.flatnonzero(zones == zone)
            zone_points = points[members]
            if members.size < self.min_points:
                logger.debug(f"Zone {zone} has {members.size} points; using the global plane")
                plane = global_plane
            else:
                plane = self._refine(zone_points, self._seed_plane(zone_points))
            ground[members] = self._distance(zone_points, plane) <= self.distance_threshold
        return ground


def ground_mask(cloud: PointCloud, segmenter: Optional[GroundSegmenter] = None) -> RoiMask:
    """
    Foreground mask of a cloud: 1 for non-ground points.

    Args:
        cloud: The point cloud
        segmenter: Segmenter to use (default parameters when omitted)

    Returns:
        RoiMask with bit 1 for points not classified as ground
    """
    segmenter = segmenter or GroundSegmenter()
    return RoiMask(~segmenter.segment(cloud.points))
