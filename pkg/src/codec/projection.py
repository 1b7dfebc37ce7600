"""
Orthographic projection of point clouds onto a depth image and back.
"""

import logging
from typing import Optional, Tuple

import numpy as np

from ..models.codec import MAX_DEPTH_VALUE, DepthImage, PlaneConfig, ProjectionMaps
from ..models.errors import DataError
from ..models.geometry import PointCloud

logger = logging.getLogger(__name__)


def plane_coordinates(points: np.ndarray, plane: PlaneConfig) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Column, row and signed depth (meters) of points relative to a plane.

    Returns:
        Integer columns, integer rows and float depths
    """
    local = (np.asarray(points, dtype=np.float64).reshape(-1, 3) - np.asarray(plane.origin)) @ plane.basis.T
    cols = np.floor(local[:, 0] / plane.pixel_pitch + 0.5).astype(np.int64)
    rows = np.floor(local[:, 1] / plane.pixel_pitch + 0.5).astype(np.int64)
    return cols, rows, local[:, 2]


def project(cloud: PointCloud, plane: Optional[PlaneConfig] = None
            ) -> Tuple[DepthImage, ProjectionMaps, np.ndarray]:
    """
    Project a cloud onto the plane's depth image.

    Each point falls on the pixel whose center is nearest to it laterally.
    When several points share a pixel the one with the smallest depth is
    kept (ties go to the lowest point index) and the others are dropped.

    Args:
        cloud: The cloud to project
        plane: Projection plane (the default bird's-eye plane when omitted)

    Returns:
        Depth image, index maps and the indices of dropped points

    Raises:
        DataError: If the cloud is empty or lies entirely outside the footprint
    """
    plane = plane or PlaneConfig()
    if len(cloud) == 0:
        raise DataError("Cannot project an empty cloud")

    cols, rows, depth_m = plane_coordinates(cloud.points, plane)
    values = plane.depth_offset + np.floor(depth_m / plane.depth_scale + 0.5).astype(np.int64)
    valid = ((cols >= 0) & (cols < plane.width) & (rows >= 0) & (rows < plane.height)
             & (values >= 0) & (values <= MAX_DEPTH_VALUE))
    if not valid.any():
        raise DataError(f"All {len(cloud)} points lie outside the projection footprint")
    outside = int((~valid).sum())
    if outside:
        logger.warning(f"{outside} points lie outside the projection footprint")

    pixels = np.where(valid, rows * plane.width + cols, -1)
    candidates = np.flatnonzero(valid)
    order = candidates[np.lexsort((candidates, depth_m[candidates], pixels[candidates]))]
    sorted_pixels = pixels[order]
    first = np.ones(order.shape[0], dtype=bool)
    first[1:] = sorted_pixels[1:] != sorted_pixels[:-1]
    winners = order[first]

    depth = np.zeros(plane.pixel_count, dtype=np.uint16)
    occupancy = np.zeros(plane.pixel_count, dtype=bool)
    depth[pixels[winners]] = values[winners]
    occupancy[pixels[winners]] = True

    dropped = valid.copy()
    dropped[winners] = False
    image = DepthImage(depth.reshape(plane.height, plane.width),
                       occupancy.reshape(plane.height, plane.width), plane)
    maps = ProjectionMaps(pixels, dropped, plane.width, plane.height)
    logger.debug(f"Projected {winners.size} points, dropped {int(dropped.sum())}")
    return image, maps, np.flatnonzero(dropped)


def reconstruct(depth: DepthImage, maps: Optional[ProjectionMaps] = None) -> PointCloud:
    """
    Lift every occupied pixel back to a 3D point.

    Points are placed at the pixel center at the de-quantized depth and are
    returned in raster order.

    Args:
        depth: Decoded depth image
        maps: Index maps of the frame, checked for consistent dimensions

    Returns:
        The reconstructed cloud
    """
    plane = depth.plane
    if maps is not None and (maps.width, maps.height) != (plane.width, plane.height):
        raise DataError(
            f"Projection maps for {maps.width}x{maps.height} do not match image "
            f"{plane.width}x{plane.height}")
    occupied = np.flatnonzero(depth.occupancy.reshape(-1))
    rows, cols = np.divmod(occupied, plane.width)
    meters = (depth.depth.reshape(-1)[occupied].astype(np.float64) - plane.depth_offset) * plane.depth_scale
    local = np.column_stack([cols * plane.pixel_pitch, rows * plane.pixel_pitch, meters])
    points = np.asarray(plane.origin) + local @ plane.basis
    return PointCloud(points)
