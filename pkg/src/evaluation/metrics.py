"""
Geometric distortion metrics.
"""

import logging
import math
from typing import Optional, Tuple

import numpy as np

from ..geometry.kdtree import build_index
from ..models.errors import DataError
from ..models.geometry import PointCloud
from ..models.roi import RoiMask

logger = logging.getLogger(__name__)

# Reported PSNR when the error vanishes.
PSNR_CAP = 200.0
ZERO_MSE = 1e-12


def nearest_mse(source: np.ndarray, target: np.ndarray) -> float:
    """
    Mean squared distance from each source point to its nearest target point.

    Raises:
        DataError: If either point set is empty
    """
    source = np.asarray(source, dtype=np.float64).reshape(-1, 3)
    target = np.asarray(target, dtype=np.float64).reshape(-1, 3)
    if source.shape[0] == 0 or target.shape[0] == 0:
        raise DataError("Nearest-neighbor error needs two non-empty point sets")
    distances2, _ = build_index(target).query_nearest(source)
    return float(distances2.mean())


def bounding_diagonal(points: np.ndarray) -> float:
    """Length of the diagonal of the axis-aligned bounding box."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if points.shape[0] == 0:
        return 0.0
    return float(np.linalg.norm(points.max(axis=0) - points.min(axis=0)))


def psnr(mse: float, peak: float) -> float:
    """
    Peak signal-to-noise ratio in dB.

    Errors below 1e-12 m^2 report the 200 dB cap.
    """
    if mse < ZERO_MSE:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(peak * peak / mse))


def p2p_distance(a: PointCloud, b: PointCloud, peak: Optional[float] = None) -> Tuple[float, float]:
    """
    Symmetric point-to-point error between two clouds.

    Args:
        a: Reference cloud
        b: Compared cloud
        peak: Signal width for PSNR; defaults to the bounding-box diagonal of
            ``a`` (1 m when that is zero)

    Returns:
        (mse in m^2, PSNR in dB)

    Raises:
        DataError: If either cloud is empty
    """
    if len(a) == 0 or len(b) == 0:
        raise DataError("Point-to-point error needs two non-empty clouds")
    mse = 0.5 * (nearest_mse(a.points, b.points) + nearest_mse(b.points, a.points))
    if peak is None:
        peak = bounding_diagonal(a.points) or 1.0
    return mse, psnr(mse, peak)


def roi_restricted_error(original: PointCloud, reconstructed: PointCloud, mask: RoiMask) -> float:
    """
    Mean squared distance from the original RoI points to the reconstruction.

    Args:
        original: Source cloud
        reconstructed: Decoded cloud
        mask: RoI mask aligned with ``original``

    Returns:
        Error in m^2

    Raises:
        DataError: If the mask is misaligned or selects no point
    """
    if len(mask) != len(original):
        raise DataError(f"Mask of length {len(mask)} does not match {len(original)} points")
    if mask.count == 0:
        raise DataError("RoI-restricted error needs at least one RoI point")
    return nearest_mse(original.points[mask.bits], reconstructed.points)
