"""
Bird's-eye RoI heatmaps.

Projected object mixtures are rasterized onto a class-channel grid, each
mixture normalized so that its own maximum over the grid is 1, combined by
a per-cell maximum, thresholded, and finally looked up per point.
"""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np

from ..config import NUM_CLASSES
from ..models.errors import DataError, UsageError
from ..models.geometry import PointCloud
from ..models.roi import Gmm2, GridGeometry, RoiHeatmap, RoiMask

logger = logging.getLogger(__name__)

_LOG_2PI = np.log(2.0 * np.pi)


def gmm_log_density(gmm: Gmm2, xy: np.ndarray) -> np.ndarray:
    """
    Log-density of a uniform-weight 2D mixture.

    Args:
        gmm: The projected mixture
        xy: (M, 2) evaluation coordinates

    Returns:
        Array of M log-densities
    """
    xy = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
    count = gmm.component_count
    log_terms = np.empty((xy.shape[0], count))
    for k in range(count):
        cov = gmm.covariances[k]
        inv = np.linalg.inv(cov)
        diff = xy - gmm.means[k]
        maha = np.einsum("ij,jk,ik->i", diff, inv, diff)
        log_terms[:, k] = -0.5 * (maha + np.log(np.linalg.det(cov))) - _LOG_2PI
    log_terms -= np.log(count)
    peak = log_terms.max(axis=1, keepdims=True)
    return (peak + np.log(np.exp(log_terms - peak).sum(axis=1, keepdims=True)))[:, 0]


def gmm_field(gmm: Gmm2, geometry: GridGeometry) -> np.ndarray:
    """
    Peak-normalized density of one mixture at every cell center.

    Returns:
        (rows, cols) array whose maximum is exactly 1
    """
    grid_x, grid_y = geometry.cell_centers()
    log_density = gmm_log_density(gmm, np.column_stack([grid_x.ravel(), grid_y.ravel()]))
    field = np.exp(log_density - log_density.max())
    return field.reshape(geometry.shape)


def rasterize_heatmap(gmms: Sequence[Tuple[Gmm2, int]],
                      geometry: Optional[GridGeometry] = None,
                      num_classes: int = NUM_CLASSES) -> RoiHeatmap:
    """
    Rasterize projected mixtures into a per-class heatmap.

    Each cell of a class channel holds the maximum over that class's mixtures
    of the mixture density at the cell center, normalized by the mixture's
    own peak over the grid. A mixture centred just off the grid still
    contributes its tail; only mixtures whose field is all zero or non-finite
    on the grid are skipped.

    Args:
        gmms: Pairs of (projected mixture, class id)
        geometry: Grid placement (defaults to 200x200 cells of 0.5 m)
        num_classes: Number of class channels

    Returns:
        The heatmap

    Raises:
        DataError: If a class id is outside [0, num_classes)
    """
    geometry = geometry or GridGeometry()
    values = np.zeros((num_classes,) + geometry.shape)
    for gmm, class_id in gmms:
        if not 0 <= class_id < num_classes:
            raise DataError(f"Class id {class_id} outside [0, {num_classes})")
        _, _, inside = geometry.cell_of(gmm.means[:, 0], gmm.means[:, 1])
        if not inside.any():
            logger.warning(f"Mixture of class {class_id} has no component mean inside the grid")
        field = gmm_field(gmm, geometry)
        if not np.all(np.isfinite(field)) or not field.any():
            logger.warning(f"Skipping mixture of class {class_id}: degenerate field on the grid")
            continue
        np.maximum(values[class_id], field, out=values[class_id])
    return RoiHeatmap(values, geometry)


def binarize_heatmap(heatmap: RoiHeatmap, gamma: float) -> np.ndarray:
    """
    Threshold a heatmap and take the union over class channels.

    Args:
        heatmap: The per-class heatmap
        gamma: Threshold in (0, 1]; values >= gamma are kept

    Returns:
        Boolean (rows, cols) grid
    """
    if not 0.0 < gamma <= 1.0:
        raise UsageError(f"Binarization threshold must lie in (0, 1], got {gamma}")
    return (heatmap.values >= gamma).any(axis=0)


def mask_from_grid(cloud: PointCloud, grid: np.ndarray, geometry: GridGeometry) -> RoiMask:
    """
    Look up each point's cell in a binary grid.

    Points outside the grid extent are not RoI.

    Args:
        cloud: The point cloud
        grid: Boolean (rows, cols) grid
        geometry: Grid placement

    Returns:
        Point-wise RoI mask
    """
    grid = np.asarray(grid, dtype=bool)
    if grid.shape != geometry.shape:
        raise DataError(f"Grid of shape {grid.shape} does not match geometry {geometry.shape}")
    rows, cols, valid = geometry.cell_of(cloud.points[:, 0], cloud.points[:, 1])
    bits = np.zeros(len(cloud), dtype=bool)
    bits[valid] = grid[rows[valid], cols[valid]]
    return RoiMask(bits)
