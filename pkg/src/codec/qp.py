"""
RoI-driven QP allocation.
"""

import logging

import numpy as np

from ..models.codec import ProjectionMaps, QpMap, check_qp, macroblock_grid
from ..models.errors import DataError
from ..models.roi import RoiMask

logger = logging.getLogger(__name__)


def solve_indicator(mask: RoiMask, maps: ProjectionMaps) -> np.ndarray:
    """
    Minimal set of macroblocks covering every RoI point.

    A macroblock is marked when at least one RoI point maps to one of its
    pixels. Dropped points count through the pixel they were projected to;
    points outside the footprint are ignored.

    Args:
        mask: RoI mask aligned with the projected cloud
        maps: Index maps of the projection

    Returns:
        Boolean (mb_rows, mb_cols) indicator, one column of R in raster order
    """
    if len(mask) != len(maps):
        raise DataError(f"Mask of length {len(mask)} does not match {len(maps)} projected points")
    rows, cols = macroblock_grid(maps.width, maps.height)
    indicator = np.zeros(rows * cols, dtype=bool)
    pixels = maps.point_to_pixel[mask.bits]
    pixels = pixels[pixels >= 0]
    indicator[maps.pixel_to_macroblock[pixels]] = True
    return indicator.reshape(rows, cols)


def build_qp_map(indicator: np.ndarray, q_r: int, q_b: int) -> QpMap:
    """
    QP map assigning ``q_r`` to RoI macroblocks and ``q_b`` elsewhere.

    Args:
        indicator: Boolean (mb_rows, mb_cols) RoI macroblock indicator
        q_r: QP of RoI macroblocks
        q_b: QP of background macroblocks

    Raises:
        UsageError: If a QP is outside [0, 51]
    """
    q_r, q_b = check_qp(q_r), check_qp(q_b)
    return QpMap(np.where(np.asarray(indicator, dtype=bool), q_r, q_b))
