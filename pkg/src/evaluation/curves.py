"""
Comparison of metric-bitrate curves.
"""

import logging
from typing import Tuple

import numpy as np

from ..config import DEFAULT_ADVANTAGE_SAMPLES
from ..models.errors import DataError, UsageError
from ..models.evaluation import RateCurve

logger = logging.getLogger(__name__)


def shared_domain(curve_m: RateCurve, curve_b: RateCurve) -> Tuple[float, float]:
    """
    Overlap of two curves' bitrate domains.

    Raises:
        DataError: If a curve has fewer than two samples or the overlap is empty
    """
    for curve in (curve_m, curve_b):
        if len(curve) < 2:
            raise DataError(f"Curve '{curve.label}' needs at least two samples, has {len(curve)}")
    low = max(curve_m.domain[0], curve_b.domain[0])
    high = min(curve_m.domain[1], curve_b.domain[1])
    if not high > low:
        raise DataError(f"Curves do not overlap in bitrate ([{low}, {high}])")
    return low, high


def averaged_advantage(curve_m: RateCurve, curve_b: RateCurve,
                       samples: int = DEFAULT_ADVANTAGE_SAMPLES) -> float:
    """
    Mean vertical gap between two curves over their shared bitrates.

    Both curves are linearly interpolated at ``samples`` bitrates spaced
    uniformly over the overlap of their domains, endpoints included, and the
    differences ``M(x) - M_b(x)`` are averaged.

    Args:
        curve_m: Evaluated curve
        curve_b: Baseline curve
        samples: Number of sample bitrates N

    Returns:
        The averaged advantage, in the metric's unit

    Raises:
        DataError: If the domains do not overlap
    """
    if samples < 1:
        raise UsageError(f"Sample count must be positive, got {samples}")
    low, high = shared_domain(curve_m, curve_b)
    bitrates = np.linspace(low, high, samples)
    return float(np.mean(curve_m.interpolate(bitrates) - curve_b.interpolate(bitrates)))
