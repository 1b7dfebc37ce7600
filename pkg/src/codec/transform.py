"""
4x4 integer core transform and scalar quantization.

All functions accept a single ``(4, 4)`` block or any stack ``(..., 4, 4)``
of blocks; ``qp`` is a scalar or an integer array matching the stack shape.
Arithmetic is exact in int64.

The multiplier and rescale tables are the position-dependent tables of the
H.264/AVC 4x4 transform (ITU-T H.264, clause 8.5.12, and the matching
encoder-side quantizer), indexed by ``QP % 6``.
"""

from typing import Union

import numpy as np

from ..models.codec import MAX_QP
from ..models.errors import UsageError

QpLike = Union[int, np.ndarray]

CORE_TRANSFORM = np.array([
    [1, 1, 1, 1],
    [2, 1, -1, -2],
    [1, -1, -1, 1],
    [1, -2, 2, -1],
], dtype=np.int64)

# 0: both indices even, 1: both odd, 2: mixed.
POSITION_CLASS = np.array([
    [0, 2, 0, 2],
    [2, 1, 2, 1],
    [0, 2, 0, 2],
    [2, 1, 2, 1],
], dtype=np.int64)

QUANT_MULTIPLIERS = np.array([
    [13107, 5243, 8066],
    [11916, 4660, 7490],
    [10082, 4194, 6554],
    [9362, 3647, 5825],
    [8192, 3355, 5243],
    [7282, 2893, 4559],
], dtype=np.int64)

DEQUANT_SCALES = np.array([
    [10, 16, 13],
    [11, 18, 14],
    [13, 20, 16],
    [14, 23, 18],
    [16, 25, 20],
    [18, 29, 23],
], dtype=np.int64)

QUANT_SHIFT_BASE = 15


def _qp_array(qp: QpLike) -> np.ndarray:
    """Validate QPs and return them as int64."""
    qp = np.asarray(qp)
    if not np.issubdtype(qp.dtype, np.integer):
        raise UsageError(f"QP must be an integer, got {qp.dtype}")
    qp = qp.astype(np.int64)
    if qp.size and (qp.min() < 0 or qp.max() > MAX_QP):
        raise UsageError(f"QP must lie in [0, {MAX_QP}]")
    return qp


def _check_blocks(blocks: np.ndarray) -> np.ndarray:
    blocks = np.asarray(blocks)
    if blocks.shape[-2:] != (4, 4):
        raise UsageError(f"Expected 4x4 blocks, got shape {blocks.shape}")
    return blocks.astype(np.int64)


def dct4x4_forward(block: np.ndarray) -> np.ndarray:
    """
    Unscaled forward core transform W = C X C^T.

    Args:
        block: (..., 4, 4) integer samples

    Returns:
        (..., 4, 4) int64 coefficients
    """
    block = _check_blocks(block)
    return CORE_TRANSFORM @ block @ CORE_TRANSFORM.T


def quantize(coefficients: np.ndarray, qp: QpLike) -> np.ndarray:
    """
    Quantize transform coefficients.

    Computes ``Z = round(W * M / 2^(15 + QP // 6))`` with rounding half away
    from zero, where ``M`` is the multiplier of the coefficient position at
    ``QP % 6``.

    Args:
        coefficients: (..., 4, 4) coefficients W
        qp: QP per block

    Returns:
        (..., 4, 4) int64 levels Z

    Raises:
        UsageError: If a QP is outside [0, 51]
    """
    coefficients = _check_blocks(coefficients)
    qp = _qp_array(qp)
    multipliers = QUANT_MULTIPLIERS[qp % 6][..., POSITION_CLASS]
    shift = (QUANT_SHIFT_BASE + qp // 6)[..., None, None]
    magnitude = (np.abs(coefficients) * multipliers + np.left_shift(1, shift - 1)) >> shift
    return np.sign(coefficients) * magnitude


def dequantize(levels: np.ndarray, qp: QpLike) -> np.ndarray:
    """Rescale levels: W' = Z * V << (QP // 6)."""
    levels = _check_blocks(levels)
    qp = _qp_array(qp)
    scales = DEQUANT_SCALES[qp % 6][..., POSITION_CLASS]
    return (levels * scales) << (qp // 6)[..., None, None]


def _inverse_butterfly(d: np.ndarray, axis: int) -> np.ndarray:
    """One-dimensional inverse core transform along an axis of a block stack."""
    d0, d1, d2, d3 = (np.take(d, k, axis=axis) for k in range(4))
    e = d0 + d2
    f = d0 - d2
    g = (d1 >> 1) - d3
    h = d1 + (d3 >> 1)
    return np.stack([e + h, f + g, f - g, e - h], axis=axis)


def inverse_core_transform(coefficients: np.ndarray) -> np.ndarray:
    """
    Inverse core transform with the final 6-bit rounding shift.

    Args:
        coefficients: (..., 4, 4) rescaled coefficients

    Returns:
        (..., 4, 4) int64 samples (not clamped)
    """
    coefficients = _check_blocks(coefficients)
    rows = _inverse_butterfly(coefficients, axis=-1)
    samples = _inverse_butterfly(rows, axis=-2)
    return (samples + 32) >> 6


def dequantize_and_inverse(levels: np.ndarray, qp: QpLike) -> np.ndarray:
    """
    Reconstruct samples from quantized levels.

    Args:
        levels: (..., 4, 4) levels Z
        qp: QP per block

    Returns:
        (..., 4, 4) int64 reconstructed samples
    """
    return inverse_core_transform(dequantize(levels, qp))
