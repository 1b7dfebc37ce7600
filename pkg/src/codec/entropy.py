"""
Coefficient scanning and signed exp-Golomb coding.

Signed values map to code numbers as ``v > 0 -> 2v - 1`` and
``v <= 0 -> -2v``. A code number ``k`` is written as ``n - 1`` zero bits
followed by the ``n``-bit binary form of ``k + 1``, most significant bit
first.
"""

import logging
from typing import Tuple

import numpy as np

from ..models.errors import BitstreamError
from ..utils.accel import njit

logger = logging.getLogger(__name__)

# Raster position of each coefficient in zigzag order.
ZIGZAG_4X4 = np.array([0, 1, 4, 8, 5, 2, 3, 6, 9, 12, 13, 10, 7, 11, 14, 15], dtype=np.int64)

_INVERSE_ZIGZAG = np.argsort(ZIGZAG_4X4)

# Longest prefix accepted when decoding; larger codes cannot come from 16-bit samples.
MAX_PREFIX_ZEROS = 62


def zigzag_scan(blocks: np.ndarray) -> np.ndarray:
    """Reorder (..., 4, 4) blocks into (..., 16) zigzag sequences."""
    blocks = np.asarray(blocks)
    return blocks.reshape(blocks.shape[:-2] + (16,))[..., ZIGZAG_4X4]


def inverse_zigzag(sequences: np.ndarray) -> np.ndarray:
    """Reorder (..., 16) zigzag sequences into (..., 4, 4) blocks."""
    sequences = np.asarray(sequences)
    return sequences[..., _INVERSE_ZIGZAG].reshape(sequences.shape[:-1] + (4, 4))


def signed_to_code(values: np.ndarray) -> np.ndarray:
    """Map signed integers to exp-Golomb code numbers."""
    values = np.asarray(values, dtype=np.int64)
    return np.where(values > 0, 2 * values - 1, -2 * values)


def code_to_signed(codes: np.ndarray) -> np.ndarray:
    """Inverse of ``signed_to_code``."""
    codes = np.asarray(codes, dtype=np.int64)
    return np.where(codes & 1, (codes + 1) >> 1, -(codes >> 1))


def exp_golomb_lengths(values: np.ndarray) -> np.ndarray:
    """Code length in bits of each signed value."""
    _, exponent = np.frexp((signed_to_code(values) + 1).astype(np.float64))
    return 2 * exponent.astype(np.int64) - 1


def exp_golomb_encode(values: np.ndarray) -> Tuple[bytes, int]:
    """
    Encode signed integers as a packed exp-Golomb bit string.

    Args:
        values: Integers to encode, in order

    Returns:
        Packed bytes (zero-padded to a byte boundary) and the number of bits used
    """
    codes = signed_to_code(np.asarray(values).reshape(-1)) + 1
    if codes.size == 0:
        return b"", 0
    _, exponent = np.frexp(codes.astype(np.float64))
    nbits = exponent.astype(np.int64)
    lengths = 2 * nbits - 1
    ends = np.cumsum(lengths)
    total = int(ends[-1])

    # The binary part of each code occupies the last nbits positions of its slot.
    binary_start = ends - nbits
    repeated = np.repeat(codes, nbits)
    group_start = np.repeat(np.cumsum(nbits) - nbits, nbits)
    within = np.arange(repeated.size) - group_start
    shifts = np.repeat(nbits, nbits) - 1 - within
    positions = np.repeat(binary_start, nbits) + within

    bits = np.zeros(total, dtype=np.uint8)
    bits[positions] = (repeated >> shifts) & 1
    return np.packbits(bits).tobytes(), total


@njit(cache=True)
def _decode_kernel(bits, count, out):
    """Decode ``count`` signed codes; returns (codes decoded, bit position)."""
    n = bits.shape[0]
    pos = 0
    for i in range(count):
        zeros = 0
        while pos < n and bits[pos] == 0:
            zeros += 1
            pos += 1
        if pos >= n or zeros > MAX_PREFIX_ZEROS or pos + 1 + zeros > n:
            return i, pos
        pos += 1
        value = 1
        for j in range(zeros):
            value = (value << 1) | int(bits[pos + j])
        pos += zeros
        code = value - 1
        if code & 1:
            out[i] = (code + 1) >> 1
        else:
            out[i] = -(code >> 1)
    return count, pos


def exp_golomb_decode(data: bytes, count: int, bit_count: int) -> np.ndarray:
    """
    Decode ``count`` signed integers from a packed bit string.

    Args:
        data: Packed bytes
        count: Number of values to read
        bit_count: Number of meaningful bits in ``data``

    Returns:
        int64 array of the decoded values

    Raises:
        BitstreamError: If the bits run out, a code is malformed, or the
            decoded codes do not use exactly ``bit_count`` bits. The offset
            is the byte position within ``data``.
    """
    if bit_count > 8 * len(data):
        raise BitstreamError(f"Bit count {bit_count} exceeds {len(data)} payload bytes", len(data))
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))[:bit_count]
    out = np.empty(count, dtype=np.int64)
    decoded, position = _decode_kernel(bits, count, out)
    if decoded != count:
        raise BitstreamError(f"Truncated or malformed exp-Golomb code {decoded} of {count}", position // 8)
    if position != bit_count:
        raise BitstreamError(f"{bit_count - position} trailing coefficient bits", position // 8)
    return out
