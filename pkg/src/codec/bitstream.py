"""
Frame coding and the RPCC bitstream container.

Frame payload (zlib-compressed as a whole)::

    u8   flags            bit 0: point map present
    u32  point count N    (0 without point map)
    u32  coefficient bits
    occupancy             width*height bits, raster order, packed MSB first
    coefficients          signed exp-Golomb levels: macroblocks in raster
                          order, their 16 4x4 blocks in raster order, each
                          block's 16 levels in zigzag order; padded to a byte
    point map             N x i32 pixel index (-1 outside the footprint),
                          then N dropped bits packed MSB first

Container (little-endian)::

    "RPCC" u16 version u16 flags u32 width u32 height
    f64[12] origin, u axis, v axis, depth axis
    f64 pixel pitch  f64 depth scale  u32 depth offset  f64 frame rate  u32 L
    L x B u8         QP map of every frame (B macroblocks, raster order)
    L x (u32 length, payload)
"""

import logging
import struct
import zlib
from typing import Optional, Tuple

import numpy as np

from ..models.codec import (
    MACROBLOCK_SIZE, MAX_DEPTH_VALUE, MAX_QP, Bitstream, DepthImage, FrameSegment,
    PlaneConfig, ProjectionMaps, QpMap, check_qp, macroblock_grid
)
from ..models.errors import BitstreamError, DataError, InvariantError, RoiPccError
from .entropy import exp_golomb_decode, exp_golomb_encode, inverse_zigzag, zigzag_scan
from .transform import dct4x4_forward, dequantize_and_inverse, quantize

logger = logging.getLogger(__name__)

MAGIC = b"RPCC"
VERSION = 1
FLAG_POINT_MAP = 0x01

CONTAINER_HEADER = struct.Struct("<4sHHII12d2dIdI")
FRAME_HEADER = struct.Struct("<BII")
LENGTH_PREFIX = struct.Struct("<I")

ZLIB_LEVEL = 9


def pad_depth(depth: DepthImage) -> np.ndarray:
    """
    Samples to transform, with unoccupied pixels filled in.

    Unoccupied pixels take the rounded mean depth of the occupied pixels of
    their macroblock, or of the whole image when the macroblock is empty, or
    0 when nothing is occupied.

    Returns:
        (height, width) int64 samples
    """
    samples = depth.depth.astype(np.int64)
    occupancy = depth.occupancy
    if occupancy.all():
        return samples
    global_fill = int(np.floor(samples[occupancy].mean() + 0.5)) if occupancy.any() else 0

    rows, cols = macroblock_grid(depth.width, depth.height)
    shape = (rows, MACROBLOCK_SIZE, cols, MACROBLOCK_SIZE)
    occ_mb = occupancy.reshape(shape)
    counts = occ_mb.sum(axis=(1, 3))
    sums = np.where(occ_mb, samples.reshape(shape), 0).sum(axis=(1, 3))
    fill = np.full((rows, cols), global_fill, dtype=np.int64)
    has_points = counts > 0
    fill[has_points] = np.floor(sums[has_points] / counts[has_points] + 0.5).astype(np.int64)
    fill_pixels = np.repeat(np.repeat(fill, MACROBLOCK_SIZE, axis=0), MACROBLOCK_SIZE, axis=1)
    return np.where(occupancy, samples, fill_pixels)


def image_to_blocks(samples: np.ndarray) -> np.ndarray:
    """(H, W) image to (mb_rows, mb_cols, 4, 4, 4, 4) blocks in coding order."""
    height, width = samples.shape
    rows, cols = macroblock_grid(width, height)
    return samples.reshape(rows, 4, 4, cols, 4, 4).transpose(0, 3, 1, 4, 2, 5)


def blocks_to_image(blocks: np.ndarray) -> np.ndarray:
    """Inverse of ``image_to_blocks``."""
    rows, cols = blocks.shape[:2]
    return blocks.transpose(0, 2, 4, 1, 3, 5).reshape(rows * MACROBLOCK_SIZE, cols * MACROBLOCK_SIZE)


def _block_qp(qp_map: QpMap) -> np.ndarray:
    """QP of every 4x4 block, shaped (mb_rows, mb_cols, 4, 4)."""
    return np.broadcast_to(qp_map.values[:, :, None, None], qp_map.shape + (4, 4))


def quantize_image(samples: np.ndarray, qp_map: QpMap) -> np.ndarray:
    """Forward transform and quantize a padded image at its per-macroblock QPs."""
    return quantize(dct4x4_forward(image_to_blocks(samples)), _block_qp(qp_map))


def dequantize_image(levels: np.ndarray, qp_map: QpMap) -> np.ndarray:
    """
    Reconstruct a depth raster from quantized levels.

    Returns:
        (height, width) uint16 samples clamped to [0, 65535]
    """
    samples = dequantize_and_inverse(levels, _block_qp(qp_map))
    return np.clip(blocks_to_image(samples), 0, MAX_DEPTH_VALUE).astype(np.uint16)


def _check_frame(depth: DepthImage, qp_map: QpMap) -> None:
    if depth.depth.shape[0] % MACROBLOCK_SIZE or depth.depth.shape[1] % MACROBLOCK_SIZE:
        raise DataError(f"Depth image {depth.depth.shape} is not a multiple of {MACROBLOCK_SIZE}")
    if qp_map.shape != depth.plane.macroblock_shape:
        raise DataError(
            f"QP map of shape {qp_map.shape} does not match macroblock grid {depth.plane.macroblock_shape}")


def _pack_payload(depth: DepthImage, levels: np.ndarray, qp_map: QpMap,
                  maps: Optional[ProjectionMaps]) -> FrameSegment:
    """Entropy-code levels, occupancy and point map into a segment."""
    coefficients, bit_count = exp_golomb_encode(zigzag_scan(levels))
    parts = []
    if maps is not None:
        if (maps.width, maps.height) != (depth.width, depth.height):
            raise DataError("Projection maps do not match the depth image")
        parts.append(FRAME_HEADER.pack(FLAG_POINT_MAP, len(maps), bit_count))
    else:
        parts.append(FRAME_HEADER.pack(0, 0, bit_count))
    parts.append(np.packbits(depth.occupancy.reshape(-1)).tobytes())
    parts.append(coefficients)
    if maps is not None:
        parts.append(maps.point_to_pixel.astype("<i4").tobytes())
        parts.append(np.packbits(maps.dropped).tobytes())
    payload = zlib.compress(b"".join(parts), ZLIB_LEVEL)
    return FrameSegment(depth.plane, qp_map, payload)


def encode_frame(depth: DepthImage, qp_map: QpMap,
                 maps: Optional[ProjectionMaps] = None) -> FrameSegment:
    """
    Encode one depth image with per-macroblock QPs.

    Args:
        depth: The depth image
        qp_map: QP of every macroblock
        maps: Index maps to store alongside (omitted when None)

    Returns:
        The frame segment

    Raises:
        DataError: If dimensions or the QP map shape are inconsistent
    """
    _check_frame(depth, qp_map)
    levels = quantize_image(pad_depth(depth), qp_map)
    return _pack_payload(depth, levels, qp_map, maps)


def encode_frame_uniform(depth: DepthImage, qp: int,
                         maps: Optional[ProjectionMaps] = None) -> FrameSegment:
    """
    Encode one depth image at a single QP.

    Produces the same segment as ``encode_frame`` with a uniform QP map.
    """
    qp = check_qp(qp)
    qp_map = QpMap.uniform(qp, depth.plane.macroblock_shape)
    _check_frame(depth, qp_map)
    levels = quantize(dct4x4_forward(image_to_blocks(pad_depth(depth))), np.int64(qp))
    return _pack_payload(depth, levels, qp_map, maps)


def _parse_payload(segment: FrameSegment) -> Tuple[np.ndarray, np.ndarray, Optional[ProjectionMaps]]:
    """Decompress a segment into occupancy, levels and the optional point map."""
    plane = segment.plane
    try:
        raw = zlib.decompress(segment.payload)
    except zlib.error as e:
        raise BitstreamError(f"Corrupt frame payload: {e}", segment.offset) from e
    if len(raw) < FRAME_HEADER.size:
        raise BitstreamError("Frame payload too short", segment.offset)
    flags, point_count, bit_count = FRAME_HEADER.unpack_from(raw, 0)
    position = FRAME_HEADER.size

    occupancy_bytes = (plane.pixel_count + 7) // 8
    coefficient_bytes = (bit_count + 7) // 8
    map_bytes = 4 * point_count + (point_count + 7) // 8 if flags & FLAG_POINT_MAP else 0
    expected = position + occupancy_bytes + coefficient_bytes + map_bytes
    if len(raw) != expected:
        raise BitstreamError(
            f"Frame payload holds {len(raw)} bytes, layout needs {expected}", segment.offset)

    occupancy = np.unpackbits(np.frombuffer(raw, np.uint8, occupancy_bytes, position),
                              count=plane.pixel_count).astype(bool).reshape(plane.height, plane.width)
    position += occupancy_bytes

    rows, cols = plane.macroblock_shape
    try:
        values = exp_golomb_decode(raw[position:position + coefficient_bytes],
                                   plane.pixel_count, bit_count)
    except BitstreamError as e:
        raise BitstreamError(f"Bad coefficient data: {e}", segment.offset) from e
    levels = inverse_zigzag(values.reshape(rows, cols, 4, 4, 16))
    position += coefficient_bytes

    maps = None
    if flags & FLAG_POINT_MAP:
        pixels = np.frombuffer(raw, "<i4", point_count, position).astype(np.int64)
        position += 4 * point_count
        dropped = np.unpackbits(np.frombuffer(raw, np.uint8, (point_count + 7) // 8, position),
                                count=point_count).astype(bool)
        try:
            maps = ProjectionMaps(pixels, dropped, plane.width, plane.height)
        except DataError as e:
            raise BitstreamError(f"Bad point map: {e}", segment.offset) from e
    return occupancy, levels, maps


def decode_frame(segment: FrameSegment) -> DepthImage:
    """
    Decode one frame segment.

    Returns:
        The reconstructed depth image (dequantized samples, original occupancy)

    Raises:
        BitstreamError: If the segment is malformed
    """
    occupancy, levels, _ = _parse_payload(segment)
    return DepthImage(dequantize_image(levels, segment.qp_map), occupancy, segment.plane)


def decode_projection_maps(segment: FrameSegment) -> Optional[ProjectionMaps]:
    """Point map stored in a segment, or None when it was omitted."""
    return _parse_payload(segment)[2]


def write_bitstream(bitstream: Bitstream) -> bytes:
    """
    Serialize a bitstream into the RPCC container.

    Raises:
        InvariantError: If a segment disagrees with the container's plane
    """
    plane = bitstream.plane
    flags = FLAG_POINT_MAP if bitstream.store_point_map else 0
    parts = [CONTAINER_HEADER.pack(
        MAGIC, VERSION, flags, plane.width, plane.height,
        *plane.origin, *plane.u_axis, *plane.v_axis, *plane.depth_axis,
        plane.pixel_pitch, plane.depth_scale, plane.depth_offset,
        bitstream.frame_rate, bitstream.frame_count)]
    for segment in bitstream.segments:
        if segment.plane != plane or segment.qp_map.shape != plane.macroblock_shape:
            raise InvariantError("Frame segment does not match the bitstream plane")
        parts.append(segment.qp_map.values.astype(np.uint8).tobytes())
    for segment in bitstream.segments:
        parts.append(LENGTH_PREFIX.pack(len(segment.payload)))
        parts.append(segment.payload)
    return b"".join(parts)


def read_bitstream(data: bytes) -> Bitstream:
    """
    Parse an RPCC container.

    Segments are split but not decoded; use ``decode_frame`` on them.

    Raises:
        BitstreamError: On any structural problem, with the byte offset
    """
    if len(data) < CONTAINER_HEADER.size:
        raise BitstreamError("Truncated container header", len(data))
    fields = CONTAINER_HEADER.unpack_from(data, 0)
    magic, version, flags, width, height = fields[:5]
    if magic != MAGIC:
        raise BitstreamError(f"Bad magic {magic!r}", 0)
    if version != VERSION:
        raise BitstreamError(f"Unsupported version {version}", 4)
    axes = fields[5:17]
    pitch, depth_scale, depth_offset, frame_rate, frame_count = fields[17:22]
    try:
        plane = PlaneConfig(tuple(axes[0:3]), tuple(axes[3:6]), tuple(axes[6:9]), tuple(axes[9:12]),
                            pitch, width, height, depth_scale, depth_offset)
    except RoiPccError as e:
        raise BitstreamError(f"Invalid plane metadata: {e}", 8) from e
    if not frame_rate > 0:
        raise BitstreamError(f"Invalid frame rate {frame_rate}", CONTAINER_HEADER.size - 12)

    offset = CONTAINER_HEADER.size
    blocks = plane.macroblock_count
    if len(data) < offset + frame_count * blocks:
        raise BitstreamError("Truncated QP maps", len(data))
    qp_maps = []
    for _ in range(frame_count):
        values = np.frombuffer(data, np.uint8, blocks, offset).astype(np.int64)
        if values.max(initial=0) > MAX_QP:
            raise BitstreamError("QP map entry above 51", offset + int(np.argmax(values > MAX_QP)))
        qp_maps.append(QpMap(values.reshape(plane.macroblock_shape)))
        offset += blocks

    segments = []
    for qp_map in qp_maps:
        if len(data) < offset + LENGTH_PREFIX.size:
            raise BitstreamError("Truncated segment length", offset)
        (length,) = LENGTH_PREFIX.unpack_from(data, offset)
        offset += LENGTH_PREFIX.size
        if len(data) < offset + length:
            raise BitstreamError(f"Segment of {length} bytes runs past the end", offset)
        segments.append(FrameSegment(plane, qp_map, bytes(data[offset:offset + length]), offset))
        offset += length
    if offset != len(data):
        raise BitstreamError(f"{len(data) - offset} trailing bytes", offset)
    return Bitstream(plane, segments, frame_rate, bool(flags & FLAG_POINT_MAP))
