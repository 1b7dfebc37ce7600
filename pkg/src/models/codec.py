"""
Codec model definitions.

This module contains the projection plane configuration, the depth image and
its index maps, per-macroblock QP maps, the RoI macroblock indicator and the
bitstream containers.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .errors import DataError, UsageError

MACROBLOCK_SIZE = 16
MAX_QP = 51
MAX_DEPTH_VALUE = 65535


def check_qp(qp: int) -> int:
    """
    Validate a quantization parameter.

    Raises:
        UsageError: If qp is outside [0, 51]
    """
    if not 0 <= int(qp) <= MAX_QP:
        raise UsageError(f"QP must lie in [0, {MAX_QP}], got {qp}")
    return int(qp)


def macroblock_grid(width: int, height: int) -> Tuple[int, int]:
    """Number of macroblock rows and columns of an image."""
    return height // MACROBLOCK_SIZE, width // MACROBLOCK_SIZE


def pixel_to_macroblock(width: int, height: int) -> np.ndarray:
    """
    Fixed 16x16 tiling function M^b.

    Returns:
        Array of length width*height mapping each raster pixel index to its
        raster macroblock index
    """
    rows = np.arange(height) // MACROBLOCK_SIZE
    cols = np.arange(width) // MACROBLOCK_SIZE
    return (rows[:, None] * (width // MACROBLOCK_SIZE) + cols[None, :]).reshape(-1)


@dataclass(frozen=True)
class PlaneConfig:
    """
    Orthographic projection plane.

    Pixel ``(u, v)`` is centered on ``origin + u*pitch*u_axis + v*pitch*v_axis``.
    A point at signed distance ``d`` along ``depth_axis`` from the plane gets
    the depth value ``depth_offset + round(d / depth_scale)``.

    The default is a bird's-eye plane 10 m above the sensor looking down,
    512x512 pixels of 0.2 m, with 1.5625 mm depth units (0 to 102.3 m).

    Attributes:
        origin: Center of pixel (0, 0) on the plane, in meters
        u_axis: Unit vector of increasing column index
        v_axis: Unit vector of increasing row index
        depth_axis: Unit vector of increasing depth
        pixel_pitch: Pixel edge length in meters
        width: Image width in pixels (multiple of 16)
        height: Image height in pixels (multiple of 16)
        depth_scale: Meters per depth unit
        depth_offset: Depth value of a point lying on the plane
    """
    origin: Tuple[float, float, float] = (-51.1, -51.1, 10.0)
    u_axis: Tuple[float, float, float] = (1.0, 0.0, 0.0)
    v_axis: Tuple[float, float, float] = (0.0, 1.0, 0.0)
    depth_axis: Tuple[float, float, float] = (0.0, 0.0, -1.0)
    pixel_pitch: float = 0.2
    width: int = 512
    height: int = 512
    depth_scale: float = 0.0015625
    depth_offset: int = 0

    def __post_init__(self):
        for name in ("origin", "u_axis", "v_axis", "depth_axis"):
            value = tuple(float(v) for v in getattr(self, name))
            if len(value) != 3 or not np.all(np.isfinite(value)):
                raise UsageError(f"Plane {name} must be three finite numbers, got {value}")
            object.__setattr__(self, name, value)
        basis = self.basis
        if not np.allclose(basis @ basis.T, np.eye(3), rtol=0.0, atol=1e-9):
            raise UsageError("Plane axes must be orthonormal")
        if self.width <= 0 or self.height <= 0 \
                or self.width % MACROBLOCK_SIZE or self.height % MACROBLOCK_SIZE:
            raise UsageError(
                f"Image size {self.width}x{self.height} must be positive multiples of {MACROBLOCK_SIZE}")
        if self.pixel_pitch <= 0 or self.depth_scale <= 0:
            raise UsageError("Pixel pitch and depth scale must be positive")
        if not 0 <= self.depth_offset <= MAX_DEPTH_VALUE:
            raise UsageError(f"Depth offset must lie in [0, {MAX_DEPTH_VALUE}]")

    @property
    def basis(self) -> np.ndarray:
        """Rows u_axis, v_axis, depth_axis."""
        return np.array([self.u_axis, self.v_axis, self.depth_axis], dtype=np.float64)

    @property
    def pixel_count(self) -> int:
        """Number of pixels M."""
        return self.width * self.height

    @property
    def macroblock_shape(self) -> Tuple[int, int]:
        """(rows, cols) of the macroblock grid."""
        return macroblock_grid(self.width, self.height)

    @property
    def macroblock_count(self) -> int:
        """Number of macroblocks B."""
        rows, cols = self.macroblock_shape
        return rows * cols

    def to_dict(self) -> Dict[str, Any]:
        """Serialize to a JSON/YAML-compatible dictionary."""
        return {
            "origin": list(self.origin),
            "u_axis": list(self.u_axis),
            "v_axis": list(self.v_axis),
            "depth_axis": list(self.depth_axis),
            "pixel_pitch": self.pixel_pitch,
            "width": self.width,
            "height": self.height,
            "depth_scale": self.depth_scale,
            "depth_offset": self.depth_offset,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PlaneConfig":
        """Build a plane from a (possibly partial) dictionary."""
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        unknown = set(data) - set(known)
        if unknown:
            raise UsageError(f"Unknown plane settings: {sorted(unknown)}")
        if "width" in known:
            known["width"] = int(known["width"])
        if "height" in known:
            known["height"] = int(known["height"])
        if "depth_offset" in known:
            known["depth_offset"] = int(known["depth_offset"])
        return cls(**known)


@dataclass
class DepthImage:
    """
    Quantized geometry image.

    Attributes:
        depth: (height, width) uint16 depth values
        occupancy: (height, width) boolean occupancy
        plane: Projection metadata
    """
    depth: np.ndarray
    occupancy: np.ndarray
    plane: PlaneConfig

    def __post_init__(self):
        self.depth = np.asarray(self.depth)
        self.occupancy = np.asarray(self.occupancy, dtype=bool)
        expected = (self.plane.height, self.plane.width)
        if self.depth.shape != expected or self.occupancy.shape != expected:
            raise DataError(
                f"Depth image arrays must have shape {expected}, got "
                f"{self.depth.shape} and {self.occupancy.shape}")
        if self.depth.dtype != np.uint16:
            if self.depth.size and (self.depth.min() < 0 or self.depth.max() > MAX_DEPTH_VALUE):
                raise DataError("Depth values must fit in 16 bits")
            self.depth = self.depth.astype(np.uint16)

    @property
    def width(self) -> int:
        return self.plane.width

    @property
    def height(self) -> int:
        return self.plane.height

    @property
    def occupied_count(self) -> int:
        """Number of occupied pixels."""
        return int(self.occupancy.sum())

    @classmethod
    def empty(cls, plane: PlaneConfig) -> "DepthImage":
        """Image with no occupied pixel."""
        shape = (plane.height, plane.width)
        return cls(np.zeros(shape, dtype=np.uint16), np.zeros(shape, dtype=bool), plane)


@dataclass
class ProjectionMaps:
    """
    Index maps produced by projecting one cloud.

    Attributes:
        point_to_pixel: Raster pixel index of each source point (-1 when the
            point falls outside the plane's footprint or depth range)
        dropped: True for points that lost their pixel to a nearer point
        width: Image width in pixels
        height: Image height in pixels
    """
    point_to_pixel: np.ndarray
    dropped: np.ndarray
    width: int
    height: int

    def __post_init__(self):
        self.point_to_pixel = np.asarray(self.point_to_pixel, dtype=np.int64).reshape(-1)
        self.dropped = np.asarray(self.dropped, dtype=bool).reshape(-1)
        if self.point_to_pixel.shape != self.dropped.shape:
            raise DataError("Point-to-pixel map and dropped flags differ in length")
        if self.point_to_pixel.size and (
                self.point_to_pixel.min() < -1 or self.point_to_pixel.max() >= self.width * self.height):
            raise DataError("Point-to-pixel map references pixels outside the image")

    def __len__(self) -> int:
        return self.point_to_pixel.shape[0]

    @property
    def pixel_to_macroblock(self) -> np.ndarray:
        """The fixed tiling map M^b."""
        return pixel_to_macroblock(self.width, self.height)

    @property
    def dropped_count(self) -> int:
        """Number of points that lost their pixel."""
        return int(self.dropped.sum())

    @property
    def outside_count(self) -> int:
        """Number of points outside the footprint."""
        return int((self.point_to_pixel < 0).sum())


@dataclass
class QpMap:
    """
    Per-macroblock quantization parameters of one frame.

    Attributes:
        values: (mb_rows, mb_cols) integer QPs in [0, 51]
    """
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 2:
            raise DataError(f"QP map must be two-dimensional, got shape {values.shape}")
        if values.size and (values.min() < 0 or values.max() > MAX_QP):
            raise UsageError(f"QP map entries must lie in [0, {MAX_QP}]")
        self.values = values.astype(np.int64)

    @classmethod
    def uniform(cls, qp: int, shape: Tuple[int, int]) -> "QpMap":
        """Map assigning the same QP to every macroblock."""
        return cls(np.full(shape, check_qp(qp), dtype=np.int64))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    @property
    def is_uniform(self) -> bool:
        """Whether all macroblocks share one QP."""
        return self.values.size == 0 or bool((self.values == self.values.flat[0]).all())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QpMap):
            return NotImplemented
        return bool(np.array_equal(self.values, other.values))


@dataclass
class FrameSegment:
    """
    One encoded frame.

    Attributes:
        plane: Projection metadata shared by the sequence
        qp_map: QPs the frame was quantized with
        payload: Compressed frame payload
        offset: Byte offset of the payload within its container (0 in memory)
    """
    plane: PlaneConfig
    qp_map: QpMap
    payload: bytes
    offset: int = 0

    @property
    def bits(self) -> int:
        """Payload size in bits."""
        return 8 * len(self.payload)


@dataclass
class Bitstream:
    """
    Self-describing encoded sequence.

    Attributes:
        plane: Projection metadata
        segments: One segment per frame
        frame_rate: Frames per second of the sequence
        store_point_map: Whether segments carry the point-to-pixel map
    """
    plane: PlaneConfig
    segments: List[FrameSegment] = field(default_factory=list)
    frame_rate: float = 20.0
    store_point_map: bool = True

    @property
    def frame_count(self) -> int:
        """Number of frames L."""
        return len(self.segments)


@dataclass
class EncodedSequence:
    """
    Result of encoding a sequence.

    Attributes:
        bitstream: The container
        total_bits: Size of the serialized container in bits
        frame_bits: Bits spent on each frame (QP map, length prefix and payload)
        indicator: (B, L) RoI macroblock indicator R
        dropped_counts: Points lost to nearer points, per frame
        outside_counts: Points outside the footprint, per frame
    """
    bitstream: Bitstream
    total_bits: int
    frame_bits: List[int]
    indicator: np.ndarray
    dropped_counts: List[int]
    outside_counts: List[int]

    @property
    def frame_count(self) -> int:
        return self.bitstream.frame_count

    def bitrate_mbps(self, frame_rate: Optional[float] = None) -> float:
        """
        Average bitrate in megabits per second.

        Args:
            frame_rate: Frames per second (defaults to the bitstream's)
        """
        rate = self.bitstream.frame_rate if frame_rate is None else frame_rate
        if self.frame_count == 0:
            return 0.0
        return self.total_bits * rate / self.frame_count / 1e6
