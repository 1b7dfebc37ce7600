"""
Sequence-level encoding and decoding.

Frames are coded independently (intra only). For each frame the cloud is
projected, its RoI mask is turned into a macroblock indicator, the indicator
into a QP map, and the depth image is encoded with that map.
"""

import logging
from typing import List, Optional, Sequence

import numpy as np

from ..config import DEFAULT_FRAME_RATE, DEFAULT_QB, DEFAULT_QR
from ..models.codec import Bitstream, DepthImage, EncodedSequence, PlaneConfig, check_qp
from ..models.errors import DataError
from ..models.geometry import PointCloud
from ..models.roi import RoiMask
from ..utils.timing import StageTimer, log_timing
from .bitstream import (
    LENGTH_PREFIX, decode_frame, decode_projection_maps, encode_frame,
    encode_frame_uniform, write_bitstream
)
from .projection import project, reconstruct
from .qp import build_qp_map, solve_indicator

logger = logging.getLogger(__name__)


def encode_sequence(clouds: Sequence[PointCloud], masks: Optional[Sequence[RoiMask]],
                    q_r: int = DEFAULT_QR, q_b: int = DEFAULT_QB,
                    plane: Optional[PlaneConfig] = None,
                    frame_rate: float = DEFAULT_FRAME_RATE, store_point_map: bool = True,
                    timer: Optional[StageTimer] = None) -> EncodedSequence:
    """
    Encode a sequence of clouds.

    Args:
        clouds: Frames in order
        masks: RoI mask per frame; None encodes every frame uniformly at ``q_b``
        q_r: QP of RoI macroblocks
        q_b: QP of background macroblocks
        plane: Projection plane
        frame_rate: Frames per second, stored in the container
        store_point_map: Embed the point-to-pixel maps
        timer: Optional StageTimer collecting stage durations

    Returns:
        The encoded sequence with its size accounting and indicator matrix
    """
    plane = plane or PlaneConfig()
    q_r, q_b = check_qp(q_r), check_qp(q_b)
    if masks is not None and len(masks) != len(clouds):
        raise DataError(f"Got {len(masks)} masks for {len(clouds)} frames")

    segments = []
    columns = []
    dropped_counts, outside_counts = [], []
    for position, cloud in enumerate(clouds):
        with log_timing("projection", timer):
            depth, maps, dropped = project(cloud, plane)
        stored_maps = maps if store_point_map else None
        with log_timing("frame encode", timer):
            if masks is None:
                indicator = np.zeros(plane.macroblock_shape, dtype=bool)
                segment = encode_frame_uniform(depth, q_b, stored_maps)
            else:
                indicator = solve_indicator(masks[position], maps)
                segment = encode_frame(depth, build_qp_map(indicator, q_r, q_b), stored_maps)
        segments.append(segment)
        columns.append(indicator.reshape(-1))
        dropped_counts.append(int(dropped.size))
        outside_counts.append(maps.outside_count)
        logger.debug(f"Frame {position}: {segment.bits} payload bits, "
                     f"{int(indicator.sum())} RoI macroblocks, {dropped.size} dropped points")

    bitstream = Bitstream(plane, segments, frame_rate, store_point_map)
    total_bits = 8 * len(write_bitstream(bitstream))
    frame_bits = [8 * (plane.macroblock_count + LENGTH_PREFIX.size + len(s.payload)) for s in segments]
    indicator_matrix = (np.stack(columns, axis=1) if columns
                        else np.zeros((plane.macroblock_count, 0), dtype=bool))
    logger.info(f"Encoded {len(segments)} frames into {total_bits} bits")
    return EncodedSequence(bitstream, total_bits, frame_bits, indicator_matrix,
                           dropped_counts, outside_counts)


def decode_sequence(bitstream: Bitstream, timer: Optional[StageTimer] = None) -> List[DepthImage]:
    """Decode every frame of a bitstream."""
    images = []
    for segment in bitstream.segments:
        with log_timing("frame decode", timer):
            images.append(decode_frame(segment))
    return images


def reconstruct_sequence(bitstream: Bitstream, timer: Optional[StageTimer] = None) -> List[PointCloud]:
    """Decode a bitstream and lift every frame back to a point cloud."""
    clouds = []
    for position, (segment, depth) in enumerate(zip(bitstream.segments, decode_sequence(bitstream, timer))):
        maps = decode_projection_maps(segment) if bitstream.store_point_map else None
        cloud = reconstruct(depth, maps)
        clouds.append(PointCloud(cloud.points, frame_index=position))
    return clouds


class SequenceEncoder:
    """
    Encoder with fixed codec parameters.

    Attributes:
        plane: Projection plane
        q_r: QP of RoI macroblocks
        q_b: QP of background macroblocks
        frame_rate: Frames per second
        store_point_map: Embed point-to-pixel maps
        timer: Stage durations of every call
    """

    def __init__(self, plane: Optional[PlaneConfig] = None, q_r: int = DEFAULT_QR,
                 q_b: int = DEFAULT_QB, frame_rate: float = DEFAULT_FRAME_RATE,
                 store_point_map: bool = True):
        self.plane = plane or PlaneConfig()
        self.q_r = check_qp(q_r)
        self.q_b = check_qp(q_b)
        self.frame_rate = frame_rate
        self.store_point_map = store_point_map
        self.timer = StageTimer()

    @classmethod
    def from_config(cls, config) -> "SequenceEncoder":
        """Create an encoder from a RunConfig."""
        return cls(config.plane, config.q_r, config.q_b, config.frame_rate, config.store_point_map)

    def encode(self, clouds: Sequence[PointCloud],
               masks: Optional[Sequence[RoiMask]] = None) -> EncodedSequence:
        """Encode clouds with RoI masks, or uniformly at q_b without them."""
        return encode_sequence(clouds, masks, self.q_r, self.q_b, self.plane,
                               self.frame_rate, self.store_point_map, self.timer)

    def decode(self, bitstream: Bitstream) -> List[PointCloud]:
        """Reconstructed clouds of a bitstream."""
        return reconstruct_sequence(bitstream, self.timer)
