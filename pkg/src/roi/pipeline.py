"""
RoI mask pipeline.

Combines box membership, per-object mixtures, heatmap rasterization and
ground removal into the final point-wise RoI mask, and carries masks from
key frames to the frames in between using the ego-motion.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..config import (
    DEFAULT_GAMMA, DEFAULT_K_COMPONENTS, DEFAULT_PROPAGATION_RADIUS,
    DEFAULT_PROPAGATION_STRIDE, NUM_CLASSES
)
from ..geometry.boxes import points_in_boxes
from ..geometry.kdtree import build_index
from ..geometry.transforms import relative_pose
from ..models.errors import DataError, UsageError
from ..models.geometry import OrientedBox, PointCloud, Pose
from ..models.roi import Gmm2, GridGeometry, RoiHeatmap, RoiMask
from ..utils.timing import StageTimer, log_timing
from .gmm import box_seed, fit_gmm, project_gmm
from .ground import GroundSegmenter, ground_mask
from .heatmap import binarize_heatmap, mask_from_grid, rasterize_heatmap

logger = logging.getLogger(__name__)


def compose_roi(mask_y: RoiMask, mask_f: RoiMask) -> RoiMask:
    """
    Final RoI mask: heatmap mask AND foreground mask.

    Raises:
        DataError: If the masks differ in length
    """
    if len(mask_y) != len(mask_f):
        raise DataError(f"Cannot compose masks of lengths {len(mask_y)} and {len(mask_f)}")
    return RoiMask(mask_y.bits & mask_f.bits)


def propagate_mask(mask: RoiMask, source_cloud: PointCloud, source_pose: Pose,
                   target_cloud: PointCloud, target_pose: Pose,
                   radius: float = DEFAULT_PROPAGATION_RADIUS) -> RoiMask:
    """
    Carry a RoI mask from one frame to another.

    The source RoI points are moved into the target frame with the relative
    ego-motion; a target point is RoI when it lies within ``radius`` of any
    of them.

    Args:
        mask: RoI mask of the source cloud
        source_cloud: Cloud the mask belongs to
        source_pose: Sensor-to-world pose of the source frame
        target_cloud: Cloud receiving the mask
        target_pose: Sensor-to-world pose of the target frame
        radius: Matching radius in meters

    Returns:
        RoI mask of the target cloud
    """
    if len(mask) != len(source_cloud):
        raise DataError(f"Mask of length {len(mask)} does not match source cloud of {len(source_cloud)} points")
    if radius < 0:
        raise UsageError(f"Propagation radius must be non-negative, got {radius}")
    if mask.count == 0 or len(target_cloud) == 0:
        return RoiMask.full(len(target_cloud), False)

    motion = relative_pose(source_pose, target_pose)
    moved = motion.apply(source_cloud.points[mask.bits])
    index = build_index(moved)
    distances2, _ = index.query_nearest(target_cloud.points)
    return RoiMask(distances2 <= radius * radius)


def fit_box_gmms(cloud: PointCloud, boxes: Sequence[OrientedBox],
                 k_components: int = DEFAULT_K_COMPONENTS, workers: int = 1,
                 timer: Optional[StageTimer] = None) -> List[Tuple[Gmm2, int]]:
    """
    Fit and project one mixture per non-empty box.

    Returns:
        (projected mixture, class id) pairs in box order
    """
    members = points_in_boxes(cloud, boxes, workers=workers, timer=timer)
    gmms = []
    with log_timing("GMM fits", timer):
        for box, indices in zip(boxes, members):
            if indices.size == 0:
                logger.debug(f"Box at {box.center.round(2).tolist()} contains no points")
                continue
            gmm = fit_gmm(cloud.points[indices], k_components, seed=box_seed(box))
            gmms.append((project_gmm(gmm), box.class_id))
    return gmms


def _foreground(cloud: PointCloud, use_ground_removal: bool,
                segmenter: Optional[GroundSegmenter], timer: Optional[StageTimer]) -> RoiMask:
    """Foreground mask, or all ones when ground removal is disabled."""
    if not use_ground_removal:
        return RoiMask.full(len(cloud), True)
    with log_timing("ground segmentation", timer):
        return ground_mask(cloud, segmenter)


def roi_from_boxes(cloud: PointCloud, boxes: Sequence[OrientedBox],
                   k_components: int = DEFAULT_K_COMPONENTS, gamma: float = DEFAULT_GAMMA,
                   geometry: Optional[GridGeometry] = None, use_ground_removal: bool = True,
                   segmenter: Optional[GroundSegmenter] = None, num_classes: int = NUM_CLASSES,
                   workers: int = 1, timer: Optional[StageTimer] = None) -> RoiMask:
    """
    RoI mask of a cloud from its object boxes through mixture heatmaps.

    Args:
        cloud: The point cloud
        boxes: Object boxes in the cloud's frame
        k_components: Mixture components per box
        gamma: Heatmap binarization threshold
        geometry: Heatmap grid placement
        use_ground_removal: AND the result with the foreground mask
        segmenter: Ground segmenter to use
        num_classes: Number of heatmap class channels
        workers: Threads for the points-in-boxes query
        timer: Optional StageTimer collecting stage durations

    Returns:
        The final RoI mask
    """
    if not boxes:
        return RoiMask.full(len(cloud), False)
    heatmap = roi_heatmap(cloud, boxes, k_components, geometry, num_classes, workers, timer)
    mask_y = mask_from_grid(cloud, binarize_heatmap(heatmap, gamma), heatmap.geometry)
    return compose_roi(mask_y, _foreground(cloud, use_ground_removal, segmenter, timer))


def roi_heatmap(cloud: PointCloud, boxes: Sequence[OrientedBox],
                k_components: int = DEFAULT_K_COMPONENTS,
                geometry: Optional[GridGeometry] = None, num_classes: int = NUM_CLASSES,
                workers: int = 1, timer: Optional[StageTimer] = None) -> RoiHeatmap:
    """Per-class heatmap rasterized from the mixtures of a cloud's boxes."""
    gmms = fit_box_gmms(cloud, boxes, k_components, workers, timer)
    with log_timing("heatmap rasterization", timer):
        return rasterize_heatmap(gmms, geometry, num_classes)


def naive_roi_from_boxes(cloud: PointCloud, boxes: Sequence[OrientedBox],
                         use_ground_removal: bool = True,
                         segmenter: Optional[GroundSegmenter] = None,
                         workers: int = 1, timer: Optional[StageTimer] = None) -> RoiMask:
    """
    Baseline RoI mask: points inside any box, AND the foreground mask.
    """
    inside = np.zeros(len(cloud), dtype=bool)
    for indices in points_in_boxes(cloud, boxes, workers=workers, timer=timer):
        inside[indices] = True
    return compose_roi(RoiMask(inside), _foreground(cloud, use_ground_removal, segmenter, timer))


class RoiDetector:
    """
    RoI detection with fixed parameters.

    Attributes:
        k_components: Mixture components per box
        gamma: Binarization threshold
        geometry: Heatmap grid placement
        segmenter: Ground segmenter
        propagation_radius: Matching radius used by ``propagate``
        use_ground_removal: AND masks with the foreground mask
        detector: "gmm" or "naive"
    """

    def __init__(self, k_components: int = DEFAULT_K_COMPONENTS, gamma: float = DEFAULT_GAMMA,
                 geometry: Optional[GridGeometry] = None,
                 segmenter: Optional[GroundSegmenter] = None,
                 propagation_radius: float = DEFAULT_PROPAGATION_RADIUS,
                 use_ground_removal: bool = True, detector: str = "gmm",
                 num_classes: int = NUM_CLASSES, workers: int = 1):
        if detector not in ("gmm", "naive"):
            raise UsageError(f"Unknown detector {detector!r}")
        self.k_components = k_components
        self.gamma = gamma
        self.geometry = geometry or GridGeometry()
        self.segmenter = segmenter or GroundSegmenter()
        self.propagation_radius = propagation_radius
        self.use_ground_removal = use_ground_removal
        self.detector = detector
        self.num_classes = num_classes
        self.workers = workers
        self.timer = StageTimer()

    @classmethod
    def from_config(cls, config) -> "RoiDetector":
        """Create a detector from a RunConfig."""
        return cls(k_components=config.k_components, gamma=config.gamma, geometry=config.grid,
                   propagation_radius=config.propagation_radius,
                   use_ground_removal=config.use_ground_removal, detector=config.detector,
                   workers=config.workers)

    def detect(self, cloud: PointCloud, boxes: Sequence[OrientedBox]) -> RoiMask:
        """RoI mask of a key frame."""
        if self.detector == "naive":
            return naive_roi_from_boxes(cloud, boxes, self.use_ground_removal,
                                        self.segmenter, self.workers, self.timer)
        return roi_from_boxes(cloud, boxes, self.k_components, self.gamma, self.geometry,
                              self.use_ground_removal, self.segmenter, self.num_classes,
                              self.workers, self.timer)

    def heatmap(self, cloud: PointCloud, boxes: Sequence[OrientedBox]) -> RoiHeatmap:
        """Heatmap of a key frame (before binarization)."""
        return roi_heatmap(cloud, boxes, self.k_components, self.geometry,
                           self.num_classes, self.workers, self.timer)

    def propagate(self, mask: RoiMask, source: PointCloud, target: PointCloud) -> RoiMask:
        """Carry a mask between clouds using their own poses."""
        with log_timing("mask propagation", self.timer):
            return propagate_mask(mask, source, source.pose, target, target.pose,
                                  self.propagation_radius)

    def detect_sequence(self, clouds: Sequence[PointCloud],
                        boxes: Sequence[Optional[Sequence[OrientedBox]]],
                        stride: int = DEFAULT_PROPAGATION_STRIDE) -> List[RoiMask]:
        """
        RoI masks of a sequence.

        Frames whose position is a multiple of ``stride`` are detected from
        their boxes; every other frame receives the mask of the latest key
        frame through propagation.

        Args:
            clouds: Frames in order
            boxes: Boxes per frame (only key frames need them)
            stride: Key frame spacing S

        Returns:
            One mask per frame

        Raises:
            DataError: If a key frame has no boxes
        """
        if stride < 1:
            raise UsageError(f"Propagation stride must be >= 1, got {stride}")
        if len(boxes) != len(clouds):
            raise DataError(f"Got boxes for {len(boxes)} of {len(clouds)} frames")
        masks: List[RoiMask] = []
        key_cloud, key_mask = None, None
        for position, cloud in enumerate(clouds):
            if position % stride == 0:
                if boxes[position] is None:
                    raise DataError(f"Key frame {position} has no boxes")
                key_cloud, key_mask = cloud, self.detect(cloud, boxes[position])
                masks.append(key_mask)
                logger.info(f"Frame {position}: detected {key_mask.count} RoI points")
            else:
                mask = self.propagate(key_mask, key_cloud, cloud)
                masks.append(mask)
                logger.debug(f"Frame {position}: propagated {mask.count} RoI points")
            if masks[-1].count == 0 and len(cloud):
                logger.warning(f"Frame {position} has an empty RoI mask")
        return masks
