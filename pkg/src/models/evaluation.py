"""
Evaluation model definitions.

This module contains rate samples, metric-bitrate curves and the per-scene
inputs of an evaluation sweep.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from .errors import DataError
from .geometry import PointCloud
from .roi import RoiMask


@dataclass(frozen=True)
class RateSample:
    """
    One point of a metric-bitrate curve.

    Attributes:
        bitrate: Megabits per second
        value: Metric value
    """
    bitrate: float
    value: float

    def __post_init__(self):
        if not np.isfinite(self.bitrate) or self.bitrate <= 0:
            raise DataError(f"Bitrate must be positive, got {self.bitrate}")
        if not np.isfinite(self.value):
            raise DataError(f"Metric value must be finite, got {self.value}")


@dataclass(frozen=True)
class RateCurve:
    """
    Piecewise-linear metric-bitrate curve.

    Attributes:
        samples: Samples strictly increasing in bitrate
        label: Optional name used in reports
    """
    samples: Tuple[RateSample, ...]
    label: str = ""

    def __post_init__(self):
        samples = tuple(self.samples)
        object.__setattr__(self, "samples", samples)
        bitrates = [s.bitrate for s in samples]
        if any(later <= earlier for earlier, later in zip(bitrates, bitrates[1:])):
            raise DataError("Curve samples must be strictly increasing in bitrate")

    @classmethod
    def from_samples(cls, samples: Iterable[RateSample], label: str = "") -> "RateCurve":
        """
        Build a curve from unordered samples.

        Samples sharing a bitrate are merged into one whose value is their mean.
        """
        grouped: Dict[float, List[float]] = {}
        for sample in samples:
            grouped.setdefault(sample.bitrate, []).append(sample.value)
        merged = [RateSample(rate, float(np.mean(values))) for rate, values in sorted(grouped.items())]
        return cls(tuple(merged), label)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def bitrates(self) -> np.ndarray:
        return np.array([s.bitrate for s in self.samples])

    @property
    def values(self) -> np.ndarray:
        return np.array([s.value for s in self.samples])

    @property
    def domain(self) -> Tuple[float, float]:
        """Smallest and largest bitrate."""
        if not self.samples:
            raise DataError("Empty curve has no domain")
        return self.samples[0].bitrate, self.samples[-1].bitrate

    def interpolate(self, bitrates: np.ndarray) -> np.ndarray:
        """
        Linearly interpolated metric values.

        Raises:
            DataError: If a bitrate lies outside the curve's domain
        """
        bitrates = np.asarray(bitrates, dtype=np.float64)
        low, high = self.domain
        if bitrates.size and (bitrates.min() < low or bitrates.max() > high):
            raise DataError(f"Cannot extrapolate outside [{low}, {high}]")
        return np.interp(bitrates, self.bitrates, self.values)


@dataclass
class EvalScene:
    """
    One scene of an evaluation sweep.

    Attributes:
        name: Scene identifier
        clouds: Frames in order
        roi_masks: Masks driving the RoI encoder, one per frame
        eval_masks: Reference RoI used by the RoI-restricted error, one per frame
        frame_rate: Frames per second
        detector_masks: Masks of further detector variants keyed by variant name
        point_classes: Per-frame object class id of every point (-1 for none)
    """
    name: str
    clouds: List[PointCloud]
    roi_masks: List[RoiMask]
    eval_masks: Optional[List[RoiMask]] = None
    frame_rate: float = 20.0
    detector_masks: Dict[str, List[RoiMask]] = field(default_factory=dict)
    point_classes: Optional[List[np.ndarray]] = None

    def __post_init__(self):
        if not self.clouds:
            raise DataError(f"Scene {self.name} has no frames")
        if self.eval_masks is None:
            self.eval_masks = list(self.roi_masks)
        for masks in [self.roi_masks, self.eval_masks] + list(self.detector_masks.values()):
            if len(masks) != len(self.clouds):
                raise DataError(f"Scene {self.name}: {len(masks)} masks for {len(self.clouds)} frames")
            for cloud, mask in zip(self.clouds, masks):
                if len(mask) != len(cloud):
                    raise DataError(f"Scene {self.name}: mask length {len(mask)} != {len(cloud)} points")
        if self.point_classes is not None:
            if len(self.point_classes) != len(self.clouds):
                raise DataError(f"Scene {self.name}: {len(self.point_classes)} class arrays "
                                f"for {len(self.clouds)} frames")
            self.point_classes = [np.asarray(c, dtype=np.int64) for c in self.point_classes]
            for cloud, classes in zip(self.clouds, self.point_classes):
                if classes.shape != (len(cloud),):
                    raise DataError(f"Scene {self.name}: {classes.size} class ids for {len(cloud)} points")

    def masks_for(self, detector: str = "") -> List[RoiMask]:
        """RoI masks of a detector variant; the empty name selects ``roi_masks``."""
        if not detector:
            return self.roi_masks
        if detector not in self.detector_masks:
            raise DataError(f"Scene {self.name} has no masks for detector {detector!r}")
        return self.detector_masks[detector]
