"""
Scene model definitions.

A scene is a sequence of frames, each with a cloud file, a sensor pose and
an optional box file. Manifests store paths relative to their own directory.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from .errors import DataError
from .geometry import OrientedBox, PointCloud, Pose


@dataclass
class FrameEntry:
    """
    One frame of a scene manifest.

    Attributes:
        frame_index: Position of the frame in the sequence
        cloud: Cloud file path (relative to the manifest)
        pose: Sensor-to-world pose
        boxes: Box file path, if any
        labels: Per-point object label file (.npy), if any
    """
    frame_index: int
    cloud: str
    pose: Pose = field(default_factory=Pose.identity)
    boxes: Optional[str] = None
    labels: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        data = {"frame_index": self.frame_index, "cloud": self.cloud, "pose": self.pose.to_dict()}
        if self.boxes is not None:
            data["boxes"] = self.boxes
        if self.labels is not None:
            data["labels"] = self.labels
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FrameEntry":
        try:
            pose = Pose.from_dict(data["pose"]) if "pose" in data else Pose.identity()
            return cls(int(data["frame_index"]), str(data["cloud"]), pose,
                       data.get("boxes"), data.get("labels"))
        except (KeyError, TypeError, ValueError) as e:
            raise DataError(f"Invalid frame entry {data!r}: {e}") from e


@dataclass
class SceneManifest:
    """
    Description of one scene on disk.

    Attributes:
        sequence_id: Scene identifier
        frames: Frame entries ordered by frame index
        frame_rate: Frames per second
        seed: Generator seed for synthetic scenes
        params: Generator parameters for synthetic scenes
    """
    sequence_id: str
    frames: List[FrameEntry]
    frame_rate: float = 20.0
    seed: Optional[int] = None
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        indices = [f.frame_index for f in self.frames]
        if any(i < 0 for i in indices):
            raise DataError("Frame indices must be non-negative")
        if any(later <= earlier for earlier, later in zip(indices, indices[1:])):
            raise DataError(f"Frames of {self.sequence_id} are not ordered by frame index")
        if self.frame_rate <= 0:
            raise DataError(f"Frame rate must be positive, got {self.frame_rate}")

    def __len__(self) -> int:
        return len(self.frames)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sequence_id": self.sequence_id,
            "frame_rate": self.frame_rate,
            "seed": self.seed,
            "params": self.params,
            "frames": [f.to_dict() for f in self.frames],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SceneManifest":
        try:
            frames = [FrameEntry.from_dict(f) for f in data["frames"]]
            return cls(str(data["sequence_id"]), frames, float(data.get("frame_rate", 20.0)),
                       data.get("seed"), dict(data.get("params") or {}))
        except (KeyError, TypeError, ValueError) as e:
            raise DataError(f"Invalid scene manifest: {e}") from e


@dataclass
class SceneData:
    """
    A scene loaded into memory.

    Attributes:
        manifest: The scene's manifest
        clouds: One cloud per frame, carrying its frame index and pose
        boxes: Boxes per frame (None when the frame has no box file)
        labels: Per-point object labels per frame (-1 for background), if stored
    """
    manifest: SceneManifest
    clouds: List[PointCloud]
    boxes: List[Optional[List[OrientedBox]]]
    labels: List[Optional[np.ndarray]] = field(default_factory=list)

    @property
    def name(self) -> str:
        return self.manifest.sequence_id

    def __len__(self) -> int:
        return len(self.clouds)
