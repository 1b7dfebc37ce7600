"""
Geometry model definitions.

This module contains the point cloud container, rigid poses and oriented
bounding boxes shared by every stage of the pipeline. Points are stored as
``(N, 3)`` float64 arrays; a single point is a length-3 array.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence

import numpy as np

from .errors import DataError

# Boxes thinner than this are rejected: their tetrahedra have no volume.
MIN_BOX_DIMENSION = 1e-6

POSE_TOLERANCE = 1e-9


def as_point3(value: Sequence[float]) -> np.ndarray:
    """
    Convert a 3-sequence into a finite float64 point.

    Args:
        value: Three coordinates in meters

    Returns:
        Array of shape (3,)

    Raises:
        DataError: If the value is not three finite numbers
    """
    point = np.asarray(value, dtype=np.float64).reshape(-1)
    if point.shape != (3,):
        raise DataError(f"Expected 3 coordinates, got shape {point.shape}")
    if not np.all(np.isfinite(point)):
        raise DataError(f"Point has non-finite coordinates: {point}")
    return point


def yaw_rotation(yaw: float) -> np.ndarray:
    """Rotation matrix for a rotation of ``yaw`` radians about the z-axis."""
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def wrap_angle(angle: float) -> float:
    """Wrap an angle into [-pi, pi]."""
    wrapped = math.atan2(math.sin(angle), math.cos(angle))
    return wrapped


@dataclass(frozen=True)
class Pose:
    """
    Rigid transform mapping sensor coordinates to world coordinates.

    A point ``p`` is mapped to ``rotation @ p + translation``.

    Attributes:
        rotation: 3x3 orthonormal matrix with determinant +1
        translation: Translation in meters
    """
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        rotation = np.asarray(self.rotation, dtype=np.float64)
        translation = np.asarray(self.translation, dtype=np.float64).reshape(-1)
        if rotation.shape != (3, 3) or translation.shape != (3,):
            raise DataError("Pose needs a 3x3 rotation and a 3-vector translation")
        if not (np.all(np.isfinite(rotation)) and np.all(np.isfinite(translation))):
            raise DataError("Pose contains non-finite values")
        if not np.allclose(rotation.T @ rotation, np.eye(3), rtol=0.0, atol=POSE_TOLERANCE):
            raise DataError("Pose rotation is not orthonormal")
        if abs(np.linalg.det(rotation) - 1.0) > POSE_TOLERANCE:
            raise DataError("Pose rotation has determinant != +1")
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    @classmethod
    def identity(cls) -> "Pose":
        """Create the identity pose."""
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_yaw(cls, yaw: float, translation: Sequence[float] = (0.0, 0.0, 0.0)) -> "Pose":
        """Create a pose rotated by ``yaw`` about z and then translated."""
        return cls(yaw_rotation(yaw), np.asarray(translation, dtype=np.float64))

    def inverse(self) -> "Pose":
        """Return the inverse transform."""
        rotation_t = self.rotation.T
        return Pose(rotation_t, -rotation_t @ self.translation)

    def compose(self, other: "Pose") -> "Pose":
        """
        Compose two poses.

        Args:
            other: Pose applied first

        Returns:
            Pose equivalent to applying ``other`` and then ``self``
        """
        return Pose(self.rotation @ other.rotation,
                    self.rotation @ other.translation + self.translation)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Apply the transform to an (N, 3) array of points."""
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        return points @ self.rotation.T + self.translation

    def to_dict(self) -> Dict[str, Any]:
        """Serialize to a JSON-compatible dictionary."""
        return {
            "rotation": self.rotation.tolist(),
            "translation": self.translation.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Pose":
        """Deserialize from a dictionary produced by ``to_dict``."""
        try:
            return cls(np.asarray(data["rotation"], dtype=np.float64),
                       np.asarray(data["translation"], dtype=np.float64))
        except (KeyError, TypeError, ValueError) as e:
            raise DataError(f"Invalid pose record: {e}") from e


@dataclass
class PointCloud:
    """
    Ordered set of 3D points for one frame.

    Attributes:
        points: (N, 3) coordinates in meters
        intensity: Optional per-point intensity in [0, 1]
        frame_index: Index of the frame within its sequence
        pose: Sensor-to-world pose of the frame
    """
    points: np.ndarray
    intensity: Optional[np.ndarray] = None
    frame_index: int = 0
    pose: Pose = field(default_factory=Pose.identity)

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64)
        if points.size == 0:
            points = points.reshape(0, 3)
        if points.ndim != 2 or points.shape[1] != 3:
            raise DataError(f"Point array must have shape (N, 3), got {points.shape}")
        if not np.all(np.isfinite(points)):
            raise DataError("Point cloud contains non-finite coordinates")
        self.points = points

        if self.intensity is not None:
            intensity = np.asarray(self.intensity, dtype=np.float64).reshape(-1)
            if intensity.shape[0] != points.shape[0]:
                raise DataError(
                    f"Intensity length {intensity.shape[0]} does not match "
                    f"point count {points.shape[0]}")
            if intensity.size and (intensity.min() < 0.0 or intensity.max() > 1.0):
                raise DataError("Intensity values must lie in [0, 1]")
            self.intensity = intensity

        if self.frame_index < 0:
            raise DataError(f"Frame index must be non-negative, got {self.frame_index}")

    def __len__(self) -> int:
        return self.points.shape[0]

    def subset(self, indices: np.ndarray) -> "PointCloud":
        """
        Create a cloud holding only the selected points.

        Args:
            indices: Integer indices or boolean mask

        Returns:
            A new PointCloud with the same frame index and pose
        """
        intensity = None if self.intensity is None else self.intensity[indices]
        return PointCloud(self.points[indices], intensity, self.frame_index, self.pose)


@dataclass(frozen=True)
class OrientedBox:
    """
    3D bounding box rotated about the z-axis.

    The box spans ``width`` along its local x-axis, ``length`` along its local
    y-axis and ``height`` along z. ``yaw`` rotates the local frame into the
    cloud frame.

    Attributes:
        center: Box center in meters
        width: Extent along local x
        length: Extent along local y
        height: Extent along z
        yaw: Rotation about z in radians, wrapped into [-pi, pi]
        class_id: Object class index
    """
    center: np.ndarray
    width: float
    length: float
    height: float
    yaw: float = 0.0
    class_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "center", as_point3(self.center))
        dims = (self.width, self.length, self.height)
        if not all(math.isfinite(d) for d in dims):
            raise DataError(f"Box dimensions must be finite: {dims}")
        if min(dims) <= MIN_BOX_DIMENSION:
            raise DataError(f"Degenerate box dimensions {dims}")
        if not math.isfinite(self.yaw):
            raise DataError("Box yaw must be finite")
        if self.class_id < 0:
            raise DataError(f"Box class id must be non-negative, got {self.class_id}")
        object.__setattr__(self, "width", float(self.width))
        object.__setattr__(self, "length", float(self.length))
        object.__setattr__(self, "height", float(self.height))
        object.__setattr__(self, "yaw", wrap_angle(float(self.yaw)))
        object.__setattr__(self, "class_id", int(self.class_id))

    @property
    def size(self) -> np.ndarray:
        """Dimensions (width, length, height) as an array."""
        return np.array([self.width, self.length, self.height])

    @property
    def rotation(self) -> np.ndarray:
        """Rotation from the box frame to the cloud frame."""
        return yaw_rotation(self.yaw)

    def transformed(self, pose: Pose) -> "OrientedBox":
        """
        Express the box in another frame.

        Only the yaw component of the pose rotation is applied to the box
        orientation; poses used here rotate about z.
        """
        center = pose.apply(self.center)[0]
        heading = pose.rotation @ np.array([math.cos(self.yaw), math.sin(self.yaw), 0.0])
        yaw = math.atan2(heading[1], heading[0])
        return OrientedBox(center, self.width, self.length, self.height, yaw, self.class_id)

    def to_dict(self) -> Dict[str, Any]:
        """Serialize to the JSON box record."""
        return {
            "center": self.center.tolist(),
            "size": [self.width, self.length, self.height],
            "yaw": self.yaw,
            "class_id": self.class_id,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "OrientedBox":
        """
        Parse a JSON box record.

        Raises:
            DataError: If fields are missing or the box is degenerate
        """
        try:
            size = [float(v) for v in data["size"]]
            if len(size) != 3:
                raise ValueError("size must have three entries")
            return cls(np.asarray(data["center"], dtype=np.float64),
                       size[0], size[1], size[2],
                       float(data.get("yaw", 0.0)),
                       int(data.get("class_id", 0)))
        except (KeyError, TypeError, ValueError) as e:
            raise DataError(f"Invalid box record {data!r}: {e}") from e
