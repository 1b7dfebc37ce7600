"""
Synthetic driving-like scenes.

A static world is built from a ground surface and a set of boxed objects
whose interior points come from planted Gaussian mixtures. The sensor moves
along a constant-speed, constant-yaw-rate trajectory and every frame is the
world seen from the sensor pose, cropped to the sensor range. All randomness
derives from the scene seed, so the same seed always yields the same scene.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..models.errors import UsageError
from ..models.geometry import OrientedBox, PointCloud, Pose

logger = logging.getLogger(__name__)

# Class name -> (class id, (width, length, height) in meters).
CLASS_CATALOG: Dict[str, Tuple[int, Tuple[float, float, float]]] = {
    "car": (0, (1.9, 4.5, 1.6)),
    "truck": (1, (2.5, 7.0, 3.0)),
    "barrier": (5, (2.0, 0.5, 1.0)),
    "bicycle": (7, (0.7, 1.8, 1.6)),
    "pedestrian": (8, (0.7, 0.7, 1.8)),
}

PLACEMENT_ATTEMPTS = 1000


@dataclass(frozen=True)
class SceneParams:
    """
    Synthetic scene parameters.

    Attributes:
        num_frames: Frames in the sequence
        num_objects: Boxed objects in the world
        ground_points: Ground points in the world
        ground_radius: Outer radius of the ground disc in meters
        min_ground_radius: Inner radius of the ground disc
        points_per_object: Points sampled inside each box
        planted_components: Mixture components per object
        object_min_range: Minimum distance of object centers from the start pose
        object_max_range: Maximum distance of object centers from the start pose
        ground_slope_deg: Ground slope along x, in degrees
        noise: Standard deviation of the ground height noise in meters
        frame_jitter: Per-frame measurement noise in meters
        clearance: Object points stay this far above the box bottom
        ego_speed: Sensor speed in m/s
        yaw_rate: Sensor yaw rate in rad/s
        frame_rate: Frames per second
        sensor_range: Horizontal range of each frame in meters
        classes: Object classes drawn uniformly from the catalog
    """
    num_frames: int = 1
    num_objects: int = 6
    ground_points: int = 20000
    ground_radius: float = 45.0
    min_ground_radius: float = 2.0
    points_per_object: int = 600
    planted_components: int = 2
    object_min_range: float = 6.0
    object_max_range: float = 30.0
    ground_slope_deg: float = 0.0
    noise: float = 0.02
    frame_jitter: float = 0.01
    clearance: float = 0.3
    ego_speed: float = 5.0
    yaw_rate: float = 0.0
    frame_rate: float = 20.0
    sensor_range: float = 50.0
    classes: Tuple[str, ...] = ("car", "truck", "pedestrian", "bicycle", "barrier")

    def validate(self) -> "SceneParams":
        """
        Check parameter ranges.

        Raises:
            UsageError: If a parameter is invalid
        """
        if self.num_frames < 1:
            raise UsageError(f"num_frames must be >= 1, got {self.num_frames}")
        if self.num_objects < 0 or self.ground_points < 0 or self.points_per_object < 1:
            raise UsageError("Object and point counts must be non-negative (points_per_object >= 1)")
        if self.planted_components < 1:
            raise UsageError("planted_components must be >= 1")
        if not 0 <= self.min_ground_radius < self.ground_radius:
            raise UsageError("Ground radii must satisfy 0 <= min < max")
        if not 0 <= self.object_min_range <= self.object_max_range:
            raise UsageError("Object ranges must satisfy 0 <= min <= max")
        if min(self.noise, self.frame_jitter, self.clearance) < 0:
            raise UsageError("Noise levels and clearance must be non-negative")
        if abs(self.ground_slope_deg) >= 45:
            raise UsageError("Ground slope must stay below 45 degrees")
        if self.frame_rate <= 0 or self.sensor_range <= 0:
            raise UsageError("Frame rate and sensor range must be positive")
        unknown = set(self.classes) - set(CLASS_CATALOG)
        if unknown or not self.classes:
            raise UsageError(f"Unknown object classes {sorted(unknown)}; known: {sorted(CLASS_CATALOG)}")
        for name in self.classes:
            height = CLASS_CATALOG[name][1][2]
            if self.clearance >= height:
                raise UsageError(f"Clearance {self.clearance} leaves no room inside a {name}")
        return self

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["classes"] = list(self.classes)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SceneParams":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise UsageError(f"Unknown scene parameters: {sorted(unknown)}")
        values = dict(data)
        if "classes" in values:
            values["classes"] = tuple(values["classes"])
        return cls(**values).validate()


@dataclass
class SyntheticScene:
    """
    A generated scene.

    Attributes:
        seed: Generator seed
        params: Generator parameters
        world_boxes: Object boxes in the world frame
        clouds: Frames in sensor coordinates, carrying their poses
        boxes: Boxes per frame in sensor coordinates
        labels: Object index of every frame point (-1 for ground)
    """
    seed: int
    params: SceneParams
    world_boxes: List[OrientedBox]
    clouds: List[PointCloud] = field(default_factory=list)
    boxes: List[List[OrientedBox]] = field(default_factory=list)
    labels: List[np.ndarray] = field(default_factory=list)


def ground_height(params: SceneParams, x: np.ndarray) -> np.ndarray:
    """Height of the noiseless ground surface."""
    return math.tan(math.radians(params.ground_slope_deg)) * np.asarray(x)


def _place_objects(params: SceneParams, rng: np.random.Generator) -> List[OrientedBox]:
    """Non-overlapping boxes standing on the ground."""
    boxes: List[OrientedBox] = []
    footprints: List[Tuple[float, float, float]] = []
    for _ in range(params.num_objects):
        name = params.classes[int(rng.integers(len(params.classes)))]
        class_id, (width, length, height) = CLASS_CATALOG[name]
        reach = 0.5 * math.hypot(width, length) + 0.5
        for _ in range(PLACEMENT_ATTEMPTS):
            radius = rng.uniform(params.object_min_range, params.object_max_range)
            angle = rng.uniform(-math.pi, math.pi)
            x, y = radius * math.cos(angle), radius * math.sin(angle)
            if all(math.hypot(x - fx, y - fy) > reach + fr for fx, fy, fr in footprints):
                break
        else:
            raise UsageError(f"Cannot place {params.num_objects} objects without overlap")
        yaw = rng.uniform(-math.pi, math.pi)
        z = float(ground_height(params, x)) + 0.5 * height
        boxes.append(OrientedBox(np.array([x, y, z]), width, length, height, yaw, class_id))
        footprints.append((x, y, reach))
    return boxes


def sample_object_points(box: OrientedBox, params: SceneParams,
                         rng: np.random.Generator) -> np.ndarray:
    """
    Points inside a box drawn from a planted mixture.

    Components have uniform weights, means spread over the inner half of the
    box and standard deviations of 0.2 times the box dimensions. Samples
    outside the box or below the clearance are rejected.

    Returns:
        (points_per_object, 3) points in the world frame
    """
    size = box.size
    half = 0.5 * size
    count = params.planted_components
    means = np.column_stack([
        rng.uniform(-0.25, 0.25, count) * size[0],
        rng.uniform(-0.25, 0.25, count) * size[1],
        -half[2] + params.clearance + rng.uniform(0.3, 0.7, count) * (size[2] - params.clearance),
    ])
    sigma = 0.2 * size

    accepted: List[np.ndarray] = []
    total = 0
    while total < params.points_per_object:
        batch = 2 * params.points_per_object
        components = rng.integers(count, size=batch)
        local = means[components] + rng.normal(size=(batch, 3)) * sigma
        inside = (np.abs(local[:, :2]) <= half[:2]).all(axis=1) \
            & (local[:, 2] >= -half[2] + params.clearance) & (local[:, 2] <= half[2])
        accepted.append(local[inside])
        total += int(inside.sum())
    local = np.concatenate(accepted)[:params.points_per_object]
    return local @ box.rotation.T + box.center


def _sample_ground(params: SceneParams, boxes: List[OrientedBox],
                   rng: np.random.Generator) -> np.ndarray:
    """Ground points with density falling off as 1/r, minus the box footprints."""
    radius = rng.uniform(params.min_ground_radius, params.ground_radius, params.ground_points)
    angle = rng.uniform(-math.pi, math.pi, params.ground_points)
    x, y = radius * np.cos(angle), radius * np.sin(angle)
    z = ground_height(params, x) + rng.normal(0.0, params.noise, params.ground_points)
    points = np.column_stack([x, y, z])
    keep = np.ones(points.shape[0], dtype=bool)
    for box in boxes:
        local = (points[:, :2] - box.center[:2]) @ box.rotation[:2, :2]
        keep &= ~(np.abs(local) <= 0.5 * box.size[:2]).all(axis=1)
    return points[keep]


def ego_poses(params: SceneParams) -> List[Pose]:
    """Sensor-to-world poses of a constant-speed, constant-yaw-rate drive."""
    poses = []
    position = np.zeros(3)
    dt = 1.0 / params.frame_rate
    for t in range(params.num_frames):
        yaw = params.yaw_rate * t * dt
        position = position.copy()
        position[2] = float(ground_height(params, position[0]))
        poses.append(Pose.from_yaw(yaw, position))
        position[:2] += params.ego_speed * dt * np.array([math.cos(yaw), math.sin(yaw)])
    return poses


def generate_scene(seed: int = 0, params: Optional[SceneParams] = None) -> SyntheticScene:
    """
    Generate a synthetic scene.

    Args:
        seed: Scene seed
        params: Generator parameters

    Returns:
        The scene with per-frame clouds, boxes and labels
    """
    params = (params or SceneParams()).validate()
    rng = np.random.default_rng(seed)
    world_boxes = _place_objects(params, rng)
    object_points = [sample_object_points(box, params, rng) for box in world_boxes]
    ground = _sample_ground(params, world_boxes, rng)

    world = np.concatenate([ground] + object_points) if object_points else ground
    labels = np.concatenate([np.full(ground.shape[0], -1, dtype=np.int64)]
                            + [np.full(p.shape[0], k, dtype=np.int64) for k, p in enumerate(object_points)])
    intensity = np.concatenate([rng.uniform(0.05, 0.3, ground.shape[0])]
                               + [rng.uniform(0.4, 0.9, p.shape[0]) for p in object_points])

    scene = SyntheticScene(seed, params, world_boxes)
    for t, pose in enumerate(ego_poses(params)):
        frame_rng = np.random.default_rng([seed, t])
        local = pose.inverse().apply(world)
        visible = np.hypot(local[:, 0], local[:, 1]) <= params.sensor_range
        local = local[visible] + frame_rng.normal(0.0, params.frame_jitter, (int(visible.sum()), 3))
        scene.clouds.append(PointCloud(local, intensity[visible], t, pose))
        scene.labels.append(labels[visible])
        scene.boxes.append([box.transformed(pose.inverse()) for box in world_boxes])
    logger.info(f"Generated scene {seed}: {len(world_boxes)} objects, {world.shape[0]} world points, "
                f"{params.num_frames} frames")
    return scene
