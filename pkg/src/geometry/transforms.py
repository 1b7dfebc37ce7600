"""
Rigid transforms of point clouds.
"""

import numpy as np

from ..models.geometry import PointCloud, Pose


def transform_cloud(cloud: PointCloud, pose: Pose) -> PointCloud:
    """
    Apply a rigid transform to every point of a cloud.

    Point order, intensities, frame index and the cloud's own pose are kept.

    Args:
        cloud: Source cloud
        pose: Transform mapping p to R @ p + t

    Returns:
        The transformed cloud
    """
    intensity = None if cloud.intensity is None else cloud.intensity.copy()
    return PointCloud(pose.apply(cloud.points), intensity, cloud.frame_index, cloud.pose)


def relative_pose(source_pose: Pose, target_pose: Pose) -> Pose:
    """
    Transform taking source-frame coordinates into target-frame coordinates.

    Both poses map their sensor frame into the shared world frame.
    """
    return target_pose.inverse().compose(source_pose)
