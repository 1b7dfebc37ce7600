"""
Test cases for poses and rigid cloud transforms.
"""

import math
import unittest

import numpy as np

from src.geometry.transforms import relative_pose, transform_cloud
from src.models.errors import DataError
from src.models.geometry import OrientedBox, PointCloud, Pose


class TestPose(unittest.TestCase):
    """Test cases for the Pose class."""

    def setUp(self):
        """Set up test fixtures."""
        self.pose = Pose.from_yaw(0.8, (1.0, -2.0, 0.5))

    def test_inverse_round_trip(self):
        """Test that a pose composed with its inverse is the identity."""
        identity = self.pose.compose(self.pose.inverse())
        np.testing.assert_allclose(identity.rotation, np.eye(3), atol=1e-12)
        np.testing.assert_allclose(identity.translation, np.zeros(3), atol=1e-12)

    def test_compose_order(self):
        """Test that compose applies the argument first."""
        shift = Pose.from_yaw(0.0, (1.0, 0.0, 0.0))
        turn = Pose.from_yaw(math.pi / 2)
        point = np.zeros((1, 3))
        np.testing.assert_allclose(turn.compose(shift).apply(point), [[0.0, 1.0, 0.0]], atol=1e-12)
        np.testing.assert_allclose(shift.compose(turn).apply(point), [[1.0, 0.0, 0.0]], atol=1e-12)

    def test_invalid_rotation(self):
        """Test that non-orthonormal and reflecting rotations are rejected."""
        with self.assertRaises(DataError):
            Pose(np.diag([1.0, 2.0, 1.0]), np.zeros(3))
        with self.assertRaises(DataError):
            Pose(np.diag([1.0, 1.0, -1.0]), np.zeros(3))

    def test_dict_round_trip(self):
        """Test serialization of a pose."""
        restored = Pose.from_dict(self.pose.to_dict())
        np.testing.assert_array_equal(restored.rotation, self.pose.rotation)
        np.testing.assert_array_equal(restored.translation, self.pose.translation)

    def test_relative_pose(self):
        """Test that the relative pose maps source coordinates into the target frame."""
        target = Pose.from_yaw(-0.3, (4.0, 1.0, 0.0))
        points = np.random.default_rng(2).normal(size=(20, 3))
        world = self.pose.apply(points)
        expected = target.inverse().apply(world)
        np.testing.assert_allclose(relative_pose(self.pose, target).apply(points), expected, atol=1e-12)

    def test_box_transformed(self):
        """Test that a box moves and turns with the pose."""
        box = OrientedBox(np.array([1.0, 0.0, 0.0]), 2.0, 4.0, 1.5, 0.0, 3)
        moved = box.transformed(Pose.from_yaw(math.pi / 2, (0.0, 0.0, 1.0)))
        np.testing.assert_allclose(moved.center, [0.0, 1.0, 1.0], atol=1e-12)
        self.assertAlmostEqual(moved.yaw, math.pi / 2, places=12)
        self.assertEqual(moved.class_id, 3)


class TestTransformCloud(unittest.TestCase):
    """Test cases for transform_cloud."""

    def setUp(self):
        """Set up test fixtures."""
        rng = np.random.default_rng(5)
        self.cloud = PointCloud(rng.uniform(-20.0, 20.0, (500, 3)), rng.uniform(0.0, 1.0, 500), 4)

    def test_identity(self):
        """Test that the identity pose leaves the cloud unchanged."""
        result = transform_cloud(self.cloud, Pose.identity())
        np.testing.assert_array_equal(result.points, self.cloud.points)
        np.testing.assert_array_equal(result.intensity, self.cloud.intensity)
        self.assertEqual(result.frame_index, 4)

    def test_translation(self):
        """Test a pure translation of a single point."""
        cloud = PointCloud(np.zeros((1, 3)))
        result = transform_cloud(cloud, Pose.from_yaw(0.0, (1.0, 0.0, 0.0)))
        np.testing.assert_array_equal(result.points, [[1.0, 0.0, 0.0]])

    def test_round_trip(self):
        """Test that transforming back with the inverse restores the cloud."""
        pose = Pose.from_yaw(1.1, (3.0, -7.0, 2.0))
        restored = transform_cloud(transform_cloud(self.cloud, pose), pose.inverse())
        np.testing.assert_allclose(restored.points, self.cloud.points, rtol=0.0, atol=1e-9)

    def test_distances_preserved(self):
        """Test that pairwise distances survive a rigid transform."""
        pose = Pose.from_yaw(-2.4, (10.0, 5.0, -1.0))
        moved = transform_cloud(self.cloud, pose)
        before = np.linalg.norm(self.cloud.points[:50, None] - self.cloud.points[None, :50], axis=2)
        after = np.linalg.norm(moved.points[:50, None] - moved.points[None, :50], axis=2)
        np.testing.assert_allclose(after, before, rtol=1e-9, atol=1e-9)


if __name__ == '__main__':
    unittest.main()
