"""
Test cases for RoI macroblock indicators and QP maps.
"""

import unittest

import numpy as np

from src.codec.projection import project
from src.codec.qp import build_qp_map, solve_indicator
from src.models.codec import PlaneConfig
from src.models.errors import DataError, UsageError
from src.models.geometry import PointCloud
from src.models.roi import RoiMask


class TestSolveIndicator(unittest.TestCase):
    """Test cases for solve_indicator."""

    def setUp(self):
        """Set up test fixtures."""
        self.rng = np.random.default_rng(23)
        self.plane = PlaneConfig(origin=(-12.7, -12.7, 10.0), width=128, height=128)
        points = np.column_stack([self.rng.uniform(-14.0, 14.0, (4000, 2)), self.rng.uniform(-1.0, 2.0, 4000)])
        self.cloud = PointCloud(points)
        _, self.maps, _ = project(self.cloud, self.plane)

    def test_empty_mask(self):
        """Test that an empty mask marks no macroblock."""
        indicator = solve_indicator(RoiMask.full(len(self.cloud), False), self.maps)
        self.assertEqual(indicator.shape, (8, 8))
        self.assertFalse(indicator.any())

    def test_single_point(self):
        """Test that one RoI point marks exactly its macroblock."""
        inside = int(np.flatnonzero(self.maps.point_to_pixel >= 0)[0])
        bits = np.zeros(len(self.cloud), dtype=bool)
        bits[inside] = True
        indicator = solve_indicator(RoiMask(bits), self.maps)
        self.assertEqual(int(indicator.sum()), 1)
        pixel = self.maps.point_to_pixel[inside]
        row, col = divmod(int(pixel), 128)
        self.assertTrue(indicator[row // 16, col // 16])

    def test_random_mask(self):
        """Test against a per-point lookup."""
        mask = RoiMask(self.rng.random(len(self.cloud)) < 0.01)
        expected = np.zeros((8, 8), dtype=bool)
        for point in np.flatnonzero(mask.bits):
            pixel = self.maps.point_to_pixel[point]
            if pixel >= 0:
                row, col = divmod(int(pixel), 128)
                expected[row // 16, col // 16] = True
        np.testing.assert_array_equal(solve_indicator(mask, self.maps), expected)

    def test_dropped_points_count(self):
        """Test that a dropped RoI point still marks its macroblock."""
        dropped = np.flatnonzero(self.maps.dropped)
        self.assertGreater(dropped.size, 0)
        bits = np.zeros(len(self.cloud), dtype=bool)
        bits[dropped[0]] = True
        self.assertEqual(int(solve_indicator(RoiMask(bits), self.maps).sum()), 1)

    def test_length_mismatch(self):
        """Test that a misaligned mask is rejected."""
        with self.assertRaises(DataError):
            solve_indicator(RoiMask.full(3), self.maps)


class TestBuildQpMap(unittest.TestCase):
    """Test cases for build_qp_map."""

    def test_all_roi(self):
        """Test that an all-RoI indicator gives a uniform q_r map."""
        qp_map = build_qp_map(np.ones((4, 4), dtype=bool), 20, 45)
        self.assertTrue(qp_map.is_uniform)
        self.assertEqual(int(qp_map.values[0, 0]), 20)

    def test_equal_qps(self):
        """Test that q_r == q_b gives a uniform map."""
        indicator = np.random.default_rng(0).random((4, 4)) < 0.5
        qp_map = build_qp_map(indicator, 30, 30)
        self.assertTrue(qp_map.is_uniform)

    def test_checkerboard(self):
        """Test direct substitution on a checkerboard."""
        indicator = (np.indices((4, 4)).sum(axis=0) % 2) == 0
        qp_map = build_qp_map(indicator, 20, 45)
        np.testing.assert_array_equal(qp_map.values, np.where(indicator, 20, 45))

    def test_qp_out_of_range(self):
        """Test that invalid QPs are rejected."""
        with self.assertRaises(UsageError):
            build_qp_map(np.ones((2, 2), dtype=bool), 20, 52)
        with self.assertRaises(UsageError):
            build_qp_map(np.ones((2, 2), dtype=bool), -1, 45)


if __name__ == '__main__':
    unittest.main()
