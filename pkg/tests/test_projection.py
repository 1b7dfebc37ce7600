"""
Test cases for orthographic projection and reconstruction.
"""

import unittest

import numpy as np

from src.codec.projection import plane_coordinates, project, reconstruct
from src.models.codec import DepthImage, PlaneConfig
from src.models.errors import DataError
from src.models.geometry import PointCloud

SMALL_PLANE = PlaneConfig(origin=(-12.7, -12.7, 10.0), width=128, height=128)


class TestProject(unittest.TestCase):
    """Test cases for project."""

    def setUp(self):
        """Set up test fixtures."""
        self.plane = SMALL_PLANE
        self.rng = np.random.default_rng(6)

    def test_point_at_origin(self):
        """Test that a point at the plane origin lands on pixel (0, 0) at the offset."""
        image, maps, dropped = project(PointCloud(np.array([[-12.7, -12.7, 10.0]])), self.plane)
        self.assertEqual(image.occupied_count, 1)
        self.assertTrue(image.occupancy[0, 0])
        self.assertEqual(int(image.depth[0, 0]), self.plane.depth_offset)
        self.assertEqual(maps.point_to_pixel.tolist(), [0])
        self.assertEqual(dropped.size, 0)

    def test_pixels_centred_on_lattice(self):
        """Test that a pixel spans half a pitch on either side of its lattice point."""
        pitch = self.plane.pixel_pitch
        offsets = np.array([4.51, 5.0, 5.49, 5.51])
        points = np.column_stack([-12.7 + pitch * offsets, np.full(4, -12.7 + pitch * 3.0), np.full(4, 9.0)])
        cols, rows, _ = plane_coordinates(points, self.plane)
        self.assertEqual(cols.tolist(), [5, 5, 5, 6])
        self.assertEqual(rows.tolist(), [3, 3, 3, 3])
        image, _, _ = project(PointCloud(points[:1]), self.plane)
        lifted = reconstruct(image)
        np.testing.assert_allclose(lifted.points[0, :2], [-12.7 + pitch * 5.0, -12.7 + pitch * 3.0], atol=1e-12)

    def test_nearest_wins(self):
        """Test that the point nearest to the plane keeps the pixel."""
        points = np.array([[0.1, 0.1, 8.0], [0.1, 0.1, 9.0]])
        image, maps, dropped = project(PointCloud(points), self.plane)
        self.assertEqual(image.occupied_count, 1)
        pixel = maps.point_to_pixel[1]
        self.assertEqual(maps.point_to_pixel[0], pixel)
        self.assertEqual(int(image.depth.reshape(-1)[pixel]), 640)
        self.assertEqual(dropped.tolist(), [0])
        self.assertEqual(maps.dropped.tolist(), [True, False])

    def test_tie_goes_to_lowest_index(self):
        """Test that equal depths keep the first point."""
        points = np.array([[0.1, 0.1, 0.0], [0.11, 0.1, 0.0]])
        _, maps, dropped = project(PointCloud(points), self.plane)
        self.assertEqual(dropped.tolist(), [1])

    def test_round_trip_bound(self):
        """Test lateral and depth errors of kept points after reconstruction."""
        points = np.column_stack([self.rng.uniform(-12.0, 12.0, (3000, 2)), self.rng.uniform(-2.0, 3.0, 3000)])
        image, maps, _ = project(PointCloud(points), self.plane)
        rebuilt = reconstruct(image, maps)
        self.assertEqual(len(rebuilt), image.occupied_count)

        occupied = np.flatnonzero(image.occupancy.reshape(-1))
        kept = np.flatnonzero(~maps.dropped & (maps.point_to_pixel >= 0))
        rows = np.searchsorted(occupied, maps.point_to_pixel[kept])
        error = np.abs(rebuilt.points[rows] - points[kept])
        self.assertTrue(np.all(error[:, :2] <= 0.5 * self.plane.pixel_pitch + 1e-9))
        self.assertTrue(np.all(error[:, 2] <= 0.5 * self.plane.depth_scale + 1e-9))

    def test_grid_aligned_exact(self):
        """Test that points on pixel centers and depth quanta come back exactly."""
        cols = self.rng.choice(128, 50, replace=False)
        rows = self.rng.choice(128, 50, replace=False)
        units = self.rng.integers(0, 8000, 50)
        points = np.column_stack([-12.7 + 0.2 * cols, -12.7 + 0.2 * rows, 10.0 - units * self.plane.depth_scale])
        image, maps, _ = project(PointCloud(points), self.plane)
        rebuilt = reconstruct(image, maps)
        order = np.argsort(rows * 128 + cols)
        np.testing.assert_allclose(rebuilt.points, points[order], atol=1e-9)

    def test_outside_footprint(self):
        """Test the handling of points outside the footprint."""
        points = np.array([[0.0, 0.0, 0.0], [100.0, 0.0, 0.0], [0.0, 0.0, 200.0]])
        image, maps, dropped = project(PointCloud(points), self.plane)
        self.assertEqual(maps.point_to_pixel[1:].tolist(), [-1, -1])
        self.assertEqual(maps.outside_count, 2)
        self.assertEqual(dropped.size, 0)
        with self.assertRaises(DataError):
            project(PointCloud(points[1:]), self.plane)

    def test_empty_cloud(self):
        """Test that an empty cloud cannot be projected."""
        with self.assertRaises(DataError):
            project(PointCloud(np.zeros((0, 3))), self.plane)

    def test_macroblock_map(self):
        """Test the fixed 16x16 tiling."""
        _, maps, _ = project(PointCloud(np.zeros((1, 3))), self.plane)
        tiling = maps.pixel_to_macroblock.reshape(128, 128)
        self.assertEqual(tiling[0, 0], 0)
        self.assertEqual(tiling[15, 15], 0)
        self.assertEqual(tiling[0, 16], 1)
        self.assertEqual(tiling[16, 0], 8)
        self.assertEqual(tiling.max(), 63)


class TestReconstruct(unittest.TestCase):
    """Test cases for reconstruct."""

    def test_empty_occupancy(self):
        """Test that an empty image gives an empty cloud."""
        cloud = reconstruct(DepthImage.empty(SMALL_PLANE))
        self.assertEqual(len(cloud), 0)

    def test_single_pixel_at_origin(self):
        """Test that pixel (0, 0) at the offset lifts to the plane origin."""
        image = DepthImage.empty(SMALL_PLANE)
        image.occupancy[0, 0] = True
        cloud = reconstruct(image)
        np.testing.assert_allclose(cloud.points, [[-12.7, -12.7, 10.0]])

    def test_raster_order(self):
        """Test that points come out in raster order."""
        image = DepthImage.empty(SMALL_PLANE)
        image.occupancy[3, 1] = True
        image.occupancy[0, 5] = True
        cloud = reconstruct(image)
        np.testing.assert_allclose(cloud.points[:, :2], [[-12.7 + 1.0, -12.7], [-12.7 + 0.2, -12.7 + 0.6]])


if __name__ == '__main__':
    unittest.main()
