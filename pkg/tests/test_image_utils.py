"""
Test cases for heatmap image export.
"""

import shutil
import tempfile
import unittest
from pathlib import Path

import numpy as np
from PIL import Image

from src.models.errors import DataError
from src.models.roi import GridGeometry, RoiHeatmap
from src.utils.file_utils import read_json
from src.utils.image_utils import PGM_MAX, export_heatmap, heatmap_to_image, image_to_heatmap, load_heatmap


class TestHeatmapImages(unittest.TestCase):
    """Test cases for PGM heatmap export."""

    def setUp(self):
        """Set up test fixtures."""
        self.temp_dir = Path(tempfile.mkdtemp())
        self.geometry = GridGeometry(-5.0, -4.0, 0.5, 16, 20)
        rng = np.random.default_rng(61)
        self.heatmap = RoiHeatmap(rng.random((3, 16, 20)), self.geometry)

    def tearDown(self):
        """Clean up test fixtures."""
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_row_order(self):
        """Test that grid row 0 becomes the bottom image row."""
        channel = np.zeros((4, 5))
        channel[0, 2] = 1.0
        raw = np.asarray(heatmap_to_image(channel), dtype=np.int64)
        self.assertEqual(raw[-1, 2], PGM_MAX)
        self.assertEqual(raw[0].sum(), 0)
        np.testing.assert_array_equal(image_to_heatmap(heatmap_to_image(channel)), channel)

    def test_export_files(self):
        """Test the written file list and header."""
        files = export_heatmap(self.heatmap, self.temp_dir, prefix="frame")
        self.assertEqual([p.name for p in files],
                         ["frame_c00.pgm", "frame_c01.pgm", "frame_c02.pgm", "frame.json"])
        self.assertEqual(files[0].read_bytes()[:2], b"P5")
        header = read_json(files[-1])
        self.assertEqual(header["num_classes"], 3)
        self.assertEqual(header["scale"], PGM_MAX)
        self.assertEqual(GridGeometry.from_dict(header["grid"]), self.geometry)

    def test_round_trip(self):
        """Test that loading recovers values within one quantization step."""
        files = export_heatmap(self.heatmap, self.temp_dir)
        loaded = load_heatmap(files[-1])
        self.assertEqual(loaded.geometry, self.geometry)
        self.assertLessEqual(np.abs(loaded.values - self.heatmap.values).max(), 1.0 / PGM_MAX)

    def test_selected_channels(self):
        """Test that unexported channels load as zeros."""
        files = export_heatmap(self.heatmap, self.temp_dir, channels=[1])
        self.assertEqual(len(files), 2)
        loaded = load_heatmap(files[-1])
        self.assertEqual(loaded.values[0].max(), 0.0)
        self.assertGreater(loaded.values[1].max(), 0.0)
        with self.assertRaises(DataError):
            export_heatmap(self.heatmap, self.temp_dir, channels=[3])

    def test_shape_mismatch(self):
        """Test that an image of the wrong size is rejected."""
        files = export_heatmap(self.heatmap, self.temp_dir, channels=[0])
        Image.fromarray(np.zeros((3, 3), dtype=np.int32), mode="I").save(files[0], format="PPM")
        with self.assertRaises(DataError):
            load_heatmap(files[-1])


if __name__ == '__main__':
    unittest.main()
