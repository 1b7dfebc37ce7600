"""
Test cases for cloud, box, mask and label files.
"""

import shutil
import tempfile
import unittest
from pathlib import Path

import numpy as np

from src.models.errors import DataError
from src.models.geometry import OrientedBox, PointCloud
from src.models.roi import RoiMask
from src.utils.cloud_io import (
    MASK_HEADER, cloud_from_bytes, cloud_from_ply, cloud_to_bytes, cloud_to_ply, mask_from_bytes,
    mask_to_bytes, read_boxes, read_cloud, read_labels, read_mask, write_boxes, write_cloud,
    write_labels, write_mask
)
from src.utils.file_utils import atomic_write_json, ensure_file_exists, read_json


class TestCloudFiles(unittest.TestCase):
    """Test cases for cloud serialization."""

    def setUp(self):
        """Set up test fixtures."""
        self.temp_dir = Path(tempfile.mkdtemp())
        rng = np.random.default_rng(53)
        self.cloud = PointCloud(rng.uniform(-50, 50, (100, 3)).astype(np.float32), rng.random(100))

    def tearDown(self):
        """Clean up test fixtures."""
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_binary_layout(self):
        """Test the header and record size of the binary format."""
        data = cloud_to_bytes(self.cloud)
        self.assertEqual(len(data), 5 + 100 * 16)
        self.assertEqual(data[:4], (100).to_bytes(4, "little"))
        self.assertEqual(data[4], 1)
        parsed = cloud_from_bytes(data)
        np.testing.assert_array_equal(parsed.points, self.cloud.points)

    def test_binary_without_intensity(self):
        """Test clouds without intensity."""
        cloud = PointCloud(self.cloud.points)
        parsed = cloud_from_bytes(cloud_to_bytes(cloud))
        self.assertIsNone(parsed.intensity)
        self.assertEqual(len(cloud_to_bytes(cloud)), 5 + 100 * 12)

    def test_binary_size_mismatch(self):
        """Test that truncated binary clouds are rejected."""
        with self.assertRaises(DataError):
            cloud_from_bytes(cloud_to_bytes(self.cloud)[:-3])
        with self.assertRaises(DataError):
            cloud_from_bytes(b"\x01")

    def test_ply(self):
        """Test the ASCII PLY writer and reader."""
        text = cloud_to_ply(self.cloud)
        self.assertTrue(text.startswith("ply\nformat ascii 1.0\nelement vertex 100\n"))
        parsed = cloud_from_ply(text)
        np.testing.assert_allclose(parsed.points, self.cloud.points, rtol=1e-7)
        np.testing.assert_allclose(parsed.intensity, self.cloud.intensity, rtol=1e-7)

    def test_ply_errors(self):
        """Test malformed PLY documents."""
        with self.assertRaises(DataError):
            cloud_from_ply("not ply")
        with self.assertRaises(DataError):
            cloud_from_ply("ply\nformat binary_little_endian 1.0\nelement vertex 0\nend_header\n")
        with self.assertRaises(DataError):
            cloud_from_ply("ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\n"
                           "property float y\nproperty float z\nend_header\n1 2 3\n")

    def test_files_by_suffix(self):
        """Test that the file suffix selects the format."""
        for name in ("frame.bin", "frame.ply"):
            path = write_cloud(self.temp_dir / name, self.cloud)
            np.testing.assert_allclose(read_cloud(path).points, self.cloud.points, rtol=1e-7)
        self.assertTrue((self.temp_dir / "frame.ply").read_text().startswith("ply"))
        with self.assertRaises(DataError):
            read_cloud(self.temp_dir / "missing.bin")


class TestSidecarFiles(unittest.TestCase):
    """Test cases for boxes, masks and labels."""

    def setUp(self):
        """Set up test fixtures."""
        self.temp_dir = Path(tempfile.mkdtemp())

    def tearDown(self):
        """Clean up test fixtures."""
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_boxes(self):
        """Test box files."""
        boxes = [OrientedBox(np.array([1.0, 2.0, 0.5]), 1.9, 4.5, 1.6, 0.3, 0),
                 OrientedBox(np.array([-3.0, 0.0, 0.9]), 0.7, 0.7, 1.8, -2.0, 8)]
        path = write_boxes(self.temp_dir / "boxes.json", boxes)
        self.assertEqual([b.to_dict() for b in read_boxes(path)], [b.to_dict() for b in boxes])
        self.assertEqual(sorted(read_json(path)[0]), ["center", "class_id", "size", "yaw"])
        atomic_write_json(self.temp_dir / "bad.json", {"center": [0, 0, 0]})
        with self.assertRaises(DataError):
            read_boxes(self.temp_dir / "bad.json")

    def test_mask_runs(self):
        """Test the run-length layout of a mask."""
        data = mask_to_bytes(RoiMask([True, True, False, True]))
        runs = np.frombuffer(data, "<u4", offset=MASK_HEADER.size)
        np.testing.assert_array_equal(runs, [0, 2, 1, 1])
        self.assertEqual(mask_from_bytes(data), RoiMask([True, True, False, True]))

    def test_mask_files(self):
        """Test mask files of random, empty and full masks."""
        rng = np.random.default_rng(54)
        for mask in (RoiMask(rng.random(1000) < 0.2), RoiMask.full(0), RoiMask.full(7, True),
                     RoiMask.full(7, False)):
            path = write_mask(self.temp_dir / "frame.rmsk", mask)
            self.assertEqual(read_mask(path), mask)

    def test_mask_errors(self):
        """Test corrupt mask files."""
        data = mask_to_bytes(RoiMask([True, False, False]))
        with self.assertRaises(DataError):
            mask_from_bytes(b"XXXX" + data[4:])
        with self.assertRaises(DataError):
            mask_from_bytes(data[:-4])
        with self.assertRaises(DataError):
            mask_from_bytes(data[:4] + (5).to_bytes(4, "little") + data[8:])

    def test_labels(self):
        """Test label files."""
        labels = np.array([-1, -1, 0, 2, 2])
        path = write_labels(self.temp_dir / "labels.npy", labels)
        np.testing.assert_array_equal(read_labels(path), labels)

    def test_file_helpers(self):
        """Test the path helpers."""
        (self.temp_dir / "c.txt").write_text("")
        path = atomic_write_json(self.temp_dir / "sub" / "doc.json", {"b": 1, "a": [1, 2]})
        self.assertEqual(read_json(path), {"a": [1, 2], "b": 1})
        self.assertEqual([p.name for p in path.parent.iterdir()], ["doc.json"])
        with self.assertRaises(DataError):
            ensure_file_exists(self.temp_dir)
        with self.assertRaises(DataError):
            read_json(self.temp_dir / "c.txt")


if __name__ == '__main__':
    unittest.main()
