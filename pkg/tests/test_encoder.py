"""
Test cases for sequence encoding and decoding.
"""

import unittest

import numpy as np

from src.codec.bitstream import read_bitstream, write_bitstream
from src.codec.encoder import SequenceEncoder, decode_sequence, encode_sequence, reconstruct_sequence
from src.codec.projection import project
from src.evaluation.metrics import roi_restricted_error
from src.models.codec import PlaneConfig
from src.models.errors import DataError, UsageError
from src.models.geometry import PointCloud
from src.models.roi import RoiMask

PLANE = PlaneConfig(origin=(-12.7, -12.7, 10.0), width=128, height=128)


def frame_with_object(rng, count=4000):
    """Undulating ground with one raised object; the object points are the RoI."""
    xy = rng.uniform(-12.0, 12.0, (count, 2))
    z = 0.3 * np.sin(0.5 * xy[:, 0]) * np.cos(0.4 * xy[:, 1]) + rng.normal(0.0, 0.05, count)
    on_object = (np.abs(xy[:, 0] - 4.0) < 2.5) & (np.abs(xy[:, 1] - 1.0) < 1.5)
    z[on_object] += 1.0 + 0.4 * rng.random(on_object.sum())
    return PointCloud(np.column_stack([xy, z])), RoiMask(on_object)


class TestEncodeSequence(unittest.TestCase):
    """Test cases for encode_sequence."""

    def setUp(self):
        """Set up test fixtures."""
        rng = np.random.default_rng(37)
        frames = [frame_with_object(rng) for _ in range(2)]
        self.clouds = [cloud for cloud, _ in frames]
        self.masks = [mask for _, mask in frames]

    def test_all_roi_equals_uniform(self):
        """Test that an all-RoI mask with q_r == q_b matches uniform coding."""
        cloud = self.clouds[:1]
        roi = encode_sequence(cloud, [RoiMask.full(len(cloud[0]))], 30, 30, PLANE)
        uniform = encode_sequence(cloud, None, 30, 30, PLANE)
        self.assertEqual(write_bitstream(roi.bitstream), write_bitstream(uniform.bitstream))
        self.assertEqual(roi.total_bits, uniform.total_bits)

    def test_roi_smaller_than_uniform_low(self):
        """Test that RoI coding at (20, 45) is no larger than uniform QP 20."""
        roi = encode_sequence(self.clouds, self.masks, 20, 45, PLANE)
        uniform = encode_sequence(self.clouds, None, 20, 20, PLANE)
        self.assertLessEqual(roi.total_bits, uniform.total_bits)

    def test_roi_error_below_uniform_high(self):
        """Test that RoI points are reconstructed better than at uniform QP 45."""
        roi = encode_sequence(self.clouds, self.masks, 20, 45, PLANE)
        uniform = encode_sequence(self.clouds, None, 20, 45, PLANE)
        roi_clouds = reconstruct_sequence(roi.bitstream)
        uniform_clouds = reconstruct_sequence(uniform.bitstream)
        for cloud, mask, a, b in zip(self.clouds, self.masks, roi_clouds, uniform_clouds):
            self.assertLess(roi_restricted_error(cloud, a, mask), roi_restricted_error(cloud, b, mask))

    def test_accounting(self):
        """Test the reported sizes and indicator matrix."""
        encoded = encode_sequence(self.clouds, self.masks, 20, 45, PLANE, frame_rate=10.0)
        self.assertEqual(encoded.total_bits, 8 * len(write_bitstream(encoded.bitstream)))
        self.assertEqual(encoded.indicator.shape, (PLANE.macroblock_count, 2))
        self.assertTrue(encoded.indicator.any())
        self.assertFalse(encoded.indicator.all())
        self.assertLess(sum(encoded.frame_bits), encoded.total_bits)
        self.assertAlmostEqual(encoded.bitrate_mbps(), encoded.total_bits * 10.0 / 2 / 1e6)
        for segment, column in zip(encoded.bitstream.segments, encoded.indicator.T):
            np.testing.assert_array_equal(segment.qp_map.values.reshape(-1), np.where(column, 20, 45))

    def test_uniform_indicator_empty(self):
        """Test that uniform coding marks no RoI macroblock."""
        encoded = encode_sequence(self.clouds, None, 20, 45, PLANE)
        self.assertFalse(encoded.indicator.any())
        self.assertTrue(all(s.qp_map.is_uniform for s in encoded.bitstream.segments))

    def test_point_map_optional(self):
        """Test that omitting the point map shrinks the stream."""
        with_map = encode_sequence(self.clouds, self.masks, 20, 45, PLANE, store_point_map=True)
        without = encode_sequence(self.clouds, self.masks, 20, 45, PLANE, store_point_map=False)
        self.assertLess(without.total_bits, with_map.total_bits)
        self.assertFalse(read_bitstream(write_bitstream(without.bitstream)).store_point_map)

    def test_errors(self):
        """Test mask count and QP validation."""
        with self.assertRaises(DataError):
            encode_sequence(self.clouds, self.masks[:1], 20, 45, PLANE)
        with self.assertRaises(UsageError):
            encode_sequence(self.clouds, self.masks, 20, 99, PLANE)

    def test_empty_sequence(self):
        """Test that zero frames give a header-only stream."""
        encoded = encode_sequence([], None, 20, 45, PLANE)
        self.assertEqual(encoded.frame_count, 0)
        self.assertEqual(encoded.indicator.shape, (PLANE.macroblock_count, 0))
        self.assertEqual(encoded.bitrate_mbps(), 0.0)


class TestRateDistortion(unittest.TestCase):
    """Test cases for rate and distortion over synthetic corpora."""

    def test_uniform_qp_monotone(self):
        """Test total bits and depth MSE over a 100-frame corpus at uniform QPs."""
        rng = np.random.default_rng(39)
        clouds = [frame_with_object(rng, 1500)[0] for _ in range(100)]
        originals = [project(cloud, PLANE)[0] for cloud in clouds]

        bits, errors = [], []
        for qp in (0, 10, 20, 30, 40, 50):
            encoded = encode_sequence(clouds, None, qp, qp, PLANE)
            decoded = decode_sequence(encoded.bitstream)
            bits.append(encoded.total_bits)
            errors.append(float(np.mean([
                np.mean((image.depth.astype(np.float64) - original.depth)[original.occupancy] ** 2)
                for image, original in zip(decoded, originals)])))
        self.assertTrue(all(a >= b for a, b in zip(bits, bits[1:])), bits)
        self.assertTrue(all(a <= b for a, b in zip(errors, errors[1:])), errors)

    def test_roi_coding_over_scenes(self):
        """Test RoI coding at (20, 45) against both uniform extremes on 50 scenes."""
        rng = np.random.default_rng(40)
        for _ in range(50):
            cloud, mask = frame_with_object(rng, 2000)
            roi = encode_sequence([cloud], [mask], 20, 45, PLANE)
            high = encode_sequence([cloud], None, 45, 45, PLANE)
            low = encode_sequence([cloud], None, 20, 20, PLANE)
            self.assertLessEqual(roi.total_bits, low.total_bits)
            roi_error = roi_restricted_error(cloud, reconstruct_sequence(roi.bitstream)[0], mask)
            high_error = roi_restricted_error(cloud, reconstruct_sequence(high.bitstream)[0], mask)
            self.assertLessEqual(roi_error, high_error)


class TestDecode(unittest.TestCase):
    """Test cases for decoding through the container."""

    def setUp(self):
        """Set up test fixtures."""
        rng = np.random.default_rng(38)
        cloud, mask = frame_with_object(rng, 2000)
        self.cloud = cloud
        self.encoder = SequenceEncoder(PLANE, q_r=10, q_b=40, frame_rate=5.0)
        self.encoded = self.encoder.encode([cloud], [mask])

    def test_reconstruction_after_parsing(self):
        """Test that a parsed container decodes like the in-memory one."""
        parsed = read_bitstream(write_bitstream(self.encoded.bitstream))
        direct = decode_sequence(self.encoded.bitstream)
        again = decode_sequence(parsed)
        np.testing.assert_array_equal(direct[0].depth, again[0].depth)
        clouds = self.encoder.decode(parsed)
        self.assertEqual(len(clouds), 1)
        self.assertEqual(len(clouds[0]), direct[0].occupied_count)

    def test_reconstructed_geometry(self):
        """Test that decoded points stay near the original surface."""
        decoded = self.encoder.decode(self.encoded.bitstream)[0]
        error = roi_restricted_error(decoded, self.cloud, RoiMask.full(len(decoded)))
        self.assertLess(error, 0.1)

    def test_timer(self):
        """Test that the encoder records stage durations."""
        self.assertIn("projection", self.encoder.timer.durations)
        self.assertIn("frame encode", self.encoder.timer.durations)

    def test_stage_logs_at_info(self):
        """Test that projection and frame coding report their timings at INFO."""
        with self.assertLogs("src.utils.timing", level="INFO") as captured:
            decode_sequence(self.encoder.encode([self.cloud], None).bitstream)
        messages = [record.getMessage() for record in captured.records if record.levelname == "INFO"]
        for stage in ("projection", "frame encode", "frame decode"):
            self.assertTrue(any(message.startswith(f"{stage} completed in") for message in messages))


if __name__ == '__main__':
    unittest.main()
