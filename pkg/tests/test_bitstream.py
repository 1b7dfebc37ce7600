"""
Test cases for frame coding and the RPCC container.
"""

import unittest
import zlib

import numpy as np

from src.codec.bitstream import (
    CONTAINER_HEADER, MAGIC, decode_frame, decode_projection_maps, dequantize_image,
    encode_frame, encode_frame_uniform, pad_depth, quantize_image, read_bitstream, write_bitstream
)
from src.codec.projection import project
from src.models.codec import Bitstream, DepthImage, FrameSegment, PlaneConfig, QpMap
from src.models.errors import BitstreamError, DataError, InvariantError
from src.models.geometry import PointCloud

PLANE = PlaneConfig(origin=(-12.7, -12.7, 10.0), width=128, height=128)


def sample_frame(rng, count=3000):
    """Depth image of a gently curved surface with a block standing on it."""
    xy = rng.uniform(-12.0, 12.0, (count, 2))
    z = 0.3 * np.sin(0.4 * xy[:, 0]) + 0.2 * np.cos(0.3 * xy[:, 1])
    on_block = (np.abs(xy[:, 0] - 3.0) < 2.0) & (np.abs(xy[:, 1] + 2.0) < 1.0)
    z[on_block] += 1.5
    return project(PointCloud(np.column_stack([xy, z])), PLANE)


class TestFrameCoding(unittest.TestCase):
    """Test cases for encode_frame and decode_frame."""

    def setUp(self):
        """Set up test fixtures."""
        self.rng = np.random.default_rng(29)
        self.image, self.maps, _ = sample_frame(self.rng)
        self.shape = PLANE.macroblock_shape

    def test_zero_image_size(self):
        """Test that an all-zero image compresses to under 1% of its raw size."""
        image = DepthImage.empty(PLANE)
        segment = encode_frame(image, QpMap.uniform(30, self.shape))
        self.assertLess(len(segment.payload), 0.01 * PLANE.pixel_count * 2)
        decoded = decode_frame(segment)
        self.assertFalse(decoded.depth.any())
        self.assertFalse(decoded.occupancy.any())

    def test_decode_is_dequantized_image(self):
        """Test that decoding reproduces the dequantized representation exactly."""
        qp_map = QpMap(np.where(self.rng.random(self.shape) < 0.5, 20, 45))
        decoded = decode_frame(encode_frame(self.image, qp_map))
        expected = dequantize_image(quantize_image(pad_depth(self.image), qp_map), qp_map)
        np.testing.assert_array_equal(decoded.depth, expected)
        np.testing.assert_array_equal(decoded.occupancy, self.image.occupancy)

    def test_size_monotone_in_qp(self):
        """Test that QP 45 takes no more bytes than QP 20."""
        small = encode_frame(self.image, QpMap.uniform(45, self.shape))
        large = encode_frame(self.image, QpMap.uniform(20, self.shape))
        self.assertLessEqual(len(small.payload), len(large.payload))

    def test_low_qp_is_nearly_lossless(self):
        """Test that QP 0 keeps occupied depths within one unit."""
        decoded = decode_frame(encode_frame(self.image, QpMap.uniform(0, self.shape)))
        occupied = self.image.occupancy
        error = np.abs(decoded.depth[occupied].astype(np.int64) - self.image.depth[occupied].astype(np.int64))
        self.assertLessEqual(error.max(), 1)

    def test_uniform_matches_map(self):
        """Test that the uniform path writes the same payload as a uniform map."""
        uniform = encode_frame_uniform(self.image, 33, self.maps)
        mapped = encode_frame(self.image, QpMap.uniform(33, self.shape), self.maps)
        self.assertEqual(uniform.payload, mapped.payload)

    def test_point_map_round_trip(self):
        """Test that the stored point map comes back unchanged."""
        segment = encode_frame(self.image, QpMap.uniform(30, self.shape), self.maps)
        maps = decode_projection_maps(segment)
        np.testing.assert_array_equal(maps.point_to_pixel, self.maps.point_to_pixel)
        np.testing.assert_array_equal(maps.dropped, self.maps.dropped)
        self.assertIsNone(decode_projection_maps(encode_frame(self.image, QpMap.uniform(30, self.shape))))

    def test_qp_map_shape_mismatch(self):
        """Test that a QP map of the wrong shape is rejected."""
        with self.assertRaises(DataError):
            encode_frame(self.image, QpMap.uniform(30, (4, 4)))

    def test_padding(self):
        """Test the macroblock-mean fill of unoccupied pixels."""
        image = DepthImage.empty(PLANE)
        image.depth[0, 0], image.occupancy[0, 0] = 100, True
        image.depth[1, 1], image.occupancy[1, 1] = 201, True
        samples = pad_depth(image)
        self.assertEqual(samples[5, 5], 151)
        self.assertEqual(samples[0, 0], 100)
        self.assertEqual(samples[100, 100], 151)

    def test_corrupt_payload(self):
        """Test that a corrupt payload reports its offset."""
        segment = FrameSegment(PLANE, QpMap.uniform(30, self.shape), b"not zlib", offset=77)
        with self.assertRaises(BitstreamError) as context:
            decode_frame(segment)
        self.assertEqual(context.exception.offset, 77)

    def test_truncated_payload(self):
        """Test that a payload missing its coefficients is rejected."""
        segment = encode_frame(self.image, QpMap.uniform(30, self.shape))
        raw = zlib.decompress(segment.payload)
        broken = FrameSegment(PLANE, segment.qp_map, zlib.compress(raw[:-10]))
        with self.assertRaises(BitstreamError):
            decode_frame(broken)


class TestContainer(unittest.TestCase):
    """Test cases for write_bitstream and read_bitstream."""

    def setUp(self):
        """Set up test fixtures."""
        rng = np.random.default_rng(30)
        shape = PLANE.macroblock_shape
        segments = []
        for qp in (20, 40):
            image, maps, _ = sample_frame(rng, 1500)
            qp_map = QpMap(np.where(rng.random(shape) < 0.3, qp, 45))
            segments.append(encode_frame(image, qp_map, maps))
        self.bitstream = Bitstream(PLANE, segments, 10.0, True)
        self.data = write_bitstream(self.bitstream)

    def test_round_trip(self):
        """Test that parsing restores the header, QP maps and payloads."""
        parsed = read_bitstream(self.data)
        self.assertEqual(parsed.plane, PLANE)
        self.assertEqual(parsed.frame_rate, 10.0)
        self.assertTrue(parsed.store_point_map)
        self.assertEqual(parsed.frame_count, 2)
        for original, segment in zip(self.bitstream.segments, parsed.segments):
            self.assertEqual(segment.qp_map, original.qp_map)
            self.assertEqual(segment.payload, original.payload)
            self.assertEqual(self.data[segment.offset:segment.offset + len(segment.payload)], segment.payload)
        self.assertEqual(write_bitstream(parsed), self.data)

    def test_empty_sequence(self):
        """Test a container without frames."""
        parsed = read_bitstream(write_bitstream(Bitstream(PLANE, [], 20.0, False)))
        self.assertEqual(parsed.frame_count, 0)
        self.assertFalse(parsed.store_point_map)

    def test_bad_magic(self):
        """Test that a wrong magic is reported at offset 0."""
        with self.assertRaises(BitstreamError) as context:
            read_bitstream(b"XXXX" + self.data[4:])
        self.assertEqual(context.exception.offset, 0)
        self.assertEqual(self.data[:4], MAGIC)

    def test_truncated_header(self):
        """Test that a short buffer is rejected."""
        with self.assertRaises(BitstreamError):
            read_bitstream(self.data[:CONTAINER_HEADER.size - 1])

    def test_truncated_segment(self):
        """Test that a cut segment reports the offset of its payload."""
        with self.assertRaises(BitstreamError) as context:
            read_bitstream(self.data[:-5])
        self.assertEqual(context.exception.offset, self.bitstream_offset(1))

    def test_trailing_bytes(self):
        """Test that extra bytes after the last segment are rejected."""
        with self.assertRaises(BitstreamError) as context:
            read_bitstream(self.data + b"\x00\x00")
        self.assertEqual(context.exception.offset, len(self.data))

    def test_qp_above_range(self):
        """Test that a QP map entry above 51 is rejected at its byte."""
        data = bytearray(self.data)
        data[CONTAINER_HEADER.size + 3] = 60
        with self.assertRaises(BitstreamError) as context:
            read_bitstream(bytes(data))
        self.assertEqual(context.exception.offset, CONTAINER_HEADER.size + 3)

    def test_segment_plane_mismatch(self):
        """Test that a segment from another plane cannot be written."""
        other = PlaneConfig(width=64, height=64)
        segment = FrameSegment(other, QpMap.uniform(30, other.macroblock_shape), b"")
        with self.assertRaises(InvariantError):
            write_bitstream(Bitstream(PLANE, [segment]))

    def bitstream_offset(self, frame: int) -> int:
        """Byte offset of a frame's payload."""
        return read_bitstream(self.data).segments[frame].offset


if __name__ == '__main__':
    unittest.main()
