"""
Test cases for the 4x4 integer transform and quantization.
"""

import math
import unittest
from fractions import Fraction

import numpy as np

from src.codec.transform import (
    CORE_TRANSFORM, POSITION_CLASS, QUANT_MULTIPLIERS, dct4x4_forward, dequantize, dequantize_and_inverse, quantize
)
from src.models.errors import UsageError


def round_trip(blocks, qp):
    return dequantize_and_inverse(quantize(dct4x4_forward(blocks), qp), qp)


class TestForwardTransform(unittest.TestCase):
    """Test cases for dct4x4_forward."""

    def setUp(self):
        """Set up test fixtures."""
        self.rng = np.random.default_rng(14)

    def test_zero_block(self):
        """Test that a zero block has zero coefficients."""
        self.assertFalse(dct4x4_forward(np.zeros((4, 4), dtype=np.int64)).any())

    def test_constant_block(self):
        """Test that a constant block has only a DC term of 16 v."""
        coefficients = dct4x4_forward(np.full((4, 4), 37))
        expected = np.zeros((4, 4), dtype=np.int64)
        expected[0, 0] = 16 * 37
        np.testing.assert_array_equal(coefficients, expected)

    def test_matrix_product(self):
        """Test random blocks against C X C^T computed block by block."""
        blocks = self.rng.integers(-32768, 32768, size=(50, 4, 4))
        coefficients = dct4x4_forward(blocks)
        for block, result in zip(blocks, coefficients):
            expected = np.zeros((4, 4), dtype=np.int64)
            for i in range(4):
                for j in range(4):
                    expected[i, j] = sum(CORE_TRANSFORM[i, k] * block[k, m] * CORE_TRANSFORM[j, m]
                                         for k in range(4) for m in range(4))
            np.testing.assert_array_equal(result, expected)

    def test_bad_shape(self):
        """Test that non-4x4 input is rejected."""
        with self.assertRaises(UsageError):
            dct4x4_forward(np.zeros((3, 4)))


class TestQuantize(unittest.TestCase):
    """Test cases for quantize and dequantize."""

    def setUp(self):
        """Set up test fixtures."""
        self.rng = np.random.default_rng(15)

    def test_zero_coefficients(self):
        """Test that zero coefficients quantize to zero at every QP."""
        for qp in range(52):
            self.assertFalse(quantize(np.zeros((4, 4), dtype=np.int64), qp).any())

    def test_scalar_dc(self):
        """Test the DC level of W_00 = 16 at QP 0."""
        coefficients = np.zeros((4, 4), dtype=np.int64)
        coefficients[0, 0] = 16
        self.assertEqual(quantize(coefficients, 0)[0, 0], 6)

    def test_scalar_oracle(self):
        """Test 10^4 random (W, QP) pairs against exact rational rounding."""
        count = 10000
        qps = self.rng.integers(0, 52, size=count)
        rows = self.rng.integers(0, 4, size=count)
        cols = self.rng.integers(0, 4, size=count)
        values = self.rng.integers(-2400000, 2400001, size=count)
        blocks = np.zeros((count, 4, 4), dtype=np.int64)
        blocks[np.arange(count), rows, cols] = values
        levels = quantize(blocks, qps)[np.arange(count), rows, cols]

        for w, qp, i, j, level in zip(values.tolist(), qps.tolist(), rows.tolist(), cols.tolist(),
                                      levels.tolist()):
            multiplier = int(QUANT_MULTIPLIERS[qp % 6][POSITION_CLASS[i, j]])
            scaled = Fraction(abs(w) * multiplier, 2 ** (15 + qp // 6))
            expected = math.floor(scaled + Fraction(1, 2))
            self.assertEqual(level, expected if w >= 0 else -expected)

    def test_half_away_from_zero(self):
        """Test that quantization is odd-symmetric."""
        coefficients = self.rng.integers(-5000, 5000, size=(20, 4, 4))
        np.testing.assert_array_equal(quantize(-coefficients, 17), -quantize(coefficients, 17))

    def test_shift_monotone(self):
        """Test that six QP steps never increase level magnitudes."""
        coefficients = dct4x4_forward(self.rng.integers(0, 4096, size=(100, 4, 4)))
        self.assertTrue(np.all(np.abs(quantize(coefficients, 30)) <= np.abs(quantize(coefficients, 24))))

    def test_per_block_qp(self):
        """Test that a QP array applies per block."""
        coefficients = dct4x4_forward(self.rng.integers(0, 4096, size=(2, 4, 4)))
        levels = quantize(coefficients, np.array([10, 40]))
        np.testing.assert_array_equal(levels[0], quantize(coefficients[0], 10))
        np.testing.assert_array_equal(levels[1], quantize(coefficients[1], 40))

    def test_qp_out_of_range(self):
        """Test that QPs outside [0, 51] are rejected."""
        for qp in (-1, 52):
            with self.assertRaises(UsageError):
                quantize(np.zeros((4, 4), dtype=np.int64), qp)
        with self.assertRaises(UsageError):
            dequantize(np.zeros((4, 4), dtype=np.int64), 60)


class TestReconstruction(unittest.TestCase):
    """Test cases for dequantize_and_inverse."""

    def setUp(self):
        """Set up test fixtures."""
        self.rng = np.random.default_rng(16)
        self.blocks = self.rng.integers(0, 256, size=(1000, 4, 4))

    def test_zero_levels(self):
        """Test that zero levels give a zero block."""
        self.assertFalse(dequantize_and_inverse(np.zeros((4, 4), dtype=np.int64), 20).any())

    def test_constant_block_qp0(self):
        """Test a constant block through QP 0."""
        block = np.full((4, 4), 64)
        self.assertLessEqual(np.abs(round_trip(block, 0) - block).max(), 1)

    def test_qp0_error_bound(self):
        """Test the per-sample error at QP 0 on random blocks."""
        self.assertLessEqual(np.abs(round_trip(self.blocks, 0) - self.blocks).max(), 1)

    def test_distortion_monotone(self):
        """Test that mean squared error grows with QP."""
        mse = [np.mean((round_trip(self.blocks, qp) - self.blocks) ** 2.0) for qp in (0, 20, 40)]
        self.assertLessEqual(mse[0], mse[1])
        self.assertLessEqual(mse[1], mse[2])

    def test_deterministic(self):
        """Test that reconstruction is repeatable."""
        np.testing.assert_array_equal(round_trip(self.blocks, 33), round_trip(self.blocks, 33))


if __name__ == '__main__':
    unittest.main()
