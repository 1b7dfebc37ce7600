"""
Test cases for metric-bitrate curves and the averaged advantage.
"""

import unittest

import numpy as np

from src.evaluation.curves import averaged_advantage, shared_domain
from src.models.errors import DataError, UsageError
from src.models.evaluation import RateCurve, RateSample


def curve(bitrates, values, label=""):
    return RateCurve(tuple(RateSample(float(r), float(v)) for r, v in zip(bitrates, values)), label)


def random_curve(rng, points=6):
    bitrates = np.sort(rng.uniform(0.5, 10.0, points))
    return curve(bitrates, rng.normal(0.0, 1.0, points))


class TestRateCurve(unittest.TestCase):
    """Test cases for RateCurve."""

    def test_strictly_increasing(self):
        """Test that non-increasing bitrates are rejected."""
        with self.assertRaises(DataError):
            curve([1.0, 1.0], [0.0, 1.0])

    def test_from_samples_merges(self):
        """Test sorting and merging of equal bitrates."""
        merged = RateCurve.from_samples([RateSample(2.0, 1.0), RateSample(1.0, 5.0), RateSample(2.0, 3.0)])
        np.testing.assert_array_equal(merged.bitrates, [1.0, 2.0])
        np.testing.assert_array_equal(merged.values, [5.0, 2.0])

    def test_no_extrapolation(self):
        """Test that interpolation outside the domain is refused."""
        with self.assertRaises(DataError):
            curve([1.0, 2.0], [0.0, 1.0]).interpolate(np.array([2.5]))

    def test_invalid_sample(self):
        """Test that non-positive bitrates are rejected."""
        with self.assertRaises(DataError):
            RateSample(0.0, 1.0)


class TestAveragedAdvantage(unittest.TestCase):
    """Test cases for averaged_advantage."""

    def setUp(self):
        """Set up test fixtures."""
        self.rng = np.random.default_rng(43)

    def test_identical_curves(self):
        """Test that a curve has no advantage over itself."""
        c = random_curve(self.rng)
        self.assertEqual(averaged_advantage(c, c), 0.0)

    def test_constant_offset(self):
        """Test that a constant offset d gives d."""
        base = random_curve(self.rng)
        shifted = curve(base.bitrates, base.values + 2.5)
        self.assertAlmostEqual(averaged_advantage(shifted, base), 2.5, delta=1e-9)

    def test_antisymmetric(self):
        """Test that swapping the curves flips the sign."""
        for _ in range(20):
            a, b = random_curve(self.rng), random_curve(self.rng)
            try:
                forward = averaged_advantage(a, b)
            except DataError:
                continue
            self.assertAlmostEqual(forward, -averaged_advantage(b, a), delta=1e-9)

    def test_dense_quadrature(self):
        """Test against a dense trapezoid integration of the gap."""
        checked = 0
        for _ in range(100):
            a, b = random_curve(self.rng), random_curve(self.rng)
            try:
                low, high = shared_domain(a, b)
            except DataError:
                continue
            x = np.linspace(low, high, 100001)
            gap = a.interpolate(x) - b.interpolate(x)
            expected = np.sum(0.5 * (gap[1:] + gap[:-1]) * np.diff(x)) / (high - low)
            result = averaged_advantage(a, b, samples=10000)
            self.assertLessEqual(abs(result - expected), 1e-3 * max(1.0, abs(expected)))
            checked += 1
        self.assertGreater(checked, 50)

    def test_collinear_refinement(self):
        """Test that adding a collinear interior point changes nothing."""
        a = curve([1.0, 3.0, 5.0], [0.0, 2.0, 1.0])
        refined = curve([1.0, 2.0, 3.0, 5.0], [0.0, 1.0, 2.0, 1.0])
        b = curve([0.5, 6.0], [1.0, -1.0])
        self.assertAlmostEqual(averaged_advantage(a, b), averaged_advantage(refined, b), delta=1e-12)

    def test_partial_overlap(self):
        """Test that only the shared bitrate range is averaged."""
        a = curve([1.0, 3.0], [1.0, 1.0])
        b = curve([2.0, 5.0], [0.0, 0.0])
        self.assertEqual(shared_domain(a, b), (2.0, 3.0))
        self.assertAlmostEqual(averaged_advantage(a, b), 1.0)

    def test_errors(self):
        """Test disjoint domains, short curves and bad sample counts."""
        a = curve([1.0, 2.0], [0.0, 1.0])
        with self.assertRaises(DataError):
            averaged_advantage(a, curve([3.0, 4.0], [0.0, 1.0]))
        with self.assertRaises(DataError):
            averaged_advantage(a, curve([1.5], [0.0]))
        with self.assertRaises(UsageError):
            averaged_advantage(a, a, samples=0)


if __name__ == '__main__':
    unittest.main()
