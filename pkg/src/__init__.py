"""
RoI point cloud codec package.

This package provides region-of-interest detection for LiDAR point cloud
sequences, a depth-image codec with per-macroblock quantization, and the
rate-distortion evaluation tooling around them.
"""

__version__ = '0.1.0'
