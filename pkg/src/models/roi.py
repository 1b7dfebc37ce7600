"""
RoI model definitions.

This module contains the Gaussian mixture containers, the heatmap grid
geometry and the point-wise RoI mask.
"""

from dataclasses import dataclass
from typing import Any, Dict, Tuple

import numpy as np

from .errors import DataError

# Eigenvalue floor of fitted covariances, in m^2.
COVARIANCE_FLOOR = 1e-4


def _check_covariances(covariances: np.ndarray, dim: int) -> None:
    """Validate a stack of symmetric positive-definite matrices."""
    if covariances.ndim != 3 or covariances.shape[1:] != (dim, dim):
        raise DataError(f"Covariances must have shape (C, {dim}, {dim}), got {covariances.shape}")
    if not np.allclose(covariances, np.swapaxes(covariances, 1, 2), rtol=0.0, atol=1e-9):
        raise DataError("Covariances must be symmetric")
    if covariances.shape[0] and np.linalg.eigvalsh(covariances).min() <= 0.0:
        raise DataError("Covariances must be positive definite")


@dataclass
class Gmm3:
    """
    Three-dimensional Gaussian mixture with uniform component weights.

    Attributes:
        means: (C, 3) component means in meters
        covariances: (C, 3, 3) component covariances
        log_likelihood: Per-iteration mean log-likelihood recorded during fitting
    """
    means: np.ndarray
    covariances: np.ndarray
    log_likelihood: Tuple[float, ...] = ()

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=np.float64).reshape(-1, 3)
        self.covariances = np.asarray(self.covariances, dtype=np.float64)
        if self.means.shape[0] == 0:
            raise DataError("A mixture needs at least one component")
        _check_covariances(self.covariances, 3)
        if self.covariances.shape[0] != self.means.shape[0]:
            raise DataError("Mean and covariance counts differ")

    @property
    def component_count(self) -> int:
        """Number of mixture components."""
        return self.means.shape[0]

    @property
    def weights(self) -> np.ndarray:
        """Component priors, fixed at 1/C."""
        return np.full(self.component_count, 1.0 / self.component_count)

    def to_dict(self) -> Dict[str, Any]:
        """Serialize to a JSON-compatible dictionary."""
        return {"means": self.means.tolist(), "covariances": self.covariances.tolist()}


@dataclass
class Gmm2:
    """
    Two-dimensional Gaussian mixture with uniform component weights.

    Attributes:
        means: (C, 2) component means
        covariances: (C, 2, 2) component covariances
    """
    means: np.ndarray
    covariances: np.ndarray

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=np.float64).reshape(-1, 2)
        self.covariances = np.asarray(self.covariances, dtype=np.float64)
        if self.means.shape[0] == 0:
            raise DataError("A mixture needs at least one component")
        _check_covariances(self.covariances, 2)
        if self.covariances.shape[0] != self.means.shape[0]:
            raise DataError("Mean and covariance counts differ")

    @property
    def component_count(self) -> int:
        """Number of mixture components."""
        return self.means.shape[0]


@dataclass(frozen=True)
class GridGeometry:
    """
    Placement of the bird's-eye heatmap grid.

    Row ``i`` runs along y and column ``j`` along x; cell ``(i, j)`` covers
    ``[ox + j*s, ox + (j+1)*s) x [oy + i*s, oy + (i+1)*s)``.

    Attributes:
        origin_x: x of the grid's lower corner in meters
        origin_y: y of the grid's lower corner in meters
        cell_size: Cell edge length in meters
        rows: Number of rows (h)
        cols: Number of columns (w)
    """
    origin_x: float = -50.0
    origin_y: float = -50.0
    cell_size: float = 0.5
    rows: int = 200
    cols: int = 200

    def __post_init__(self):
        if self.cell_size <= 0 or self.rows <= 0 or self.cols <= 0:
            raise DataError(f"Invalid grid geometry {self}")

    @property
    def shape(self) -> Tuple[int, int]:
        """(rows, cols) of the grid."""
        return self.rows, self.cols

    def cell_centers(self) -> Tuple[np.ndarray, np.ndarray]:
        """x and y coordinates of all cell centers, each of shape (rows, cols)."""
        xs = self.origin_x + (np.arange(self.cols) + 0.5) * self.cell_size
        ys = self.origin_y + (np.arange(self.rows) + 0.5) * self.cell_size
        grid_x, grid_y = np.meshgrid(xs, ys)
        return grid_x, grid_y

    def cell_of(self, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Locate the cells containing coordinates.

        Returns:
            Row indices, column indices and a validity mask (False outside the grid)
        """
        cols = np.floor((np.asarray(x, dtype=np.float64) - self.origin_x) / self.cell_size).astype(np.int64)
        rows = np.floor((np.asarray(y, dtype=np.float64) - self.origin_y) / self.cell_size).astype(np.int64)
        valid = (rows >= 0) & (rows < self.rows) & (cols >= 0) & (cols < self.cols)
        return rows, cols, valid

    def contains(self, x: float, y: float) -> bool:
        """Whether a coordinate lies inside the grid extent."""
        return bool(self.cell_of(np.array([x]), np.array([y]))[2][0])

    def to_dict(self) -> Dict[str, Any]:
        """Serialize to a JSON-compatible dictionary."""
        return {
            "origin": [self.origin_x, self.origin_y],
            "cell_size": self.cell_size,
            "shape": [self.rows, self.cols],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GridGeometry":
        """Deserialize from a dictionary produced by ``to_dict``."""
        try:
            return cls(float(data["origin"][0]), float(data["origin"][1]),
                       float(data["cell_size"]), int(data["shape"][0]), int(data["shape"][1]))
        except (KeyError, IndexError, TypeError, ValueError) as e:
            raise DataError(f"Invalid grid geometry record: {e}") from e


@dataclass
class RoiHeatmap:
    """
    Per-class RoI confidence grid.

    Attributes:
        values: (C_classes, rows, cols) array of values in [0, 1]
        geometry: Grid placement
    """
    values: np.ndarray
    geometry: GridGeometry

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 3 or self.values.shape[1:] != self.geometry.shape:
            raise DataError(
                f"Heatmap of shape {self.values.shape} does not match grid {self.geometry.shape}")
        if self.values.size and (self.values.min() < 0.0 or self.values.max() > 1.0):
            raise DataError("Heatmap values must lie in [0, 1]")

    @property
    def num_classes(self) -> int:
        """Number of class channels."""
        return self.values.shape[0]


@dataclass
class RoiMask:
    """
    Binary RoI flag per point of a cloud.

    Attributes:
        bits: Boolean array aligned with the cloud's points
    """
    bits: np.ndarray

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=bool).reshape(-1)

    def __len__(self) -> int:
        return self.bits.shape[0]

    @property
    def count(self) -> int:
        """Number of RoI points."""
        return int(self.bits.sum())

    @classmethod
    def full(cls, size: int, value: bool = True) -> "RoiMask":
        """Mask of ``size`` entries all set to ``value``."""
        return cls(np.full(size, value, dtype=bool))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RoiMask):
            return NotImplemented
        return self.bits.shape == other.bits.shape and bool(np.array_equal(self.bits, other.bits))
