"""
Per-object Gaussian mixture fitting.

Mixtures use fixed uniform priors 1/C. Covariances are regularized by adding
``reg`` to their diagonal. To keep that update an exact M-step, the fitted
objective is the log-likelihood under isotropic jitter of variance ``reg``:

    log N(x | mu, Sigma) - reg/2 * tr(Sigma^-1)

which is the expected Gaussian log-density of ``x + noise`` with
``noise ~ N(0, reg * I)``. Its value is recorded per iteration and never
decreases.
"""

import hashlib
import logging
from typing import Optional, Tuple

import numpy as np

from ..models.errors import DataError
from ..models.geometry import OrientedBox
from ..models.roi import COVARIANCE_FLOOR, Gmm2, Gmm3

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITER = 100
DEFAULT_TOL = 1e-6

# Minimum points per component before the component count is reduced.
POINTS_PER_COMPONENT = 3

_LOG_2PI = np.log(2.0 * np.pi)


def box_seed(box: OrientedBox) -> int:
    """
    Deterministic RNG seed derived from a box center.

    Args:
        box: The box whose points are being fitted

    Returns:
        A non-negative 63-bit integer
    """
    digest = hashlib.sha256(np.round(box.center, 6).tobytes()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def _logsumexp(values: np.ndarray) -> np.ndarray:
    """Row-wise log-sum-exp of a 2D array."""
    peak = values.max(axis=1, keepdims=True)
    return (peak + np.log(np.exp(values - peak).sum(axis=1, keepdims=True)))[:, 0]


def _kmeans_plus_plus(points: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    """Pick ``count`` initial centers by D^2 sampling."""
    n = points.shape[0]
    centers = [points[rng.integers(n)]]
    closest = ((points - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, count):
        total = closest.sum()
        if total <= 0.0:
            choice = rng.integers(n)
        else:
            choice = rng.choice(n, p=closest / total)
        centers.append(points[choice])
        closest = np.minimum(closest, ((points - points[choice]) ** 2).sum(axis=1))
    return np.array(centers)


def _initial_covariances(points: np.ndarray, means: np.ndarray, reg: float) -> np.ndarray:
    """Scatter of each hard-assigned cluster, falling back to the global scatter."""
    eye = np.eye(3)
    global_cov = np.cov(points.T, bias=True).reshape(3, 3) if points.shape[0] > 1 else np.zeros((3, 3))
    labels = ((points[:, None, :] - means[None, :, :]) ** 2).sum(axis=2).argmin(axis=1)
    covariances = []
    for k in range(means.shape[0]):
        members = points[labels == k]
        if members.shape[0] >= 2:
            diff = members - means[k]
            covariances.append(diff.T @ diff / members.shape[0] + reg * eye)
        else:
            covariances.append(global_cov + reg * eye)
    return np.array(covariances)


def _estep(points: np.ndarray, means: np.ndarray, covariances: np.ndarray,
           reg: float) -> Tuple[float, np.ndarray]:
    """
    Evaluate the objective and the responsibilities.

    Returns:
        Mean per-point objective value and (N, C) responsibilities
    """
    count = means.shape[0]
    log_prob = np.empty((points.shape[0], count))
    for k in range(count):
        chol = np.linalg.cholesky(covariances[k])
        chol_inv = np.linalg.inv(chol)
        scaled = (points - means[k]) @ chol_inv.T
        log_det = 2.0 * np.log(np.diag(chol)).sum()
        jitter = 0.5 * reg * (chol_inv ** 2).sum()
        log_prob[:, k] = -0.5 * ((scaled ** 2).sum(axis=1) + log_det + 3 * _LOG_2PI) - jitter
    log_prob -= np.log(count)
    per_point = _logsumexp(log_prob)
    return float(per_point.mean()), np.exp(log_prob - per_point[:, None])


def _mstep(points: np.ndarray, resp: np.ndarray, means: np.ndarray,
           covariances: np.ndarray, reg: float) -> Tuple[np.ndarray, np.ndarray]:
    """Weighted means and regularized covariances; empty components keep their parameters."""
    means = means.copy()
    covariances = covariances.copy()
    weights = resp.sum(axis=0)
    for k in range(means.shape[0]):
        if weights[k] <= 1e-12:
            continue
        means[k] = resp[:, k] @ points / weights[k]
        diff = points - means[k]
        scatter = (resp[:, k, None] * diff).T @ diff / weights[k]
        covariances[k] = 0.5 * (scatter + scatter.T) + reg * np.eye(3)
    return means, covariances


def fit_gmm(points: np.ndarray, n_components: int = 5, max_iter: int = DEFAULT_MAX_ITER,
            tol: float = DEFAULT_TOL, seed: Optional[int] = 0,
            reg: float = COVARIANCE_FLOOR) -> Gmm3:
    """
    Fit a uniform-weight 3D Gaussian mixture by expectation-maximization.

    Args:
        points: (N, 3) points of one object
        n_components: Requested number of components
        max_iter: Maximum number of EM iterations
        tol: Stop when the objective improves by less than this
        seed: Seed for k-means++ initialization
        reg: Value added to covariance diagonals (m^2)

    Returns:
        The fitted mixture with its objective history

    Raises:
        DataError: If no points are given
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    n = points.shape[0]
    if n == 0:
        raise DataError("Cannot fit a mixture to an empty point set")
    if n_components < 1:
        raise DataError(f"Component count must be positive, got {n_components}")

    count = n_components
    if n < POINTS_PER_COMPONENT * n_components:
        count = max(1, n // POINTS_PER_COMPONENT)
        logger.debug(f"Reducing mixture from {n_components} to {count} components for {n} points")

    rng = np.random.default_rng(seed)
    means = _kmeans_plus_plus(points, count, rng)
    covariances = _initial_covariances(points, means, reg)

    objective, resp = _estep(points, means, covariances, reg)
    history = [objective]
    for _ in range(max_iter):
        means, covariances = _mstep(points, resp, means, covariances, reg)
        updated, resp = _estep(points, means, covariances, reg)
        history.append(updated)
        if updated - objective < tol:
            break
        objective = updated

    return Gmm3(means, covariances, tuple(history))


def project_gmm(gmm: Gmm3) -> Gmm2:
    """
    Marginalize a 3D mixture onto the x-y plane.

    Args:
        gmm: The 3D mixture

    Returns:
        Mixture with means (mu_x, mu_y) and the top-left 2x2 covariance blocks
    """
    return Gmm2(gmm.means[:, :2].copy(), gmm.covariances[:, :2, :2].copy())
