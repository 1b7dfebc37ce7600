"""
Configuration management module for the RoI point cloud codec.

This module loads environment variables, defines the default parameters of
the pipeline and reads sectioned run configurations from YAML files.
"""

import logging
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import yaml
from dotenv import load_dotenv

from .models.codec import PlaneConfig, check_qp
from .models.errors import DataError, UsageError
from .models.roi import GridGeometry

logger = logging.getLogger(__name__)

# Load environment variables from .env file
load_dotenv()

# Base paths
BASE_DIR = Path(__file__).resolve().parent.parent
SRC_DIR = Path(__file__).resolve().parent
DEFAULT_CONFIG_PATH = BASE_DIR / "configs" / "default.yaml"

# Environment
WORKERS = int(os.getenv('RPCC_WORKERS', '1'))
OUTPUT_DIR = os.getenv('RPCC_OUTPUT_DIR', 'output')
LOG_FILE = os.getenv('RPCC_LOG_FILE', 'roi_pcc.log')
LOG_LEVEL = os.getenv('RPCC_LOG_LEVEL', 'INFO')

# RoI detection defaults
NUM_CLASSES = 10
DEFAULT_K_COMPONENTS = 5
DEFAULT_GAMMA = 0.4
DEFAULT_PROPAGATION_STRIDE = 10
DEFAULT_PROPAGATION_RADIUS = 0.1

# Codec and evaluation defaults
DEFAULT_QR_VALUES = (15, 20, 25)
DEFAULT_QB_VALUES = (30, 33, 36, 39, 42, 45)
DEFAULT_QR = 20
DEFAULT_QB = 45
DEFAULT_FRAME_RATE = 20.0
DEFAULT_ADVANTAGE_SAMPLES = 100

DETECTORS = ("gmm", "naive")

# Keys accepted in each section of a run configuration file
_SECTIONS = {
    "roi": ("k_components", "gamma", "grid", "propagation_stride", "propagation_radius",
            "use_ground_removal", "detector"),
    "codec": ("q_r", "q_b", "plane", "store_point_map", "frame_rate"),
    "eval": ("q_r_values", "q_b_values", "advantage_samples", "workers", "detectors", "k_values",
             "gamma_values"),
}


@dataclass(frozen=True)
class RunConfig:
    """
    Parameters of one pipeline run.

    Attributes:
        k_components: GMM components fitted per box
        gamma: Heatmap binarization threshold in (0, 1]
        grid: Heatmap grid placement
        propagation_stride: RoI is detected every S-th frame and propagated in between
        propagation_radius: Matching radius of mask propagation in meters
        use_ground_removal: AND the RoI with the foreground mask
        detector: "gmm" for the heatmap pipeline, "naive" for raw box membership
        q_r: QP of RoI macroblocks
        q_b: QP of background macroblocks
        plane: Projection plane
        store_point_map: Embed the point-to-pixel map in bitstreams
        frame_rate: Frames per second used for bitrates
        q_r_values: RoI QPs swept during evaluation
        q_b_values: Background QPs swept during evaluation
        advantage_samples: Samples N of the averaged advantage
        workers: Worker processes for scene-level parallelism
        detectors: Detectors compared in a sweep; empty compares only ``detector``
        k_values: Component counts swept for "gmm" (empty uses ``k_components``)
        gamma_values: Thresholds swept for "gmm" (empty uses ``gamma``)
    """
    k_components: int = DEFAULT_K_COMPONENTS
    gamma: float = DEFAULT_GAMMA
    grid: GridGeometry = field(default_factory=GridGeometry)
    propagation_stride: int = DEFAULT_PROPAGATION_STRIDE
    propagation_radius: float = DEFAULT_PROPAGATION_RADIUS
    use_ground_removal: bool = True
    detector: str = "gmm"
    q_r: int = DEFAULT_QR
    q_b: int = DEFAULT_QB
    plane: PlaneConfig = field(default_factory=PlaneConfig)
    store_point_map: bool = True
    frame_rate: float = DEFAULT_FRAME_RATE
    q_r_values: Tuple[int, ...] = DEFAULT_QR_VALUES
    q_b_values: Tuple[int, ...] = DEFAULT_QB_VALUES
    advantage_samples: int = DEFAULT_ADVANTAGE_SAMPLES
    workers: int = WORKERS
    detectors: Tuple[str, ...] = ()
    k_values: Tuple[int, ...] = ()
    gamma_values: Tuple[float, ...] = ()

    def validate(self) -> "RunConfig":
        """
        Check parameter ranges.

        Returns:
            self, for chaining

        Raises:
            UsageError: If any parameter is out of range
        """
        if self.k_components < 1:
            raise UsageError(f"k_components must be positive, got {self.k_components}")
        if not 0.0 < self.gamma <= 1.0:
            raise UsageError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.propagation_stride < 1:
            raise UsageError(f"propagation_stride must be >= 1, got {self.propagation_stride}")
        if self.propagation_radius < 0:
            raise UsageError(f"propagation_radius must be non-negative, got {self.propagation_radius}")
        if self.detector not in DETECTORS:
            raise UsageError(f"detector must be one of {DETECTORS}, got {self.detector!r}")
        for qp in (self.q_r, self.q_b) + tuple(self.q_r_values) + tuple(self.q_b_values):
            check_qp(qp)
        if not self.q_r_values or not self.q_b_values:
            raise UsageError("QP sweep lists must not be empty")
        if self.frame_rate <= 0:
            raise UsageError(f"frame_rate must be positive, got {self.frame_rate}")
        if self.advantage_samples < 1:
            raise UsageError(f"advantage_samples must be positive, got {self.advantage_samples}")
        if self.workers < 1:
            raise UsageError(f"workers must be positive, got {self.workers}")
        unknown = set(self.detectors) - set(DETECTORS)
        if unknown:
            raise UsageError(f"Unknown detectors {sorted(unknown)}; known: {DETECTORS}")
        if any(k < 1 for k in self.k_values):
            raise UsageError(f"k_values must be positive, got {list(self.k_values)}")
        if any(not 0.0 < g <= 1.0 for g in self.gamma_values):
            raise UsageError(f"gamma_values must lie in (0, 1], got {list(self.gamma_values)}")
        return self

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """
        Copy of the configuration with selected fields replaced.

        Overrides whose value is None are ignored, so parsed command-line
        flags can be passed through directly.
        """
        names = {f.name for f in fields(self)}
        unknown = set(overrides) - names
        if unknown:
            raise UsageError(f"Unknown configuration keys: {sorted(unknown)}")
        changes = {k: v for k, v in overrides.items() if v is not None}
        for key in ("q_r_values", "q_b_values", "k_values"):
            if key in changes:
                changes[key] = tuple(int(v) for v in changes[key])
        if "gamma_values" in changes:
            changes["gamma_values"] = tuple(float(v) for v in changes["gamma_values"])
        if "detectors" in changes:
            changes["detectors"] = tuple(str(v) for v in changes["detectors"])
        return replace(self, **changes).validate()

    def to_dict(self) -> Dict[str, Dict[str, Any]]:
        """Sectioned dictionary mirroring the YAML layout."""
        flat = {f.name: getattr(self, f.name) for f in fields(self)}
        flat["grid"] = self.grid.to_dict()
        flat["plane"] = self.plane.to_dict()
        flat["q_r_values"] = list(self.q_r_values)
        flat["q_b_values"] = list(self.q_b_values)
        for key in ("detectors", "k_values", "gamma_values"):
            flat[key] = list(flat[key])
        return {section: {key: flat[key] for key in keys} for section, keys in _SECTIONS.items()}


def parse_run_config(data: Optional[Dict[str, Any]]) -> RunConfig:
    """
    Build a RunConfig from a sectioned dictionary.

    Args:
        data: Mapping with optional "roi", "codec" and "eval" sections

    Returns:
        The validated configuration

    Raises:
        UsageError: If sections or keys are unknown or values are invalid
    """
    data = data or {}
    if not isinstance(data, dict):
        raise UsageError("Run configuration must be a mapping of sections")
    unknown_sections = set(data) - set(_SECTIONS)
    if unknown_sections:
        raise UsageError(f"Unknown configuration sections: {sorted(unknown_sections)}")

    values: Dict[str, Any] = {}
    for section, keys in _SECTIONS.items():
        content = data.get(section) or {}
        if not isinstance(content, dict):
            raise UsageError(f"Configuration section '{section}' must be a mapping")
        unknown = set(content) - set(keys)
        if unknown:
            raise UsageError(f"Unknown keys in section '{section}': {sorted(unknown)}")
        values.update(content)

    try:
        if "grid" in values:
            values["grid"] = GridGeometry.from_dict(values["grid"])
        if "plane" in values:
            values["plane"] = PlaneConfig.from_dict(values["plane"])
    except DataError as e:
        raise UsageError(str(e)) from e
    return RunConfig().with_overrides(**values)


def load_run_config(path: Optional[str] = None) -> RunConfig:
    """
    Load a run configuration file.

    Args:
        path: YAML file path; the built-in defaults are used when omitted

    Returns:
        The validated configuration
    """
    if path is None:
        return RunConfig().validate()
    config_path = Path(path)
    if not config_path.is_file():
        raise UsageError(f"Configuration file not found: {path}")
    try:
        data = yaml.safe_load(config_path.read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        raise UsageError(f"Cannot parse configuration file {path}: {e}") from e
    logger.info(f"Loaded run configuration from {path}")
    return parse_run_config(data)


def ensure_directories(*directories: str) -> None:
    """Ensure the output directory and any given directories exist."""
    for directory in (OUTPUT_DIR,) + directories:
        if directory:
            os.makedirs(directory, exist_ok=True)
