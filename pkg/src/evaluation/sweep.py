"""
Rate-distortion sweeps.

A sweep encodes every scene uniformly at each background QP (the baseline)
and with RoI masks at each (q_r, q_b) pair, once per detector variant when a
scene carries several, decodes, measures the reconstructions, and turns the
scene-averaged results into metric-bitrate curves compared through the
averaged advantage.
"""

import logging
from dataclasses import dataclass, field
from multiprocessing import Pool
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from ..codec.bitstream import read_bitstream
from ..codec.encoder import encode_sequence, reconstruct_sequence
from ..config import DEFAULT_ADVANTAGE_SAMPLES, DEFAULT_QB_VALUES, DEFAULT_QR_VALUES
from ..models.codec import PlaneConfig
from ..models.errors import DataError
from ..models.evaluation import EvalScene, RateCurve, RateSample
from ..models.geometry import PointCloud
from ..models.roi import RoiMask
from ..utils.file_utils import atomic_write_json, atomic_write_text, ensure_directory_exists
from .curves import averaged_advantage
from .metrics import bounding_diagonal, p2p_distance, roi_restricted_error

logger = logging.getLogger(__name__)

MODE_ROI = "roi"
MODE_UNIFORM = "uniform"

# Metric name -> True when lower values are better.
METRICS = {"psnr": False, "mse": True, "roi_error": True}

CLASS_ERROR_PREFIX = "roi_error_class"


@dataclass(frozen=True)
class SweepTask:
    """One (scene, mode, detector, q_r, q_b) encoding to measure."""
    scene: EvalScene
    mode: str
    q_r: int
    q_b: int
    plane: PlaneConfig
    store_point_map: bool = True
    detector: str = ""


def measure_reconstruction(scene: EvalScene, reconstructed: Sequence[PointCloud]) -> Dict[str, float]:
    """
    Frame-averaged metrics of a decoded scene.

    Frames without reference RoI points are left out of the RoI error; it is
    NaN when no frame has any. Scenes with point classes also get one
    ``roi_error_class<id>`` entry per class present, averaged over the frames
    holding points of that class.
    """
    if len(reconstructed) != len(scene.clouds):
        raise DataError(f"Scene {scene.name}: {len(reconstructed)} decoded frames for {len(scene.clouds)}")
    mse_values, psnr_values, roi_values = [], [], []
    class_values: Dict[int, List[float]] = {}
    classes = scene.point_classes or [None] * len(scene.clouds)
    for original, decoded, mask, point_classes in zip(scene.clouds, reconstructed, scene.eval_masks, classes):
        mse, psnr_db = p2p_distance(original, decoded, bounding_diagonal(original.points) or 1.0)
        mse_values.append(mse)
        psnr_values.append(psnr_db)
        if mask.count:
            roi_values.append(roi_restricted_error(original, decoded, mask))
        if point_classes is not None:
            for class_id in np.unique(point_classes[point_classes >= 0]).tolist():
                class_mask = RoiMask(point_classes == class_id)
                class_values.setdefault(class_id, []).append(roi_restricted_error(original, decoded, class_mask))
    measured = {
        "mse": float(np.mean(mse_values)),
        "psnr": float(np.mean(psnr_values)),
        "roi_error": float(np.mean(roi_values)) if roi_values else float("nan"),
    }
    for class_id in sorted(class_values):
        measured[f"{CLASS_ERROR_PREFIX}{class_id}"] = float(np.mean(class_values[class_id]))
    return measured


def run_task(task: SweepTask) -> Dict[str, Any]:
    """Encode, decode and measure one sweep configuration."""
    scene = task.scene
    masks = scene.masks_for(task.detector) if task.mode == MODE_ROI else None
    encoded = encode_sequence(scene.clouds, masks, task.q_r, task.q_b, task.plane,
                              scene.frame_rate, task.store_point_map)
    row = {
        "scene": scene.name,
        "mode": task.mode,
        "detector": task.detector,
        "q_r": task.q_r,
        "q_b": task.q_b,
        "frames": encoded.frame_count,
        "bits": encoded.total_bits,
        "bitrate_mbps": encoded.bitrate_mbps(scene.frame_rate),
        "roi_macroblocks": int(encoded.indicator.sum()),
        "dropped_points": int(sum(encoded.dropped_counts)),
    }
    row.update(measure_reconstruction(scene, reconstruct_sequence(encoded.bitstream)))
    return row


def measure_bitstream(data: bytes, scene: EvalScene, label: str = "") -> Dict[str, Any]:
    """
    Measure an existing bitstream against the scene it encodes.

    Args:
        data: Serialized container
        scene: Original frames and reference RoI masks
        label: Name recorded in the row

    Returns:
        Row with size, bitrate and metrics
    """
    bitstream = read_bitstream(data)
    qp_values = np.concatenate([s.qp_map.values.reshape(-1) for s in bitstream.segments]) \
        if bitstream.segments else np.zeros(0, dtype=np.int64)
    row = {
        "scene": scene.name,
        "bitstream": label,
        "frames": bitstream.frame_count,
        "bits": 8 * len(data),
        "bitrate_mbps": 8 * len(data) * bitstream.frame_rate / max(bitstream.frame_count, 1) / 1e6,
        "min_qp": int(qp_values.min()) if qp_values.size else None,
        "max_qp": int(qp_values.max()) if qp_values.size else None,
    }
    row.update(measure_reconstruction(scene, reconstruct_sequence(bitstream)))
    return row


def scene_detectors(scenes: Sequence[EvalScene]) -> List[str]:
    """
    Detector variants shared by all scenes.

    Returns:
        Variant names in the first scene's order, or ``[""]`` for scenes
        carrying only their default masks

    Raises:
        DataError: If scenes carry different variants
    """
    names = list(scenes[0].detector_masks) if scenes else []
    for scene in scenes[1:]:
        if set(scene.detector_masks) != set(names):
            raise DataError(f"Scene {scene.name} has detector variants {sorted(scene.detector_masks)}, "
                            f"expected {sorted(names)}")
    return names or [""]


def sweep_tasks(scenes: Sequence[EvalScene], q_r_values: Sequence[int], q_b_values: Sequence[int],
                plane: PlaneConfig, store_point_map: bool = True,
                detectors: Sequence[str] = ("",)) -> List[SweepTask]:
    """Uniform baseline at every q_b, then RoI encoding per detector at every (q_r, q_b), per scene."""
    tasks = []
    for scene in scenes:
        for q_b in q_b_values:
            tasks.append(SweepTask(scene, MODE_UNIFORM, q_b, q_b, plane, store_point_map))
        for detector in detectors:
            for q_r in q_r_values:
                for q_b in q_b_values:
                    tasks.append(SweepTask(scene, MODE_ROI, q_r, q_b, plane, store_point_map, detector))
    return tasks


def curve_label(mode: str, q_r: Optional[int] = None, detector: str = "") -> str:
    """Name of a curve in reports."""
    if mode == MODE_UNIFORM:
        return MODE_UNIFORM
    return f"{MODE_ROI}_{detector}_qr{q_r}" if detector else f"{MODE_ROI}_qr{q_r}"


def class_error_columns(table: pd.DataFrame) -> List[str]:
    """Per-class RoI error columns of a row or summary table."""
    return sorted((c for c in table.columns if c.startswith(CLASS_ERROR_PREFIX)),
                  key=lambda c: int(c[len(CLASS_ERROR_PREFIX):]))


def summarize(rows: pd.DataFrame) -> pd.DataFrame:
    """Scene-averaged bitrate and metrics per (mode, detector, q_r, q_b)."""
    columns = ["bits", "bitrate_mbps"] + list(METRICS) + class_error_columns(rows)
    summary = rows.groupby(["mode", "detector", "q_r", "q_b"], as_index=False)[columns].mean()
    summary["curve"] = [curve_label(m, q, d)
                        for m, q, d in zip(summary["mode"], summary["q_r"], summary["detector"])]
    return summary.sort_values(["curve", "bitrate_mbps"]).reset_index(drop=True)


def build_curves(summary: pd.DataFrame) -> Dict[Tuple[str, str], RateCurve]:
    """
    Metric-bitrate curves keyed by (curve label, metric).

    Points whose metric is not finite are left out.
    """
    curves = {}
    for label, group in summary.groupby("curve"):
        for metric in METRICS:
            samples = [RateSample(float(rate), float(value))
                       for rate, value in zip(group["bitrate_mbps"], group[metric])
                       if np.isfinite(value) and rate > 0]
            if len(samples) < len(group):
                logger.warning(f"Curve {label}: {len(group) - len(samples)} points without {metric}")
            curves[(label, metric)] = RateCurve.from_samples(samples, f"{label}/{metric}")
    return curves


def advantage_report(curves: Dict[Tuple[str, str], RateCurve], q_r_values: Sequence[int],
                     samples: int = DEFAULT_ADVANTAGE_SAMPLES,
                     detectors: Sequence[str] = ("",)) -> List[Dict[str, Any]]:
    """
    Averaged advantage of each RoI curve over the uniform baseline.

    One entry per (detector, q_r, metric). Entries whose curves cannot be
    compared carry the reason instead of a value.
    """
    report = []
    for detector in detectors:
        for q_r in q_r_values:
            for metric, lower_is_better in METRICS.items():
                entry = {"detector": detector, "q_r": int(q_r), "metric": metric,
                         "lower_is_better": lower_is_better, "advantage": None}
                roi_curve = curves.get((curve_label(MODE_ROI, q_r, detector), metric))
                baseline = curves.get((MODE_UNIFORM, metric))
                if roi_curve is None or baseline is None:
                    entry["error"] = "missing curve"
                else:
                    try:
                        entry["advantage"] = averaged_advantage(roi_curve, baseline, samples)
                    except DataError as e:
                        entry["error"] = str(e)
                        logger.warning(f"No advantage for {detector or MODE_ROI} q_r={q_r}, {metric}: {e}")
                report.append(entry)
    return report


@dataclass
class SweepResult:
    """
    Output of a sweep.

    Attributes:
        rows: One row per (scene, mode, q_r, q_b)
        summary: Scene-averaged rows per (mode, q_r, q_b)
        curves: Metric-bitrate curves keyed by (curve label, metric)
        advantages: Averaged advantage entries
        samples: Sample count used for the advantages
    """
    rows: pd.DataFrame
    summary: pd.DataFrame
    curves: Dict[Tuple[str, str], RateCurve] = field(default_factory=dict)
    advantages: List[Dict[str, Any]] = field(default_factory=list)
    samples: int = DEFAULT_ADVANTAGE_SAMPLES

    def advantage(self, q_r: int, metric: str, detector: str = "") -> Optional[float]:
        """Averaged advantage of one RoI curve, or None when undefined."""
        for entry in self.advantages:
            if entry["q_r"] == q_r and entry["metric"] == metric and entry["detector"] == detector:
                return entry["advantage"]
        return None

    def plot_table(self) -> pd.DataFrame:
        """Long-format table with one row per (curve, q_b, metric)."""
        return self.summary.melt(id_vars=["curve", "mode", "detector", "q_r", "q_b", "bitrate_mbps"],
                                 value_vars=list(METRICS) + class_error_columns(self.summary),
                                 var_name="metric", value_name="value")

    def write(self, directory: str) -> List[Path]:
        """
        Write the CSV tables and the JSON advantage report.

        Besides the combined tables, each curve gets its own
        ``summary_<curve>.csv`` with its rows in bitrate order.

        Returns:
            Paths of the written files
        """
        out = ensure_directory_exists(directory)
        written = [
            atomic_write_text(out / "sweep_rows.csv", self.rows.to_csv(index=False)),
            atomic_write_text(out / "sweep_summary.csv", self.summary.to_csv(index=False)),
            atomic_write_text(out / "sweep_plot.csv", self.plot_table().to_csv(index=False)),
            atomic_write_json(out / "advantage.json",
                              {"samples": self.samples, "advantages": self.advantages}),
        ]
        for label, group in self.summary.groupby("curve"):
            written.append(atomic_write_text(out / f"summary_{label}.csv",
                                             group.sort_values("bitrate_mbps").to_csv(index=False)))
        for path in written:
            logger.info(f"Wrote {path}")
        return written


def run_sweep(scenes: Sequence[EvalScene], q_r_values: Sequence[int] = DEFAULT_QR_VALUES,
              q_b_values: Sequence[int] = DEFAULT_QB_VALUES, plane: Optional[PlaneConfig] = None,
              workers: int = 1, store_point_map: bool = True,
              samples: int = DEFAULT_ADVANTAGE_SAMPLES, progress: bool = True) -> SweepResult:
    """
    Run the full RoI-versus-uniform sweep.

    Args:
        scenes: Scenes to encode
        q_r_values: RoI QPs
        q_b_values: Background QPs
        plane: Projection plane
        workers: Worker processes (1 runs inline)
        store_point_map: Count the point-to-pixel map in the bitrate
        samples: Sample count N of the averaged advantage
        progress: Show a progress bar

    Returns:
        The sweep result
    """
    if not scenes:
        raise DataError("Sweep needs at least one scene")
    plane = plane or PlaneConfig()
    detectors = scene_detectors(scenes)
    tasks = sweep_tasks(scenes, q_r_values, q_b_values, plane, store_point_map, detectors)
    logger.info(f"Sweeping {len(scenes)} scenes over {len(tasks)} encodings with {workers} workers")

    bar = tqdm(total=len(tasks), desc="Sweep", unit="encoding", disable=not progress)
    if workers > 1:
        with Pool(workers) as pool:
            records = []
            for record in pool.imap(run_task, tasks):
                records.append(record)
                bar.update()
    else:
        records = []
        for task in tasks:
            records.append(run_task(task))
            bar.update()
    bar.close()

    rows = pd.DataFrame(records)
    summary = summarize(rows)
    curves = build_curves(summary)
    advantages = advantage_report(curves, q_r_values, samples, detectors)
    return SweepResult(rows, summary, curves, advantages, samples)
