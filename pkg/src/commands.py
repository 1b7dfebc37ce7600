"""
Subcommand implementations.

Each command takes explicit arguments, writes its outputs atomically and
returns what it produced, so it can be driven from ``main`` or from code.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from .codec.bitstream import read_bitstream, write_bitstream
from .codec.encoder import SequenceEncoder
from .config import RunConfig
from .evaluation.sweep import SweepResult, measure_bitstream, run_sweep
from .geometry.boxes import label_points, points_in_boxes, points_in_boxes_bruteforce
from .models.codec import EncodedSequence
from .models.errors import DataError, InvariantError, UsageError
from .models.evaluation import EvalScene
from .models.geometry import OrientedBox, PointCloud
from .models.roi import RoiMask
from .models.scene import SceneData, SceneManifest
from .roi.pipeline import RoiDetector
from .scenes.manifest import load_scene, write_scene
from .scenes.synth import SceneParams, generate_scene
from .utils.cloud_io import read_mask, write_cloud, write_mask
from .utils.file_utils import PathLike, atomic_write_bytes, atomic_write_json, atomic_write_text, ensure_directory_exists
from .utils.image_utils import export_heatmap
from .utils.timing import StageTimer

logger = logging.getLogger(__name__)

MASK_SUFFIX = ".rmsk"


def mask_path(directory: PathLike, frame_index: int) -> Path:
    """Location of a frame's mask sidecar inside a mask directory."""
    return Path(directory) / f"{frame_index:06d}{MASK_SUFFIX}"


def cmd_synth(out_dir: PathLike, seed: int = 0, scenes: int = 1,
              params: Optional[SceneParams] = None) -> List[SceneManifest]:
    """
    Generate synthetic scenes.

    Scene ``i`` uses seed ``seed + i`` and is written to
    ``out_dir/scene_<seed>``.

    Returns:
        The written manifests
    """
    if scenes < 1:
        raise UsageError(f"Scene count must be positive, got {scenes}")
    params = (params or SceneParams()).validate()
    manifests = []
    for offset in range(scenes):
        scene_seed = seed + offset
        scene = generate_scene(scene_seed, params)
        name = f"scene_{scene_seed:04d}"
        manifests.append(write_scene(scene, Path(out_dir) / name, name))
    return manifests


def cmd_roi(manifest_path: PathLike, config: RunConfig, out_dir: Optional[PathLike] = None,
            export_heatmaps: bool = False) -> List[RoiMask]:
    """
    Compute RoI masks for every frame of a scene.

    Key frames (every ``propagation_stride``-th) run the configured detector
    on their boxes; the other frames receive propagated masks.

    Args:
        manifest_path: Scene manifest or directory
        config: Run configuration
        out_dir: Mask directory (defaults to ``masks/`` beside the manifest)
        export_heatmaps: Also write PGM heatmaps of the key frames

    Returns:
        One mask per frame
    """
    scene = load_scene(manifest_path)
    out = Path(out_dir) if out_dir else _scene_dir(manifest_path) / "masks"
    detector = RoiDetector.from_config(config)
    masks = detector.detect_sequence(scene.clouds, scene.boxes, config.propagation_stride)
    for cloud, mask in zip(scene.clouds, masks):
        write_mask(mask_path(out, cloud.frame_index), mask)

    if export_heatmaps:
        if detector.detector != "gmm":
            logger.warning("Heatmaps exist only for the gmm detector; skipping export")
        else:
            for position in range(0, len(scene), config.propagation_stride):
                heatmap = detector.heatmap(scene.clouds[position], scene.boxes[position])
                channels = [c for c in range(heatmap.num_classes) if heatmap.values[c].max() > 0]
                export_heatmap(heatmap, out / "heatmaps",
                               f"frame_{scene.clouds[position].frame_index:06d}", channels)

    total = sum(m.count for m in masks)
    logger.info(f"Wrote {len(masks)} masks ({total} RoI points) to {out}")
    for stage, ms in detector.timer.summary().items():
        logger.info(f"Stage {stage}: {ms:.1f} ms total")
    return masks


def load_masks(scene: SceneData, directory: PathLike) -> List[RoiMask]:
    """
    Read the mask sidecars of a scene.

    Raises:
        DataError: If a mask is missing or does not match its frame
    """
    masks = []
    for cloud in scene.clouds:
        mask = read_mask(mask_path(directory, cloud.frame_index))
        if len(mask) != len(cloud):
            raise DataError(f"Mask of frame {cloud.frame_index} has {len(mask)} bits "
                            f"for {len(cloud)} points")
        masks.append(mask)
    return masks


def cmd_encode(manifest_path: PathLike, config: RunConfig, out_path: PathLike,
               masks_dir: Optional[PathLike] = None) -> EncodedSequence:
    """
    Encode a scene into an RPCC bitstream.

    Without masks every frame is encoded uniformly at ``q_b``. A JSON report
    with the size accounting is written beside the bitstream.

    Returns:
        The encoded sequence
    """
    scene = load_scene(manifest_path)
    masks = load_masks(scene, masks_dir) if masks_dir else None
    encoder = SequenceEncoder.from_config(config)
    encoded = encoder.encode(scene.clouds, masks)
    data = write_bitstream(encoded.bitstream)
    path = atomic_write_bytes(out_path, data)

    report = {
        "scene": scene.name,
        "mode": "roi" if masks is not None else "uniform",
        "q_r": config.q_r,
        "q_b": config.q_b,
        "frames": encoded.frame_count,
        "total_bits": encoded.total_bits,
        "frame_bits": encoded.frame_bits,
        "bitrate_mbps": encoded.bitrate_mbps(),
        "roi_macroblocks": encoded.indicator.sum(axis=0).astype(int).tolist(),
        "dropped_points": encoded.dropped_counts,
        "outside_points": encoded.outside_counts,
    }
    atomic_write_json(path.with_suffix(".json"), report)
    logger.info(f"Wrote {path}: {encoded.total_bits} bits, {encoded.bitrate_mbps():.3f} Mbps")
    return encoded


def cmd_decode(bitstream_path: PathLike, out_dir: PathLike, fmt: str = "bin") -> List[PointCloud]:
    """
    Decode a bitstream into one cloud file per frame.

    Args:
        bitstream_path: RPCC container
        out_dir: Output directory
        fmt: "bin" or "ply"

    Returns:
        The reconstructed clouds
    """
    if fmt not in ("bin", "ply"):
        raise UsageError(f"Unknown cloud format {fmt!r}")
    path = Path(bitstream_path)
    if not path.is_file():
        raise DataError(f"Bitstream not found: {bitstream_path}")
    encoder = SequenceEncoder()
    clouds = encoder.decode(read_bitstream(path.read_bytes()))
    out = ensure_directory_exists(out_dir)
    for cloud in clouds:
        write_cloud(out / f"{cloud.frame_index:06d}.{fmt}", cloud)
    logger.info(f"Decoded {len(clouds)} frames into {out}")
    return clouds


def reference_masks(scene: SceneData) -> List[Optional[RoiMask]]:
    """
    Ground-truth object points per frame.

    Stored labels are used when present, otherwise membership in the frame's
    boxes. Frames with neither yield None.
    """
    masks: List[Optional[RoiMask]] = []
    for cloud, boxes, labels in zip(scene.clouds, scene.boxes, _padded(scene.labels, len(scene))):
        if labels is not None:
            masks.append(RoiMask(labels >= 0))
        elif boxes is not None:
            inside = np.zeros(len(cloud), dtype=bool)
            for members in points_in_boxes(cloud, boxes):
                inside[members] = True
            masks.append(RoiMask(inside))
        else:
            masks.append(None)
    return masks


def reference_classes(scene: SceneData) -> Optional[List[np.ndarray]]:
    """
    Object class id of every point, per frame.

    Points take the class of the box their stored label names, or of the
    first box containing them when no labels are stored. Frames without
    boxes get -1 throughout.

    Returns:
        One class array per frame, or None when no frame has boxes
    """
    classes = []
    for cloud, boxes, labels in zip(scene.clouds, scene.boxes, _padded(scene.labels, len(scene))):
        point_classes = np.full(len(cloud), -1, dtype=np.int64)
        if boxes:
            box_labels = labels if labels is not None else label_points(cloud, boxes)
            class_ids = np.array([box.class_id for box in boxes], dtype=np.int64)
            known = (box_labels >= 0) & (box_labels < len(boxes))
            point_classes[known] = class_ids[box_labels[known]]
        classes.append(point_classes)
    return classes if any(boxes for boxes in scene.boxes) else None


def detector_variants(config: RunConfig) -> Dict[str, RunConfig]:
    """
    Detector configurations compared by a sweep, keyed by variant name.

    "naive" yields one variant; "gmm" yields one per (k, gamma) pair drawn
    from ``k_values`` and ``gamma_values``, named like ``gmm_k5_g0.4``.
    """
    variants = {}
    for name in config.detectors:
        if name == "naive":
            variants["naive"] = config.with_overrides(detector="naive")
            continue
        for k in config.k_values or (config.k_components,):
            for gamma in config.gamma_values or (config.gamma,):
                variants[f"gmm_k{k}_g{gamma:g}"] = config.with_overrides(detector="gmm", k_components=k,
                                                                          gamma=gamma)
    return variants


def build_eval_scene(scene: SceneData, config: RunConfig) -> EvalScene:
    """
    Evaluation scene with detected RoI masks and ground-truth references.

    The configured detector provides the default masks; every variant of
    ``detector_variants`` adds its own set.
    """
    roi_masks = RoiDetector.from_config(config).detect_sequence(scene.clouds, scene.boxes,
                                                                config.propagation_stride)
    detector_masks = {}
    for label, variant in detector_variants(config).items():
        logger.info(f"Detecting RoI of {scene.name} with {label}")
        detector_masks[label] = RoiDetector.from_config(variant).detect_sequence(
            scene.clouds, scene.boxes, variant.propagation_stride)
    eval_masks = [ref if ref is not None else roi
                  for ref, roi in zip(reference_masks(scene), roi_masks)]
    return EvalScene(scene.name, scene.clouds, roi_masks, eval_masks, scene.manifest.frame_rate,
                     detector_masks, reference_classes(scene))


def cmd_eval(manifest_paths: Sequence[PathLike], config: RunConfig, out_dir: PathLike,
             bitstreams: Optional[Sequence[PathLike]] = None,
             progress: bool = True) -> Any:
    """
    Evaluate RoI encoding.

    Without bitstreams a full sweep runs: uniform baseline at every q_b and
    RoI encoding at every (q_r, q_b) for each detector variant, reported as
    CSV tables and a JSON advantage report. With bitstreams, each one is measured against its
    scene (paired in order, or all against a single scene).

    Returns:
        The SweepResult, or the list of bitstream rows
    """
    if not manifest_paths:
        raise UsageError("At least one scene manifest is required")
    scenes = [build_eval_scene(load_scene(path), config) for path in manifest_paths]

    if bitstreams:
        if len(scenes) not in (1, len(bitstreams)):
            raise UsageError(f"{len(bitstreams)} bitstreams cannot be paired with {len(scenes)} scenes")
        rows = []
        for position, bitstream_path in enumerate(bitstreams):
            path = Path(bitstream_path)
            if not path.is_file():
                raise DataError(f"Bitstream not found: {bitstream_path}")
            scene = scenes[0] if len(scenes) == 1 else scenes[position]
            rows.append(measure_bitstream(path.read_bytes(), scene, path.name))
        out = ensure_directory_exists(out_dir)
        atomic_write_text(out / "bitstream_rows.csv", pd.DataFrame(rows).to_csv(index=False))
        logger.info(f"Measured {len(rows)} bitstreams into {out / 'bitstream_rows.csv'}")
        return rows

    result: SweepResult = run_sweep(scenes, config.q_r_values, config.q_b_values, config.plane,
                                    config.workers, config.store_point_map,
                                    config.advantage_samples, progress)
    result.write(out_dir)
    for entry in result.advantages:
        if entry["advantage"] is not None:
            logger.info(f"{entry['detector'] or 'roi'} q_r={entry['q_r']} {entry['metric']}: "
                        f"advantage {entry['advantage']:.6g}")
    return result


def random_boxes(count: int, rng: np.random.Generator, extent: float = 45.0) -> List[OrientedBox]:
    """Random oriented boxes for the points-in-boxes benchmark."""
    boxes = []
    for _ in range(count):
        center = np.array([rng.uniform(-extent, extent), rng.uniform(-extent, extent), rng.uniform(-1.0, 1.0)])
        width, length, height = rng.uniform(0.5, 3.0), rng.uniform(0.5, 8.0), rng.uniform(1.0, 3.0)
        boxes.append(OrientedBox(center, width, length, height, rng.uniform(-np.pi, np.pi),
                                 int(rng.integers(10))))
    return boxes


def cmd_bench_pib(points: int = 100000, boxes: int = 100, repeats: int = 3, seed: int = 0,
                  workers: int = 1, out_path: Optional[PathLike] = None) -> Dict[str, Any]:
    """
    Compare the k-d tree and brute-force points-in-boxes paths.

    Returns:
        Mean milliseconds per box for both paths and their ratio

    Raises:
        InvariantError: If the two paths disagree
    """
    if points < 1 or boxes < 1 or repeats < 1:
        raise UsageError("Point count, box count and repeats must be positive")
    rng = np.random.default_rng(seed)
    cloud = PointCloud(np.column_stack([rng.uniform(-50.0, 50.0, (points, 2)),
                                        rng.uniform(-3.0, 3.0, points)]))
    box_list = random_boxes(boxes, rng)

    timer = StageTimer()
    for _ in range(repeats):
        fast = points_in_boxes(cloud, box_list, workers=workers, timer=timer)
        slow = points_in_boxes_bruteforce(cloud, box_list, timer=timer)
        for j, (a, b) in enumerate(zip(fast, slow)):
            if not np.array_equal(a, b):
                raise InvariantError(f"Points-in-boxes paths disagree on box {j}")

    tree_ms = 1000.0 * (timer.total("index build") + timer.total("points-in-boxes (k-d tree)")) / (repeats * boxes)
    brute_ms = 1000.0 * timer.total("points-in-boxes (brute force)") / (repeats * boxes)
    report = {
        "points": points,
        "boxes": boxes,
        "repeats": repeats,
        "seed": seed,
        "kdtree_ms_per_box": tree_ms,
        "bruteforce_ms_per_box": brute_ms,
        "ratio": tree_ms / brute_ms if brute_ms > 0 else None,
    }
    logger.info(f"Time per box: k-d tree {tree_ms:.3f} ms, brute force {brute_ms:.3f} ms")
    if out_path:
        atomic_write_json(out_path, report)
    return report


def _scene_dir(manifest_path: PathLike) -> Path:
    path = Path(manifest_path)
    return path if path.is_dir() else path.parent


def _padded(values: List[Any], size: int) -> List[Any]:
    return list(values) + [None] * (size - len(values))
