"""
Scene manifests on disk.

A scene directory holds ``manifest.json`` plus ``frames/``, ``boxes/`` and
``labels/`` with one file per frame. Manifest paths are relative to the
manifest's directory.
"""

import logging
from pathlib import Path
from typing import List, Optional

from ..models.errors import DataError
from ..models.geometry import PointCloud
from ..models.scene import FrameEntry, SceneData, SceneManifest
from ..utils.cloud_io import read_boxes, read_cloud, read_labels, write_boxes, write_cloud, write_labels
from ..utils.file_utils import PathLike, atomic_write_json, ensure_directory_exists, read_json
from .synth import SyntheticScene

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def write_manifest(path: PathLike, manifest: SceneManifest) -> Path:
    """Write a manifest as JSON."""
    return atomic_write_json(path, manifest.to_dict())


def load_manifest(path: PathLike) -> SceneManifest:
    """
    Read a manifest. A directory path resolves to its ``manifest.json``.

    Raises:
        DataError: If the file is missing or malformed
    """
    manifest_path = Path(path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / MANIFEST_NAME
    data = read_json(manifest_path)
    if not isinstance(data, dict):
        raise DataError(f"Manifest {manifest_path} must hold a JSON object")
    return SceneManifest.from_dict(data)


def _resolve(base: Path, relative: Optional[str]) -> Optional[Path]:
    if relative is None:
        return None
    path = base / relative
    if not path.is_file():
        raise DataError(f"Manifest references missing file {path}")
    return path


def load_scene(path: PathLike) -> SceneData:
    """
    Load every frame referenced by a manifest.

    Args:
        path: Manifest file or scene directory

    Returns:
        Clouds carrying their frame index and pose, with boxes and labels

    Raises:
        DataError: If a referenced file is missing or inconsistent
    """
    manifest_path = Path(path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / MANIFEST_NAME
    manifest = load_manifest(manifest_path)
    base = manifest_path.parent

    clouds, boxes, labels = [], [], []
    for entry in manifest.frames:
        raw = read_cloud(_resolve(base, entry.cloud))
        clouds.append(PointCloud(raw.points, raw.intensity, entry.frame_index, entry.pose))
        box_path = _resolve(base, entry.boxes)
        boxes.append(read_boxes(box_path) if box_path else None)
        label_path = _resolve(base, entry.labels)
        frame_labels = read_labels(label_path) if label_path else None
        if frame_labels is not None and frame_labels.shape[0] != len(raw):
            raise DataError(f"Frame {entry.frame_index}: {frame_labels.shape[0]} labels "
                            f"for {len(raw)} points")
        labels.append(frame_labels)
    logger.info(f"Loaded scene {manifest.sequence_id} with {len(clouds)} frames")
    return SceneData(manifest, clouds, boxes, labels)


def write_scene(scene: SyntheticScene, directory: PathLike,
                sequence_id: Optional[str] = None) -> SceneManifest:
    """
    Write a synthetic scene and its manifest.

    Args:
        scene: Generated scene
        directory: Scene directory, created if needed
        sequence_id: Scene name (defaults to ``scene_<seed>``)

    Returns:
        The written manifest
    """
    out = ensure_directory_exists(directory)
    frames: List[FrameEntry] = []
    for cloud, frame_boxes, frame_labels in zip(scene.clouds, scene.boxes, scene.labels):
        stem = f"{cloud.frame_index:06d}"
        entry = FrameEntry(cloud.frame_index, f"frames/{stem}.bin", cloud.pose,
                           f"boxes/{stem}.json", f"labels/{stem}.npy")
        write_cloud(out / entry.cloud, cloud)
        write_boxes(out / entry.boxes, frame_boxes)
        write_labels(out / entry.labels, frame_labels)
        frames.append(entry)

    manifest = SceneManifest(sequence_id or f"scene_{scene.seed:04d}", frames,
                             scene.params.frame_rate, scene.seed, scene.params.to_dict())
    write_manifest(out / MANIFEST_NAME, manifest)
    logger.info(f"Wrote scene {manifest.sequence_id} ({len(frames)} frames) to {out}")
    return manifest
