"""
Image export utilities for RoI heatmaps.

Each class channel is written as a 16-bit PGM with ``round(65535 * Y)``
per cell. Row 0 of the image is the grid row with the largest y, so the
images display with y pointing up. A JSON header next to the images records
the grid geometry and the channel file names.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
from PIL import Image

from ..models.errors import DataError
from ..models.roi import GridGeometry, RoiHeatmap
from .file_utils import PathLike, atomic_write_json, ensure_directory_exists, ensure_file_exists, read_json

logger = logging.getLogger(__name__)

PGM_MAX = 65535
HEADER_NAME = "heatmap.json"


def heatmap_to_image(channel: np.ndarray) -> Image.Image:
    """
    Convert one heatmap channel into a 16-bit grayscale image.

    Args:
        channel: (rows, cols) values in [0, 1]

    Returns:
        A 32-bit integer PIL image holding 16-bit values
    """
    scaled = np.rint(np.clip(channel, 0.0, 1.0) * PGM_MAX).astype(np.int32)
    return Image.fromarray(np.ascontiguousarray(scaled[::-1]), mode="I")


def image_to_heatmap(image: Image.Image) -> np.ndarray:
    """Inverse of ``heatmap_to_image``, returning values in [0, 1]."""
    raw = np.asarray(image, dtype=np.int64)
    return raw[::-1].astype(np.float64) / PGM_MAX


def export_heatmap(heatmap: RoiHeatmap, directory: PathLike, prefix: str = "heatmap",
                   channels: Optional[Sequence[int]] = None) -> List[Path]:
    """
    Write heatmap channels as PGM images plus a JSON header.

    Args:
        heatmap: Heatmap to export
        directory: Output directory
        prefix: File name prefix of the images and header
        channels: Class channels to write (all by default)

    Returns:
        Paths of the written files, header last
    """
    out = ensure_directory_exists(directory)
    channels = range(heatmap.num_classes) if channels is None else channels
    written: List[Path] = []
    files: Dict[str, str] = {}
    for class_id in channels:
        if not 0 <= class_id < heatmap.num_classes:
            raise DataError(f"Heatmap has no class channel {class_id}")
        path = out / f"{prefix}_c{class_id:02d}.pgm"
        temp = path.with_name(f".{path.name}.tmp")
        heatmap_to_image(heatmap.values[class_id]).save(temp, format="PPM")
        temp.replace(path)
        files[str(class_id)] = path.name
        written.append(path)

    header = {"grid": heatmap.geometry.to_dict(), "num_classes": heatmap.num_classes,
              "scale": PGM_MAX, "channels": files}
    written.append(atomic_write_json(out / f"{prefix}.json", header))
    logger.info(f"Exported {len(files)} heatmap channels to {out}")
    return written


def load_heatmap(header_path: PathLike) -> RoiHeatmap:
    """
    Read a heatmap written by ``export_heatmap``.

    Channels missing from the export are zero.

    Raises:
        DataError: If the header or an image is inconsistent
    """
    header_file = ensure_file_exists(header_path)
    header = read_json(header_file)
    try:
        geometry = GridGeometry.from_dict(header["grid"])
        values = np.zeros((int(header["num_classes"]),) + geometry.shape)
        for class_id, name in header["channels"].items():
            with Image.open(ensure_file_exists(header_file.parent / name)) as image:
                channel = image_to_heatmap(image)
            if channel.shape != geometry.shape:
                raise DataError(f"Heatmap image {name} has shape {channel.shape}, grid is {geometry.shape}")
            values[int(class_id)] = channel
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"Invalid heatmap header {header_path}: {e}") from e
    return RoiHeatmap(values, geometry)
