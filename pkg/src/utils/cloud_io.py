"""
Readers and writers for clouds, boxes, masks and labels.

Cloud binary layout (little-endian): ``u32 count``, ``u8 flags`` (bit 0:
intensity present), then ``count`` float32 records ``x y z [intensity]``.

Mask sidecar layout (little-endian): ``"RMSK"``, ``u32 N``, ``u32 run
count``, then the run lengths as u32. Runs alternate between 0 and 1
starting with 0, so a mask starting with 1 has a leading run of length 0.
"""

import io
import logging
import struct
from pathlib import Path
from typing import List, Sequence

import numpy as np

from ..models.errors import DataError
from ..models.geometry import OrientedBox, PointCloud
from ..models.roi import RoiMask
from .file_utils import PathLike, atomic_write_bytes, atomic_write_json, atomic_write_text, ensure_file_exists, read_json

logger = logging.getLogger(__name__)

CLOUD_HEADER = struct.Struct("<IB")
FLAG_INTENSITY = 0x01

MASK_MAGIC = b"RMSK"
MASK_HEADER = struct.Struct("<4sII")


def cloud_to_bytes(cloud: PointCloud) -> bytes:
    """Serialize a cloud into the binary record format."""
    has_intensity = cloud.intensity is not None
    columns = [cloud.points]
    if has_intensity:
        columns.append(cloud.intensity[:, None])
    records = np.hstack(columns).astype("<f4")
    return CLOUD_HEADER.pack(len(cloud), FLAG_INTENSITY if has_intensity else 0) + records.tobytes()


def cloud_from_bytes(data: bytes) -> PointCloud:
    """
    Parse the binary record format.

    Raises:
        DataError: If the size does not match the header
    """
    if len(data) < CLOUD_HEADER.size:
        raise DataError("Cloud file shorter than its header")
    count, flags = CLOUD_HEADER.unpack_from(data, 0)
    width = 4 if flags & FLAG_INTENSITY else 3
    expected = CLOUD_HEADER.size + 4 * width * count
    if len(data) != expected:
        raise DataError(f"Cloud file holds {len(data)} bytes, header announces {expected}")
    records = np.frombuffer(data, "<f4", width * count, CLOUD_HEADER.size).reshape(count, width)
    records = records.astype(np.float64)
    intensity = records[:, 3] if width == 4 else None
    return PointCloud(records[:, :3], intensity)


def cloud_to_ply(cloud: PointCloud) -> str:
    """Serialize a cloud as ASCII PLY."""
    properties = ["x", "y", "z"] + (["intensity"] if cloud.intensity is not None else [])
    header = ["ply", "format ascii 1.0", f"element vertex {len(cloud)}"]
    header += [f"property float {name}" for name in properties]
    header.append("end_header")
    columns = [cloud.points] + ([cloud.intensity[:, None]] if cloud.intensity is not None else [])
    body = io.StringIO()
    if len(cloud):
        np.savetxt(body, np.hstack(columns), fmt="%.9g")
    return "\n".join(header) + "\n" + body.getvalue()


def cloud_from_ply(text: str) -> PointCloud:
    """
    Parse an ASCII PLY document with x, y, z and optional intensity.

    Raises:
        DataError: On unsupported or malformed content
    """
    lines = text.splitlines()
    if not lines or lines[0].strip() != "ply":
        raise DataError("Not a PLY document")
    count, properties, body_start = None, [], None
    for position, line in enumerate(lines[1:], start=1):
        tokens = line.split()
        if not tokens:
            continue
        if tokens[0] == "format" and tokens[1] != "ascii":
            raise DataError(f"Unsupported PLY format {tokens[1]}")
        elif tokens[0] == "element" and tokens[1] == "vertex":
            count = int(tokens[2])
        elif tokens[0] == "property" and count is not None:
            properties.append(tokens[-1])
        elif tokens[0] == "end_header":
            body_start = position + 1
            break
    if count is None or body_start is None:
        raise DataError("PLY header lacks a vertex element or end_header")
    missing = {"x", "y", "z"} - set(properties)
    if missing:
        raise DataError(f"PLY vertices lack properties {sorted(missing)}")

    rows = [line for line in lines[body_start:body_start + count] if line.strip()]
    if len(rows) != count:
        raise DataError(f"PLY announces {count} vertices, found {len(rows)}")
    values = (np.loadtxt(io.StringIO("\n".join(rows)), ndmin=2) if count
              else np.zeros((0, len(properties))))
    if values.shape[1] != len(properties):
        raise DataError("PLY vertex rows do not match the declared properties")
    points = values[:, [properties.index(axis) for axis in ("x", "y", "z")]]
    intensity = values[:, properties.index("intensity")] if "intensity" in properties else None
    return PointCloud(points, intensity)


def write_cloud(path: PathLike, cloud: PointCloud) -> Path:
    """Write a cloud as .bin records or ASCII .ply, chosen by suffix."""
    if Path(path).suffix.lower() == ".ply":
        return atomic_write_text(path, cloud_to_ply(cloud))
    return atomic_write_bytes(path, cloud_to_bytes(cloud))


def read_cloud(path: PathLike) -> PointCloud:
    """Read a cloud from a .bin or .ply file."""
    file_path = ensure_file_exists(path)
    if file_path.suffix.lower() == ".ply":
        return cloud_from_ply(file_path.read_text(encoding="utf-8"))
    return cloud_from_bytes(file_path.read_bytes())


def write_boxes(path: PathLike, boxes: Sequence[OrientedBox]) -> Path:
    """Write boxes as a JSON array of box records."""
    return atomic_write_json(path, [box.to_dict() for box in boxes])


def read_boxes(path: PathLike) -> List[OrientedBox]:
    """
    Read a JSON array of box records.

    Raises:
        DataError: If the document is not an array or a box is invalid
    """
    data = read_json(path)
    if not isinstance(data, list):
        raise DataError(f"Box file {path} must hold a JSON array")
    return [OrientedBox.from_dict(record) for record in data]


def mask_to_bytes(mask: RoiMask) -> bytes:
    """Run-length encode a mask."""
    bits = mask.bits.astype(np.int8)
    if bits.size == 0:
        runs = np.zeros(0, dtype=np.int64)
    else:
        bounds = np.concatenate([[0], np.flatnonzero(np.diff(bits)) + 1, [bits.size]])
        runs = np.diff(bounds)
        if bits[0]:
            runs = np.concatenate([[0], runs])
    return MASK_HEADER.pack(MASK_MAGIC, len(mask), runs.size) + runs.astype("<u4").tobytes()


def mask_from_bytes(data: bytes) -> RoiMask:
    """
    Decode a run-length encoded mask.

    Raises:
        DataError: If the header or run lengths are inconsistent
    """
    if len(data) < MASK_HEADER.size:
        raise DataError("Mask file shorter than its header")
    magic, size, run_count = MASK_HEADER.unpack_from(data, 0)
    if magic != MASK_MAGIC:
        raise DataError(f"Bad mask magic {magic!r}")
    if len(data) != MASK_HEADER.size + 4 * run_count:
        raise DataError(f"Mask file size does not match {run_count} runs")
    runs = np.frombuffer(data, "<u4", run_count, MASK_HEADER.size).astype(np.int64)
    if runs.sum() != size:
        raise DataError(f"Mask runs cover {runs.sum()} points, header announces {size}")
    return RoiMask(np.repeat(np.arange(run_count) % 2, runs).astype(bool))


def write_mask(path: PathLike, mask: RoiMask) -> Path:
    """Write a mask sidecar file."""
    return atomic_write_bytes(path, mask_to_bytes(mask))


def read_mask(path: PathLike) -> RoiMask:
    """Read a mask sidecar file."""
    return mask_from_bytes(ensure_file_exists(path).read_bytes())


def write_labels(path: PathLike, labels: np.ndarray) -> Path:
    """Write per-point integer labels as a .npy file."""
    buffer = io.BytesIO()
    np.save(buffer, np.asarray(labels, dtype=np.int64), allow_pickle=False)
    return atomic_write_bytes(path, buffer.getvalue())


def read_labels(path: PathLike) -> np.ndarray:
    """Read per-point labels written by ``write_labels``."""
    try:
        return np.load(ensure_file_exists(path), allow_pickle=False)
    except ValueError as e:
        raise DataError(f"Invalid label file {path}: {e}") from e
