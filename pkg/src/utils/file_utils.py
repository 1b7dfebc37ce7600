"""
File utility functions for the RoI point cloud codec.

This module provides path checks and atomic file writes: content is written
to a temporary file in the target directory and moved into place with
``os.replace``.
"""

import json
import os
import logging
import tempfile
from pathlib import Path
from typing import Any, Callable, Union

from ..models.errors import DataError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def ensure_file_exists(file_path: PathLike) -> Path:
    """
    Check that a file exists and is a regular file.

    Args:
        file_path: Path to the file to check

    Returns:
        The path as a Path object

    Raises:
        DataError: If the path is empty, missing or not a file
    """
    if not file_path:
        raise DataError("File path is empty")
    path = Path(file_path)
    if not path.exists():
        raise DataError(f"File not found: {file_path}")
    if not path.is_file():
        raise DataError(f"Path exists but is not a file: {file_path}")
    return path


def ensure_directory_exists(dir_path: PathLike) -> Path:
    """
    Ensure a directory exists, creating it if necessary.

    Args:
        dir_path: Path to the directory

    Returns:
        The directory as a Path object
    """
    if not dir_path:
        raise DataError("Directory path is empty")
    path = Path(dir_path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _atomic_write(file_path: PathLike, writer: Callable[[Any], None], mode: str) -> Path:
    """Run ``writer`` on a temporary file and move it over ``file_path``."""
    path = Path(file_path)
    ensure_directory_exists(path.parent)
    handle, temp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        encoding = None if "b" in mode else "utf-8"
        with os.fdopen(handle, mode, encoding=encoding) as stream:
            writer(stream)
        os.replace(temp_name, path)
    except BaseException:
        if os.path.exists(temp_name):
            os.unlink(temp_name)
        raise
    logger.debug(f"Wrote {path}")
    return path


def atomic_write_bytes(file_path: PathLike, data: bytes) -> Path:
    """Atomically write binary content."""
    return _atomic_write(file_path, lambda stream: stream.write(data), "wb")


def atomic_write_text(file_path: PathLike, text: str) -> Path:
    """Atomically write text content (UTF-8)."""
    return _atomic_write(file_path, lambda stream: stream.write(text), "w")


def atomic_write_json(file_path: PathLike, data: Any) -> Path:
    """Atomically write an indented, key-sorted JSON document."""
    return atomic_write_text(file_path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def read_json(file_path: PathLike) -> Any:
    """
    Read a JSON document.

    Raises:
        DataError: If the file is missing or not valid JSON
    """
    path = ensure_file_exists(file_path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DataError(f"Invalid JSON in {file_path}: {e}") from e

