"""
Exception hierarchy for the RoI point cloud codec.

Library code raises these; only the command-line entry point turns them
into process exit codes.
"""

from typing import Optional


class RoiPccError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class UsageError(RoiPccError):
    """Invalid parameters or command-line usage."""

    exit_code = 2


class DataError(RoiPccError):
    """Malformed or inconsistent input data."""

    exit_code = 3


class BitstreamError(DataError):
    """
    Malformed bitstream container.

    Attributes:
        offset: Byte offset at which parsing failed (if known)
    """

    def __init__(self, message: str, offset: Optional[int] = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class InvariantError(RoiPccError):
    """An internal invariant was violated."""

    exit_code = 4
