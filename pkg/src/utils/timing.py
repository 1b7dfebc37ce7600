"""
Stage timing helpers.

Used to log per-stage durations (index build, GMM fits, encode, ...) and to
collect them for the points-in-boxes speed comparison.
"""

import logging
import time
from collections import defaultdict
from contextlib import contextmanager
from typing import Dict, Iterator, List, Optional

logger = logging.getLogger(__name__)


class StageTimer:
    """
    Accumulates wall-clock durations per named stage.

    Attributes:
        durations: Mapping from stage name to recorded durations in seconds
    """

    def __init__(self):
        """Initialize an empty timer."""
        self.durations: Dict[str, List[float]] = defaultdict(list)

    def record(self, stage: str, seconds: float) -> None:
        """Record one duration for a stage."""
        self.durations[stage].append(seconds)

    def total(self, stage: str) -> float:
        """Total seconds spent in a stage."""
        return sum(self.durations.get(stage, []))

    def mean(self, stage: str) -> float:
        """Mean seconds per recorded call of a stage (0 if never recorded)."""
        values = self.durations.get(stage, [])
        return sum(values) / len(values) if values else 0.0

    def summary(self) -> Dict[str, float]:
        """Total milliseconds per stage."""
        return {stage: 1000.0 * sum(values) for stage, values in self.durations.items()}


@contextmanager
def log_timing(stage: str, timer: Optional[StageTimer] = None,
               level: int = logging.INFO) -> Iterator[None]:
    """
    Time a block and log its duration.

    Args:
        stage: Name of the stage being timed
        timer: Optional StageTimer receiving the duration
        level: Logging level of the completion message
    """
    start = time.perf_counter()
    try:
        yield
    finally:
        elapsed = time.perf_counter() - start
        if timer is not None:
            timer.record(stage, elapsed)
        logger.log(level, f"{stage} completed in {1000.0 * elapsed:.2f} ms")
