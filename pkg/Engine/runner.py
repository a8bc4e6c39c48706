"""
Sweep Runner Module

Runs the points of a parameter sweep:
- Tracks a status per point (idle, running, success, error)
- Executes points on a bounded thread pool
- Captures failures per point instead of aborting the sweep
- Reports status changes via a callback
"""

import logging
import threading
import time
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Optional


logger = logging.getLogger(__name__)


class PointStatus(str, Enum):
    """Possible sweep point statuses."""
    IDLE = "idle"
    RUNNING = "running"
    SUCCESS = "success"
    ERROR = "error"


@dataclass
class SweepPoint:
    """One configuration of a sweep."""
    label: str
    params: dict[str, Any] = field(default_factory=dict)
    entries: dict = field(default_factory=dict)


@dataclass
class PointState:
    """Runtime state of a sweep point."""
    label: str
    status: PointStatus = PointStatus.IDLE
    summary: Optional[dict] = None
    error: Optional[str] = None
    error_traceback: Optional[str] = None
    exception: Optional[BaseException] = None
    wall_time: float = 0.0


# Type for status update callback
StatusCallback = Callable[[str, PointState], None]
PointExecutor = Callable[[SweepPoint], dict]


class SweepRunner:
    """
    Executes sweep points, each independently, and collects their summaries.
    """

    def __init__(self, execute: PointExecutor, max_workers: int = 1):
        if max_workers < 1:
            raise ValueError("max_workers must be positive")
        self.execute = execute
        self.max_workers = max_workers
        self.points: list[SweepPoint] = []
        self.point_states: dict[str, PointState] = {}
        self._status_callback: Optional[StatusCallback] = None
        self._lock = threading.Lock()

    def set_points(self, points: list[SweepPoint]):
        labels = [p.label for p in points]
        if len(set(labels)) != len(labels):
            raise ValueError("Sweep point labels must be unique")
        self.points = points
        self.point_states = {p.label: PointState(label=p.label) for p in points}

    def set_status_callback(self, callback: StatusCallback):
        self._status_callback = callback

    def _update_status(self, label: str, **kwargs):
        with self._lock:
            state = self.point_states[label]
            for key, value in kwargs.items():
                setattr(state, key, value)
            logger.info("Sweep point %s: %s", label, state.status.value)
            if self._status_callback:
                self._status_callback(label, state)

    def _run_point(self, point: SweepPoint) -> PointState:
        self._update_status(point.label, status=PointStatus.RUNNING)
        started = time.perf_counter()
        try:
            summary = self.execute(point)
        except Exception as e:
            self._update_status(
                point.label,
                status=PointStatus.ERROR,
                error=str(e),
                error_traceback=traceback.format_exc(),
                exception=e,
                wall_time=time.perf_counter() - started,
            )
        else:
            self._update_status(
                point.label,
                status=PointStatus.SUCCESS,
                summary=summary,
                wall_time=time.perf_counter() - started,
            )
        return self.point_states[point.label]

    def run_all(self) -> list[PointState]:
        """
        Run every point.

        Returns:
            Point states in point order, whatever order they finished in
        """
        if self.max_workers == 1:
            for point in self.points:
                self._run_point(point)
        else:
            with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
                list(pool.map(self._run_point, self.points))
        return [self.point_states[p.label] for p in self.points]

    @property
    def failed(self) -> list[PointState]:
        return [s for s in self.point_states.values() if s.status == PointStatus.ERROR]
