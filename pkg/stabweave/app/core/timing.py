from __future__ import annotations

import threading
from contextlib import contextmanager
from time import perf_counter
from typing import Iterator

from stabweave.app.constants import TimingStage


class StageTimer:
    """Accumulates wall time per pipeline stage; safe to share with worker threads."""

    def __init__(self) -> None:
        self._totals = dict.fromkeys(TimingStage.ALL, 0.0)
        self._lock = threading.Lock()

    def add(self, stage: str, elapsed_ms: float) -> None:
        if stage not in self._totals:
            raise KeyError(f"unknown timing stage: {stage}")
        with self._lock:
            self._totals[stage] += elapsed_ms

    @contextmanager
    def measure(self, stage: str) -> Iterator[None]:
        start = perf_counter()
        try:
            yield
        finally:
            self.add(stage, (perf_counter() - start) * 1000.0)

    def totals(self) -> dict[str, float]:
        with self._lock:
            return dict(self._totals)

    def per_frame(self, frames: int) -> dict[str, float]:
        """Mean milliseconds per frame for every stage."""
        if frames <= 0:
            return dict.fromkeys(TimingStage.ALL, 0.0)
        return {stage: round(total / frames, 3) for stage, total in self.totals().items()}
