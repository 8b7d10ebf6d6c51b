"""Port: per-frame spatial and temporal control motions."""
from __future__ import annotations

from typing import Protocol

from stabweave.app.domain.models import FrameMotions, FramePair


class MotionSource(Protocol):
    def motions(self, pair: FramePair, previous: FramePair | None) -> FrameMotions:
        """Motions for pair.index; `previous` is the pair at index - 1 (None for the first frame).

        Must be safe to call from worker threads.
        """
        ...
