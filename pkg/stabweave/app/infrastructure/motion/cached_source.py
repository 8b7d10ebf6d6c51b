"""Motion source replaying a mesh cache; estimation is skipped entirely."""
from __future__ import annotations

from typing import Sequence

from stabweave.app.domain.errors import CountMismatch
from stabweave.app.domain.models import FrameMotions, FramePair


class CachedMotionSource:
    def __init__(self, records: Sequence[FrameMotions]) -> None:
        self._records = {r.t: r for r in records}

    def __len__(self) -> int:
        return len(self._records)

    def motions(self, pair: FramePair, previous: FramePair | None) -> FrameMotions:
        record = self._records.get(pair.index)
        if record is None:
            raise CountMismatch(f"mesh cache has no record for frame t={pair.index}")
        return record
