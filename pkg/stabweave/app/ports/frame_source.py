"""Port: paired reference/target frame stream."""
from __future__ import annotations

from typing import Iterator, Protocol

from stabweave.app.domain.models import FramePair


class FrameSource(Protocol):
    def __len__(self) -> int: ...

    @property
    def frame_size(self) -> tuple[int, int]:
        """(width, height) shared by every frame."""
        ...

    def pairs(self) -> Iterator[FramePair]:
        """Yield frame pairs lazily in time order, t starting at 1."""
        ...
