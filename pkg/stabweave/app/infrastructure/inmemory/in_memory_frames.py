"""In-memory frame source and sink for tests and synthetic runs."""
from __future__ import annotations

from typing import Iterator, Sequence

import numpy as np

from stabweave.app.constants import View
from stabweave.app.domain.errors import CountMismatch, SizeMismatch
from stabweave.app.domain.models import Frame, FramePair


class InMemoryPairSource:
    def __init__(self, reference: Sequence[np.ndarray], target: Sequence[np.ndarray]) -> None:
        if len(reference) != len(target):
            raise CountMismatch(f"{len(reference)} reference frames vs {len(target)} target frames")
        if not reference:
            raise CountMismatch("no frames")
        shapes = {f.shape[:2] for f in [*reference, *target]}
        if len(shapes) != 1:
            raise SizeMismatch(f"frames differ in size: {sorted(shapes)}")
        self._reference = list(reference)
        self._target = list(target)

    def __len__(self) -> int:
        return len(self._reference)

    @property
    def frame_size(self) -> tuple[int, int]:
        h, w = self._reference[0].shape[:2]
        return (int(w), int(h))

    def pairs(self) -> Iterator[FramePair]:
        for t, (ref, tgt) in enumerate(zip(self._reference, self._target), start=1):
            yield FramePair(t, Frame(ref, t, View.REFERENCE), Frame(tgt, t, View.TARGET))


class InMemoryFrameSink:
    def __init__(self) -> None:
        self.frames: dict[int, np.ndarray] = {}
        self.closed = False

    def write(self, index: int, image: np.ndarray) -> None:
        self.frames[index] = np.array(image, copy=True)

    def close(self) -> None:
        self.closed = True
