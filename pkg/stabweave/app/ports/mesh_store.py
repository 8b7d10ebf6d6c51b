"""Port: persisted per-frame control motions (mesh cache)."""
from __future__ import annotations

from typing import Protocol, Sequence

from stabweave.app.domain.geometry.tps_mesh import GridSpec
from stabweave.app.domain.models import FrameMotions


class MeshStore(Protocol):
    def read(self, grid: GridSpec) -> list[FrameMotions]:
        """Load and validate records against the configured grid."""
        ...

    def write(self, records: Sequence[FrameMotions], beta: float) -> None: ...
