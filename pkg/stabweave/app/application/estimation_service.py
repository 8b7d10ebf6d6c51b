from __future__ import annotations

from concurrent.futures import Executor
from typing import Any

from loguru import logger

from stabweave.app.application.motion_stream import estimated_frames
from stabweave.app.config.pipeline_config import PipelineConfig
from stabweave.app.core import SERVICE_NAME
from stabweave.app.domain.models import FrameMotions
from stabweave.app.ports.frame_source import FrameSource
from stabweave.app.ports.mesh_store import MeshStore
from stabweave.app.ports.motion_source import MotionSource


def _log(event: str, **kwargs: Any) -> None:
    logger.bind(service_name=SERVICE_NAME, event=event, **kwargs).info("")


class EstimationService:
    """Estimates motions for every frame pair and persists them as a mesh cache."""

    def __init__(
        self,
        source: FrameSource,
        motion_source: MotionSource,
        store: MeshStore,
        cfg: PipelineConfig,
        *,
        executor: Executor,
    ) -> None:
        self._source = source
        self._motion_source = motion_source
        self._store = store
        self._cfg = cfg
        self._executor = executor

    async def run(self) -> list[FrameMotions]:
        records: list[FrameMotions] = []
        fallbacks = 0
        async for item in estimated_frames(self._source, self._motion_source, self._executor, depth=self._cfg.window):
            records.append(item.motions)
            fallbacks += int(item.fallback)
        self._store.write(records, self._cfg.beta)
        _log("estimation_finished", frames=len(records), estimation_fallbacks=fallbacks)
        return records
