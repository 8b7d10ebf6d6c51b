"""Ordered motion stream: estimation runs ahead on a thread pool, results come back in frame order.

The bounded queue keeps at most `depth` frames in flight between the reader and the consumer.
"""
from __future__ import annotations

import asyncio
from concurrent.futures import Executor
from dataclasses import dataclass, replace
from time import perf_counter
from typing import Any, AsyncIterator

from loguru import logger

from stabweave.app.constants import TimingStage
from stabweave.app.core import SERVICE_NAME
from stabweave.app.core.timing import StageTimer
from stabweave.app.domain.errors import EstimationError, EstimationFailed
from stabweave.app.domain.models import FrameMotions, FramePair
from stabweave.app.ports.frame_source import FrameSource
from stabweave.app.ports.motion_source import MotionSource

_END = object()


def _log(event: str, **kwargs: Any) -> None:
    logger.bind(service_name=SERVICE_NAME, event=event, **kwargs).info("")


@dataclass(frozen=True)
class EstimatedFrame:
    pair: FramePair
    motions: FrameMotions
    fallback: bool = False


def _timed_motions(
    motion_source: MotionSource, pair: FramePair, previous: FramePair | None
) -> tuple[FrameMotions, float]:
    start = perf_counter()
    motions = motion_source.motions(pair, previous)
    return motions, (perf_counter() - start) * 1000.0


async def estimated_frames(
    source: FrameSource,
    motion_source: MotionSource,
    executor: Executor,
    *,
    depth: int,
    timer: StageTimer | None = None,
) -> AsyncIterator[EstimatedFrame]:
    """Yield every pair with its motions in time order.

    A frame whose estimation fails reuses the previous frame's motions; failing on the
    first frame raises EstimationFailed.
    """
    loop = asyncio.get_running_loop()
    queue: asyncio.Queue[Any] = asyncio.Queue(maxsize=depth)

    async def produce() -> None:
        pairs = source.pairs()
        previous: FramePair | None = None
        try:
            while True:
                pair = await loop.run_in_executor(None, next, pairs, None)
                if pair is None:
                    break
                future = loop.run_in_executor(executor, _timed_motions, motion_source, pair, previous)
                await queue.put((pair, future))
                previous = pair
        finally:
            await queue.put(_END)

    producer = asyncio.create_task(produce())
    last: FrameMotions | None = None
    try:
        while True:
            item = await queue.get()
            if item is _END:
                break
            pair, future = item
            try:
                motions, elapsed_ms = await future
            except EstimationError as exc:
                if last is None:
                    raise EstimationFailed(pair.index, exc) from exc
                logger.bind(
                    service_name=SERVICE_NAME, event="estimation_fallback", t=pair.index, error=str(exc)
                ).warning("")
                motions = replace(last, t=pair.index)
                last = motions
                yield EstimatedFrame(pair, motions, fallback=True)
                continue
            if timer is not None:
                timer.add(TimingStage.ESTIMATION, elapsed_ms)
            _log("frame_estimated", t=pair.index, elapsed_ms=round(elapsed_ms, 2))
            last = motions
            yield EstimatedFrame(pair, motions)
        # Surfaces reader errors (decode failures, count mismatches).
        await producer
    finally:
        if not producer.done():
            producer.cancel()
            while not queue.empty():
                item = queue.get_nowait()
                if item is not _END:
                    item[1].cancel()
