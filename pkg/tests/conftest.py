from __future__ import annotations

import threading
from typing import Callable

import numpy as np
import pytest

from stabweave.app.config.pipeline_config import PipelineConfig
from stabweave.app.domain.errors import EstimationError, InsufficientTexture
from stabweave.app.domain.geometry.tps_mesh import ControlMotions, GridSpec
from stabweave.app.domain.models import FrameMotions, FramePair
from stabweave.app.infrastructure.inmemory.in_memory_frames import InMemoryFrameSink, InMemoryPairSource
from tests.helpers import textured_image

MotionFactory = Callable[[int, GridSpec], FrameMotions]


def zero_motions(t: int, grid: GridSpec) -> FrameMotions:
    zero = ControlMotions.zeros(grid)
    return FrameMotions(t=t, spatial_ref=zero, spatial_tgt=zero, temporal_ref=zero, temporal_tgt=zero)


class FakeMotionSource:
    """Implements MotionSource for tests; motions come from a factory, failures from a set of frame indices."""

    def __init__(
        self,
        grid: GridSpec,
        factory: MotionFactory = zero_motions,
        *,
        fail_at: set[int] | None = None,
        error: type[EstimationError] = InsufficientTexture,
    ) -> None:
        self._grid = grid
        self._factory = factory
        self._fail_at = fail_at or set()
        self._error = error
        self._lock = threading.Lock()
        self.calls: list[int] = []

    def motions(self, pair: FramePair, previous: FramePair | None) -> FrameMotions:
        with self._lock:
            self.calls.append(pair.index)
        if pair.index in self._fail_at:
            raise self._error(f"forced failure at t={pair.index}")
        return self._factory(pair.index, self._grid)


@pytest.fixture
def small_grid() -> GridSpec:
    return GridSpec(rows=3, cols=3, image_size=(96, 64))


@pytest.fixture
def frame_grid() -> GridSpec:
    return GridSpec(rows=4, cols=5, image_size=(160, 120))


@pytest.fixture
def fast_config() -> PipelineConfig:
    """Short window, few iterations and a coarse evaluation canvas, for pipeline-level tests."""
    return PipelineConfig.model_validate(
        {
            "grid": {"rows": 4, "cols": 5},
            "window": 3,
            "weights": {"alpha": [0.9]},
            "objective": {"eval_scale": 0.25},
            "optimizer": {"max_iters": 10},
            "threads": 2,
        }
    )


@pytest.fixture
def static_source() -> Callable[[int], InMemoryPairSource]:
    """Factory of identical, static two-view streams of T frames (160x120)."""

    def build(frames: int) -> InMemoryPairSource:
        image = textured_image(160, 120, seed=7)
        return InMemoryPairSource([image] * frames, [image] * frames)

    return build


@pytest.fixture
def memory_sink() -> InMemoryFrameSink:
    return InMemoryFrameSink()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
