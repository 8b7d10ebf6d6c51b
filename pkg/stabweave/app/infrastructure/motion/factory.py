"""Motion source factory: estimator by default, mesh cache when a path is supplied."""
from __future__ import annotations

from pathlib import Path

from stabweave.app.config.pipeline_config import PipelineConfig
from stabweave.app.domain.errors import CountMismatch
from stabweave.app.domain.geometry.tps_mesh import GridSpec
from stabweave.app.infrastructure.motion.cached_source import CachedMotionSource
from stabweave.app.infrastructure.motion.estimator_source import EstimatorMotionSource
from stabweave.app.infrastructure.persistence.factory import create_mesh_store
from stabweave.app.ports.motion_source import MotionSource


def create_motion_source(
    cfg: PipelineConfig,
    grid: GridSpec,
    meshes_path: str | Path | None = None,
    *,
    expected_frames: int | None = None,
) -> MotionSource:
    if meshes_path is not None:
        records = create_mesh_store(meshes_path).read(grid)
        if expected_frames is not None and len(records) != expected_frames:
            raise CountMismatch(f"mesh cache holds {len(records)} frames, input has {expected_frames}")
        return CachedMotionSource(records)
    return EstimatorMotionSource(cfg.estimator, grid)
