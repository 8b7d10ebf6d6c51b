"""Composition root: build and lifecycle-manage concrete dependencies.

Composition may: import concrete classes, call factories, store interface types,
manage high-level lifecycle.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

from loguru import logger

from stabweave.app.application.estimation_service import EstimationService
from stabweave.app.application.stitching_service import StitchingService
from stabweave.app.application.synthetic_service import synth_generate
from stabweave.app.config.pipeline_config import PipelineConfig, load_pipeline_config
from stabweave.app.config.settings import Settings
from stabweave.app.constants import StitchMode
from stabweave.app.core import SERVICE_NAME
from stabweave.app.domain.geometry.tps_mesh import GridSpec
from stabweave.app.infrastructure.io.factory import create_frame_sink, create_frame_source
from stabweave.app.infrastructure.motion.factory import create_motion_source
from stabweave.app.infrastructure.persistence.factory import create_mesh_store
from stabweave.app.infrastructure.persistence.json_documents import write_json_document
from stabweave.app.ports.frame_source import FrameSource
from stabweave.app.schemas.synthetic import GroundTruth, SyntheticSpec

GROUND_TRUTH_FILE = "ground_truth.json"


def _log(event: str, **kwargs: Any) -> None:
    logger.bind(service_name=SERVICE_NAME, event=event, **kwargs).info("")


def resolve_pipeline_config(
    settings: Settings,
    config_path: str | Path | None = None,
    *,
    beta: float | None = None,
    window: int | None = None,
    mode: StitchMode | str | None = None,
) -> PipelineConfig:
    """File (explicit path, else STABWEAVE_CONFIG, else defaults), then CLI flags, then the env thread budget."""
    cfg = load_pipeline_config(config_path or settings.config_path)
    return cfg.with_overrides(beta=beta, window=window, mode=mode, threads=settings.threads)


class PipelineDependencies:
    """Holds the worker pool and builds services wired to concrete adapters."""

    def __init__(self, *, settings: Settings, cfg: PipelineConfig) -> None:
        self._settings = settings
        self._cfg = cfg
        self._executor: ThreadPoolExecutor | None = None

    @property
    def settings(self) -> Settings:
        return self._settings

    @property
    def cfg(self) -> PipelineConfig:
        return self._cfg

    @property
    def executor(self) -> ThreadPoolExecutor:
        if self._executor is None:
            raise RuntimeError("executor is not initialized")
        return self._executor

    def open(self) -> None:
        if self._executor is None:
            self._executor = ThreadPoolExecutor(max_workers=self._cfg.threads, thread_name_prefix=SERVICE_NAME)
            _log("executor_started", threads=self._cfg.threads)

    def close(self) -> None:
        if self._executor is not None:
            try:
                self._executor.shutdown(wait=True, cancel_futures=True)
            except Exception as exc:
                logger.warning("executor shutdown failed: {}", exc)
            self._executor = None

    def _grid(self, source: FrameSource) -> GridSpec:
        return GridSpec(self._cfg.grid.rows, self._cfg.grid.cols, source.frame_size)

    def stitching_service(
        self,
        ref_dir: str | Path,
        tgt_dir: str | Path,
        *,
        out_dir: str | Path | None = None,
        meshes_path: str | Path | None = None,
    ) -> StitchingService:
        source = create_frame_source(ref_dir, tgt_dir, self._cfg)
        motion_source = create_motion_source(
            self._cfg, self._grid(source), meshes_path, expected_frames=len(source)
        )
        return StitchingService(
            source,
            motion_source,
            create_frame_sink(out_dir),
            self._cfg,
            executor=self.executor,
            video_name=Path(ref_dir).resolve().parent.name or Path(ref_dir).name,
        )

    def estimation_service(self, ref_dir: str | Path, tgt_dir: str | Path, out_path: str | Path) -> EstimationService:
        source = create_frame_source(ref_dir, tgt_dir, self._cfg)
        return EstimationService(
            source,
            create_motion_source(self._cfg, self._grid(source)),
            create_mesh_store(out_path),
            self._cfg,
            executor=self.executor,
        )


def generate_synthetic_dataset(spec: SyntheticSpec, out_dir: str | Path) -> GroundTruth:
    """Write out_dir/ref/*.png, out_dir/tgt/*.png and out_dir/ground_truth.json."""
    root = Path(out_dir)
    truth = synth_generate(spec, create_frame_sink(root / "ref"), create_frame_sink(root / "tgt"))
    write_json_document(root / GROUND_TRUTH_FILE, truth)
    return truth


def create_pipeline_dependencies(
    settings: Settings | None = None,
    *,
    config_path: str | Path | None = None,
    beta: float | None = None,
    window: int | None = None,
    mode: StitchMode | str | None = None,
) -> PipelineDependencies:
    settings = settings or Settings()
    cfg = resolve_pipeline_config(settings, config_path, beta=beta, window=window, mode=mode)
    return PipelineDependencies(settings=settings, cfg=cfg)
