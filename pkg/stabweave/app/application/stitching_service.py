from __future__ import annotations

import asyncio
from concurrent.futures import Executor
from dataclasses import dataclass
from typing import Any

import numpy as np
from loguru import logger

from stabweave.app.application.motion_stream import estimated_frames
from stabweave.app.config.pipeline_config import PipelineConfig
from stabweave.app.constants import StitchMode, TimingStage, View
from stabweave.app.core import SERVICE_NAME
from stabweave.app.core.timing import StageTimer
from stabweave.app.domain.errors import FoldedMesh
from stabweave.app.domain.geometry.tps_mesh import DistortionWeights, GridSpec, Mesh, rigid_vertices
from stabweave.app.domain.metrics import alignment_scores, distortion_score, invalid_area_rate, stability_score
from stabweave.app.domain.models import FrameMotions, FramePair, StitchedFrame
from stabweave.app.domain.render import (
    Canvas,
    MaskedImage,
    canvas_extent,
    grow_canvas,
    online_canvas,
    overlap_and_blend,
    to_uint8,
    warp_frame,
)
from stabweave.app.domain.smoothing.drivers import OnlineSmoother, smooth_offline
from stabweave.app.domain.trajectory import TrajectoryBuilder
from stabweave.app.ports.frame_sink import FrameSink
from stabweave.app.ports.frame_source import FrameSource
from stabweave.app.ports.motion_source import MotionSource
from stabweave.app.schemas.report import FrameReport, VideoReport

VIEWS = (View.REFERENCE, View.TARGET)


def _log(event: str, **kwargs: Any) -> None:
    logger.bind(service_name=SERVICE_NAME, event=event, **kwargs).info("")


@dataclass(frozen=True)
class StitchResult:
    report: VideoReport
    meshes: np.ndarray  # (2, T, rows, cols, 2) meshes used for rendering
    positions: np.ndarray  # (2, T, rows, cols, 2) emitted trajectories
    raw_positions: np.ndarray  # (2, T, rows, cols, 2) unsmoothed trajectories


class StitchingService:
    """
    Runs one video pair end to end: estimation, trajectories, smoothing, rendering and scoring.

    Online mode emits frame t as soon as the window ending at t is smoothed; the first
    window - 1 frames pass through with their raw spatial meshes. Offline mode smooths the
    whole sequence once and renders afterwards.
    """

    def __init__(
        self,
        source: FrameSource,
        motion_source: MotionSource,
        sink: FrameSink,
        cfg: PipelineConfig,
        *,
        executor: Executor,
        video_name: str = "video",
    ) -> None:
        self._source = source
        self._motion_source = motion_source
        self._sink = sink
        self._cfg = cfg
        self._executor = executor
        self._video_name = video_name
        self._grid = GridSpec(cfg.grid.rows, cfg.grid.cols, source.frame_size)
        self._distortion = DistortionWeights(cfg.objective.collinearity_weight, cfg.objective.similarity_weight)

    @property
    def grid(self) -> GridSpec:
        return self._grid

    async def run(self) -> StitchResult:
        mode = self._cfg.mode
        timer = StageTimer()
        _log(
            "pipeline_started",
            video=self._video_name,
            mode=mode.value,
            frames=len(self._source),
            window=self._cfg.window,
            beta=self._cfg.beta,
            grid=f"{self._grid.rows}x{self._grid.cols}",
        )
        try:
            if mode == StitchMode.ONLINE:
                reports, meshes, positions, raw, discrepancies = await self._run_online(timer)
            else:
                reports, meshes, positions, raw = await self._run_offline(timer)
                discrepancies = []
        finally:
            self._sink.close()

        with timer.measure(TimingStage.METRICS):
            scores = {
                "stability": stability_score(positions[View.TARGET], self._cfg.weights.alpha, self._cfg.objective.norm),
                "stability_raw": stability_score(raw[View.TARGET], self._cfg.weights.alpha, self._cfg.objective.norm),
                "distortion": distortion_score(meshes[View.TARGET], self._grid, self._distortion),
            }
        timings = timer.per_frame(len(reports))
        report = VideoReport.aggregate(
            self._video_name,
            mode.value,
            reports,
            timings_ms=timings,
            window_discrepancy=float(np.mean(discrepancies)) if discrepancies else None,
            **scores,
        )
        _log("timing_breakdown", video=self._video_name, **timings)
        _log(
            "pipeline_finished",
            video=self._video_name,
            frames=len(reports),
            psnr_mean=report.psnr_mean,
            ssim_mean=report.ssim_mean,
            stability=round(report.stability, 4),
            distortion=round(report.distortion, 4),
            estimation_fallbacks=report.estimation_fallbacks,
            render_fallbacks=report.render_fallbacks,
        )
        return StitchResult(report=report, meshes=meshes, positions=positions, raw_positions=raw)

    def _raw_meshes(self, motions: FrameMotions) -> np.ndarray:
        rigid = rigid_vertices(self._grid)
        return np.stack([rigid + motions.spatial(v).motions for v in VIEWS])

    async def _run_online(
        self, timer: StageTimer
    ) -> tuple[list[FrameReport], np.ndarray, np.ndarray, np.ndarray, list[float]]:
        loop = asyncio.get_running_loop()
        smoother = OnlineSmoother(self._grid, self._cfg)
        canvas: Canvas | None = None
        reports: list[FrameReport] = []
        meshes: list[np.ndarray] = []
        positions: list[np.ndarray] = []
        raw_positions: list[np.ndarray] = []
        discrepancies: list[float] = []

        async for item in estimated_frames(
            self._source, self._motion_source, self._executor, depth=self._cfg.window, timer=timer
        ):
            pair, motions = item.pair, item.motions
            with timer.measure(TimingStage.TRAJECTORY):
                raw = smoother.push(motions, (pair.reference.pixels, pair.target.pixels))
            raw_meshes = self._raw_meshes(motions)
            if canvas is None:
                canvas = online_canvas([Mesh(raw_meshes[v], self._grid) for v in VIEWS], self._cfg.render.canvas_margin)

            smoothed = smoother.ready
            if smoothed:
                with timer.measure(TimingStage.SMOOTHING):
                    step = await loop.run_in_executor(self._executor, smoother.step)
                frame_meshes, frame_positions = step.meshes, step.positions
                if step.window_discrepancy is not None:
                    discrepancies.append(step.window_discrepancy)
                _log(
                    "window_smoothed",
                    xi=step.xi,
                    iterations=step.iterations,
                    loss=round(step.breakdown.total, 6),
                    overlap_empty=step.breakdown.overlap_empty,
                )
            else:
                frame_meshes, frame_positions = raw_meshes, raw

            grown = grow_canvas(canvas, [frame_meshes, raw_meshes], self._cfg.render.canvas_margin)
            if grown != canvas:
                _log("canvas_grown", t=pair.index, width=grown.size[0], height=grown.size[1])
                canvas = grown

            stitched = await loop.run_in_executor(
                self._executor, self._emit, pair, frame_meshes, raw_meshes, canvas, smoothed, timer
            )
            reports.append(self._frame_report(stitched, item.fallback))
            meshes.append(frame_meshes)
            positions.append(frame_positions)
            raw_positions.append(raw)

        return (
            reports,
            _stack_time(meshes, self._grid),
            _stack_time(positions, self._grid),
            _stack_time(raw_positions, self._grid),
            discrepancies,
        )

    async def _run_offline(
        self, timer: StageTimer
    ) -> tuple[list[FrameReport], np.ndarray, np.ndarray, np.ndarray]:
        loop = asyncio.get_running_loop()
        builder = TrajectoryBuilder(self._grid)
        fallbacks: dict[int, bool] = {}
        async for item in estimated_frames(
            self._source, self._motion_source, self._executor, depth=self._cfg.window, timer=timer
        ):
            with timer.measure(TimingStage.TRAJECTORY):
                builder.add(item.motions)
            fallbacks[item.pair.index] = item.fallback

        raw_positions = builder.positions()
        raw_meshes = builder.meshes()
        with timer.measure(TimingStage.SMOOTHING):
            result = await loop.run_in_executor(
                self._executor, smooth_offline, raw_positions, raw_meshes, self._grid, self._cfg
            )
        _log(
            "window_smoothed",
            xi=len(builder),
            iterations=result.iterations,
            loss=round(result.breakdown.total, 6),
            overlap_empty=result.breakdown.overlap_empty,
        )

        canvas = canvas_extent(result.meshes.reshape(-1, *self._grid.shape))
        reports: list[FrameReport] = []
        for pair in self._source.pairs():
            k = pair.index - 1
            stitched = await loop.run_in_executor(
                self._executor, self._emit, pair, result.meshes[:, k], raw_meshes[:, k], canvas, True, timer
            )
            reports.append(self._frame_report(stitched, fallbacks.get(pair.index, False)))
        return reports, result.meshes, result.paths, raw_positions

    def _warp_pair(
        self, pair: FramePair, meshes: np.ndarray, canvas: Canvas, *, strict: bool
    ) -> tuple[MaskedImage, MaskedImage]:
        frames = (pair.reference.pixels, pair.target.pixels)
        return tuple(warp_frame(frames[v], Mesh(meshes[v], self._grid), canvas, strict=strict) for v in VIEWS)

    def _emit(
        self,
        pair: FramePair,
        meshes: np.ndarray,
        raw_meshes: np.ndarray,
        canvas: Canvas,
        smoothed: bool,
        timer: StageTimer,
    ) -> StitchedFrame:
        render_fallback = False
        with timer.measure(TimingStage.WARPING):
            try:
                warped_ref, warped_tgt = self._warp_pair(pair, meshes, canvas, strict=True)
            except FoldedMesh as exc:
                logger.bind(
                    service_name=SERVICE_NAME, event="render_fallback", t=pair.index, quad=exc.quad_index
                ).warning("")
                render_fallback = True
                warped_ref, warped_tgt = self._warp_pair(pair, raw_meshes, canvas, strict=False)
        with timer.measure(TimingStage.BLENDING):
            stitched, overlap = overlap_and_blend(warped_ref, warped_tgt)
            image = to_uint8(stitched)
            self._sink.write(pair.index, image)
        with timer.measure(TimingStage.METRICS):
            scores = alignment_scores(warped_ref.pixels, warped_tgt.pixels, overlap)
            invalid_area = invalid_area_rate(warped_ref.mask, warped_tgt.mask)
        if scores.overlap_empty:
            logger.bind(service_name=SERVICE_NAME, event="overlap_empty", t=pair.index).warning("")
        _log(
            "frame_emitted",
            t=pair.index,
            smoothed=smoothed,
            psnr=None if scores.psnr is None else round(scores.psnr, 3),
            ssim=None if scores.ssim is None else round(scores.ssim, 4),
        )
        return StitchedFrame(
            index=pair.index,
            image=image,
            overlap=overlap,
            smoothed=smoothed,
            psnr=scores.psnr,
            ssim=scores.ssim,
            overlap_empty=scores.overlap_empty,
            render_fallback=render_fallback,
            canvas_size=canvas.size,
            invalid_area=invalid_area,
        )

    @staticmethod
    def _frame_report(stitched: StitchedFrame, estimation_fallback: bool) -> FrameReport:
        return FrameReport(
            index=stitched.index,
            psnr=stitched.psnr,
            ssim=stitched.ssim,
            overlap_empty=stitched.overlap_empty,
            smoothed=stitched.smoothed,
            render_fallback=stitched.render_fallback,
            estimation_fallback=estimation_fallback,
            canvas_size=stitched.canvas_size,
            invalid_area=stitched.invalid_area,
        )


def _stack_time(items: list[np.ndarray], grid: GridSpec) -> np.ndarray:
    """Stack per-frame (2, rows, cols, 2) arrays along a new time axis 1."""
    if not items:
        return np.zeros((2, 0, *grid.shape))
    return np.stack(items, axis=1)
