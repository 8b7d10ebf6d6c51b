"""Offline (whole sequence) and online (sliding window) smoothing drivers."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from stabweave.app.config.pipeline_config import PipelineConfig
from stabweave.app.constants import StitchMode
from stabweave.app.domain.errors import MissingHistory
from stabweave.app.domain.geometry.tps_mesh import GridSpec
from stabweave.app.domain.models import FrameMotions
from stabweave.app.domain.smoothing.objective import LossBreakdown
from stabweave.app.domain.smoothing.optimizer import smooth_window, warm_start
from stabweave.app.domain.smoothing.terms import loss_online_collab
from stabweave.app.domain.trajectory import TrajectoryBuilder, TrajectoryWindow


@dataclass(frozen=True)
class OfflineResult:
    paths: np.ndarray  # (2, T, rows, cols, 2) smoothed S_hat
    meshes: np.ndarray  # (2, T, rows, cols, 2) smoothed M_hat
    delta: np.ndarray
    breakdown: LossBreakdown
    iterations: int


def smooth_offline(
    trajectories: np.ndarray, meshes: np.ndarray, grid: GridSpec, cfg: PipelineConfig
) -> OfflineResult:
    """One optimization over the whole sequence; an even length is padded by repeating the last frame."""
    length = trajectories.shape[1]
    padded = length % 2 == 0
    if padded:
        trajectories = np.concatenate([trajectories, trajectories[:, -1:]], axis=1)
        meshes = np.concatenate([meshes, meshes[:, -1:]], axis=1)
    base = trajectories[:, 0].copy()
    window = TrajectoryWindow(
        xi=length,
        trajectories=trajectories - base[:, None],
        meshes=meshes,
        base=base,
        grid=grid,
    )
    result = smooth_window(
        window, cfg.weights, cfg.optimizer, objective=cfg.objective, mode=StitchMode.OFFLINE
    )
    delta = result.increment.delta[:, :length]
    return OfflineResult(
        paths=trajectories[:, :length] + delta,
        meshes=meshes[:, :length] - delta,
        delta=delta,
        breakdown=result.breakdown,
        iterations=result.iterations,
    )


@dataclass(frozen=True)
class OnlineStep:
    xi: int
    meshes: np.ndarray  # (2, rows, cols, 2) smooth meshes of the current frame
    positions: np.ndarray  # (2, rows, cols, 2) absolute smoothed S_hat of the current frame
    window: TrajectoryWindow
    smoothed_window: np.ndarray  # (2, N, rows, cols, 2) absolute S_hat of the whole window
    breakdown: LossBreakdown
    iterations: int
    # Distance to the previous window's committed paths on the shared frames; None for the first window.
    window_discrepancy: float | None = None


class OnlineSmoother:
    """Owns one stream's trajectory caches and the previous window's Delta and committed paths."""

    def __init__(self, grid: GridSpec, cfg: PipelineConfig) -> None:
        self._cfg = cfg
        self.builder = TrajectoryBuilder(grid)
        self._previous_delta: np.ndarray | None = None

    @property
    def window_length(self) -> int:
        return self._cfg.window

    @property
    def ready(self) -> bool:
        return len(self.builder) >= self._cfg.window

    def push(self, motions: FrameMotions, frames: tuple[np.ndarray, np.ndarray] | None = None) -> np.ndarray:
        """Add the newest frame; returns its raw absolute positions (2, rows, cols, 2)."""
        positions = self.builder.add(motions, frames)
        self.builder.drop_before(motions.t)
        return positions

    def step(self) -> OnlineStep:
        """Smooth the window ending at the newest frame and commit it for the next window."""
        n = self._cfg.window
        xi = len(self.builder)
        if xi < n:
            raise MissingHistory(f"{xi} frames buffered, window needs {n}")
        window = self.builder.build_window(xi, n)
        initial = warm_start(self._previous_delta, window.trajectories.shape) if self._cfg.optimizer.warm_start else None
        result = smooth_window(
            window,
            self._cfg.weights,
            self._cfg.optimizer,
            objective=self._cfg.objective,
            mode=StitchMode.ONLINE,
            initial=initial,
        )
        delta = result.increment.delta
        self._previous_delta = delta
        absolute = window.trajectories + delta + window.base[:, None]
        discrepancy = None
        if window.history is not None:
            discrepancy = loss_online_collab(window.trajectories + delta, window.history, self._cfg.objective.norm)
        self.builder.commit(xi - n + 1, absolute)
        return OnlineStep(
            xi=xi,
            meshes=window.meshes[:, -1] - delta[:, -1],
            positions=absolute[:, -1],
            window=window,
            smoothed_window=absolute,
            breakdown=result.breakdown,
            iterations=result.iterations,
            window_discrepancy=discrepancy,
        )


def smooth_online_step(
    state: OnlineSmoother, motions: FrameMotions, frames: tuple[np.ndarray, np.ndarray] | None = None
) -> tuple[np.ndarray, OnlineSmoother]:
    """Consume one frame and return the smooth meshes of that frame. MissingHistory during startup."""
    state.push(motions, frames)
    return state.step().meshes, state
