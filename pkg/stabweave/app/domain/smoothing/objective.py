"""Weighted window objective over the smoothing increment Delta.

Smooth paths are S + Delta and smooth meshes M - Delta, so d/dDelta = d/dS_hat - d/dM_hat.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from loguru import logger

from stabweave.app.config.pipeline_config import ObjectiveConfig, SmoothingWeights
from stabweave.app.constants import StitchMode
from stabweave.app.core import SERVICE_NAME
from stabweave.app.domain.geometry.tps_mesh import DistortionWeights
from stabweave.app.domain.smoothing.terms import (
    EvalContext,
    align_value_grad,
    data_value_grad,
    default_centers,
    online_value_grad,
    shape_value_grad,
    smooth_value_grad,
    trajectory_value_grad,
)
from stabweave.app.domain.trajectory import TrajectoryWindow

TERMS = ("data", "smooth", "shape", "online", "trajectory", "align")


@dataclass(frozen=True)
class SmoothingIncrement:
    """Delta for both views, (2, N, rows, cols, 2)."""

    delta: np.ndarray

    @property
    def ref(self) -> np.ndarray:
        return self.delta[0]

    @property
    def tgt(self) -> np.ndarray:
        return self.delta[1]

    def smooth_paths(self, window: TrajectoryWindow) -> np.ndarray:
        return window.trajectories + self.delta

    def smooth_meshes(self, window: TrajectoryWindow) -> np.ndarray:
        return window.meshes - self.delta


@dataclass(frozen=True)
class LossBreakdown:
    """Unweighted term values; terms with zero weight are not evaluated and read 0."""

    terms: dict[str, float]
    weights: dict[str, float]
    total: float
    overlap_empty: bool = False

    def weighted(self) -> dict[str, float]:
        return {k: self.weights[k] * self.terms[k] for k in TERMS}


@dataclass
class SmoothingObjective:
    window: TrajectoryWindow
    weights: SmoothingWeights
    config: ObjectiveConfig = field(default_factory=ObjectiveConfig)
    mode: StitchMode = StitchMode.ONLINE
    centers: Sequence[int] | None = None
    context: EvalContext | None = None

    def __post_init__(self) -> None:
        w = self.weights
        online = self.mode == StitchMode.ONLINE
        self._weights = {
            "data": w.data,
            "smooth": w.smooth,
            "shape": w.shape,
            "online": w.online if online else 0.0,
            "trajectory": w.trajectory,
            "align": w.align if online else 0.0,
        }
        if self.centers is None:
            self.centers = default_centers(self.window.length, w.alpha, all_centers=not online)
        self._distortion = DistortionWeights(self.config.collinearity_weight, self.config.similarity_weight)
        if self.context is None and (self._weights["trajectory"] > 0 or self._weights["align"] > 0):
            frames = self.window.last_frames if self._weights["align"] > 0 else None
            self.context = EvalContext.from_meshes(
                self.window.meshes, self.window.grid, self.config.eval_scale, self.config.eval_margin, frames
            )
        self._warned = False

    def _flag_empty(self) -> None:
        if not self._warned:
            logger.bind(service_name=SERVICE_NAME, event="overlap_empty", xi=self.window.xi).warning(
                "empty overlap in window ending at t={}", self.window.xi
            )
            self._warned = True

    def value_and_grad(self, delta: np.ndarray) -> tuple[float, np.ndarray, LossBreakdown]:
        win = self.window
        norm = self.config.norm
        s_hat = win.trajectories + delta
        m_hat = win.meshes - delta
        wts = self._weights
        terms = dict.fromkeys(TERMS, 0.0)
        grad_s = np.zeros_like(delta)
        grad_m = np.zeros_like(delta)
        empty = False

        if wts["data"] > 0:
            terms["data"], g = data_value_grad(s_hat, win.trajectories, norm)
            grad_s += wts["data"] * g
        if wts["smooth"] > 0:
            terms["smooth"], g = smooth_value_grad(s_hat, self.weights.alpha, norm, self.centers)
            grad_s += wts["smooth"] * g
        if wts["shape"] > 0:
            terms["shape"], g = shape_value_grad(m_hat, win.grid, self._distortion)
            grad_m += wts["shape"] * g
        if wts["online"] > 0 and win.history is not None:
            terms["online"], g = online_value_grad(s_hat, win.history, norm)
            grad_s += wts["online"] * g
        if wts["trajectory"] > 0 and self.context is not None:
            terms["trajectory"], gs, gm, flagged = trajectory_value_grad(s_hat, m_hat, self.context)
            grad_s += wts["trajectory"] * gs
            grad_m += wts["trajectory"] * gm
            empty |= flagged
        if wts["align"] > 0 and self.context is not None and self.context.images is not None:
            value, g_last, flagged = align_value_grad(m_hat[:, -1], self.context)
            terms["align"] = value
            grad_m[:, -1] += wts["align"] * g_last
            empty |= flagged

        if empty:
            self._flag_empty()
        total = float(sum(wts[k] * terms[k] for k in TERMS))
        breakdown = LossBreakdown(terms=terms, weights=dict(wts), total=total, overlap_empty=empty)
        return total, grad_s - grad_m, breakdown

    def evaluate(self, delta: np.ndarray) -> tuple[float, LossBreakdown]:
        total, _, breakdown = self.value_and_grad(delta)
        return total, breakdown


def loss_total(
    delta: np.ndarray,
    window: TrajectoryWindow,
    weights: SmoothingWeights,
    mode: StitchMode = StitchMode.ONLINE,
    config: ObjectiveConfig | None = None,
) -> tuple[float, LossBreakdown]:
    return SmoothingObjective(window, weights, config or ObjectiveConfig(), mode).evaluate(delta)


def loss_gradient(
    delta: np.ndarray,
    window: TrajectoryWindow,
    weights: SmoothingWeights,
    mode: StitchMode = StitchMode.ONLINE,
    config: ObjectiveConfig | None = None,
) -> np.ndarray:
    return SmoothingObjective(window, weights, config or ObjectiveConfig(), mode).value_and_grad(delta)[1]
