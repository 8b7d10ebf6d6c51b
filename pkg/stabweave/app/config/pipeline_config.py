"""Pipeline configuration (JSON file). Unknown keys are rejected; defaults follow the method's published settings."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from stabweave.app.constants import StitchMode


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GridConfig(_Section):
    rows: int = Field(7, ge=3)
    cols: int = Field(9, ge=3)


class EstimatorConfig(_Section):
    match_grid: int = Field(10, ge=1, description="matching cells per axis")
    patch: int = Field(21, ge=3)
    search_radius: int = Field(48, ge=1)
    zncc_min: float = 0.8
    min_patch_std: float = Field(1.0, gt=0)
    min_matches: int = Field(8, ge=4)
    ransac_iters: int = Field(500, ge=1)
    ransac_inlier_px: float = Field(2.0, gt=0)
    min_inliers: int = Field(8, ge=4)
    seed: int = 0
    beta: float = 0.5
    subpixel: bool = False

    @field_validator("patch")
    @classmethod
    def _patch_is_odd(cls, v: int) -> int:
        if v % 2 == 0:
            raise ValueError("patch must be odd")
        return v

    @field_validator("zncc_min")
    @classmethod
    def _zncc_in_open_unit(cls, v: float) -> float:
        if not 0.0 < v < 1.0:
            raise ValueError("zncc_min must lie in (0, 1)")
        return v

    @field_validator("beta")
    @classmethod
    def _beta_in_unit(cls, v: float) -> float:
        if not 0.0 <= v <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        return v


class SmoothingWeights(_Section):
    data: float = Field(1.0, ge=0)
    smooth: float = Field(50.0, ge=0)
    shape: float = Field(10.0, ge=0)
    online: float = Field(0.1, ge=0)
    trajectory: float = Field(10.0, ge=0)
    align: float = Field(1000.0, ge=0)
    alpha: tuple[float, ...] = (0.9, 0.3, 0.1)

    @field_validator("alpha")
    @classmethod
    def _alpha_non_negative(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if not v or any(a < 0 for a in v):
            raise ValueError("alpha must be a non-empty list of non-negative numbers")
        return v


class ObjectiveConfig(_Section):
    norm: Literal["euclidean", "squared"] = "euclidean"
    eval_scale: float = Field(0.25, gt=0, le=1)
    eval_margin: int = Field(8, ge=0)
    collinearity_weight: float = Field(1.0, ge=0)
    similarity_weight: float = Field(1.0, ge=0)


class OptimizerConfig(_Section):
    method: Literal["adam", "lbfgs"] = "adam"
    max_iters: int = Field(60, ge=1)
    initial_step: float = Field(0.1, gt=0)
    step_growth: float = Field(1.2, ge=1)
    step_shrink: float = Field(0.5, gt=0, lt=1)
    max_backtracks: int = Field(8, ge=0)
    rel_tol: float = Field(1e-5, ge=0)
    # L-BFGS-B only: stop once the largest projected gradient component drops below this.
    grad_tol: float = Field(1e-12, ge=0)
    warm_start: bool = True


class RenderConfig(_Section):
    canvas_margin: int = Field(32, ge=0)


class PipelineConfig(_Section):
    grid: GridConfig = GridConfig()
    estimator: EstimatorConfig = EstimatorConfig()
    weights: SmoothingWeights = SmoothingWeights()
    objective: ObjectiveConfig = ObjectiveConfig()
    optimizer: OptimizerConfig = OptimizerConfig()
    render: RenderConfig = RenderConfig()
    window: int = 7
    mode: StitchMode = StitchMode.ONLINE
    working_size: tuple[int, int] = (480, 360)
    resize_to_working: bool = False
    threads: int = Field(4, ge=1)
    seed: int = 0

    @field_validator("window")
    @classmethod
    def _window_odd(cls, v: int) -> int:
        if v < 3 or v % 2 == 0:
            raise ValueError("window must be an odd number >= 3")
        return v

    @model_validator(mode="after")
    def _alpha_matches_window(self) -> "PipelineConfig":
        if len(self.weights.alpha) != (self.window - 1) // 2:
            raise ValueError(
                f"weights.alpha needs (window-1)/2 = {(self.window - 1) // 2} entries, "
                f"got {len(self.weights.alpha)}"
            )
        return self

    @property
    def beta(self) -> float:
        return self.estimator.beta

    def with_overrides(
        self,
        *,
        beta: float | None = None,
        window: int | None = None,
        mode: StitchMode | str | None = None,
        threads: int | None = None,
    ) -> "PipelineConfig":
        """Apply CLI/env overrides. A new window re-sizes alpha by truncating or repeating its last value."""
        data = self.model_dump()
        if beta is not None:
            data["estimator"]["beta"] = beta
        if window is not None:
            data["window"] = window
            half = max((window - 1) // 2, 1)
            alpha = list(data["weights"]["alpha"])
            data["weights"]["alpha"] = (alpha + [alpha[-1]] * half)[:half]
        if mode is not None:
            data["mode"] = StitchMode(mode)
        if threads is not None:
            data["threads"] = threads
        return PipelineConfig.model_validate(data)


def load_pipeline_config(path: str | Path | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    return PipelineConfig.model_validate(raw)
