from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, model_validator

Matrix = list[list[float]]


class SyntheticSpec(BaseModel):
    """Procedural two-view rig: one shared texture seen through per-frame homographies."""

    model_config = ConfigDict(extra="forbid")

    width: int = Field(480, ge=64)
    height: int = Field(360, ge=64)
    frames: int = Field(120, ge=1)
    seed: int = 0
    # Per-frame random 4-pt perturbation shared by both views (rig shake), in pixels.
    jitter_amplitude: float = Field(6.0, ge=0)
    # Extra independent per-view perturbation.
    view_jitter_amplitude: float = Field(0.0, ge=0)
    inter_view_shift: tuple[float, float] = (32.0, 0.0)
    # Projective tilt of the target view, as depth change across the image width.
    inter_view_tilt: float = 0.04
    pan_per_frame: tuple[float, float] = (0.0, 0.0)
    octaves: int = Field(5, ge=1, le=8)
    checker_size: int = Field(24, ge=2)
    checker_mix: float = Field(0.25, ge=0, le=1)
    grid_rows: int = Field(7, ge=3)
    grid_cols: int = Field(9, ge=3)

    @model_validator(mode="after")
    def _jitter_below_half_cell(self) -> "SyntheticSpec":
        cell = min(self.width / (self.grid_cols - 1), self.height / (self.grid_rows - 1))
        total = self.jitter_amplitude + self.view_jitter_amplitude
        if total >= cell / 2:
            raise ValueError(f"jitter amplitude {total} must stay below half a grid cell ({cell / 2:.2f} px)")
        return self

    @property
    def image_size(self) -> tuple[int, int]:
        return (self.width, self.height)


class GroundTruthFrame(BaseModel):
    t: int = Field(..., ge=1)
    # Corner displacements (TL, TR, BL, BR) of each view's jitter homography.
    ref_jitter_4pt: Matrix
    tgt_jitter_4pt: Matrix
    # Maps reference-frame points to target-frame points at time t.
    h_ref_to_tgt: Matrix
    h_ref_to_tgt_4pt: Matrix


class GroundTruth(BaseModel):
    spec: SyntheticSpec
    # Maps target-frame points to reference-frame points before jitter.
    inter_view: Matrix
    inter_view_4pt: Matrix
    frames: list[GroundTruthFrame]
