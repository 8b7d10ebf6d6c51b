"""Domain models."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from stabweave.app.constants import View
from stabweave.app.domain.geometry.tps_mesh import ControlMotions, GridSpec

MIN_FRAME_SIDE = 64


@dataclass(frozen=True)
class Frame:
    """One decoded image (BGR or gray, uint8) of a view at time index t (1-based)."""

    pixels: np.ndarray
    index: int
    view: View

    def __post_init__(self) -> None:
        h, w = self.pixels.shape[:2]
        if w < MIN_FRAME_SIDE or h < MIN_FRAME_SIDE:
            raise ValueError(f"frame must be at least {MIN_FRAME_SIDE}x{MIN_FRAME_SIDE}, got {w}x{h}")

    @property
    def size(self) -> tuple[int, int]:
        """(width, height)."""
        return (int(self.pixels.shape[1]), int(self.pixels.shape[0]))


@dataclass(frozen=True)
class FramePair:
    index: int
    reference: Frame
    target: Frame


@dataclass(frozen=True)
class Correspondence:
    """p in frame A matched to q in frame B with ZNCC score."""

    p: tuple[float, float]
    q: tuple[float, float]
    score: float

    @property
    def displacement(self) -> tuple[float, float]:
        return (self.q[0] - self.p[0], self.q[1] - self.p[1])


@dataclass(frozen=True)
class FrameMotions:
    """Spatial and temporal control motions of both views at time t (1-based)."""

    t: int
    spatial_ref: ControlMotions
    spatial_tgt: ControlMotions
    temporal_ref: ControlMotions
    temporal_tgt: ControlMotions

    @property
    def grid(self) -> GridSpec:
        return self.spatial_ref.grid

    def spatial(self, view: View) -> ControlMotions:
        return self.spatial_ref if view == View.REFERENCE else self.spatial_tgt

    def temporal(self, view: View) -> ControlMotions:
        return self.temporal_ref if view == View.REFERENCE else self.temporal_tgt


@dataclass(frozen=True)
class StitchedFrame:
    """Rendered output of one time index plus its per-frame measurements."""

    index: int
    image: np.ndarray
    overlap: np.ndarray
    smoothed: bool
    psnr: float | None = None
    ssim: float | None = None
    overlap_empty: bool = False
    render_fallback: bool = False
    canvas_size: tuple[int, int] = (0, 0)
    invalid_area: float = 0.0
