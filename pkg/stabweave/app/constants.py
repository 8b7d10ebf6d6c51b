"""Service-level constants shared across modules."""
from __future__ import annotations

from enum import Enum, IntEnum


class StitchMode(str, Enum):
    ONLINE = "online"
    OFFLINE = "offline"


class View(IntEnum):
    """Index of a view in stacked (2, ...) arrays."""

    REFERENCE = 0
    TARGET = 1


class ExitCode(IntEnum):
    SUCCESS = 0
    INPUT_ERROR = 2
    ESTIMATION_FAILURE = 3
    INTERRUPTED = 130


class TimingStage:
    ESTIMATION = "estimation"
    TRAJECTORY = "trajectory"
    SMOOTHING = "smoothing"
    WARPING = "warping"
    BLENDING = "blending"
    METRICS = "metrics"

    ALL = (ESTIMATION, TRAJECTORY, SMOOTHING, WARPING, BLENDING, METRICS)


# PSNR reported for identical content.
PSNR_CAP_DB = 100.0
PIXEL_MAX = 255.0
