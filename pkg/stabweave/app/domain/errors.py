"""Domain errors.

`InputError` and `EstimationError` are marker bases the entry point uses to pick an
exit code; everything else is a plain `StabweaveError`.
"""
from __future__ import annotations


class StabweaveError(Exception):
    """Base for all stitching failures."""


class InputError(StabweaveError):
    """Bad input data or configuration (exit code 2)."""


class EstimationError(StabweaveError):
    """Motion estimation could not produce a warp (exit code 3 when unrecovered)."""


class DegenerateCorrespondences(EstimationError):
    """The 4-point linear system is rank-deficient."""


class CornerAtInfinity(StabweaveError):
    """A point maps onto the line at infinity."""


class SingularMatrix(StabweaveError):
    """Homography cannot be inverted."""


class SingularSystem(StabweaveError):
    """TPS bordered system is rank-deficient (e.g. collinear sites)."""


class InsufficientTexture(EstimationError):
    """Too few grid cells produced a correlation match."""


class NoConsensus(EstimationError):
    """RANSAC found fewer inliers than required."""


class EstimationFailed(EstimationError):
    """Estimation failed for a frame and no fallback was available."""

    def __init__(self, frame_index: int, cause: Exception) -> None:
        super().__init__(f"estimation failed at frame {frame_index}: {cause}")
        self.frame_index = frame_index
        self.cause = cause


class SchemaMismatch(InputError):
    """Document does not follow the expected schema."""


class ShapeMismatch(InputError):
    """Array shape disagrees with the configured grid."""


class CountMismatch(InputError):
    """Reference and target inputs hold different frame counts."""


class SizeMismatch(InputError):
    """Frames differ in size."""


class DecodeError(InputError):
    """An input image could not be decoded."""

    def __init__(self, path: str) -> None:
        super().__init__(f"cannot decode image: {path}")
        self.path = path


class MissingHistory(StabweaveError):
    """Not enough buffered frames for a full sliding window."""


class FoldedMesh(StabweaveError):
    """A mesh triangle has non-positive signed area."""

    def __init__(self, quad_index: tuple[int, int]) -> None:
        super().__init__(f"folded mesh at quad (row={quad_index[0]}, col={quad_index[1]})")
        self.quad_index = quad_index
