"""Overlap PSNR/SSIM, stability and distortion scores."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import cv2
import numpy as np

from stabweave.app.constants import PIXEL_MAX, PSNR_CAP_DB
from stabweave.app.domain.geometry.tps_mesh import (
    DistortionWeights,
    GridSpec,
    distortion_energy_array,
    rigid_vertices,
)
from stabweave.app.domain.smoothing.terms import Norm, loss_smooth

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = (0.01 * PIXEL_MAX) ** 2
SSIM_C2 = (0.03 * PIXEL_MAX) ** 2


@dataclass(frozen=True)
class AlignmentScores:
    psnr: float | None
    ssim: float | None
    overlap_empty: bool


def masked_psnr(a: np.ndarray, b: np.ndarray, mask: np.ndarray) -> float:
    sel = mask > 0
    diff = (np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64))[sel]
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * np.log10(PIXEL_MAX**2 / mse))


def _ssim_map(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ksize = (SSIM_WINDOW, SSIM_WINDOW)
    mu_a = cv2.GaussianBlur(a, ksize, SSIM_SIGMA)
    mu_b = cv2.GaussianBlur(b, ksize, SSIM_SIGMA)
    var_a = cv2.GaussianBlur(a * a, ksize, SSIM_SIGMA) - mu_a * mu_a
    var_b = cv2.GaussianBlur(b * b, ksize, SSIM_SIGMA) - mu_b * mu_b
    cov = cv2.GaussianBlur(a * b, ksize, SSIM_SIGMA) - mu_a * mu_b
    num = (2 * mu_a * mu_b + SSIM_C1) * (2 * cov + SSIM_C2)
    den = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return num / den


def masked_ssim(a: np.ndarray, b: np.ndarray, mask: np.ndarray) -> float | None:
    """Mean SSIM over window centres whose whole 11x11 window lies inside the mask; None if there are none."""
    kernel = np.ones((SSIM_WINDOW, SSIM_WINDOW), np.uint8)
    inside = cv2.erode(
        (mask > 0).astype(np.uint8), kernel, borderType=cv2.BORDER_CONSTANT, borderValue=0
    ).astype(bool)
    if not inside.any():
        return None
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim == 2:
        a, b = a[:, :, None], b[:, :, None]
    values = [_ssim_map(a[:, :, c].copy(), b[:, :, c].copy())[inside].mean() for c in range(a.shape[2])]
    return float(np.clip(np.mean(values), -1.0, 1.0))


def alignment_scores(warped_ref: np.ndarray, warped_tgt: np.ndarray, overlap: np.ndarray) -> AlignmentScores:
    if not np.any(overlap > 0):
        return AlignmentScores(psnr=None, ssim=None, overlap_empty=True)
    return AlignmentScores(
        psnr=masked_psnr(warped_ref, warped_tgt, overlap),
        ssim=masked_ssim(warped_ref, warped_tgt, overlap),
        overlap_empty=False,
    )


def invalid_area_rate(mask_a: np.ndarray, mask_b: np.ndarray) -> float:
    """Share of the canvas covered by neither view."""
    union = np.maximum(np.asarray(mask_a) > 0, np.asarray(mask_b) > 0)
    if union.size == 0:
        return 0.0
    return float(1.0 - union.mean())


def stability_score(
    positions: np.ndarray, alpha: Sequence[float], norm: Norm = "euclidean"
) -> float:
    """Mean over every N-frame window (N = 2 len(alpha) + 1) of the windowed smoothness loss.

    positions: (T, rows, cols, 2) emitted target-view paths. Shorter series score 0.
    """
    n = 2 * len(alpha) + 1
    length = positions.shape[0]
    if length < n:
        return 0.0
    values = [loss_smooth(positions[s : s + n], alpha, norm) for s in range(length - n + 1)]
    return float(np.mean(values))


def distortion_score(
    meshes: np.ndarray, grid: GridSpec, weights: DistortionWeights = DistortionWeights()
) -> float:
    """Largest per-frame distortion energy of (T, rows, cols, 2) emitted target-view meshes."""
    if len(meshes) == 0:
        return 0.0
    return float(distortion_energy_array(meshes - rigid_vertices(grid), grid, weights).max())


def mean_over_videos(scores: Sequence[float]) -> float:
    return float(np.mean(scores)) if len(scores) else 0.0
