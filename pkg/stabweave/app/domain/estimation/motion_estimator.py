"""Spatial and temporal control motions from a global homography plus local median residuals.

Meshes are forward: vertex (i, j) of a view's mesh is where its rigid vertex lands on the
output plane. The spatial split uses backward maps H_ref, H_tgt from the virtual plane.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from stabweave.app.config.pipeline_config import EstimatorConfig
from stabweave.app.domain.errors import SizeMismatch
from stabweave.app.domain.estimation.matching import match_grid
from stabweave.app.domain.estimation.ransac import ransac_homography
from stabweave.app.domain.geometry.homography import (
    Homography3x3,
    PlaneFraction,
    apply_point,
    decompose_bidirectional,
    invert,
)
from stabweave.app.domain.geometry.tps_mesh import (
    ControlMotions,
    GridSpec,
    h4pt_to_control_motions,
    rigid_vertices,
)
from stabweave.app.domain.models import Correspondence, Frame

ImageLike = Frame | np.ndarray


def _pixels(image: ImageLike) -> np.ndarray:
    return image.pixels if isinstance(image, Frame) else np.asarray(image)


def _image_size(a: np.ndarray, b: np.ndarray) -> tuple[int, int]:
    if a.shape[:2] != b.shape[:2]:
        raise SizeMismatch(f"frames differ in size: {a.shape[:2]} vs {b.shape[:2]}")
    return (int(a.shape[1]), int(a.shape[0]))


def nearest_vertex(points: np.ndarray, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    sx, sy = grid.spacing
    cols = np.clip(np.rint(points[:, 0] / sx), 0, grid.cols - 1).astype(int)
    rows = np.clip(np.rint(points[:, 1] / sy), 0, grid.rows - 1).astype(int)
    return rows, cols


def residual_field(points: np.ndarray, residuals: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Per-vertex median of binned residuals, inverse-distance hole filling, clamp to half a cell."""
    field = np.zeros(grid.shape)
    if len(points) == 0:
        return field
    rows, cols = nearest_vertex(points, grid)
    filled = np.zeros((grid.rows, grid.cols), dtype=bool)
    for i, j in sorted(set(zip(rows.tolist(), cols.tolist()))):
        sel = (rows == i) & (cols == j)
        field[i, j] = np.median(residuals[sel], axis=0)
        filled[i, j] = True

    holes = np.argwhere(~filled)
    if len(holes):
        known = np.argwhere(filled)
        d2 = ((holes[:, None, :] - known[None, :, :]) ** 2).sum(axis=-1).astype(np.float64)
        weights = 1.0 / d2
        weights /= weights.sum(axis=1, keepdims=True)
        field[holes[:, 0], holes[:, 1]] = weights @ field[known[:, 0], known[:, 1]]

    sx, sy = grid.spacing
    field[..., 0] = np.clip(field[..., 0], -sx / 2, sx / 2)
    field[..., 1] = np.clip(field[..., 1], -sy / 2, sy / 2)
    return field


def _points(corrs: Sequence[Correspondence], mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = np.array([c.p for c in corrs], dtype=np.float64)[mask]
    q = np.array([c.q for c in corrs], dtype=np.float64)[mask]
    return p, q


def forward_motions(backward: Homography3x3, grid: GridSpec) -> np.ndarray:
    """Motions of the rigid vertices under the inverse of a backward map."""
    return h4pt_to_control_motions(invert(backward), grid).motions


def estimate_spatial(
    ref: ImageLike, tgt: ImageLike, cfg: EstimatorConfig, grid: GridSpec
) -> tuple[ControlMotions, ControlMotions]:
    """(m_ref, m_tgt) warping both views onto the virtual plane selected by cfg.beta."""
    a, b = _pixels(ref), _pixels(tgt)
    size = _image_size(a, b)
    corrs = match_grid(a, b, cfg)
    h, mask = ransac_homography(corrs, cfg, size)
    h_ref, h_tgt = decompose_bidirectional(h, PlaneFraction(cfg.beta))

    p, q = _points(corrs, mask)
    g_ref, g_tgt = invert(h_ref), invert(h_tgt)
    misalignment = apply_point(g_tgt, q) - apply_point(g_ref, p)
    res_ref = residual_field(p, (1.0 - cfg.beta) * misalignment, grid)
    res_tgt = residual_field(q, -cfg.beta * misalignment, grid)

    m_ref = forward_motions(h_ref, grid) + res_ref
    m_tgt = forward_motions(h_tgt, grid) + res_tgt
    return ControlMotions(m_ref, grid), ControlMotions(m_tgt, grid)


def estimate_temporal(prev: ImageLike, cur: ImageLike, cfg: EstimatorConfig, grid: GridSpec) -> ControlMotions:
    """m^T(t): motions carrying the current frame's rigid vertices into the previous frame."""
    a, b = _pixels(cur), _pixels(prev)
    size = _image_size(a, b)
    corrs = match_grid(a, b, cfg)
    g, mask = ransac_homography(corrs, cfg, size)
    p, q = _points(corrs, mask)
    residuals = residual_field(p, q - apply_point(g, p), grid)
    vertices = rigid_vertices(grid).reshape(-1, 2)
    motions = (apply_point(g, vertices) - vertices).reshape(grid.shape) + residuals
    return ControlMotions(motions, grid)
