"""Loss terms of the window objective, each with its analytic gradient.

Smooth paths S_hat and smooth meshes M_hat are (..., N, rows, cols, 2) with time on axis -4.
Dense terms are evaluated on a reduced-resolution canvas described by EvalContext.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import cv2
import numpy as np

from stabweave.app.domain.estimation.matching import to_luma
from stabweave.app.domain.geometry.raster import (
    Rasterization,
    bilinear_sample,
    bilinear_stencil,
    rasterize,
    scatter_corner_gradient,
)
from stabweave.app.domain.geometry.tps_mesh import (
    DistortionWeights,
    GridSpec,
    distortion_energy_array,
    distortion_gradient_array,
    rigid_vertices,
)
from stabweave.app.domain.render import canvas_extent

Norm = Literal["euclidean", "squared"]
ALIGN_BLUR_KSIZE = (3, 3)


def norm_value_grad(diff: np.ndarray, norm: Norm = "euclidean") -> tuple[float, np.ndarray]:
    """Sum over 2-vectors (last axis) of |d| or |d|^2, with gradient. The zero vector has gradient 0."""
    if norm == "squared":
        return float((diff * diff).sum()), 2.0 * diff
    lengths = np.sqrt((diff * diff).sum(axis=-1, keepdims=True))
    grad = np.divide(diff, lengths, out=np.zeros_like(diff), where=lengths > 0.0)
    return float(lengths.sum()), grad


def data_value_grad(s_hat: np.ndarray, s: np.ndarray, norm: Norm = "euclidean") -> tuple[float, np.ndarray]:
    return norm_value_grad(s_hat - s, norm)


def default_centers(length: int, alpha: Sequence[float], all_centers: bool) -> list[int]:
    """Middle index only (online window), or every index where the kernel fits (whole sequence)."""
    k = len(alpha)
    if all_centers:
        return list(range(k, length - k))
    return [length // 2] if length >= 2 * k + 1 else []


def smooth_value_grad(
    s_hat: np.ndarray,
    alpha: Sequence[float],
    norm: Norm = "euclidean",
    centers: Sequence[int] | None = None,
) -> tuple[float, np.ndarray]:
    length = s_hat.shape[-4]
    if centers is None:
        centers = default_centers(length, alpha, all_centers=False)
    value = 0.0
    grad = np.zeros_like(s_hat)
    for c in centers:
        mid = s_hat[..., c, :, :, :]
        for i, a in enumerate(alpha, start=1):
            if a == 0.0:
                continue
            second = s_hat[..., c + i, :, :, :] + s_hat[..., c - i, :, :, :] - 2.0 * mid
            v, g = norm_value_grad(second, norm)
            value += a * v
            grad[..., c + i, :, :, :] += a * g
            grad[..., c - i, :, :, :] += a * g
            grad[..., c, :, :, :] -= 2.0 * a * g
    return value, grad


def shape_value_grad(
    m_hat: np.ndarray, grid: GridSpec, weights: DistortionWeights = DistortionWeights()
) -> tuple[float, np.ndarray]:
    """(1/N) sum over t (and views) of the distortion energy of M_hat(t) - Rig."""
    n = m_hat.shape[-4]
    motions = m_hat - rigid_vertices(grid)
    value = float(distortion_energy_array(motions, grid, weights).sum()) / n
    grad = distortion_gradient_array(motions, grid, weights) / n
    return value, grad


def online_value_grad(
    s_hat: np.ndarray, history: np.ndarray | None, norm: Norm = "euclidean"
) -> tuple[float, np.ndarray]:
    """Mean over the N-1 shared times of the distance to the previous window's committed positions."""
    grad = np.zeros_like(s_hat)
    if history is None:
        return 0.0, grad
    shared = history.shape[-4]
    v, g = norm_value_grad(s_hat[..., :shared, :, :, :] - history, norm)
    grad[..., :shared, :, :, :] = g / shared
    return v / shared, grad


@dataclass(frozen=True)
class EvalContext:
    """Reduced-resolution canvas used by the dense terms.

    Canvas point x (full resolution) maps to eval pixel (x + offset) * scale; source frame pixel
    u maps to u * source_scale in the eval images.
    """

    grid: GridSpec
    offset: tuple[float, float]
    shape: tuple[int, int]
    scale: float
    source_scale: tuple[float, float]
    images: tuple[np.ndarray, np.ndarray] | None = None

    @classmethod
    def from_meshes(
        cls,
        meshes: np.ndarray,
        grid: GridSpec,
        scale: float,
        margin: float = 0.0,
        frames: tuple[np.ndarray, np.ndarray] | None = None,
    ) -> "EvalContext":
        canvas = canvas_extent([meshes.reshape(-1, 2)], margin)
        shape = (max(1, int(np.ceil(canvas.size[1] * scale))), max(1, int(np.ceil(canvas.size[0] * scale))))
        w, h = grid.image_size
        ew, eh = max(2, round(w * scale)), max(2, round(h * scale))
        images = None
        if frames is not None:
            images = tuple(prepare_align_image(f, (ew, eh)) for f in frames)  # type: ignore[assignment]
        return cls(grid, canvas.offset, shape, scale, (ew / w, eh / h), images)

    def source_vertices(self) -> np.ndarray:
        return rigid_vertices(self.grid) * np.asarray(self.source_scale)

    def destination(self, mesh: np.ndarray) -> np.ndarray:
        return (mesh + np.asarray(self.offset)) * self.scale

    def field_spacing(self) -> np.ndarray:
        return np.asarray(self.grid.spacing) * np.asarray(self.source_scale)

    def rasterize(self, mesh: np.ndarray) -> Rasterization:
        return rasterize(self.destination(mesh), self.source_vertices(), self.shape, strict=False)


def prepare_align_image(frame: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Luma resized to `size` (width, height) and box-smoothed."""
    luma = to_luma(frame)
    small = cv2.resize(luma, size, interpolation=cv2.INTER_AREA)
    return cv2.blur(small, ALIGN_BLUR_KSIZE).astype(np.float64)


def _overlap(r0: Rasterization, r1: Rasterization) -> tuple[np.ndarray, np.ndarray]:
    _, i0, i1 = np.intersect1d(r0.pixels, r1.pixels, assume_unique=True, return_indices=True)
    return i0, i1


def _mesh_gradient(raster: Rasterization, rows: np.ndarray, point_grad: np.ndarray, ctx: EvalContext) -> np.ndarray:
    full = np.zeros((len(raster.pixels), 2))
    full[rows] = point_grad
    dest = scatter_corner_gradient(raster, full, ctx.grid.rows * ctx.grid.cols)
    return dest.reshape(ctx.grid.shape) * ctx.scale


def trajectory_value_grad(
    s_hat: np.ndarray, m_hat: np.ndarray, ctx: EvalContext
) -> tuple[float, np.ndarray, np.ndarray, bool]:
    """Mean over t of the overlap-averaged L1 gap between the two views' warped dense trajectory fields.

    s_hat, m_hat: (2, N, rows, cols, 2). Returns (value, d/ds_hat, d/dm_hat, any overlap empty).
    """
    n = s_hat.shape[1]
    grid = ctx.grid
    spacing = ctx.field_spacing()
    grad_s = np.zeros_like(s_hat)
    grad_m = np.zeros_like(m_hat)
    value = 0.0
    empty = False
    for t in range(n):
        rasters = [ctx.rasterize(m_hat[v, t]) for v in (0, 1)]
        rows = _overlap(*rasters)
        count = len(rows[0])
        if count == 0:
            empty = True
            continue
        coords = [rasters[v].source[rows[v]] / spacing for v in (0, 1)]
        sampled = [bilinear_sample(s_hat[v, t], coords[v], with_gradient=True) for v in (0, 1)]
        diff = sampled[0][0] - sampled[1][0]
        value += float(np.abs(diff).sum()) / count
        sign = np.sign(diff) / count
        for v, s in ((0, sign), (1, -sign)):
            idx, w = bilinear_stencil((grid.rows, grid.cols), coords[v])
            contrib = w[:, :, None] * s[:, None, :]
            flat = np.zeros((grid.rows * grid.cols, 2))
            np.add.at(flat, idx.ravel(), contrib.reshape(-1, 2))
            grad_s[v, t] += flat.reshape(grid.shape)
            point_grad = np.einsum("pc,pcd->pd", s, sampled[v][1]) / spacing
            grad_m[v, t] += _mesh_gradient(rasters[v], rows[v], point_grad, ctx)
    return value / n, grad_s / n, grad_m / n, empty


def align_value_grad(m_last: np.ndarray, ctx: EvalContext) -> tuple[float, np.ndarray, bool]:
    """Overlap-averaged L1 photometric gap of the two warped last frames. m_last: (2, rows, cols, 2)."""
    grad = np.zeros_like(m_last)
    if ctx.images is None:
        return 0.0, grad, False
    rasters = [ctx.rasterize(m_last[v]) for v in (0, 1)]
    rows = _overlap(*rasters)
    count = len(rows[0])
    if count == 0:
        return 0.0, grad, True
    sampled = [bilinear_sample(ctx.images[v], rasters[v].source[rows[v]], with_gradient=True) for v in (0, 1)]
    diff = sampled[0][0] - sampled[1][0]
    sign = np.sign(diff) / count
    for v, s in ((0, sign), (1, -sign)):
        point_grad = s[:, None] * sampled[v][1]
        grad[v] = _mesh_gradient(rasters[v], rows[v], point_grad, ctx)
    return float(np.abs(diff).sum()) / count, grad, False


def loss_data(s_hat: np.ndarray, s: np.ndarray, norm: Norm = "euclidean") -> float:
    """Distance of the smooth paths from the raw ones, summed over views, times and vertices."""
    return data_value_grad(s_hat, s, norm)[0]


def loss_smooth(
    s_hat: np.ndarray,
    alpha: Sequence[float],
    norm: Norm = "euclidean",
    centers: Sequence[int] | None = None,
) -> float:
    """Weighted second central differences around the window centre (or every listed centre)."""
    return smooth_value_grad(s_hat, alpha, norm, centers)[0]


def loss_shape(m_hat: np.ndarray, grid: GridSpec, weights: DistortionWeights = DistortionWeights()) -> float:
    return shape_value_grad(m_hat, grid, weights)[0]


def loss_trajectory_consistency(
    s_hat_ref: np.ndarray,
    s_hat_tgt: np.ndarray,
    m_hat_ref: np.ndarray,
    m_hat_tgt: np.ndarray,
    ctx: EvalContext,
) -> float:
    value, _, _, _ = trajectory_value_grad(
        np.stack([s_hat_ref, s_hat_tgt]), np.stack([m_hat_ref, m_hat_tgt]), ctx
    )
    return value


def loss_online_collab(s_hat: np.ndarray, history: np.ndarray | None, norm: Norm = "euclidean") -> float:
    return online_value_grad(s_hat, history, norm)[0]


def loss_online_align(
    frame_ref: np.ndarray,
    frame_tgt: np.ndarray,
    mesh_ref: np.ndarray,
    mesh_tgt: np.ndarray,
    grid: GridSpec,
    *,
    scale: float = 0.25,
    margin: float = 0.0,
) -> float:
    meshes = np.stack([mesh_ref, mesh_tgt])
    ctx = EvalContext.from_meshes(meshes, grid, scale, margin, frames=(frame_ref, frame_tgt))
    return align_value_grad(meshes, ctx)[0]
