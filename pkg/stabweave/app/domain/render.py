"""Mesh warping onto a shared canvas, overlap masks and average blending."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import cv2
import numpy as np

from stabweave.app.domain.geometry.raster import rasterize
from stabweave.app.domain.geometry.tps_mesh import Mesh, rigid_vertices


@dataclass(frozen=True)
class Canvas:
    """Output plane: `offset` is added to mesh vertices, `size` is (width, height)."""

    offset: tuple[float, float]
    size: tuple[int, int]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.size[1], self.size[0])


@dataclass(frozen=True)
class MaskedImage:
    pixels: np.ndarray  # (h, w) or (h, w, c) float32, zero outside the mask
    mask: np.ndarray  # (h, w) float32 in {0, 1}


def canvas_extent(meshes: Iterable[Mesh | np.ndarray], margin: float = 0.0) -> Canvas:
    """Bounding box of every vertex (plus margin), snapped outward to whole pixels."""
    points = _points(meshes)
    lo = np.floor(points.min(axis=0) - margin)
    hi = np.ceil(points.max(axis=0) + margin)
    offset = -lo
    size = hi + offset
    return Canvas(offset=(float(offset[0]), float(offset[1])), size=(int(size[0]), int(size[1])))


def warp_frame(frame: np.ndarray, mesh: Mesh, canvas: Canvas, *, strict: bool = True) -> MaskedImage:
    """Backward-map every covered canvas pixel through its triangle to the rigid source frame."""
    destination = mesh.vertices + np.asarray(canvas.offset)
    raster = rasterize(destination, rigid_vertices(mesh.grid), canvas.shape, strict=strict)

    h, w = canvas.shape
    map_x = np.full(h * w, -1.0, dtype=np.float32)
    map_y = np.full(h * w, -1.0, dtype=np.float32)
    map_x[raster.pixels] = raster.source[:, 0]
    map_y[raster.pixels] = raster.source[:, 1]
    warped = cv2.remap(
        np.asarray(frame, dtype=np.float32),
        map_x.reshape(h, w),
        map_y.reshape(h, w),
        interpolation=cv2.INTER_LINEAR,
        borderMode=cv2.BORDER_REPLICATE,
    )
    mask = raster.mask.astype(np.float32)
    if warped.ndim == 3:
        warped = warped * mask[:, :, None]
    else:
        warped = warped * mask
    return MaskedImage(pixels=warped, mask=mask)


def overlap_and_blend(a: MaskedImage, b: MaskedImage) -> tuple[np.ndarray, np.ndarray]:
    """Average where both cover, paste where one covers. Returns (stitched, overlap mask)."""
    overlap = a.mask * b.mask
    weight = a.mask + b.mask
    safe = np.where(weight > 0, weight, 1.0)
    if a.pixels.ndim == 3:
        stitched = (a.pixels + b.pixels) / safe[:, :, None]
    else:
        stitched = (a.pixels + b.pixels) / safe
    return stitched.astype(np.float32), overlap


def to_uint8(image: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(image), 0, 255).astype(np.uint8)


def online_canvas(first_meshes: Iterable[Mesh], margin: float) -> Canvas:
    """Initial canvas from the first frame's raw meshes; later frames widen it through grow_canvas."""
    return canvas_extent(first_meshes, margin)


def _points(meshes: Iterable[Mesh | np.ndarray]) -> np.ndarray:
    return np.concatenate(
        [np.asarray(m.vertices if isinstance(m, Mesh) else m, dtype=np.float64).reshape(-1, 2) for m in meshes]
    )


def canvas_contains(canvas: Canvas, meshes: Iterable[Mesh | np.ndarray]) -> bool:
    """True when every vertex lies in [0, W] x [0, H] after the canvas offset."""
    placed = _points(meshes) + np.asarray(canvas.offset)
    return bool(np.all(placed >= 0.0) and np.all(placed <= np.asarray(canvas.size, dtype=np.float64)))


def grow_canvas(canvas: Canvas, meshes: Iterable[Mesh | np.ndarray], margin: float = 0.0) -> Canvas:
    """Smallest whole-pixel canvas covering both `canvas` and the meshes (plus margin).

    Returns `canvas` unchanged when it already contains the meshes.
    """
    meshes = list(meshes)
    if canvas_contains(canvas, meshes):
        return canvas
    points = _points(meshes)
    offset = np.asarray(canvas.offset)
    lo = np.minimum(-offset, np.floor(points.min(axis=0) - margin))
    hi = np.maximum(np.asarray(canvas.size, dtype=np.float64) - offset, np.ceil(points.max(axis=0) + margin))
    size = hi - lo
    return Canvas(offset=(float(-lo[0]), float(-lo[1])), size=(int(size[0]), int(size[1])))
