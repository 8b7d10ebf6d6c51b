"""Triangle-affine rasterization of control meshes and a differentiable bilinear sampler.

Every grid quad is split into T0 = (TL, TR, BL) and T1 = (TR, BR, BL). Pixel (x, y)
sits at integer coordinates. A pixel covered by two triangles (shared edges) keeps the
lowest triangle index.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from stabweave.app.domain.errors import FoldedMesh

INSIDE_TOLERANCE = 1e-9
SNAP_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Rasterization:
    """Covered destination pixels and where each one samples in the source frame."""

    shape: tuple[int, int]
    pixels: np.ndarray  # (P,) flat index into an (h, w) image
    triangles: np.ndarray  # (P,) triangle id
    barycentric: np.ndarray  # (P, 3)
    source: np.ndarray  # (P, 2) source coordinates (x, y)
    corners: np.ndarray  # (n_tri, 3) flat vertex ids
    affine: np.ndarray  # (n_tri, 2, 2) d(source)/d(destination)

    @property
    def mask(self) -> np.ndarray:
        out = np.zeros(self.shape[0] * self.shape[1], dtype=bool)
        out[self.pixels] = True
        return out.reshape(self.shape)

    def source_jacobian(self) -> np.ndarray:
        """(P, 3, 2, 2): derivative of each pixel's source point w.r.t. its triangle corners."""
        a = self.affine[self.triangles]
        return -self.barycentric[:, :, None, None] * a[:, None, :, :]


def triangle_corners(rows: int, cols: int) -> np.ndarray:
    """Flat vertex ids (n_tri, 3), triangles ordered quad-major (quad 0: T0, T1; quad 1: ...)."""
    i, j = np.meshgrid(np.arange(rows - 1), np.arange(cols - 1), indexing="ij")
    tl = (i * cols + j).ravel()
    tr = tl + 1
    bl = tl + cols
    br = bl + 1
    t0 = np.stack([tl, tr, bl], axis=1)
    t1 = np.stack([tr, br, bl], axis=1)
    return np.stack([t0, t1], axis=1).reshape(-1, 3)


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def signed_areas(vertices: np.ndarray) -> np.ndarray:
    """Twice the signed area of every triangle of an (rows, cols, 2) mesh, shape (n_tri,)."""
    rows, cols = vertices.shape[:2]
    flat = vertices.reshape(-1, 2)
    tri = flat[triangle_corners(rows, cols)]
    return _cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])


def _quad_of(triangle: int, cols: int) -> tuple[int, int]:
    quad = triangle // 2
    return (quad // (cols - 1), quad % (cols - 1))


def rasterize(
    destination: np.ndarray,
    source: np.ndarray,
    shape: tuple[int, int],
    *,
    strict: bool = True,
) -> Rasterization:
    """Cover an (h, w) destination grid with the triangles of `destination`.

    In strict mode a triangle with non-positive area raises FoldedMesh; otherwise it is skipped.
    """
    rows, cols = destination.shape[:2]
    h, w = shape
    corners = triangle_corners(rows, cols)
    dst = destination.reshape(-1, 2)[corners]
    src = source.reshape(-1, 2)[corners]

    area = _cross(dst[:, 1] - dst[:, 0], dst[:, 2] - dst[:, 0])
    folded = area <= 0.0
    if strict and np.any(folded):
        raise FoldedMesh(_quad_of(int(np.flatnonzero(folded)[0]), cols))

    edges_dst = np.stack([dst[:, 1] - dst[:, 0], dst[:, 2] - dst[:, 0]], axis=2)
    edges_src = np.stack([src[:, 1] - src[:, 0], src[:, 2] - src[:, 0]], axis=2)
    affine = np.zeros((len(corners), 2, 2))
    valid = ~folded
    affine[valid] = edges_src[valid] @ np.linalg.inv(edges_dst[valid])

    lo = np.floor(dst.min(axis=1) - INSIDE_TOLERANCE)
    hi = np.ceil(dst.max(axis=1) + INSIDE_TOLERANCE)
    x0 = np.clip(lo[:, 0], 0, w).astype(np.int64)
    y0 = np.clip(lo[:, 1], 0, h).astype(np.int64)
    x1 = np.clip(hi[:, 0], -1, w - 1).astype(np.int64)
    y1 = np.clip(hi[:, 1], -1, h - 1).astype(np.int64)
    nx = np.maximum(x1 - x0 + 1, 0)
    ny = np.maximum(y1 - y0 + 1, 0)
    counts = np.where(valid, nx * ny, 0)

    tri = np.repeat(np.arange(len(corners)), counts)
    starts = np.cumsum(counts) - counts
    local = np.arange(counts.sum()) - np.repeat(starts, counts)
    px = x0[tri] + local % np.maximum(nx[tri], 1)
    py = y0[tri] + local // np.maximum(nx[tri], 1)

    p = np.stack([px, py], axis=1).astype(np.float64)
    a = dst[tri, 0]
    rel = p - a
    denom = area[tri]
    lb = _cross(rel, dst[tri, 2] - a) / denom
    lc = _cross(dst[tri, 1] - a, rel) / denom
    la = 1.0 - lb - lc
    inside = (la >= -INSIDE_TOLERANCE) & (lb >= -INSIDE_TOLERANCE) & (lc >= -INSIDE_TOLERANCE)

    tri, px, py = tri[inside], px[inside], py[inside]
    bary = np.stack([la[inside], lb[inside], lc[inside]], axis=1)
    flat = py * w + px
    order = np.lexsort((tri, flat))
    flat, tri, bary = flat[order], tri[order], bary[order]
    first = np.ones(len(flat), dtype=bool)
    first[1:] = flat[1:] != flat[:-1]
    flat, tri, bary = flat[first], tri[first], bary[first]

    src_pts = np.einsum("pk,pkc->pc", bary, src[tri])
    snapped = np.round(src_pts)
    near = np.abs(src_pts - snapped) <= SNAP_TOLERANCE
    src_pts = np.where(near, snapped, src_pts)

    return Rasterization(
        shape=(h, w),
        pixels=flat,
        triangles=tri,
        barycentric=bary,
        source=src_pts,
        corners=corners,
        affine=affine,
    )


def bilinear_sample(
    image: np.ndarray, coords: np.ndarray, *, with_gradient: bool = False
) -> tuple[np.ndarray, np.ndarray | None]:
    """Sample an (h, w) or (h, w, c) image at (P, 2) points with edge clamping.

    Returns values (P,) or (P, c) and, if requested, d(value)/d(x, y) of shape (P, 2) or (P, c, 2).
    """
    img = np.asarray(image, dtype=np.float64)
    squeeze = img.ndim == 2
    if squeeze:
        img = img[:, :, None]
    h, w = img.shape[:2]
    x = np.clip(coords[:, 0], 0.0, w - 1.0)
    y = np.clip(coords[:, 1], 0.0, h - 1.0)
    x0 = np.clip(np.floor(x).astype(np.int64), 0, max(w - 2, 0))
    y0 = np.clip(np.floor(y).astype(np.int64), 0, max(h - 2, 0))
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (x - x0)[:, None]
    fy = (y - y0)[:, None]

    i00, i01 = img[y0, x0], img[y0, x1]
    i10, i11 = img[y1, x0], img[y1, x1]
    top = i00 + fx * (i01 - i00)
    bottom = i10 + fx * (i11 - i10)
    values = top + fy * (bottom - top)

    grad = None
    if with_gradient:
        inside_x = ((coords[:, 0] >= 0.0) & (coords[:, 0] <= w - 1.0))[:, None]
        inside_y = ((coords[:, 1] >= 0.0) & (coords[:, 1] <= h - 1.0))[:, None]
        gx = ((1.0 - fy) * (i01 - i00) + fy * (i11 - i10)) * inside_x
        gy = (bottom - top) * inside_y
        grad = np.stack([gx, gy], axis=-1)
        if squeeze:
            grad = grad[:, 0, :]
    if squeeze:
        values = values[:, 0]
    return values, grad


def scatter_corner_gradient(
    raster: Rasterization, pixel_grad: np.ndarray, n_vertices: int
) -> np.ndarray:
    """Chain d(loss)/d(source point) (P, 2) into d(loss)/d(destination vertices) (n_vertices, 2)."""
    jac = raster.source_jacobian()  # (P, 3, 2, 2)
    per_corner = np.einsum("pc,pkcd->pkd", pixel_grad, jac)
    out = np.zeros((n_vertices, 2))
    ids = raster.corners[raster.triangles]  # (P, 3)
    np.add.at(out, ids.ravel(), per_corner.reshape(-1, 2))
    return out


def bilinear_stencil(shape: tuple[int, int], coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flat indices (P, 4) and weights (P, 4) of the clamped bilinear interpolant used above."""
    h, w = shape
    x = np.clip(coords[:, 0], 0.0, w - 1.0)
    y = np.clip(coords[:, 1], 0.0, h - 1.0)
    x0 = np.clip(np.floor(x).astype(np.int64), 0, max(w - 2, 0))
    y0 = np.clip(np.floor(y).astype(np.int64), 0, max(h - 2, 0))
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx, fy = x - x0, y - y0
    idx = np.stack([y0 * w + x0, y0 * w + x1, y1 * w + x0, y1 * w + x1], axis=1)
    weights = np.stack([(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy], axis=1)
    return idx, weights
