"""Planar homographies in matrix and 4-pt form, and the bidirectional decomposition.

Convention: the spatial homography H maps reference-frame points to target-frame
points, so backward-warping the target by H aligns it with the reference. The
decomposition returns backward maps from the virtual plane into each view:
H_tgt is the 4-pt-scaled transform and H_ref = H^-1 H_tgt, so H H_ref = H_tgt.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Literal

import numpy as np

from stabweave.app.domain.errors import (
    CornerAtInfinity,
    DegenerateCorrespondences,
    SingularMatrix,
)

ImageSize = tuple[int, int]

DET_TOLERANCE = 1e-12
COLLINEAR_TOLERANCE_PX = 1e-9
INFINITY_TOLERANCE = 1e-9


def canonicalize(m: np.ndarray) -> np.ndarray:
    """Frobenius norm 1 and h33 >= 0 (first non-zero entry positive when h33 == 0)."""
    m = np.asarray(m, dtype=np.float64)
    norm = np.linalg.norm(m)
    if not np.isfinite(norm) or norm == 0.0:
        raise SingularMatrix("homography has zero or non-finite norm")
    m = m / norm
    pivot = m[2, 2]
    if pivot == 0.0:
        flat = m.ravel()
        pivot = flat[np.flatnonzero(flat)[0]]
    if pivot < 0.0:
        m = -m
    return m


def image_corners(image_size: ImageSize) -> np.ndarray:
    """Corners of the image rectangle ordered TL, TR, BL, BR."""
    w, h = float(image_size[0]), float(image_size[1])
    return np.array([[0.0, 0.0], [w, 0.0], [0.0, h], [w, h]])


@dataclass(frozen=True)
class Homography3x3:
    """Canonical 3x3 homography referring to a frame of `image_size` (width, height)."""

    h: np.ndarray
    image_size: ImageSize

    def __post_init__(self) -> None:
        m = np.asarray(self.h, dtype=np.float64)
        if m.shape != (3, 3):
            raise ValueError(f"homography must be 3x3, got {m.shape}")
        m = canonicalize(m)
        if abs(np.linalg.det(m)) <= DET_TOLERANCE:
            raise SingularMatrix(f"|det| <= {DET_TOLERANCE} after normalization")
        m.setflags(write=False)
        object.__setattr__(self, "h", m)
        object.__setattr__(self, "image_size", (int(self.image_size[0]), int(self.image_size[1])))

    @staticmethod
    def identity(image_size: ImageSize) -> "Homography3x3":
        return Homography3x3(np.eye(3), image_size)

    @staticmethod
    def translation(tx: float, ty: float, image_size: ImageSize) -> "Homography3x3":
        return Homography3x3(np.array([[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]]), image_size)

    def distance(self, other: "Homography3x3") -> float:
        """Frobenius distance between canonical forms."""
        return float(np.linalg.norm(self.h - other.h))


@dataclass(frozen=True)
class Homography4pt:
    """Displacements of the image corners (TL, TR, BL, BR), in pixels."""

    displacements: np.ndarray
    image_size: ImageSize

    def __post_init__(self) -> None:
        d = np.array(self.displacements, dtype=np.float64).reshape(4, 2)
        if not np.all(np.isfinite(d)):
            raise ValueError("4-pt displacements must be finite")
        d.setflags(write=False)
        object.__setattr__(self, "displacements", d)
        object.__setattr__(self, "image_size", (int(self.image_size[0]), int(self.image_size[1])))

    @property
    def displaced_corners(self) -> np.ndarray:
        return image_corners(self.image_size) + self.displacements

    def scaled(self, factor: float) -> "Homography4pt":
        return Homography4pt(self.displacements * factor, self.image_size)


@dataclass(frozen=True)
class PlaneFraction:
    """Position of the virtual plane; 0.5 is the mid-plane, 1 the reference plane."""

    beta: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 <= float(self.beta) <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")


def _check_general_position(points: np.ndarray) -> None:
    for i, j, k in combinations(range(len(points)), 3):
        base = points[j] - points[i]
        other = points[k] - points[i]
        cross = abs(base[0] * other[1] - base[1] * other[0])
        spans = [np.linalg.norm(base), np.linalg.norm(other), np.linalg.norm(points[k] - points[j])]
        longest = max(spans)
        if longest == 0.0 or cross / longest <= COLLINEAR_TOLERANCE_PX:
            raise DegenerateCorrespondences(f"points {i}, {j}, {k} are collinear")


def hartley_normalizer(points: np.ndarray) -> np.ndarray:
    centroid = points.mean(axis=0)
    spread = np.sqrt(((points - centroid) ** 2).sum(axis=1)).mean()
    scale = np.sqrt(2.0) / spread if spread > 0 else 1.0
    return np.array(
        [[scale, 0.0, -scale * centroid[0]], [0.0, scale, -scale * centroid[1]], [0.0, 0.0, 1.0]]
    )


def _project(m: np.ndarray, points: np.ndarray) -> np.ndarray:
    homogeneous = np.c_[points, np.ones(len(points))] @ m.T
    return homogeneous[:, :2] / homogeneous[:, 2:3]


def solve_four_point(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Exact homography (raw 3x3) mapping 4 src points onto 4 dst points."""
    src = np.asarray(src, dtype=np.float64).reshape(4, 2)
    dst = np.asarray(dst, dtype=np.float64).reshape(4, 2)
    _check_general_position(src)
    _check_general_position(dst)
    t_src, t_dst = hartley_normalizer(src), hartley_normalizer(dst)
    s, d = _project(t_src, src), _project(t_dst, dst)
    x, y, u, v = s[:, 0], s[:, 1], d[:, 0], d[:, 1]
    zeros, ones = np.zeros(4), np.ones(4)
    a = np.empty((8, 8))
    a[0::2] = np.stack([x, y, ones, zeros, zeros, zeros, -u * x, -u * y], axis=1)
    a[1::2] = np.stack([zeros, zeros, zeros, x, y, ones, -v * x, -v * y], axis=1)
    b = np.empty(8)
    b[0::2], b[1::2] = u, v
    try:
        params = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise DegenerateCorrespondences(f"4-point system is singular: {exc}") from exc
    normalized = np.append(params, 1.0).reshape(3, 3)
    return np.linalg.inv(t_dst) @ normalized @ t_src


def matrix_from_h4pt(q: Homography4pt) -> Homography3x3:
    corners = image_corners(q.image_size)
    return Homography3x3(solve_four_point(corners, q.displaced_corners), q.image_size)


def apply_point(h: Homography3x3, points: np.ndarray) -> np.ndarray:
    """Map (N, 2) points (or a single (2,) point) through h."""
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 1
    pts = pts.reshape(-1, 2)
    homogeneous = np.c_[pts, np.ones(len(pts))] @ h.h.T
    depth = homogeneous[:, 2:3]
    if np.any(np.abs(depth) <= INFINITY_TOLERANCE * np.abs(homogeneous[:, :2]).max(initial=1.0)):
        raise CornerAtInfinity("point maps to the line at infinity")
    mapped = homogeneous[:, :2] / depth
    return mapped[0] if single else mapped


def h4pt_from_matrix(h: Homography3x3) -> Homography4pt:
    corners = image_corners(h.image_size)
    homogeneous = np.c_[corners, np.ones(4)] @ h.h.T
    if np.any(np.abs(homogeneous[:, 2]) <= INFINITY_TOLERANCE):
        raise CornerAtInfinity("an image corner has vanishing projective depth")
    mapped = homogeneous[:, :2] / homogeneous[:, 2:3]
    return Homography4pt(mapped - corners, h.image_size)


def compose(a: Homography3x3, b: Homography3x3) -> Homography3x3:
    """compose(a, b)(p) == a(b(p))."""
    return Homography3x3(a.h @ b.h, a.image_size)


def invert(a: Homography3x3) -> Homography3x3:
    try:
        inverse = np.linalg.inv(a.h)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(str(exc)) from exc
    return Homography3x3(inverse, a.image_size)


def homography_algebra(
    op: Literal["compose", "invert", "apply_point"], *args: object
) -> Homography3x3 | np.ndarray:
    """Dispatch to compose / invert / apply_point by name."""
    if op == "compose":
        return compose(*args)  # type: ignore[arg-type]
    if op == "invert":
        return invert(*args)  # type: ignore[arg-type]
    if op == "apply_point":
        return apply_point(*args)  # type: ignore[arg-type]
    raise ValueError(f"unknown homography operation: {op}")


def decompose_bidirectional(
    h: Homography3x3, frac: PlaneFraction | None = None
) -> tuple[Homography3x3, Homography3x3]:
    """Split H into (H_ref, H_tgt) on the virtual plane selected by `frac`.

    H_tgt carries beta times the 4-pt displacements of H; H_ref = H^-1 H_tgt.
    """
    beta = (frac or PlaneFraction()).beta
    h_tgt = matrix_from_h4pt(h4pt_from_matrix(h).scaled(beta))
    h_ref = compose(invert(h), h_tgt)
    return h_ref, h_tgt
