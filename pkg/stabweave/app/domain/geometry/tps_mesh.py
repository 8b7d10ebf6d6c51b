"""Control-point meshes, thin-plate-spline interpolation and the mesh distortion energy.

Control arrays are stored as (rows, cols, 2) with the last axis (x, y).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from stabweave.app.domain.errors import SingularSystem
from stabweave.app.domain.geometry.homography import Homography3x3, ImageSize, apply_point


@dataclass(frozen=True)
class GridSpec:
    """(rows x cols) control points spread over an image of image_size (width, height)."""

    rows: int = 7
    cols: int = 9
    image_size: ImageSize = (480, 360)

    def __post_init__(self) -> None:
        if self.rows < 3 or self.cols < 3:
            raise ValueError(f"grid needs at least 3x3 control points, got {self.rows}x{self.cols}")
        w, h = self.image_size
        if w <= 0 or h <= 0:
            raise ValueError(f"image size must be positive, got {self.image_size}")
        object.__setattr__(self, "image_size", (int(w), int(h)))

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.rows, self.cols, 2)

    @property
    def spacing(self) -> tuple[float, float]:
        """Cell size (dx, dy) in pixels."""
        return (self.image_size[0] / (self.cols - 1), self.image_size[1] / (self.rows - 1))

    def scaled(self, factor: float) -> "GridSpec":
        w, h = self.image_size
        return GridSpec(self.rows, self.cols, (max(1, round(w * factor)), max(1, round(h * factor))))


def _validated(array: np.ndarray, grid: GridSpec, what: str) -> np.ndarray:
    a = np.array(array, dtype=np.float64)
    if a.shape != grid.shape:
        raise ValueError(f"{what} shape {a.shape} does not match grid {grid.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{what} must be finite")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ControlMotions:
    """Per-vertex 2D motions anchored at the rigid grid."""

    motions: np.ndarray
    grid: GridSpec = field(default_factory=GridSpec)

    def __post_init__(self) -> None:
        object.__setattr__(self, "motions", _validated(self.motions, self.grid, "motions"))

    @staticmethod
    def zeros(grid: GridSpec) -> "ControlMotions":
        return ControlMotions(np.zeros(grid.shape), grid)

    def to_mesh(self) -> "Mesh":
        return Mesh(rigid_vertices(self.grid) + self.motions, self.grid)


@dataclass(frozen=True)
class Mesh:
    """Absolute vertex positions; Mesh = RigidMesh + ControlMotions."""

    vertices: np.ndarray
    grid: GridSpec = field(default_factory=GridSpec)

    def __post_init__(self) -> None:
        object.__setattr__(self, "vertices", _validated(self.vertices, self.grid, "vertices"))

    @property
    def motions(self) -> ControlMotions:
        return ControlMotions(self.vertices - rigid_vertices(self.grid), self.grid)


@dataclass(frozen=True)
class TpsCoefficients:
    """f(p) = affine @ (x, y, 1) + sum_k weights[:, k] * U(|p - sites[k]|)."""

    affine: np.ndarray
    weights: np.ndarray
    sites: np.ndarray


@lru_cache(maxsize=32)
def _rigid_vertices_cached(rows: int, cols: int, width: int, height: int) -> np.ndarray:
    xs = np.linspace(0.0, float(width), cols)
    ys = np.linspace(0.0, float(height), rows)
    gx, gy = np.meshgrid(xs, ys)
    vertices = np.stack([gx, gy], axis=-1)
    vertices.setflags(write=False)
    return vertices


def rigid_vertices(grid: GridSpec) -> np.ndarray:
    return _rigid_vertices_cached(grid.rows, grid.cols, grid.image_size[0], grid.image_size[1])


def rigid_mesh(spec: GridSpec) -> Mesh:
    return Mesh(rigid_vertices(spec), spec)


def tps_kernel(r2: np.ndarray) -> np.ndarray:
    """U = r^2 log r^2 as a function of the squared distance, with U(0) = 0."""
    r2 = np.asarray(r2, dtype=np.float64)
    out = np.zeros_like(r2)
    positive = r2 > 0.0
    out[positive] = r2[positive] * np.log(r2[positive])
    return out


def _squared_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return (diff**2).sum(axis=-1)


def tps_fit(sites: np.ndarray, targets: np.ndarray) -> TpsCoefficients:
    """Exact TPS interpolation of sites -> targets (no bending regularization)."""
    sites = np.asarray(sites, dtype=np.float64).reshape(-1, 2)
    targets = np.asarray(targets, dtype=np.float64).reshape(-1, 2)
    k = len(sites)
    if k < 3 or len(targets) != k:
        raise ValueError(f"tps_fit needs >= 3 matching sites and targets, got {k} and {len(targets)}")
    p = np.c_[np.ones(k), sites]
    if np.linalg.matrix_rank(p) < 3:
        raise SingularSystem("TPS sites are collinear")
    system = np.zeros((k + 3, k + 3))
    system[:k, :k] = tps_kernel(_squared_distances(sites, sites))
    system[:k, k:] = p
    system[k:, :k] = p.T
    rhs = np.zeros((k + 3, 2))
    rhs[:k] = targets
    try:
        solution = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"TPS system is singular: {exc}") from exc
    weights = solution[:k].T
    const, ax, ay = solution[k], solution[k + 1], solution[k + 2]
    affine = np.stack([ax, ay, const], axis=1)
    return TpsCoefficients(affine=affine, weights=weights, sites=sites.copy())


def tps_eval(coeffs: TpsCoefficients, queries: np.ndarray) -> np.ndarray:
    q = np.asarray(queries, dtype=np.float64)
    shape = q.shape
    q = q.reshape(-1, 2)
    out = q @ coeffs.affine[:, :2].T + coeffs.affine[:, 2]
    out += tps_kernel(_squared_distances(q, coeffs.sites)) @ coeffs.weights.T
    return out.reshape(shape)


def h4pt_to_control_motions(h: Homography3x3, spec: GridSpec) -> ControlMotions:
    """Motions of the rigid vertices under h: h(v) - v."""
    vertices = rigid_vertices(spec).reshape(-1, 2)
    mapped = apply_point(h, vertices)
    return ControlMotions((mapped - vertices).reshape(spec.shape), spec)


@dataclass(frozen=True)
class DistortionWeights:
    collinearity: float = 1.0
    similarity: float = 1.0


def _flat_index(grid: GridSpec, i: int, j: int, c: int) -> int:
    return (i * grid.cols + j) * 2 + c


def _collinearity_rows(grid: GridSpec) -> np.ndarray:
    n = grid.rows * grid.cols * 2
    rows: list[np.ndarray] = []
    triples = [((i, j - 1), (i, j), (i, j + 1)) for i in range(grid.rows) for j in range(1, grid.cols - 1)]
    triples += [((i - 1, j), (i, j), (i + 1, j)) for j in range(grid.cols) for i in range(1, grid.rows - 1)]
    for a, b, c in triples:
        for coord in range(2):
            row = np.zeros(n)
            row[_flat_index(grid, *a, coord)] += 1.0
            row[_flat_index(grid, *b, coord)] -= 2.0
            row[_flat_index(grid, *c, coord)] += 1.0
            rows.append(row)
    return np.array(rows)


def _similarity_residual_projector(grid: GridSpec) -> np.ndarray:
    """I - P for the span of quad similarities, on an (x0, y0, ..., x3, y3) vector."""
    sx, sy = grid.spacing
    corners = np.array([[0.0, 0.0], [sx, 0.0], [0.0, sy], [sx, sy]])
    corners -= corners.mean(axis=0)
    basis = np.zeros((8, 4))
    basis[0::2, 0] = 1.0
    basis[1::2, 1] = 1.0
    basis[:, 2] = corners.ravel()
    basis[0::2, 3] = -corners[:, 1]
    basis[1::2, 3] = corners[:, 0]
    q, _ = np.linalg.qr(basis)
    return np.eye(8) - q @ q.T


def _similarity_rows(grid: GridSpec) -> np.ndarray:
    n = grid.rows * grid.cols * 2
    residual = _similarity_residual_projector(grid)
    blocks: list[np.ndarray] = []
    for i in range(grid.rows - 1):
        for j in range(grid.cols - 1):
            select = np.zeros((8, n))
            for k, (di, dj) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
                for coord in range(2):
                    select[2 * k + coord, _flat_index(grid, i + di, j + dj, coord)] = 1.0
            blocks.append(residual @ select)
    return np.vstack(blocks)


@lru_cache(maxsize=16)
def distortion_matrix(grid: GridSpec, weights: DistortionWeights = DistortionWeights()) -> np.ndarray:
    """PSD matrix K with energy = z^T K z for flattened motions z."""
    d = _collinearity_rows(grid)
    s = _similarity_rows(grid)
    k = weights.collinearity * (d.T @ d) + weights.similarity * (s.T @ s)
    k = 0.5 * (k + k.T)
    k.setflags(write=False)
    return k


def distortion_energy_array(
    motions: np.ndarray, grid: GridSpec, weights: DistortionWeights = DistortionWeights()
) -> np.ndarray:
    """Energy of (..., rows, cols, 2) motions; returns an array of shape (...)."""
    k = distortion_matrix(grid, weights)
    z = np.asarray(motions, dtype=np.float64).reshape(-1, k.shape[0])
    energy = np.einsum("bi,ij,bj->b", z, k, z)
    return np.maximum(energy, 0.0).reshape(np.shape(motions)[:-3])


def distortion_gradient_array(
    motions: np.ndarray, grid: GridSpec, weights: DistortionWeights = DistortionWeights()
) -> np.ndarray:
    k = distortion_matrix(grid, weights)
    z = np.asarray(motions, dtype=np.float64).reshape(-1, k.shape[0])
    return (2.0 * z @ k).reshape(np.shape(motions))


def distortion_energy(m: ControlMotions, weights: DistortionWeights = DistortionWeights()) -> float:
    """Inter-grid collinearity plus intra-grid similarity deviation; 0 for global similarities."""
    return float(distortion_energy_array(m.motions, m.grid, weights))
