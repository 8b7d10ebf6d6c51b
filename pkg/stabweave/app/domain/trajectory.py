"""Camera and stitching trajectories, and the sliding windows handed to the smoother.

Trajectory arrays are (T, rows, cols, 2); window arrays stack both views as (2, N, rows, cols, 2).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from stabweave.app.constants import View
from stabweave.app.domain.errors import MissingHistory
from stabweave.app.domain.geometry.tps_mesh import (
    ControlMotions,
    GridSpec,
    Mesh,
    rigid_vertices,
    tps_eval,
    tps_fit,
)
from stabweave.app.domain.models import FrameMotions

VIEWS = (View.REFERENCE, View.TARGET)


@dataclass(frozen=True)
class StitchingMotion:
    """Relative stitching motion s(t) of one view."""

    s: np.ndarray
    grid: GridSpec


@dataclass(frozen=True)
class Trajectory:
    """Cumulative positions S(t), S(1) = 0."""

    positions: np.ndarray
    grid: GridSpec

    def __len__(self) -> int:
        return len(self.positions)

    def differences(self) -> np.ndarray:
        """s(t) = S(t) - S(t-1), with s(1) = S(1)."""
        return np.diff(self.positions, axis=0, prepend=np.zeros_like(self.positions[:1]))


def _chain(steps: Sequence[np.ndarray], grid: GridSpec) -> Trajectory:
    if not steps:
        return Trajectory(np.zeros((0, *grid.shape)), grid)
    stacked = np.stack([np.asarray(s, dtype=np.float64) for s in steps])
    if np.any(stacked[0] != 0.0):
        raise ValueError("the first motion of a trajectory must be all-zero")
    return Trajectory(np.cumsum(stacked, axis=0), grid)


def camera_trajectory(temporal: Sequence[ControlMotions]) -> Trajectory:
    """C(t) = sum of m^T(tau) for tau <= t."""
    grid = temporal[0].grid if temporal else GridSpec()
    return _chain([m.motions for m in temporal], grid)


def chain_stitching(motions: Sequence[StitchingMotion]) -> Trajectory:
    grid = motions[0].grid if motions else GridSpec()
    return _chain([m.s for m in motions], grid)


def stitching_motion(mesh_T: Mesh, mesh_S_prev: Mesh, mesh_S_cur: Mesh, spec: GridSpec) -> StitchingMotion:
    """s(t) = T_{Rig -> M^S(t-1)}(M^T(t)) - M^S(t)."""
    rigid = rigid_vertices(spec).reshape(-1, 2)
    coeffs = tps_fit(rigid, mesh_S_prev.vertices.reshape(-1, 2))
    desired = tps_eval(coeffs, mesh_T.vertices.reshape(-1, 2)).reshape(spec.shape)
    return StitchingMotion(desired - mesh_S_cur.vertices, spec)


@dataclass(frozen=True)
class TrajectoryWindow:
    """N frames ending at absolute time xi (1-based), re-based so S(first) = 0.

    trajectories / meshes: (2, N, rows, cols, 2). history holds the previous window's committed
    smoothed positions at relative times 1..N-1 in this window's re-based coordinates, or None.
    """

    xi: int
    trajectories: np.ndarray
    meshes: np.ndarray
    base: np.ndarray
    grid: GridSpec
    last_frames: tuple[np.ndarray, np.ndarray] | None = None
    history: np.ndarray | None = None

    @property
    def length(self) -> int:
        return int(self.trajectories.shape[1])


class TrajectoryBuilder:
    """Incrementally chains stitching trajectories as frame motions arrive in order."""

    def __init__(self, grid: GridSpec) -> None:
        self._grid = grid
        self._positions: list[np.ndarray] = []  # each (2, rows, cols, 2), absolute S(t)
        self._meshes: list[np.ndarray] = []  # each (2, rows, cols, 2), raw spatial meshes
        self._frames: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._committed: dict[int, np.ndarray] = {}  # t -> (2, rows, cols, 2), absolute smoothed S

    @property
    def grid(self) -> GridSpec:
        return self._grid

    def __len__(self) -> int:
        return len(self._positions)

    def add(self, motions: FrameMotions, frames: tuple[np.ndarray, np.ndarray] | None = None) -> np.ndarray:
        """Append time t = len + 1 and return its absolute positions S(t) for both views."""
        t = len(self._positions) + 1
        if motions.t != t:
            raise ValueError(f"expected motions for t={t}, got t={motions.t}")
        rigid = rigid_vertices(self._grid)
        meshes = np.stack([rigid + motions.spatial(v).motions for v in VIEWS])
        if t == 1:
            positions = np.zeros((2, *self._grid.shape))
        else:
            prev_meshes = self._meshes[-1]
            steps = []
            for v in VIEWS:
                mesh_T = Mesh(rigid + motions.temporal(v).motions, self._grid)
                step = stitching_motion(
                    mesh_T, Mesh(prev_meshes[v], self._grid), Mesh(meshes[v], self._grid), self._grid
                )
                steps.append(step.s)
            positions = self._positions[-1] + np.stack(steps)
        self._positions.append(positions)
        self._meshes.append(meshes)
        if frames is not None:
            self._frames[t] = frames
        return positions

    def positions(self) -> np.ndarray:
        """(2, T, rows, cols, 2) absolute trajectories."""
        return np.stack(self._positions, axis=1)

    def meshes(self) -> np.ndarray:
        return np.stack(self._meshes, axis=1)

    def commit(self, first_t: int, smoothed: np.ndarray) -> None:
        """Store absolute smoothed positions (2, n, rows, cols, 2) for times first_t, first_t + 1, ..."""
        self._committed = {first_t + k: smoothed[:, k].copy() for k in range(smoothed.shape[1])}

    def drop_before(self, t: int) -> None:
        """Forget cached frames older than t."""
        for key in [k for k in self._frames if k < t]:
            del self._frames[key]

    def build_window(self, xi: int, n: int) -> TrajectoryWindow:
        if xi < n or xi > len(self._positions):
            raise MissingHistory(f"window ending at t={xi} needs frames {xi - n + 1}..{xi}")
        lo = xi - n  # zero-based start
        positions = np.stack(self._positions[lo:xi], axis=1)
        base = positions[:, 0].copy()
        trajectories = positions - base[:, None]
        meshes = np.stack(self._meshes[lo:xi], axis=1)

        history = None
        shared = [xi - n + 1 + k for k in range(n - 1)]
        if all(t in self._committed for t in shared):
            history = np.stack([self._committed[t] for t in shared], axis=1) - base[:, None]

        return TrajectoryWindow(
            xi=xi,
            trajectories=trajectories,
            meshes=meshes,
            base=base,
            grid=self._grid,
            last_frames=self._frames.get(xi),
            history=history,
        )


def build_window(xi: int, builder: TrajectoryBuilder, n: int) -> TrajectoryWindow:
    """Window of the n frames ending at xi from the builder's caches."""
    return builder.build_window(xi, n)
