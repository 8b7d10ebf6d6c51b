from __future__ import annotations

import numpy as np
import pytest

from stabweave.app.domain.errors import MissingHistory
from stabweave.app.domain.geometry.tps_mesh import ControlMotions, GridSpec, Mesh, rigid_vertices
from stabweave.app.domain.models import FrameMotions
from stabweave.app.domain.trajectory import (
    StitchingMotion,
    TrajectoryBuilder,
    build_window,
    camera_trajectory,
    chain_stitching,
    stitching_motion,
)
from tests.conftest import zero_motions


def _uniform(grid: GridSpec, dx: float, dy: float) -> ControlMotions:
    return ControlMotions(np.broadcast_to([dx, dy], grid.shape).copy(), grid)


def _motions(t: int, grid: GridSpec, *, spatial: tuple[float, float] = (0.0, 0.0), temporal: tuple[float, float] = (0.0, 0.0)) -> FrameMotions:
    s = _uniform(grid, *spatial)
    m = _uniform(grid, *temporal) if t > 1 else ControlMotions.zeros(grid)
    return FrameMotions(t=t, spatial_ref=s, spatial_tgt=s, temporal_ref=m, temporal_tgt=m)


def test_camera_trajectory_accumulates_temporal_motions(small_grid: GridSpec) -> None:
    steps = [ControlMotions.zeros(small_grid), _uniform(small_grid, 1.0, 0.0), _uniform(small_grid, 2.0, -1.0)]
    trajectory = camera_trajectory(steps)
    assert len(trajectory) == 3
    np.testing.assert_allclose(trajectory.positions[:, 0, 0], [[0.0, 0.0], [1.0, 0.0], [3.0, -1.0]])
    np.testing.assert_allclose(trajectory.differences()[2], steps[2].motions)


def test_trajectory_must_start_at_zero(small_grid: GridSpec) -> None:
    with pytest.raises(ValueError):
        chain_stitching([StitchingMotion(np.ones(small_grid.shape), small_grid)])


def test_empty_trajectory_has_no_positions() -> None:
    assert len(camera_trajectory([])) == 0


def test_stitching_motion_of_identical_meshes_is_zero(small_grid: GridSpec) -> None:
    rigid = Mesh(rigid_vertices(small_grid), small_grid)
    s = stitching_motion(rigid, rigid, rigid, small_grid)
    np.testing.assert_allclose(s.s, 0.0, atol=1e-9)


def test_stitching_motion_follows_the_camera_through_a_rigid_previous_mesh(small_grid: GridSpec) -> None:
    rigid = rigid_vertices(small_grid)
    mesh_T = Mesh(rigid + [2.0, 1.0], small_grid)
    mesh_S = Mesh(rigid, small_grid)
    s = stitching_motion(mesh_T, mesh_S, mesh_S, small_grid)
    np.testing.assert_allclose(s.s, np.broadcast_to([2.0, 1.0], small_grid.shape), atol=1e-8)


def test_constant_spatial_warp_without_camera_motion_is_stationary(small_grid: GridSpec) -> None:
    builder = TrajectoryBuilder(small_grid)
    for t in range(1, 5):
        builder.add(_motions(t, small_grid, spatial=(5.0, -3.0)))
    np.testing.assert_allclose(builder.positions(), 0.0, atol=1e-8)
    np.testing.assert_allclose(builder.meshes()[0, 2], rigid_vertices(small_grid) + [5.0, -3.0])


def test_a_steady_pan_gives_a_linear_trajectory(small_grid: GridSpec) -> None:
    builder = TrajectoryBuilder(small_grid)
    for t in range(1, 5):
        builder.add(_motions(t, small_grid, temporal=(0.0, -3.0)))
    positions = builder.positions()
    assert positions.shape == (2, 4, *small_grid.shape)
    np.testing.assert_allclose(positions[1, :, 1, 1, 1], [0.0, -3.0, -6.0, -9.0], atol=1e-8)


def test_motions_must_arrive_in_order(small_grid: GridSpec) -> None:
    builder = TrajectoryBuilder(small_grid)
    builder.add(zero_motions(1, small_grid))
    with pytest.raises(ValueError):
        builder.add(zero_motions(3, small_grid))


def test_window_is_rebased_and_carries_meshes(small_grid: GridSpec) -> None:
    builder = TrajectoryBuilder(small_grid)
    for t in range(1, 6):
        builder.add(_motions(t, small_grid, temporal=(1.0, 0.0)), frames=(np.zeros(2), np.ones(2)) if t == 5 else None)
    window = build_window(5, builder, 3)
    assert window.xi == 5 and window.length == 3
    np.testing.assert_allclose(window.trajectories[:, 0], 0.0)
    np.testing.assert_allclose(window.trajectories[0, :, 0, 0, 0], [0.0, 1.0, 2.0], atol=1e-8)
    np.testing.assert_allclose(window.base[0, 0, 0], [2.0, 0.0], atol=1e-8)
    assert window.meshes.shape == (2, 3, *small_grid.shape)
    assert window.last_frames is not None
    assert window.history is None


@pytest.mark.parametrize("xi", [2, 6])
def test_window_outside_the_buffer_is_missing_history(small_grid: GridSpec, xi: int) -> None:
    builder = TrajectoryBuilder(small_grid)
    for t in range(1, 6):
        builder.add(zero_motions(t, small_grid))
    with pytest.raises(MissingHistory):
        builder.build_window(xi, 3)


def test_committed_positions_become_the_next_window_history(small_grid: GridSpec) -> None:
    builder = TrajectoryBuilder(small_grid)
    for t in range(1, 5):
        builder.add(_motions(t, small_grid, temporal=(1.0, 0.0)))
    smoothed = np.zeros((2, 3, *small_grid.shape))
    smoothed[..., 0] = 7.0
    builder.commit(1, smoothed)
    window = builder.build_window(4, 3)
    assert window.history is not None
    assert window.history.shape == (2, 2, *small_grid.shape)
    # re-based on S(2) = 1
    np.testing.assert_allclose(window.history[..., 0], 6.0, atol=1e-8)


def test_drop_before_forgets_old_frames(small_grid: GridSpec) -> None:
    builder = TrajectoryBuilder(small_grid)
    for t in range(1, 4):
        builder.add(zero_motions(t, small_grid), frames=(np.zeros(1), np.zeros(1)))
    builder.drop_before(3)
    assert builder.build_window(2, 2).last_frames is None
    assert builder.build_window(3, 2).last_frames is not None
