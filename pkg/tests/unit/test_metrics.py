from __future__ import annotations

import numpy as np
import pytest

from stabweave.app.application.synthetic_service import inter_view_matrix
from stabweave.app.constants import PSNR_CAP_DB
from stabweave.app.domain.estimation.motion_estimator import forward_motions
from stabweave.app.domain.geometry.homography import Homography3x3, PlaneFraction, decompose_bidirectional
from stabweave.app.domain.geometry.tps_mesh import GridSpec, Mesh, rigid_vertices
from stabweave.app.domain.metrics import (
    alignment_scores,
    distortion_score,
    invalid_area_rate,
    masked_psnr,
    masked_ssim,
    mean_over_videos,
    stability_score,
)
from stabweave.app.domain.render import Canvas, canvas_extent, warp_frame
from stabweave.app.schemas.report import FrameReport, VideoReport
from stabweave.app.schemas.synthetic import SyntheticSpec
from tests.helpers import textured_image


def test_psnr_of_identical_content_is_capped() -> None:
    image = textured_image(40, 30, seed=1)
    assert masked_psnr(image, image, np.ones((30, 40))) == PSNR_CAP_DB


def test_psnr_of_a_constant_offset() -> None:
    a = np.zeros((20, 20))
    b = np.full((20, 20), 10.0)
    mask = np.zeros((20, 20))
    mask[5:15, 5:15] = 1.0
    assert masked_psnr(a, b, mask) == pytest.approx(10.0 * np.log10(255.0**2 / 100.0))


def test_psnr_ignores_pixels_outside_the_mask() -> None:
    a = np.zeros((10, 10))
    b = a.copy()
    b[0, 0] = 255.0
    mask = np.ones((10, 10))
    mask[0, 0] = 0.0
    assert masked_psnr(a, b, mask) == PSNR_CAP_DB


def test_ssim_of_identical_images_is_one() -> None:
    image = textured_image(48, 40, seed=2)
    assert masked_ssim(image, image, np.ones((40, 48))) == pytest.approx(1.0)


def test_ssim_drops_for_different_content() -> None:
    a, b = textured_image(48, 40, seed=2), textured_image(48, 40, seed=3)
    assert masked_ssim(a, b, np.ones((40, 48))) < 0.5


def test_ssim_needs_a_full_window_inside_the_mask() -> None:
    mask = np.zeros((40, 48))
    mask[10:20, 10:20] = 1.0
    assert masked_ssim(np.zeros((40, 48)), np.zeros((40, 48)), mask) is None


def test_alignment_scores_flag_an_empty_overlap() -> None:
    scores = alignment_scores(np.zeros((8, 8)), np.zeros((8, 8)), np.zeros((8, 8)))
    assert scores.overlap_empty
    assert scores.psnr is None and scores.ssim is None


def test_stability_of_a_linear_path_is_zero(small_grid: GridSpec) -> None:
    t = np.arange(10, dtype=float)[:, None, None, None]
    positions = np.broadcast_to(t * np.array([1.0, 2.0]), (10, *small_grid.shape))
    assert stability_score(positions, (0.9, 0.3)) == pytest.approx(0.0, abs=1e-12)


def test_stability_grows_with_shake(small_grid: GridSpec) -> None:
    t = np.arange(10)
    shake = np.where(t % 2 == 0, 1.0, -1.0)[:, None, None, None]
    small = stability_score(np.broadcast_to(shake * [1.0, 0.0], (10, *small_grid.shape)), (0.9,))
    large = stability_score(np.broadcast_to(shake * [3.0, 0.0], (10, *small_grid.shape)), (0.9,))
    assert 0.0 < small < large
    assert large == pytest.approx(3.0 * small)


def test_stability_of_a_short_sequence_is_zero(small_grid: GridSpec) -> None:
    assert stability_score(np.ones((2, *small_grid.shape)), (0.9, 0.3)) == 0.0


def test_distortion_score_is_the_worst_frame(small_grid: GridSpec) -> None:
    rigid = rigid_vertices(small_grid)
    bent = np.array(rigid)
    bent[1, 1] += [0.0, 10.0]
    assert distortion_score(np.stack([rigid, rigid]), small_grid) == pytest.approx(0.0, abs=1e-9)
    assert distortion_score(np.stack([rigid, bent, rigid]), small_grid) == pytest.approx(1000.0)
    assert distortion_score(np.zeros((0, *small_grid.shape)), small_grid) == 0.0


def test_mean_over_videos() -> None:
    assert mean_over_videos([1.0, 2.0, 6.0]) == pytest.approx(3.0)
    assert mean_over_videos([]) == 0.0


def test_shuffling_a_smooth_path_raises_its_stability_score(small_grid: GridSpec, rng: np.random.Generator) -> None:
    t = np.arange(12, dtype=float)[:, None, None, None]
    positions = np.broadcast_to(t * np.array([1.0, 0.5]), (12, *small_grid.shape))
    shuffled = positions[rng.permutation(12)]
    assert stability_score(shuffled, (0.9, 0.3)) > stability_score(positions, (0.9, 0.3))


def test_invalid_area_counts_pixels_outside_both_views() -> None:
    a = np.zeros((4, 10), np.float32)
    b = np.zeros((4, 10), np.float32)
    a[:, :4] = 1.0
    b[:, 3:6] = 1.0
    assert invalid_area_rate(a, b) == pytest.approx(0.4)
    assert invalid_area_rate(np.ones((3, 3)), np.zeros((3, 3))) == 0.0
    assert invalid_area_rate(np.zeros((0, 0)), np.zeros((0, 0))) == 0.0


def test_report_averages_canvas_size_and_invalid_area() -> None:
    frames = [
        FrameReport(index=1, canvas_size=(200, 100), invalid_area=0.1),
        FrameReport(index=2, canvas_size=(300, 120), invalid_area=0.3),
    ]
    report = VideoReport.aggregate("clip", "online", frames)
    assert report.canvas_size_mean == (250.0, 110.0)
    assert report.invalid_area_mean == pytest.approx(0.2)
    empty = VideoReport.aggregate("clip", "online", [])
    assert empty.canvas_size_mean is None and empty.invalid_area_mean is None


def _plane_layout(grid: GridSpec, beta: float) -> tuple[list[Mesh], Canvas, float]:
    """Both views warped onto the plane at `beta` for a strongly tilted rig."""
    spec = SyntheticSpec(width=160, height=120, inter_view_shift=(40.0, 0.0), inter_view_tilt=-0.4)
    ref_to_tgt = Homography3x3(np.linalg.inv(inter_view_matrix(spec)), grid.image_size)
    meshes = [
        Mesh(rigid_vertices(grid) + forward_motions(backward, grid), grid)
        for backward in decompose_bidirectional(ref_to_tgt, PlaneFraction(beta))
    ]
    canvas = canvas_extent(meshes)
    frame = np.full((grid.image_size[1], grid.image_size[0]), 128, np.uint8)
    ref, tgt = (warp_frame(frame, m, canvas) for m in meshes)
    return meshes, canvas, invalid_area_rate(ref.mask, tgt.mask)


def test_unidirectional_warp_keeps_the_reference_rigid(frame_grid: GridSpec) -> None:
    meshes, _, _ = _plane_layout(frame_grid, 1.0)
    np.testing.assert_allclose(meshes[0].vertices, rigid_vertices(frame_grid), atol=1e-6)


def test_mid_plane_needs_a_smaller_canvas_and_wastes_less_of_it(frame_grid: GridSpec) -> None:
    _, mid_canvas, mid_invalid = _plane_layout(frame_grid, 0.5)
    _, uni_canvas, uni_invalid = _plane_layout(frame_grid, 1.0)
    mid_area = mid_canvas.size[0] * mid_canvas.size[1]
    uni_area = uni_canvas.size[0] * uni_canvas.size[1]
    # Target corners land near x = 333, y = 200 on the reference plane.
    assert uni_canvas.size[0] >= 330 and uni_canvas.size[1] >= 195
    assert mid_area < 0.7 * uni_area
    assert 0.0 < mid_invalid < uni_invalid
