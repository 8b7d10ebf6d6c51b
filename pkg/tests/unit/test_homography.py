"""Unit tests for homography forms, algebra and the bidirectional decomposition."""
from __future__ import annotations

import numpy as np
import pytest

from stabweave.app.domain.errors import CornerAtInfinity, DegenerateCorrespondences, SingularMatrix
from stabweave.app.domain.geometry.homography import (
    Homography3x3,
    Homography4pt,
    PlaneFraction,
    apply_point,
    canonicalize,
    compose,
    decompose_bidirectional,
    h4pt_from_matrix,
    homography_algebra,
    image_corners,
    invert,
    matrix_from_h4pt,
    solve_four_point,
)

SIZE = (480, 360)


def _perspective() -> Homography3x3:
    return Homography3x3(np.array([[1.02, 0.03, 5.0], [-0.01, 0.98, -3.0], [2e-5, -1e-5, 1.0]]), SIZE)


def test_solve_four_point_maps_every_corner_exactly() -> None:
    src = image_corners(SIZE)
    dst = src + np.array([[3.0, -2.0], [-4.0, 1.5], [2.5, 2.0], [-1.0, -3.0]])
    m = solve_four_point(src, dst)
    mapped = apply_point(Homography3x3(m, SIZE), src)
    np.testing.assert_allclose(mapped, dst, atol=1e-9)


def test_solve_four_point_rejects_collinear_points() -> None:
    src = np.array([[0.0, 0.0], [10.0, 0.0], [20.0, 0.0], [0.0, 10.0]])
    with pytest.raises(DegenerateCorrespondences):
        solve_four_point(src, src)


def test_four_point_and_matrix_forms_agree() -> None:
    q = Homography4pt(np.array([[4.0, 2.0], [-3.0, 1.0], [2.0, -5.0], [1.0, 3.0]]), SIZE)
    back = h4pt_from_matrix(matrix_from_h4pt(q))
    np.testing.assert_allclose(back.displacements, q.displacements, atol=1e-8)


def test_canonical_form_has_unit_norm_and_non_negative_h33() -> None:
    m = canonicalize(-3.0 * np.eye(3))
    assert np.linalg.norm(m) == pytest.approx(1.0)
    assert m[2, 2] > 0


def test_singular_matrix_is_rejected() -> None:
    with pytest.raises(SingularMatrix):
        Homography3x3(np.array([[1.0, 2.0, 0.0], [2.0, 4.0, 0.0], [0.0, 0.0, 1.0]]), SIZE)


def test_point_on_the_line_at_infinity_raises() -> None:
    h = Homography3x3(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-0.01, 0.0, 1.0]]), SIZE)
    with pytest.raises(CornerAtInfinity):
        apply_point(h, np.array([100.0, 20.0]))


def test_compose_with_inverse_is_identity() -> None:
    h = _perspective()
    identity = compose(h, invert(h))
    assert identity.distance(Homography3x3.identity(SIZE)) < 1e-9
    points = np.array([[10.0, 20.0], [400.0, 300.0]])
    np.testing.assert_allclose(homography_algebra("apply_point", identity, points), points, atol=1e-9)


def test_unknown_algebra_operation_raises() -> None:
    with pytest.raises(ValueError):
        homography_algebra("transpose", _perspective())  # type: ignore[arg-type]


def test_decomposition_splits_a_translation_by_beta() -> None:
    h = Homography3x3.translation(8.0, 4.0, SIZE)
    h_ref, h_tgt = decompose_bidirectional(h, PlaneFraction(0.5))
    np.testing.assert_allclose(h4pt_from_matrix(h_tgt).displacements, np.tile([4.0, 2.0], (4, 1)), atol=1e-9)
    np.testing.assert_allclose(h4pt_from_matrix(h_ref).displacements, np.tile([-4.0, -2.0], (4, 1)), atol=1e-9)


@pytest.mark.parametrize("beta", [0.0, 0.25, 0.5, 0.75, 1.0])
def test_decomposition_satisfies_h_times_h_ref_equals_h_tgt(beta: float) -> None:
    h = _perspective()
    h_ref, h_tgt = decompose_bidirectional(h, PlaneFraction(beta))
    assert compose(h, h_ref).distance(h_tgt) < 1e-9


def test_decomposition_endpoints() -> None:
    h = _perspective()
    identity = Homography3x3.identity(SIZE)
    _, h_tgt = decompose_bidirectional(h, PlaneFraction(0.0))
    assert h_tgt.distance(identity) < 1e-9
    h_ref, _ = decompose_bidirectional(h, PlaneFraction(1.0))
    assert h_ref.distance(identity) < 1e-9


def test_plane_fraction_outside_unit_interval_is_rejected() -> None:
    with pytest.raises(ValueError):
        PlaneFraction(1.5)
