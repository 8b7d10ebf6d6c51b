"""Seeded RANSAC over 4-point homography hypotheses, refined by normalized DLT and least squares."""
from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from stabweave.app.config.pipeline_config import EstimatorConfig
from stabweave.app.domain.errors import DegenerateCorrespondences, NoConsensus, SingularMatrix
from stabweave.app.domain.geometry.homography import (
    Homography3x3,
    ImageSize,
    hartley_normalizer,
    solve_four_point,
)
from stabweave.app.domain.models import Correspondence


def _reprojection_errors(m: np.ndarray, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    homogeneous = np.c_[p, np.ones(len(p))] @ m.T
    depth = homogeneous[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        projected = homogeneous[:, :2] / depth[:, None]
        err = np.linalg.norm(projected - q, axis=1)
    err[~np.isfinite(err) | (np.abs(depth) < 1e-12)] = np.inf
    return err


def normalized_dlt(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Least-squares homography p -> q from >= 4 points (raw 3x3)."""
    t_p, t_q = hartley_normalizer(p), hartley_normalizer(q)
    ph = np.c_[p, np.ones(len(p))] @ t_p.T
    qh = np.c_[q, np.ones(len(q))] @ t_q.T
    x, y = ph[:, 0], ph[:, 1]
    u, v = qh[:, 0], qh[:, 1]
    zeros, ones = np.zeros(len(p)), np.ones(len(p))
    a = np.empty((2 * len(p), 9))
    a[0::2] = np.stack([x, y, ones, zeros, zeros, zeros, -u * x, -u * y, -u], axis=1)
    a[1::2] = np.stack([zeros, zeros, zeros, x, y, ones, -v * x, -v * y, -v], axis=1)
    _, s, vt = np.linalg.svd(a)
    if s[-2] <= 1e-12 * s[0]:
        raise DegenerateCorrespondences("DLT system has a repeated null space")
    normalized = vt[-1].reshape(3, 3)
    return np.linalg.inv(t_q) @ normalized @ t_p


# Below this |h33| (relative to the Frobenius norm) the h33 = 1 parametrization does not exist.
H33_TOLERANCE = 1e-8


def _refine(m: np.ndarray, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Least-squares polish of the eight entries left free by h33 = 1.

    Returns the DLT estimate unrefined when h33 is near zero or the fit returns non-finite entries.
    """
    if not abs(m[2, 2]) > H33_TOLERANCE * np.linalg.norm(m):
        return m
    m = m / m[2, 2]

    def residuals(params: np.ndarray) -> np.ndarray:
        h = np.append(params, 1.0).reshape(3, 3)
        homogeneous = np.c_[p, np.ones(len(p))] @ h.T
        return (homogeneous[:, :2] / homogeneous[:, 2:3] - q).ravel()

    result = least_squares(residuals, m.ravel()[:8], method="lm")
    refined = np.append(result.x, 1.0).reshape(3, 3)
    return refined if np.all(np.isfinite(refined)) else m


def ransac_homography(
    corrs: Sequence[Correspondence], cfg: EstimatorConfig, image_size: ImageSize
) -> tuple[Homography3x3, np.ndarray]:
    """Homography mapping each p onto its q, with the boolean inlier mask."""
    needed = max(4, cfg.min_inliers)
    if len(corrs) < needed:
        raise NoConsensus(f"{len(corrs)} correspondences, need {needed}")
    p = np.array([c.p for c in corrs], dtype=np.float64)
    q = np.array([c.q for c in corrs], dtype=np.float64)
    rng = np.random.default_rng(cfg.seed)

    best_mask: np.ndarray | None = None
    best_key = (-1, np.inf)
    for _ in range(cfg.ransac_iters):
        sample = rng.choice(len(p), size=4, replace=False)
        try:
            m = solve_four_point(p[sample], q[sample])
        except DegenerateCorrespondences:
            continue
        err = _reprojection_errors(m, p, q)
        mask = err <= cfg.ransac_inlier_px
        count = int(mask.sum())
        spread = float(err[mask].sum()) if count else np.inf
        if count > best_key[0] or (count == best_key[0] and spread < best_key[1]):
            best_key, best_mask = (count, spread), mask
            if count == len(p):
                break

    if best_mask is None or best_key[0] < needed:
        raise NoConsensus(f"best hypothesis has {max(best_key[0], 0)} inliers, need {needed}")

    mask = best_mask
    m = normalized_dlt(p[mask], q[mask])
    for _ in range(2):
        m = _refine(m, p[mask], q[mask])
        refit = _reprojection_errors(m, p, q) <= cfg.ransac_inlier_px
        if refit.sum() < needed or np.array_equal(refit, mask):
            break
        mask = refit

    try:
        h = Homography3x3(m, image_size)
    except SingularMatrix as exc:
        raise NoConsensus(f"refined homography is singular: {exc}") from exc
    return h, mask
