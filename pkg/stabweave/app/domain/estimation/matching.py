"""Grid-based ZNCC block matching: one correspondence per cell at most."""
from __future__ import annotations

import cv2
import numpy as np

from stabweave.app.config.pipeline_config import EstimatorConfig
from stabweave.app.domain.errors import InsufficientTexture, SizeMismatch
from stabweave.app.domain.models import Correspondence


def to_luma(pixels: np.ndarray) -> np.ndarray:
    """float32 luma (0.299 R + 0.587 G + 0.114 B) of a BGR or gray image."""
    if pixels.ndim == 3 and pixels.shape[2] == 3:
        return cv2.cvtColor(pixels.astype(np.float32), cv2.COLOR_BGR2GRAY)
    if pixels.ndim == 3:
        return pixels[:, :, 0].astype(np.float32)
    return pixels.astype(np.float32)


def local_std(gray: np.ndarray, patch: int) -> np.ndarray:
    """Standard deviation of the patch centred on every pixel."""
    g = gray.astype(np.float64)
    mean = cv2.boxFilter(g, -1, (patch, patch), normalize=True, borderType=cv2.BORDER_REFLECT)
    sq = cv2.boxFilter(g * g, -1, (patch, patch), normalize=True, borderType=cv2.BORDER_REFLECT)
    return np.sqrt(np.maximum(sq - mean * mean, 0.0))


def _cell_bounds(length: int, cells: int) -> np.ndarray:
    return np.linspace(0, length, cells + 1).round().astype(int)


def _best_displacement(scores: np.ndarray, x_lo: int, y_lo: int, cx: int, cy: int) -> tuple[int, int, float]:
    best = scores.max()
    rows, cols = np.nonzero(scores == best)
    dx = x_lo + cols - cx
    dy = y_lo + rows - cy
    order = np.lexsort((dy, dx, dx * dx + dy * dy))
    k = order[0]
    return int(dx[k]), int(dy[k]), float(best)


def _parabolic_offset(minus: float, centre: float, plus: float) -> float:
    curvature = minus - 2.0 * centre + plus
    if curvature >= 0.0:
        return 0.0
    return float(np.clip(0.5 * (minus - plus) / curvature, -0.5, 0.5))


def match_grid(a: np.ndarray, b: np.ndarray, cfg: EstimatorConfig) -> list[Correspondence]:
    """Match the highest-contrast patch of every cell of `a` inside `b`."""
    if a.shape[:2] != b.shape[:2]:
        raise SizeMismatch(f"frames differ in size: {a.shape[:2]} vs {b.shape[:2]}")
    ga, gb = to_luma(a), to_luma(b)
    h, w = ga.shape
    half = cfg.patch // 2
    std_a = local_std(ga, cfg.patch)
    std_b = local_std(gb, cfg.patch)

    # Only centres whose patch is fully inside the frame.
    valid = np.zeros_like(std_a, dtype=bool)
    valid[half : h - half, half : w - half] = True
    candidates = np.where(valid, std_a, -1.0)

    xs = _cell_bounds(w, cfg.match_grid)
    ys = _cell_bounds(h, cfg.match_grid)
    matches: list[Correspondence] = []
    for i in range(cfg.match_grid):
        for j in range(cfg.match_grid):
            cell = candidates[ys[i] : ys[i + 1], xs[j] : xs[j + 1]]
            if cell.size == 0:
                continue
            r, c = np.unravel_index(int(np.argmax(cell)), cell.shape)
            if cell[r, c] < cfg.min_patch_std:
                continue
            cy, cx = ys[i] + int(r), xs[j] + int(c)
            template = ga[cy - half : cy + half + 1, cx - half : cx + half + 1]

            x_lo, x_hi = max(half, cx - cfg.search_radius), min(w - 1 - half, cx + cfg.search_radius)
            y_lo, y_hi = max(half, cy - cfg.search_radius), min(h - 1 - half, cy + cfg.search_radius)
            region = gb[y_lo - half : y_hi + half + 1, x_lo - half : x_hi + half + 1]
            scores = cv2.matchTemplate(region, template, cv2.TM_CCOEFF_NORMED).astype(np.float64)
            flat = std_b[y_lo : y_hi + 1, x_lo : x_hi + 1] < cfg.min_patch_std
            scores = np.where(flat | ~np.isfinite(scores), -1.0, np.clip(scores, -1.0, 1.0))

            dx, dy, score = _best_displacement(scores, x_lo, y_lo, cx, cy)
            if score < cfg.zncc_min:
                continue
            fx, fy = float(dx), float(dy)
            if cfg.subpixel:
                sr, sc = cy + dy - y_lo, cx + dx - x_lo
                if 0 < sc < scores.shape[1] - 1:
                    fx += _parabolic_offset(scores[sr, sc - 1], scores[sr, sc], scores[sr, sc + 1])
                if 0 < sr < scores.shape[0] - 1:
                    fy += _parabolic_offset(scores[sr - 1, sc], scores[sr, sc], scores[sr + 1, sc])
            matches.append(Correspondence(p=(float(cx), float(cy)), q=(cx + fx, cy + fy), score=score))

    if len(matches) < cfg.min_matches:
        raise InsufficientTexture(f"only {len(matches)} cells matched, need {cfg.min_matches}")
    return matches
