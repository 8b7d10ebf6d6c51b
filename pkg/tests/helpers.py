"""Shared numeric helpers for tests: finite differences and procedural frames."""
from __future__ import annotations

from typing import Callable

import cv2
import numpy as np


def central_difference(f: Callable[[np.ndarray], float], x: np.ndarray, h: float = 1e-4) -> np.ndarray:
    """Full central-difference gradient of a scalar function."""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + h
        plus = f(x)
        flat[i] = keep - h
        minus = f(x)
        flat[i] = keep
        out[i] = (plus - minus) / (2.0 * h)
    return grad


def directional_derivative(
    f: Callable[[np.ndarray], float], x: np.ndarray, direction: np.ndarray, h: float = 1e-4
) -> float:
    return (f(x + h * direction) - f(x - h * direction)) / (2.0 * h)


def relative_error(a: np.ndarray | float, b: np.ndarray | float) -> float:
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-12))


def textured_image(width: int, height: int, seed: int = 0, *, blur: float = 2.0, channels: int = 3) -> np.ndarray:
    """Smoothed random texture, uint8, with enough contrast for block matching."""
    rng = np.random.default_rng(seed)
    noise = rng.uniform(0.0, 255.0, (height, width, channels)).astype(np.float32)
    smooth = cv2.GaussianBlur(noise, (0, 0), blur)
    if smooth.ndim == 2:
        smooth = smooth[:, :, None]
    lo, hi = smooth.min(), smooth.max()
    image = (smooth - lo) / max(float(hi - lo), 1e-6) * 235.0 + 10.0
    image = image.astype(np.uint8)
    return image[:, :, 0] if channels == 1 else image


def smooth_field(height: int, width: int, lo: float, hi: float, seed: int = 0) -> np.ndarray:
    """Float64 gray image varying slowly between lo and hi."""
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((height, width)).astype(np.float32)
    smooth = cv2.GaussianBlur(noise, (0, 0), 4.0).astype(np.float64)
    smooth = (smooth - smooth.min()) / max(float(smooth.max() - smooth.min()), 1e-9)
    return lo + (hi - lo) * smooth


def crop_pair(texture: np.ndarray, size: tuple[int, int], shift: tuple[int, int], border: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Two crops of one texture such that b(x, y) = a(x - dx, y - dy)."""
    w, h = size
    dx, dy = shift
    a = texture[border : border + h, border : border + w]
    b = texture[border - dy : border - dy + h, border - dx : border - dx + w]
    return np.ascontiguousarray(a), np.ascontiguousarray(b)
