"""Procedural two-view dataset: a shared texture filmed by a shaking two-camera rig.

View pixel x of view v at time t samples the texture at pan(t) @ inter_view_v @ jitter_v(t) @ x,
where inter_view is the identity for the reference view.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterator

import cv2
import numpy as np
from loguru import logger

from stabweave.app.core import SERVICE_NAME
from stabweave.app.domain.geometry.homography import (
    Homography3x3,
    h4pt_from_matrix,
    image_corners,
    solve_four_point,
)
from stabweave.app.ports.frame_sink import FrameSink
from stabweave.app.schemas.synthetic import GroundTruth, GroundTruthFrame, SyntheticSpec

# Feature size of the coarsest noise octave, in pixels.
BASE_OCTAVE_PX = 64
TEXTURE_BORDER_PX = 16


def _log(event: str, **kwargs: Any) -> None:
    logger.bind(service_name=SERVICE_NAME, event=event, **kwargs).info("")


@dataclass(frozen=True)
class SyntheticFrame:
    t: int
    reference: np.ndarray
    target: np.ndarray
    truth: GroundTruthFrame


def procedural_texture(width: int, height: int, spec: SyntheticSpec, rng: np.random.Generator) -> np.ndarray:
    """Multi-octave colour noise mixed with a checkerboard, BGR uint8."""
    acc = np.zeros((height, width, 3), np.float32)
    amplitude, total = 1.0, 0.0
    for k in range(spec.octaves):
        cell = max(2, BASE_OCTAVE_PX >> k)
        coarse = rng.standard_normal((height // cell + 2, width // cell + 2, 3)).astype(np.float32)
        acc += amplitude * cv2.resize(coarse, (width, height), interpolation=cv2.INTER_CUBIC)
        total += amplitude
        amplitude *= 0.5
    noise = acc / total
    noise = (noise - noise.min()) / max(float(noise.max() - noise.min()), 1e-6)

    yy, xx = np.mgrid[0:height, 0:width]
    checker = (((xx // spec.checker_size) + (yy // spec.checker_size)) % 2).astype(np.float32)
    image = (1.0 - spec.checker_mix) * noise + spec.checker_mix * checker[:, :, None]
    return np.clip(20.0 + 215.0 * image, 0, 255).astype(np.uint8)


def _normalized(m: np.ndarray) -> np.ndarray:
    return m / m[2, 2]


def _translation(tx: float, ty: float) -> np.ndarray:
    return np.array([[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]])


def inter_view_matrix(spec: SyntheticSpec) -> np.ndarray:
    """Target-frame points to reference-frame points (before jitter)."""
    tx, ty = spec.inter_view_shift
    return np.array([[1.0, 0.0, tx], [0.0, 1.0, ty], [spec.inter_view_tilt / spec.width, 0.0, 1.0]])


def jitter_matrix(displacements: np.ndarray, image_size: tuple[int, int]) -> np.ndarray:
    if not np.any(displacements):
        return np.eye(3)
    corners = image_corners(image_size)
    return _normalized(solve_four_point(corners, corners + displacements))


def _texture_layout(spec: SyntheticSpec) -> tuple[tuple[int, int], tuple[float, float]]:
    """Texture (width, height) and the texture position of reference pixel (0, 0) at t = 0."""
    tx, ty = spec.inter_view_shift
    px, py = spec.pan_per_frame
    pad = TEXTURE_BORDER_PX + 2.0 * (spec.jitter_amplitude + spec.view_jitter_amplitude)
    tilt_pad = abs(spec.inter_view_tilt) * spec.width
    span_x = spec.width + abs(tx) + abs(px) * spec.frames + tilt_pad
    span_y = spec.height + abs(ty) + abs(py) * spec.frames + tilt_pad
    origin = (pad + max(0.0, -tx) + max(0.0, -px * spec.frames), pad + max(0.0, -ty) + max(0.0, -py * spec.frames))
    size = (int(np.ceil(span_x + 2 * pad)), int(np.ceil(span_y + 2 * pad)))
    return size, origin


def generate_frames(spec: SyntheticSpec) -> Iterator[SyntheticFrame]:
    """Render both view streams frame by frame with their ground truth."""
    rng = np.random.default_rng(spec.seed)
    (tex_w, tex_h), (ox, oy) = _texture_layout(spec)
    texture = procedural_texture(tex_w, tex_h, spec, rng)
    size = spec.image_size
    inter_view = inter_view_matrix(spec)
    inverse_inter_view = np.linalg.inv(inter_view)

    for t in range(1, spec.frames + 1):
        shared = rng.uniform(-spec.jitter_amplitude, spec.jitter_amplitude, (4, 2))
        own = rng.uniform(-spec.view_jitter_amplitude, spec.view_jitter_amplitude, (2, 4, 2))
        d_ref, d_tgt = shared + own[0], shared + own[1]
        j_ref, j_tgt = jitter_matrix(d_ref, size), jitter_matrix(d_tgt, size)
        pan = _translation(ox + spec.pan_per_frame[0] * t, oy + spec.pan_per_frame[1] * t)

        views = []
        for m in (pan @ j_ref, pan @ inter_view @ j_tgt):
            views.append(
                cv2.warpPerspective(
                    texture,
                    m,
                    size,
                    flags=cv2.INTER_LINEAR | cv2.WARP_INVERSE_MAP,
                    borderMode=cv2.BORDER_REFLECT,
                )
            )

        h = _normalized(np.linalg.inv(j_tgt) @ inverse_inter_view @ j_ref)
        truth = GroundTruthFrame(
            t=t,
            ref_jitter_4pt=d_ref.tolist(),
            tgt_jitter_4pt=d_tgt.tolist(),
            h_ref_to_tgt=h.tolist(),
            h_ref_to_tgt_4pt=h4pt_from_matrix(Homography3x3(h, size)).displacements.tolist(),
        )
        yield SyntheticFrame(t=t, reference=views[0], target=views[1], truth=truth)


def synth_generate(spec: SyntheticSpec, reference_sink: FrameSink, target_sink: FrameSink) -> GroundTruth:
    """Write both streams to their sinks and return the ground truth document."""
    truths: list[GroundTruthFrame] = []
    try:
        for frame in generate_frames(spec):
            reference_sink.write(frame.t, frame.reference)
            target_sink.write(frame.t, frame.target)
            truths.append(frame.truth)
    finally:
        reference_sink.close()
        target_sink.close()

    inter_view = _normalized(inter_view_matrix(spec))
    truth = GroundTruth(
        spec=spec,
        inter_view=inter_view.tolist(),
        inter_view_4pt=h4pt_from_matrix(Homography3x3(inter_view, spec.image_size)).displacements.tolist(),
        frames=truths,
    )
    _log(
        "synthetic_written",
        frames=spec.frames,
        size=f"{spec.width}x{spec.height}",
        jitter=spec.jitter_amplitude,
        seed=spec.seed,
    )
    return truth
