"""JSON mesh cache adapter."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Sequence

import numpy as np
from loguru import logger
from pydantic import ValidationError

from stabweave.app.core import SERVICE_NAME
from stabweave.app.domain.errors import SchemaMismatch, ShapeMismatch
from stabweave.app.domain.geometry.tps_mesh import ControlMotions, GridSpec
from stabweave.app.domain.models import FrameMotions
from stabweave.app.schemas.mesh_cache import MeshCacheDocument, MeshCacheFrame


def _log(event: str, **kwargs) -> None:
    logger.bind(service_name=SERVICE_NAME, event=event, **kwargs).info("")


def _motions(values: list | None, grid: GridSpec, what: str, t: int) -> ControlMotions:
    array = np.asarray(values, dtype=np.float64)
    if array.shape != grid.shape:
        raise ShapeMismatch(f"frame t={t}: {what} has shape {array.shape}, grid needs {grid.shape}")
    return ControlMotions(array, grid)


class JsonMeshCache:
    """One JSON document per video pair."""

    def __init__(self, path: str | Path) -> None:
        self._path = Path(path)

    @property
    def path(self) -> Path:
        return self._path

    def read(self, grid: GridSpec) -> list[FrameMotions]:
        try:
            raw = json.loads(self._path.read_text(encoding="utf-8"))
            doc = MeshCacheDocument.model_validate(raw)
        except (json.JSONDecodeError, ValidationError) as exc:
            raise SchemaMismatch(f"{self._path}: {exc}") from exc

        if tuple(doc.grid) != (grid.rows, grid.cols):
            raise ShapeMismatch(f"cache grid {tuple(doc.grid)} does not match configured {(grid.rows, grid.cols)}")
        if tuple(doc.image_size) != grid.image_size:
            raise ShapeMismatch(f"cache image size {tuple(doc.image_size)} does not match frames {grid.image_size}")

        frames = sorted(doc.frames, key=lambda f: f.t)
        if [f.t for f in frames] != list(range(1, len(frames) + 1)):
            raise SchemaMismatch("frame indices must run 1..T without gaps")

        records: list[FrameMotions] = []
        zero = ControlMotions.zeros(grid)
        for f in frames:
            if f.t > 1 and (f.m_temporal_ref is None or f.m_temporal_tgt is None):
                raise SchemaMismatch(f"frame t={f.t} is missing temporal motions")
            temporal_ref = zero if f.m_temporal_ref is None else _motions(f.m_temporal_ref, grid, "m_temporal_ref", f.t)
            temporal_tgt = zero if f.m_temporal_tgt is None else _motions(f.m_temporal_tgt, grid, "m_temporal_tgt", f.t)
            if f.t == 1 and (np.any(temporal_ref.motions) or np.any(temporal_tgt.motions)):
                raise SchemaMismatch("temporal motions at t=1 must be all-zero")
            records.append(
                FrameMotions(
                    t=f.t,
                    spatial_ref=_motions(f.m_spatial_ref, grid, "m_spatial_ref", f.t),
                    spatial_tgt=_motions(f.m_spatial_tgt, grid, "m_spatial_tgt", f.t),
                    temporal_ref=temporal_ref,
                    temporal_tgt=temporal_tgt,
                )
            )
        return records

    def write(self, records: Sequence[FrameMotions], beta: float) -> None:
        if not records:
            raise SchemaMismatch("refusing to write an empty mesh cache")
        grid = records[0].grid
        doc = MeshCacheDocument(
            grid=(grid.rows, grid.cols),
            image_size=grid.image_size,
            beta=beta,
            frames=[
                MeshCacheFrame(
                    t=r.t,
                    m_spatial_ref=r.spatial_ref.motions.tolist(),
                    m_spatial_tgt=r.spatial_tgt.motions.tolist(),
                    m_temporal_ref=r.temporal_ref.motions.tolist(),
                    m_temporal_tgt=r.temporal_tgt.motions.tolist(),
                )
                for r in records
            ],
        )
        self._path.parent.mkdir(parents=True, exist_ok=True)
        self._path.write_text(doc.model_dump_json(), encoding="utf-8")
        _log("mesh_cache_written", path=str(self._path), frames=len(records))


def mesh_cache_io(
    direction: Literal["read", "write"],
    path: str | Path,
    records: Sequence[FrameMotions] | None = None,
    *,
    grid: GridSpec | None = None,
    beta: float = 0.5,
) -> list[FrameMotions]:
    """Read (validated against `grid`) or write a mesh cache; returns the records."""
    cache = JsonMeshCache(path)
    if direction == "read":
        if grid is None:
            raise ValueError("reading a mesh cache needs the configured grid")
        return cache.read(grid)
    if direction == "write":
        cache.write(records or [], beta)
        return list(records or [])
    raise ValueError(f"unknown direction: {direction}")
