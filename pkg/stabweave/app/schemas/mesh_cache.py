"""Mesh cache document: externally computed control motions per frame pair."""
from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field

Array3 = list[list[list[float]]]


class MeshCacheFrame(BaseModel):
    model_config = ConfigDict(extra="forbid")

    t: int = Field(..., ge=1)
    m_spatial_ref: Array3
    m_spatial_tgt: Array3
    # Omitted (all-zero) only for t = 1.
    m_temporal_ref: Array3 | None = None
    m_temporal_tgt: Array3 | None = None


class MeshCacheDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    grid: tuple[int, int]
    image_size: tuple[int, int]
    beta: float = Field(0.5, ge=0, le=1)
    frames: list[MeshCacheFrame]
