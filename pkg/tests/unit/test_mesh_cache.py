from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from stabweave.app.config.pipeline_config import PipelineConfig
from stabweave.app.domain.errors import CountMismatch, SchemaMismatch, ShapeMismatch
from stabweave.app.domain.geometry.tps_mesh import ControlMotions, GridSpec
from stabweave.app.domain.models import FrameMotions
from stabweave.app.infrastructure.motion.cached_source import CachedMotionSource
from stabweave.app.infrastructure.motion.estimator_source import EstimatorMotionSource
from stabweave.app.infrastructure.motion.factory import create_motion_source
from stabweave.app.infrastructure.persistence.factory import create_mesh_store
from stabweave.app.infrastructure.persistence.json_mesh_cache import JsonMeshCache, mesh_cache_io


def _records(grid: GridSpec, frames: int, rng: np.random.Generator) -> list[FrameMotions]:
    out = []
    for t in range(1, frames + 1):
        temporal = [ControlMotions(rng.normal(size=grid.shape), grid) if t > 1 else ControlMotions.zeros(grid) for _ in range(2)]
        out.append(
            FrameMotions(
                t=t,
                spatial_ref=ControlMotions(rng.normal(size=grid.shape), grid),
                spatial_tgt=ControlMotions(rng.normal(size=grid.shape), grid),
                temporal_ref=temporal[0],
                temporal_tgt=temporal[1],
            )
        )
    return out


def _document(grid: GridSpec) -> dict:
    zero = np.zeros(grid.shape).tolist()
    return {
        "grid": [grid.rows, grid.cols],
        "image_size": list(grid.image_size),
        "beta": 0.5,
        "frames": [
            {"t": 1, "m_spatial_ref": zero, "m_spatial_tgt": zero},
            {"t": 2, "m_spatial_ref": zero, "m_spatial_tgt": zero, "m_temporal_ref": zero, "m_temporal_tgt": zero},
        ],
    }


def test_written_cache_reads_back_the_same_motions(tmp_path: Path, small_grid: GridSpec, rng: np.random.Generator) -> None:
    records = _records(small_grid, 3, rng)
    path = tmp_path / "cache" / "meshes.json"
    JsonMeshCache(path).write(records, beta=0.25)
    loaded = JsonMeshCache(path).read(small_grid)
    assert [r.t for r in loaded] == [1, 2, 3]
    for a, b in zip(records, loaded):
        np.testing.assert_array_equal(a.spatial_tgt.motions, b.spatial_tgt.motions)
        np.testing.assert_array_equal(a.temporal_ref.motions, b.temporal_ref.motions)
    assert json.loads(path.read_text())["beta"] == 0.25


def test_first_frame_may_omit_temporal_motions(tmp_path: Path, small_grid: GridSpec) -> None:
    path = tmp_path / "m.json"
    path.write_text(json.dumps(_document(small_grid)))
    loaded = mesh_cache_io("read", path, grid=small_grid)
    assert not loaded[0].temporal_tgt.motions.any()


@pytest.mark.parametrize(
    ("mutate", "error"),
    [
        (lambda d: d.update(grid=[4, 4]), ShapeMismatch),
        (lambda d: d.update(image_size=[10, 10]), ShapeMismatch),
        (lambda d: d["frames"][1].update(t=3), SchemaMismatch),
        (lambda d: d["frames"][1].pop("m_temporal_ref"), SchemaMismatch),
        (lambda d: d["frames"][0].update(m_spatial_ref=np.zeros((2, 2, 2)).tolist()), ShapeMismatch),
        (lambda d: d["frames"][0].update(m_temporal_ref=np.ones((3, 3, 2)).tolist()), SchemaMismatch),
        (lambda d: d.update(extra=True), SchemaMismatch),
    ],
)
def test_invalid_documents_are_rejected(tmp_path: Path, small_grid: GridSpec, mutate, error) -> None:
    doc = _document(small_grid)
    mutate(doc)
    path = tmp_path / "m.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(error):
        JsonMeshCache(path).read(small_grid)


def test_malformed_json_is_a_schema_mismatch(tmp_path: Path, small_grid: GridSpec) -> None:
    path = tmp_path / "m.json"
    path.write_text("{not json")
    with pytest.raises(SchemaMismatch):
        JsonMeshCache(path).read(small_grid)


def test_empty_cache_is_not_written(tmp_path: Path) -> None:
    with pytest.raises(SchemaMismatch):
        mesh_cache_io("write", tmp_path / "m.json", [])


def test_store_factory_selects_by_suffix(tmp_path: Path) -> None:
    assert isinstance(create_mesh_store(tmp_path / "m.json"), JsonMeshCache)
    with pytest.raises(ValueError):
        create_mesh_store(tmp_path / "m.npz")


def test_motion_source_factory(tmp_path: Path, small_grid: GridSpec, rng: np.random.Generator) -> None:
    cfg = PipelineConfig()
    assert isinstance(create_motion_source(cfg, small_grid), EstimatorMotionSource)

    path = tmp_path / "m.json"
    JsonMeshCache(path).write(_records(small_grid, 3, rng), beta=0.5)
    source = create_motion_source(cfg, small_grid, path, expected_frames=3)
    assert isinstance(source, CachedMotionSource)
    assert len(source) == 3
    with pytest.raises(CountMismatch):
        create_motion_source(cfg, small_grid, path, expected_frames=4)
