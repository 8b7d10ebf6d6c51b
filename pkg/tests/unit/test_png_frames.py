from __future__ import annotations

from pathlib import Path

import cv2
import numpy as np
import pytest

from stabweave.app.config.pipeline_config import PipelineConfig
from stabweave.app.constants import View
from stabweave.app.domain.errors import CountMismatch, DecodeError, SizeMismatch
from stabweave.app.infrastructure.inmemory.in_memory_frames import InMemoryFrameSink, InMemoryPairSource
from stabweave.app.infrastructure.io.factory import create_frame_sink, create_frame_source
from stabweave.app.infrastructure.io.png_frames import PngDirectorySink, PngPairSource, ingest, list_frames
from tests.helpers import textured_image


def _write(directory: Path, names: list[str], size: tuple[int, int] = (80, 64)) -> list[np.ndarray]:
    directory.mkdir(parents=True, exist_ok=True)
    images = []
    for k, name in enumerate(names):
        image = textured_image(*size, seed=k)
        cv2.imwrite(str(directory / name), image)
        images.append(image)
    return images


def test_frames_sort_numerically(tmp_path: Path) -> None:
    _write(tmp_path, ["frame10.png", "frame2.png", "frame1.png"])
    assert [p.name for p in list_frames(tmp_path)] == ["frame1.png", "frame2.png", "frame10.png"]


def test_pairs_are_lazy_ordered_and_lossless(tmp_path: Path) -> None:
    ref = _write(tmp_path / "ref", ["1.png", "2.png"])
    _write(tmp_path / "tgt", ["1.png", "2.png"])
    source = PngPairSource(tmp_path / "ref", tmp_path / "tgt")
    assert len(source) == 2
    assert source.frame_size == (80, 64)
    pairs = list(source.pairs())
    assert [p.index for p in pairs] == [1, 2]
    assert pairs[1].reference.view == View.REFERENCE
    np.testing.assert_array_equal(pairs[1].reference.pixels, ref[1])


def test_count_mismatch(tmp_path: Path) -> None:
    _write(tmp_path / "ref", ["1.png", "2.png"])
    _write(tmp_path / "tgt", ["1.png"])
    with pytest.raises(CountMismatch):
        PngPairSource(tmp_path / "ref", tmp_path / "tgt")


def test_empty_directories_are_rejected(tmp_path: Path) -> None:
    (tmp_path / "ref").mkdir()
    (tmp_path / "tgt").mkdir()
    with pytest.raises(CountMismatch):
        PngPairSource(tmp_path / "ref", tmp_path / "tgt")


def test_size_mismatch_surfaces_when_the_frame_is_read(tmp_path: Path) -> None:
    _write(tmp_path / "ref", ["1.png", "2.png"])
    _write(tmp_path / "tgt", ["1.png"])
    _write(tmp_path / "tgt", ["2.png"], size=(96, 64))
    with pytest.raises(SizeMismatch):
        list(ingest(tmp_path / "ref", tmp_path / "tgt"))


def test_resize_to_working_size(tmp_path: Path) -> None:
    _write(tmp_path / "ref", ["1.png"], size=(160, 128))
    _write(tmp_path / "tgt", ["1.png"], size=(160, 128))
    cfg = PipelineConfig(working_size=(80, 64), resize_to_working=True)
    pair = next(create_frame_source(tmp_path / "ref", tmp_path / "tgt", cfg).pairs())
    assert pair.target.size == (80, 64)


def test_undecodable_file(tmp_path: Path) -> None:
    for view in ("ref", "tgt"):
        (tmp_path / view).mkdir()
        (tmp_path / view / "1.png").write_bytes(b"not a png")
    with pytest.raises(DecodeError):
        PngPairSource(tmp_path / "ref", tmp_path / "tgt")


def test_sink_writes_numbered_pngs(tmp_path: Path) -> None:
    sink = create_frame_sink(tmp_path / "out")
    assert isinstance(sink, PngDirectorySink)
    sink.write(3, np.full((64, 64, 3), 300.0))
    sink.close()
    written = cv2.imread(str(tmp_path / "out" / "000003.png"))
    assert written.shape == (64, 64, 3)
    assert written.max() == 255
    assert isinstance(create_frame_sink(None), InMemoryFrameSink)


def test_in_memory_source_validates_its_frames() -> None:
    with pytest.raises(CountMismatch):
        InMemoryPairSource([np.zeros((64, 64, 3), np.uint8)], [])
    with pytest.raises(SizeMismatch):
        InMemoryPairSource([np.zeros((64, 64, 3), np.uint8)], [np.zeros((64, 80, 3), np.uint8)])
