"""Frame source/sink factory: the only place that imports concrete frame adapters."""
from __future__ import annotations

from pathlib import Path

from stabweave.app.config.pipeline_config import PipelineConfig
from stabweave.app.infrastructure.inmemory.in_memory_frames import InMemoryFrameSink
from stabweave.app.infrastructure.io.png_frames import PngDirectorySink, PngPairSource
from stabweave.app.ports.frame_sink import FrameSink
from stabweave.app.ports.frame_source import FrameSource


def create_frame_source(ref_dir: str | Path, tgt_dir: str | Path, cfg: PipelineConfig) -> FrameSource:
    resize_to = cfg.working_size if cfg.resize_to_working else None
    return PngPairSource(ref_dir, tgt_dir, resize_to=resize_to)


def create_frame_sink(out_dir: str | Path | None) -> FrameSink:
    """PNG directory when out_dir is given, otherwise an in-memory sink."""
    if out_dir is None:
        return InMemoryFrameSink()
    return PngDirectorySink(out_dir)
