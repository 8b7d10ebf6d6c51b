"""PNG directory adapters (OpenCV). Frames are BGR uint8."""
from __future__ import annotations

import re
from pathlib import Path
from typing import Iterator

import cv2
import numpy as np

from stabweave.app.constants import View
from stabweave.app.domain.errors import CountMismatch, DecodeError, SizeMismatch
from stabweave.app.domain.models import Frame, FramePair
from stabweave.app.domain.render import to_uint8

_DIGITS = re.compile(r"(\d+)")


def _numeric_key(path: Path) -> tuple[int, str]:
    found = _DIGITS.findall(path.stem)
    return (int(found[-1]) if found else -1, path.name)


def list_frames(directory: str | Path) -> list[Path]:
    return sorted(Path(directory).glob("*.png"), key=_numeric_key)


def read_png(path: Path) -> np.ndarray:
    image = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if image is None:
        raise DecodeError(str(path))
    return image


class PngPairSource:
    """Lazily pairs two directories of numerically sorted PNGs."""

    def __init__(
        self,
        ref_dir: str | Path,
        tgt_dir: str | Path,
        *,
        resize_to: tuple[int, int] | None = None,
    ) -> None:
        self._ref = list_frames(ref_dir)
        self._tgt = list_frames(tgt_dir)
        if len(self._ref) != len(self._tgt):
            raise CountMismatch(f"{len(self._ref)} reference frames vs {len(self._tgt)} target frames")
        if not self._ref:
            raise CountMismatch(f"no PNG frames in {ref_dir}")
        self._resize_to = resize_to
        if resize_to is not None:
            self._size = (int(resize_to[0]), int(resize_to[1]))
        else:
            first = read_png(self._ref[0])
            self._size = (int(first.shape[1]), int(first.shape[0]))

    def __len__(self) -> int:
        return len(self._ref)

    @property
    def frame_size(self) -> tuple[int, int]:
        return self._size

    def _load(self, path: Path) -> np.ndarray:
        image = read_png(path)
        size = (image.shape[1], image.shape[0])
        if self._resize_to is not None:
            if size != self._size:
                image = cv2.resize(image, self._size, interpolation=cv2.INTER_AREA)
        elif size != self._size:
            raise SizeMismatch(f"{path} is {size[0]}x{size[1]}, expected {self._size[0]}x{self._size[1]}")
        return image

    def pairs(self) -> Iterator[FramePair]:
        for t, (ref_path, tgt_path) in enumerate(zip(self._ref, self._tgt), start=1):
            yield FramePair(
                index=t,
                reference=Frame(self._load(ref_path), t, View.REFERENCE),
                target=Frame(self._load(tgt_path), t, View.TARGET),
            )


class PngDirectorySink:
    """Writes 000001.png, 000002.png, ... into out_dir."""

    def __init__(self, out_dir: str | Path) -> None:
        self._dir = Path(out_dir)
        self._dir.mkdir(parents=True, exist_ok=True)
        self.written = 0

    def write(self, index: int, image: np.ndarray) -> None:
        path = self._dir / f"{index:06d}.png"
        if not cv2.imwrite(str(path), to_uint8(image)):
            raise OSError(f"failed to write {path}")
        self.written += 1

    def close(self) -> None:
        return


def ingest(ref_dir: str | Path, tgt_dir: str | Path, *, resize_to: tuple[int, int] | None = None) -> Iterator[FramePair]:
    """Paired frame stream over two PNG directories."""
    return PngPairSource(ref_dir, tgt_dir, resize_to=resize_to).pairs()
