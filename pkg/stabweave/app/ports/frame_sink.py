"""Port: destination for stitched frames."""
from __future__ import annotations

from typing import Protocol

import numpy as np


class FrameSink(Protocol):
    def write(self, index: int, image: np.ndarray) -> None: ...

    def close(self) -> None: ...
