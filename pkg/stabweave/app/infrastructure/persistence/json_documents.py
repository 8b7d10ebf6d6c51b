"""Writers for report and ground-truth documents."""
from __future__ import annotations

from pathlib import Path

from pydantic import BaseModel


def write_json_document(path: str | Path, document: BaseModel) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(document.model_dump_json(indent=2), encoding="utf-8")
    return target
