"""Mesh store factory: selects the persistence adapter for a cache path."""
from __future__ import annotations

from pathlib import Path

from stabweave.app.infrastructure.persistence.json_mesh_cache import JsonMeshCache
from stabweave.app.ports.mesh_store import MeshStore


def create_mesh_store(path: str | Path) -> MeshStore:
    """Select the adapter from the file suffix and return the port type."""
    suffix = Path(path).suffix.lower()
    if suffix == ".json":
        return JsonMeshCache(path)
    raise ValueError(f"Unsupported mesh cache format: {suffix or '<none>'}")
