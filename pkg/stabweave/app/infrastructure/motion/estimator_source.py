"""Motion source backed by the classical grid-matching estimator."""
from __future__ import annotations

from stabweave.app.config.pipeline_config import EstimatorConfig
from stabweave.app.domain.estimation.motion_estimator import estimate_spatial, estimate_temporal
from stabweave.app.domain.geometry.tps_mesh import ControlMotions, GridSpec
from stabweave.app.domain.models import FrameMotions, FramePair


class EstimatorMotionSource:
    """Stateless; safe to call from several worker threads at once."""

    def __init__(self, cfg: EstimatorConfig, grid: GridSpec) -> None:
        self._cfg = cfg
        self._grid = grid

    def motions(self, pair: FramePair, previous: FramePair | None) -> FrameMotions:
        m_ref, m_tgt = estimate_spatial(pair.reference, pair.target, self._cfg, self._grid)
        if previous is None:
            zero = ControlMotions.zeros(self._grid)
            t_ref, t_tgt = zero, zero
        else:
            t_ref = estimate_temporal(previous.reference, pair.reference, self._cfg, self._grid)
            t_tgt = estimate_temporal(previous.target, pair.target, self._cfg, self._grid)
        return FrameMotions(t=pair.index, spatial_ref=m_ref, spatial_tgt=m_tgt, temporal_ref=t_ref, temporal_tgt=t_tgt)
