"""Model-to-pipeline converters, dispatched by (family, variant)."""

from __future__ import annotations

from typing import Optional

from ..config import RunConfig, resolve_variant
from ..errors import SpecValidationError
from ..ir import PipelineProgram
from ..model_spec import ModelSpec
from .dm import map_bnn_dm, map_dt_dm, map_rf_dm
from .eb import map_dt_eb, map_if_eb, map_km_eb, map_knn_eb, map_rf_eb, map_xgb_eb
from .lb import map_ae_lb, map_km_lb, map_nb_lb, map_pca_lb, map_svm_lb

_CONVERTERS = {
    ("dt", "eb"): map_dt_eb,
    ("dt", "dm"): map_dt_dm,
    ("rf", "eb"): map_rf_eb,
    ("rf", "dm"): map_rf_dm,
    ("xgb", "eb"): map_xgb_eb,
    ("iforest", "eb"): map_if_eb,
    ("kmeans", "eb"): map_km_eb,
    ("kmeans", "lb"): map_km_lb,
    ("knn", "eb"): map_knn_eb,
    ("svm", "lb"): map_svm_lb,
    ("nb", "lb"): map_nb_lb,
    ("pca", "lb"): map_pca_lb,
    ("ae", "lb"): map_ae_lb,
    ("bnn", "dm"): map_bnn_dm,
}


def convert(spec: ModelSpec, cfg: Optional[RunConfig] = None) -> PipelineProgram:
    """Convert a validated model spec with the configured (or default) variant."""
    cfg = cfg or RunConfig()
    variant = resolve_variant(spec.family, cfg.variant)
    fn = _CONVERTERS.get((spec.family, variant))
    if fn is None:  # pragma: no cover - resolve_variant already guards this
        raise SpecValidationError(f"no converter for {spec.family}/{variant}")
    return fn(spec, cfg)


__all__ = [
    "convert",
    "map_dt_eb", "map_rf_eb", "map_xgb_eb", "map_if_eb", "map_km_eb", "map_knn_eb",
    "map_svm_lb", "map_nb_lb", "map_km_lb", "map_pca_lb", "map_ae_lb",
    "map_dt_dm", "map_rf_dm", "map_bnn_dm",
]
