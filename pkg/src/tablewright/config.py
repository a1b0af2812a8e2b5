"""Conversion configuration: mapping variants, size presets, budgets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Union

from .errors import SpecValidationError, VariantError

# Which mapping strategies exist per model family.
VARIANTS: dict[str, tuple[str, ...]] = {
    "dt": ("eb", "dm"),
    "rf": ("eb", "dm"),
    "xgb": ("eb",),
    "iforest": ("eb",),
    "kmeans": ("eb", "lb"),
    "knn": ("eb",),
    "svm": ("lb",),
    "nb": ("lb",),
    "pca": ("lb",),
    "ae": ("lb",),
    "bnn": ("dm",),
}

# Used when the caller does not pick one of several variants.
DEFAULT_VARIANT = {"dt": "eb", "rf": "eb", "kmeans": "lb"}

# Action-data width standing in for "full precision": wide enough that the
# affine quantizer is lossless at float64 granularity for realistic inputs,
# while sums still fit comfortably in 64-bit accumulators.
FULL_PRECISION_BITS = 48

# Named size presets. action_bits drives lookup-based conversions; the tree /
# instance / depth columns parameterize training (exporter) and synthetic
# model generation; km_depth / knn_depth bound the quadtree converters.
PRESETS: dict[str, dict] = {
    "S": {"action_bits": 8, "tree_depth": 4, "n_trees": 6, "max_leaf": 1000,
          "if_trees": 3, "if_instances": 128, "km_depth": 2,
          "knn_depth": 2, "knn_k": 5, "bnn_hidden": 16},
    "M": {"action_bits": 16, "tree_depth": 5, "n_trees": 9, "max_leaf": 1000,
          "if_trees": 9, "if_instances": 128, "km_depth": 3,
          "knn_depth": 3, "knn_k": 5, "bnn_hidden": 32},
    "L": {"action_bits": 32, "tree_depth": 6, "n_trees": 12, "max_leaf": 1000,
          "if_trees": 12, "if_instances": 128, "km_depth": 4,
          "knn_depth": 4, "knn_k": 5, "bnn_hidden": 48},
    "H": {"action_bits": "full", "tree_depth": 30, "n_trees": 200, "max_leaf": 100000,
          "if_trees": 200, "if_instances": 1280, "km_depth": None,
          "knn_depth": None, "knn_k": 5, "bnn_hidden": 48},
}

# Generic hardware profile used to flag (not reject) programs that would not
# fit a fixed-function pipeline; the software profile imposes no caps.
HARDWARE_PROFILE = {
    "max_stages": 12,
    "tables_per_stage": 16,
    "entries_per_table": 4096,
    "key_bits_per_table": 512,
}


def resolve_variant(family: str, variant: Optional[str]) -> str:
    if family not in VARIANTS:
        raise SpecValidationError(f"unknown family {family!r}")
    allowed = VARIANTS[family]
    if variant is None:
        return DEFAULT_VARIANT.get(family, allowed[0])
    if variant not in allowed:
        raise VariantError(
            f"variant {variant!r} not supported for family {family!r} "
            f"(supported: {', '.join(allowed)})")
    return variant


@dataclass(frozen=True)
class RunConfig:
    """Knobs for one conversion run. Unset values fall back to the preset
    (if any) and then to the S-size defaults."""

    variant: Optional[str] = None
    n_bits: Union[int, str, None] = None  # int, "full", or None
    max_depth: Optional[int] = None       # quadtree depth for kmeans/knn EB
    preset: Optional[str] = None          # S / M / L / H
    entry_mode: str = "auto"              # auto | full-domain | unique
    rf_vote: str = "table"                # table | logic
    use_default_action: bool = True
    feature_match: str = "ternary"        # ternary | exact (EB baseline mode)
    lb_match: str = "exact"               # exact | ternary | lpm
    profile: str = "software"             # software | hardware
    max_entries_per_table: int = 1 << 20
    max_key_bits: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.preset is not None and self.preset not in PRESETS:
            raise SpecValidationError(f"unknown preset {self.preset!r}")
        if self.entry_mode not in ("auto", "full-domain", "unique"):
            raise SpecValidationError(f"unknown entry mode {self.entry_mode!r}")
        if self.rf_vote not in ("table", "logic"):
            raise SpecValidationError(f"unknown rf_vote mode {self.rf_vote!r}")
        if self.feature_match not in ("ternary", "exact"):
            raise SpecValidationError(f"unknown feature_match {self.feature_match!r}")
        if self.lb_match not in ("exact", "ternary", "lpm"):
            raise SpecValidationError(f"unknown lb_match {self.lb_match!r}")
        if self.profile not in ("software", "hardware"):
            raise SpecValidationError(f"unknown profile {self.profile!r}")
        if isinstance(self.n_bits, str) and self.n_bits != "full":
            raise SpecValidationError(f"n_bits must be an integer or 'full'")
        if isinstance(self.n_bits, int) and self.n_bits < 2:
            raise SpecValidationError("n_bits must be >= 2")

    def _preset_value(self, key: str):
        if self.preset is not None:
            return PRESETS[self.preset].get(key)
        return None

    def action_bits(self) -> int:
        bits = self.n_bits
        if bits is None:
            bits = self._preset_value("action_bits")
        if bits is None:
            bits = PRESETS["S"]["action_bits"]
        if bits == "full":
            return FULL_PRECISION_BITS
        return int(bits)

    def is_full_precision(self) -> bool:
        bits = self.n_bits if self.n_bits is not None else self._preset_value("action_bits")
        return bits == "full"

    def quadtree_depth(self, family: str, feature_bits: int) -> int:
        d = self.max_depth
        if d is None:
            d = self._preset_value("km_depth" if family == "kmeans" else "knn_depth")
        if d is None:
            d = feature_bits
        return min(int(d), feature_bits)

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **kw)


def label_bits(n_classes: int) -> int:
    return max(1, math.ceil(math.log2(max(2, n_classes))))
