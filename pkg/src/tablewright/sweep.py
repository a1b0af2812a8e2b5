"""Scalability sweeps: entries, stages, and fidelity along one hyperparameter axis."""

from __future__ import annotations

import random
from typing import Optional, Sequence

from .codegen import resource_report
from .config import RunConfig
from .errors import SpecValidationError
from .ir import Simulator
from .mappings import convert
from .metrics import pearson, relative_accuracy
from .model_spec import ModelSpec, parse_model_dict
from .reference import reference_predict, reference_transform
from .synth import (
    random_model,
    random_tree_nodes,
    schema_dict,
    truncate_tree_nodes,
    uniform_inputs,
)

AXES = ("depth", "n_trees", "n_bits", "n_features", "unique_values")

_AXIS_FAMILIES = {
    "depth": ("dt", "rf", "xgb", "iforest", "kmeans", "knn"),
    "n_trees": ("rf", "xgb", "iforest"),
    "n_bits": ("svm", "nb", "kmeans", "pca", "ae"),
    "n_features": ("dt", "rf", "xgb", "iforest", "kmeans", "knn", "svm", "nb",
                   "pca", "ae", "bnn"),
    "unique_values": ("svm", "nb", "kmeans", "pca", "ae"),
}


def axis_families(axis: str) -> tuple[str, ...]:
    if axis not in AXES:
        raise SpecValidationError(f"unknown sweep axis {axis!r}")
    return _AXIS_FAMILIES[axis]


def _fidelity(spec: ModelSpec, sim: Simulator, inputs: Sequence[Sequence[int]]) -> float:
    if spec.is_classifier:
        oracle = [reference_predict(spec, x) for x in inputs]
        got = [sim.run(x) for x in inputs]
        return relative_accuracy(oracle, got)
    # Dimensional reduction: mean Pearson correlation across output dims.
    oracle_cols = list(zip(*(reference_transform(spec, x) for x in inputs)))
    got_cols = list(zip(*(sim.run(x) for x in inputs)))
    rs = [pearson(o, g) for o, g in zip(oracle_cols, got_cols)]
    return sum(rs) / len(rs)


def _depth_sweep_spec(family: str, value: int, max_value: int, seed: int,
                      widths: list[int]) -> ModelSpec:
    """One deep base tree set per sweep, truncated per point, so thresholds
    only accumulate as the depth cap rises."""
    rng = random.Random(f"{seed}:{family}:depth-base")
    n_classes = 3 if family in ("dt", "rf") else 2
    if family in ("dt", "rf"):
        leaf = lambda: {"kind": "leaf", "label": rng.randrange(n_classes)}
    elif family == "xgb":
        leaf = lambda: {"kind": "leaf", "leaf_value": rng.uniform(-1.0, 1.0)}
    else:
        leaf = lambda: {"kind": "leaf", "path_length": rng.uniform(2.0, 14.0)}
    n_trees = 1 if family == "dt" else 3
    bases = [random_tree_nodes(rng, widths, max_value, leaf, branch_prob=0.95)
             for _ in range(n_trees)]
    trees = [{"nodes": truncate_tree_nodes(b, value)} for b in bases]
    doc = {"schema_version": 1, "family": family, "n_classes": n_classes,
           "schema": schema_dict(widths)}
    if family == "dt":
        doc["params"] = {"tree": trees[0]}
    elif family == "rf":
        doc["params"] = {"trees": trees}
    elif family == "xgb":
        doc["params"] = {"trees": trees, "base_scores": [0.0]}
    else:
        doc["params"] = {"trees": trees, "n_instances": 128}
    return parse_model_dict(doc)


def _point_spec(family: str, axis: str, value: int, seed: int,
                cfg: RunConfig, widths: list[int],
                max_value: int) -> tuple[ModelSpec, RunConfig]:
    rng = random.Random(f"{seed}:{family}:{axis}:{value}")
    depth = 4
    n_trees = 3
    if axis == "depth":
        if family in ("kmeans", "knn"):
            spec = random_model(rng, family, widths, n_classes=3)
            return spec, cfg.with_overrides(max_depth=value)
        return _depth_sweep_spec(family, value, max_value, seed, widths), cfg
    elif axis == "n_trees":
        n_trees = value
    elif axis == "n_features":
        widths = [widths[0]] * value
    elif axis == "n_bits":
        spec = random_model(rng, family, widths, n_classes=3, depth=depth,
                            n_trees=n_trees)
        return spec, cfg.with_overrides(n_bits=int(value))
    elif axis == "unique_values":
        spec = random_model(rng, family, widths, n_classes=3)
        observed = []
        for w in widths:
            pool = sorted(rng.sample(range(1 << w), min(value, 1 << w)))
            observed.append(pool)
        spec = ModelSpec(schema=spec.schema, family=spec.family, params=spec.params,
                         n_classes=spec.n_classes, out_dim=spec.out_dim,
                         observed_values=tuple(tuple(v) for v in observed))
        return spec, cfg.with_overrides(entry_mode="unique")
    spec = random_model(rng, family, widths, n_classes=3, depth=depth, n_trees=n_trees)
    return spec, cfg


def run_sweep(family: str, axis: str, values: Sequence[int],
              cfg: Optional[RunConfig] = None, seed: int = 0,
              samples: int = 2000, feature_bits: int = 8,
              n_features: int = 3,
              dataset: Optional[Sequence[Sequence[int]]] = None) -> list[dict]:
    """One row per axis value: (value, entries, stages, relative accuracy).

    Models and evaluation inputs are regenerated deterministically per point
    from the seed, so rows are reproducible and ordered by axis value.
    """
    cfg = cfg or RunConfig()
    if family not in axis_families(axis):
        raise SpecValidationError(f"axis {axis!r} does not apply to family {family!r}")
    widths = [feature_bits] * n_features
    rows = []
    max_value = max(values) if values else 0
    for value in sorted(values):
        spec, point_cfg = _point_spec(family, axis, value, seed, cfg, list(widths),
                                      max_value)
        program = convert(spec, point_cfg)
        report = resource_report(program, profile=point_cfg.profile)
        sim = Simulator(program)
        if dataset is not None:
            inputs = [x for x in dataset
                      if len(x) == spec.schema.n]
        else:
            rng = random.Random(f"{seed}:inputs:{family}:{axis}:{value}")
            inputs = uniform_inputs(rng, spec.schema.bit_widths, samples)
        rows.append({
            "axis": axis,
            "value": value,
            "entries": report["totals"]["entries"],
            "stages": report["totals"]["stages"],
            "relative_accuracy": _fidelity(spec, sim, inputs) if inputs else 0.0,
        })
    return rows


def sweep_rows_to_csv(rows: Sequence[dict]) -> str:
    lines = ["axis,value,entries,stages,relative_accuracy"]
    for r in rows:
        lines.append(f"{r['axis']},{r['value']},{r['entries']},{r['stages']},"
                     f"{r['relative_accuracy']:.6f}")
    return "\n".join(lines) + "\n"
