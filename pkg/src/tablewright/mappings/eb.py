"""Encode-based converters.

Per-feature tables translate raw feature values into dense region codes; a
decision stage maps code tuples (or per-tree leaf-id tuples) to labels. The
feature tables of one model share a stage, so these pipelines keep a constant
stage count no matter how many trees the ensemble has.

All tree conversions here are exact: the region partition is induced by the
model's own split thresholds, so every input resolves to the same label the
reference predictor computes.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from itertools import product
from typing import Optional, Sequence

from ..config import RunConfig, label_bits
from ..errors import BudgetError, SpecValidationError
from ..ir import ActionDef, FieldDecl, LogicOp, OutputSpec, PipelineProgram, Table
from ..model_spec import ModelSpec, Tree, iforest_threshold
from ..reference import argmax_low, argmin_low, knn_label, sq_distances
from ..table_utils import (
    MatchKey,
    TableEntry,
    assign_ternary_priorities,
    prefix_mask,
    range_to_prefixes,
)
from .common import (
    check_entry_budget,
    feature_field_names,
    input_field_decls,
    leaf_boxes,
    intersect_boxes,
    width_for_count,
)


def _tree_thresholds(tree: Tree, schema) -> list[set[int]]:
    """Split thresholds per feature, excluding degenerate always-true splits."""
    out: list[set[int]] = [set() for _ in range(schema.n)]
    for node in tree.nodes:
        if not node.is_leaf and node.threshold < schema.domain_max(node.feature_index):
            out[node.feature_index].add(node.threshold)
    return out


def _regions(thresholds: set[int], domain_max: int) -> list[tuple[int, int]]:
    """Value ranges split at each threshold; region i covers (t_{i-1}, t_i]."""
    ts = sorted(thresholds)
    regions = []
    lo = 0
    for t in ts:
        regions.append((lo, t))
        lo = t + 1
    regions.append((lo, domain_max))
    return regions


def _code_of(sorted_thresholds: list[int], value: int) -> int:
    return bisect_left(sorted_thresholds, value)


def _feature_table(name: str, key_field: str, code_fields: Sequence[str],
                   regions: list[tuple[int, int]],
                   codes_per_region: list[tuple[int, ...]],
                   width: int, cfg: RunConfig) -> Table:
    """Table mapping raw feature values to region codes (one code per consumer)."""
    action = ActionDef(name="set_code", writes=tuple(code_fields))
    default = (0, tuple(0 for _ in code_fields))
    if cfg.feature_match == "exact":
        check_entry_budget(name, 1 << width, cfg.max_entries_per_table)
        entries = []
        for (lo, hi), codes in zip(regions, codes_per_region):
            for v in range(lo, hi + 1):
                entries.append(TableEntry(keys=(MatchKey.exact(v),),
                                          action_data=codes))
        return Table(name=name, match_kind="exact", key_fields=(key_field,),
                     actions=(action,), entries=tuple(entries), default=default)
    entries = []
    for (lo, hi), codes in zip(regions, codes_per_region):
        for value, plen in range_to_prefixes(lo, hi, width):
            entries.append(TableEntry(
                keys=(MatchKey.ternary(value, prefix_mask(plen, width)),),
                action_data=codes))
    return Table(name=name, match_kind="ternary", key_fields=(key_field,),
                 actions=(action,), entries=tuple(assign_ternary_priorities(entries)),
                 default=default)


def _code_box_entries(code_ranges: Sequence[tuple[int, int]],
                      code_widths: Sequence[int],
                      action_data: tuple[int, ...]) -> list[TableEntry]:
    """Ternary entries covering a box of code ranges (cross product of the
    per-field prefix decompositions)."""
    per_field = []
    for (clo, chi), w in zip(code_ranges, code_widths):
        per_field.append([(v, plen, w) for v, plen in range_to_prefixes(clo, chi, w)])
    entries = []
    for combo in product(*per_field):
        keys = tuple(MatchKey.ternary(v, prefix_mask(plen, w)) for v, plen, w in combo)
        entries.append(TableEntry(keys=keys, action_data=action_data))
    return entries


def _per_tree_code_tables(spec: ModelSpec, trees: Sequence[Tree], cfg: RunConfig,
                          value_field_of, out_field_name, out_value_of):
    """Shared scaffolding for rf/xgb/iforest: refined feature tables emitting
    per-tree codes, plus one ternary table per tree keyed on its codes.

    ``out_value_of(tree_idx, leaf_pos, leaf_node)`` supplies the word each
    tree table writes (a vote label or a leaf id); ``out_field_name(t)`` names
    the destination field.
    """
    schema = spec.schema
    n = schema.n
    feat_names = feature_field_names(schema)
    per_tree_thresholds = [_tree_thresholds(t, schema) for t in trees]
    per_tree_sorted = [[sorted(s) for s in tt] for tt in per_tree_thresholds]

    fields: list[FieldDecl] = list(input_field_decls(schema))
    steps: list = []

    # Refined regions: union of every tree's thresholds per feature, so one
    # feature-table row carries a constant code for each tree.
    code_fields: list[list[str]] = [[] for _ in range(len(trees))]
    for i in range(n):
        union: set[int] = set()
        for tt in per_tree_thresholds:
            union |= tt[i]
        regions = _regions(union, schema.domain_max(i))
        names = []
        for t in range(len(trees)):
            n_codes = len(per_tree_sorted[t][i]) + 1
            fname = f"{feat_names[i]}_t{t}_code"
            fields.append(FieldDecl(name=fname, width=width_for_count(n_codes)))
            names.append(fname)
            code_fields[t].append(fname)
        codes_per_region = [
            tuple(_code_of(per_tree_sorted[t][i], lo) for t in range(len(trees)))
            for lo, _ in regions]
        steps.append(_feature_table(f"feat_{feat_names[i]}", feat_names[i], names,
                                    regions, codes_per_region,
                                    schema.features[i].bit_width, cfg))

    out_fields = []
    for t, tree in enumerate(trees):
        code_widths = [width_for_count(len(per_tree_sorted[t][i]) + 1) for i in range(n)]
        if sum(code_widths) > cfg.max_key_bits:
            raise BudgetError(
                f"tree {t} code width {sum(code_widths)} exceeds key budget "
                f"{cfg.max_key_bits}")
        out_name = out_field_name(t)
        out_fields.append(out_name)

        # Dense leaf ids follow node-array order; geometrically unreachable
        # leaves keep their id but never get entries.
        leaf_id = {idx: i for i, idx in enumerate(tree.leaf_indices())}
        entries = []
        weights: dict[int, int] = {}
        for leaf_idx, box in leaf_boxes(tree, schema):
            ranges = [(_code_of(per_tree_sorted[t][i], box[i][0]),
                       _code_of(per_tree_sorted[t][i], box[i][1]))
                      for i in range(n)]
            value = out_value_of(t, leaf_id[leaf_idx], tree.nodes[leaf_idx])
            cells = 1
            for clo, chi in ranges:
                cells *= chi - clo + 1
            weights[value] = weights.get(value, 0) + cells
            entries.append((value, ranges))

        default_value = min(weights, key=lambda v: (-weights[v], v))
        table_entries = []
        for value, ranges in entries:
            if cfg.use_default_action and value == default_value:
                continue
            table_entries.extend(_code_box_entries(ranges, code_widths, (value,)))
        check_entry_budget(f"tree_{t}", len(table_entries), cfg.max_entries_per_table)
        steps.append(Table(
            name=f"tree_{t}", match_kind="ternary",
            key_fields=tuple(code_fields[t]),
            actions=(ActionDef(name="set_out", writes=(out_name,)),),
            entries=tuple(assign_ternary_priorities(table_entries)),
            default=(0, (default_value,))))
    return fields, steps, out_fields


def map_dt_eb(spec: ModelSpec, cfg: Optional[RunConfig] = None) -> PipelineProgram:
    """Decision tree as n feature tables plus one decision table (2 stages)."""
    cfg = cfg or RunConfig()
    if spec.family != "dt":
        raise SpecValidationError(f"map_dt_eb expects a dt spec, got {spec.family!r}")
    schema = spec.schema
    tree: Tree = spec.params
    feat_names = feature_field_names(schema)

    thresholds = _tree_thresholds(tree, schema)
    sorted_ts = [sorted(s) for s in thresholds]
    code_widths = [width_for_count(len(ts) + 1) for ts in sorted_ts]
    if sum(code_widths) > cfg.max_key_bits:
        raise BudgetError(
            f"decision key width {sum(code_widths)} exceeds budget {cfg.max_key_bits}")

    fields = list(input_field_decls(schema))
    steps: list = []
    code_fields = []
    for i in range(schema.n):
        regions = _regions(thresholds[i], schema.domain_max(i))
        fname = f"{feat_names[i]}_code"
        fields.append(FieldDecl(name=fname, width=code_widths[i]))
        code_fields.append(fname)
        codes = [( _code_of(sorted_ts[i], lo),) for lo, _ in regions]
        steps.append(_feature_table(f"feat_{feat_names[i]}", feat_names[i], (fname,),
                                    regions, codes, schema.features[i].bit_width, cfg))

    fields.append(FieldDecl(name="label", width=label_bits(spec.n_classes)))

    boxes = leaf_boxes(tree, schema)
    weights: dict[int, int] = {}
    leaf_ranges = []
    for leaf_idx, box in boxes:
        ranges = [(_code_of(sorted_ts[i], box[i][0]), _code_of(sorted_ts[i], box[i][1]))
                  for i in range(schema.n)]
        label = tree.nodes[leaf_idx].label
        cells = 1
        for clo, chi in ranges:
            cells *= chi - clo + 1
        weights[label] = weights.get(label, 0) + cells
        leaf_ranges.append((label, ranges))

    default_label = min(weights, key=lambda l: (-weights[l], l))
    entries = []
    for label, ranges in leaf_ranges:
        if cfg.use_default_action and label == default_label:
            continue
        entries.extend(_code_box_entries(ranges, code_widths, (label,)))
    check_entry_budget("decide", len(entries), cfg.max_entries_per_table)
    steps.append(Table(
        name="decide", match_kind="ternary", key_fields=tuple(code_fields),
        actions=(ActionDef(name="set_label", writes=("label",)),),
        entries=tuple(assign_ternary_priorities(entries)),
        default=(0, (default_label,))))

    return PipelineProgram(
        name="dt_eb", family="dt", variant="eb",
        fields=tuple(fields), steps=tuple(steps), registers=(),
        output=OutputSpec(kind="label", fields=("label",)),
        meta={"n_classes": spec.n_classes, "feature_match": cfg.feature_match,
              "use_default_action": cfg.use_default_action})


def _vote_logic_steps(vote_fields: Sequence[str], n_classes: int,
                      fields: list[FieldDecl]) -> tuple[list, str]:
    """Majority vote decomposed into eq-compares, adds, and one argmax."""
    steps = []
    m = len(vote_fields)
    count_w = width_for_count(m + 1)
    count_fields = []
    for c in range(n_classes):
        bits = []
        for t, vf in enumerate(vote_fields):
            bname = f"is_{vf}_c{c}"
            fields.append(FieldDecl(name=bname, width=1))
            steps.append(LogicOp(kind="compare", dst=bname, srcs=(vf, c), cmp="eq",
                                 name=f"cmp_{vf}_c{c}"))
            bits.append(bname)
        cname = f"votes_c{c}"
        fields.append(FieldDecl(name=cname, width=count_w))
        steps.append(LogicOp(kind="add", dst=cname, srcs=tuple(bits),
                             name=f"count_c{c}"))
        count_fields.append(cname)
    fields.append(FieldDecl(name="label", width=label_bits(n_classes)))
    steps.append(LogicOp(kind="argmax", dst="label", srcs=tuple(count_fields),
                         name="vote_argmax"))
    return steps, "label"


def map_rf_eb(spec: ModelSpec, cfg: Optional[RunConfig] = None) -> PipelineProgram:
    """Random forest: feature tables, per-tree code tables, then a vote stage.

    The vote stage defaults to a table keyed on the per-tree label tuple;
    ``cfg.rf_vote = "logic"`` switches to arithmetic vote counting.
    """
    cfg = cfg or RunConfig()
    if spec.family != "rf":
        raise SpecValidationError(f"map_rf_eb expects an rf spec, got {spec.family!r}")
    trees = spec.params.trees
    k = spec.n_classes
    lw = label_bits(k)

    fields, steps, vote_fields = _per_tree_code_tables(
        spec, trees, cfg,
        value_field_of=None,
        out_field_name=lambda t: f"t{t}_vote",
        out_value_of=lambda t, pos, node: node.label)
    for vf in vote_fields:
        fields.append(FieldDecl(name=vf, width=lw))

    if cfg.rf_vote == "logic":
        logic_steps, label_field = _vote_logic_steps(vote_fields, k, fields)
        steps.extend(logic_steps)
    else:
        m = len(trees)
        total = k ** m
        check_entry_budget("vote", total, cfg.max_entries_per_table,
                           hint="use rf_vote='logic'")
        counts: dict[int, int] = {}
        rows = []
        for combo in product(range(k), repeat=m):
            tally = [0] * k
            for l in combo:
                tally[l] += 1
            winner = argmax_low(tally)
            counts[winner] = counts.get(winner, 0) + 1
            rows.append((combo, winner))
        default_label = min(counts, key=lambda l: (-counts[l], l))
        entries = []
        for combo, winner in rows:
            if cfg.use_default_action and winner == default_label:
                continue
            entries.append(TableEntry(
                keys=tuple(MatchKey.exact(v) for v in combo),
                action_data=(winner,)))
        fields.append(FieldDecl(name="label", width=lw))
        steps.append(Table(
            name="vote", match_kind="exact", key_fields=tuple(vote_fields),
            actions=(ActionDef(name="set_label", writes=("label",)),),
            entries=tuple(entries), default=(0, (default_label,))))

    return PipelineProgram(
        name="rf_eb", family="rf", variant="eb",
        fields=tuple(fields), steps=tuple(steps), registers=(),
        output=OutputSpec(kind="label", fields=("label",)),
        meta={"n_classes": k, "n_trees": len(trees), "rf_vote": cfg.rf_vote})


def _reachable_leaf_tuples(trees: Sequence[Tree], schema) -> list[tuple[tuple[int, ...],
                                                                        tuple[int, ...]]]:
    """Every per-tree leaf-id tuple with a nonempty geometric intersection.

    Returns (leaf position tuple, leaf node index tuple) pairs. Depth-first
    over trees with box pruning keeps the enumeration close to the number of
    distinct cells in the overlaid partition.
    """
    per_tree = []
    for tree in trees:
        leaf_id = {idx: i for i, idx in enumerate(tree.leaf_indices())}
        per_tree.append([(leaf_id[idx], idx, box)
                         for idx, box in leaf_boxes(tree, schema)])

    results = []
    m = len(trees)

    def walk(ti: int, box, positions: list[int], indices: list[int]) -> None:
        if ti == m:
            results.append((tuple(positions), tuple(indices)))
            return
        for pos, idx, lbox in per_tree[ti]:
            nxt = intersect_boxes(box, lbox)
            if nxt is None:
                continue
            positions.append(pos)
            indices.append(idx)
            walk(ti + 1, nxt, positions, indices)
            positions.pop()
            indices.pop()

    init = [(0, schema.domain_max(i)) for i in range(schema.n)]
    walk(0, init, [], [])
    return results


def _leaf_tuple_program(spec: ModelSpec, trees: Sequence[Tree], cfg: RunConfig,
                        name: str, decide_value) -> PipelineProgram:
    """Common xgb/iforest shape: per-tree leaf-id tables plus a decision table
    over reachable leaf tuples. ``decide_value(indices)`` labels one tuple."""
    leaf_counts = [len(t.leaf_indices()) for t in trees]
    fields, steps, leaf_fields = _per_tree_code_tables(
        spec, trees, cfg,
        value_field_of=None,
        out_field_name=lambda t: f"t{t}_leaf",
        out_value_of=lambda t, pos, node: pos)
    for lf, count in zip(leaf_fields, leaf_counts):
        fields.append(FieldDecl(name=lf, width=width_for_count(count)))

    tuples = _reachable_leaf_tuples(trees, spec.schema)
    check_entry_budget("decide", len(tuples), cfg.max_entries_per_table)

    counts: dict[int, int] = {}
    rows = []
    for positions, indices in tuples:
        label = decide_value(indices)
        counts[label] = counts.get(label, 0) + 1
        rows.append((positions, label))
    default_label = min(counts, key=lambda l: (-counts[l], l))
    entries = []
    for positions, label in rows:
        if cfg.use_default_action and label == default_label:
            continue
        entries.append(TableEntry(keys=tuple(MatchKey.exact(p) for p in positions),
                                  action_data=(label,)))

    lw = label_bits(spec.n_classes)
    fields.append(FieldDecl(name="label", width=lw))
    steps.append(Table(
        name="decide", match_kind="exact", key_fields=tuple(leaf_fields),
        actions=(ActionDef(name="set_label", writes=("label",)),),
        entries=tuple(entries), default=(0, (default_label,))))
    return PipelineProgram(
        name=name, family=spec.family, variant="eb",
        fields=tuple(fields), steps=tuple(steps), registers=(),
        output=OutputSpec(kind="label", fields=("label",)),
        meta={"n_classes": spec.n_classes, "n_trees": len(trees),
              "reachable_tuples": len(tuples)})


def map_xgb_eb(spec: ModelSpec, cfg: Optional[RunConfig] = None) -> PipelineProgram:
    """Boosted trees: leaf scores are summed offline per reachable leaf tuple,
    so no probability arithmetic remains in the pipeline."""
    cfg = cfg or RunConfig()
    if spec.family != "xgb":
        raise SpecValidationError(f"map_xgb_eb expects an xgb spec, got {spec.family!r}")
    p = spec.params
    trees = p.trees
    k = spec.n_classes

    def decide(indices: tuple[int, ...]) -> int:
        if k == 2:
            s = p.base_scores[0]
            for t, idx in enumerate(indices):
                s += trees[t].nodes[idx].leaf_value
            return argmax_low([-s, s])
        scores = list(p.base_scores)
        for t, idx in enumerate(indices):
            scores[t % k] += trees[t].nodes[idx].leaf_value
        return argmax_low(scores)

    return _leaf_tuple_program(spec, trees, cfg, "xgb_eb", decide)


def map_if_eb(spec: ModelSpec, cfg: Optional[RunConfig] = None) -> PipelineProgram:
    """Isolation forest: the decision table compares each tuple's mean path
    length against the anomaly threshold, computed offline."""
    cfg = cfg or RunConfig()
    if spec.family != "iforest":
        raise SpecValidationError(f"map_if_eb expects an iforest spec, got {spec.family!r}")
    p = spec.params
    trees = p.trees
    threshold = iforest_threshold(p)

    def decide(indices: tuple[int, ...]) -> int:
        mean_h = sum(trees[t].nodes[idx].path_length
                     for t, idx in enumerate(indices)) / len(trees)
        return 1 if mean_h <= threshold else 0

    return _leaf_tuple_program(spec, trees, cfg, "if_eb", decide)


# ---------------------------------------------------------------------------
# Quadtree encodings (kmeans / knn)
# ---------------------------------------------------------------------------

def _quadtree_cells(spec: ModelSpec, depth: int, corner_label, center_label):
    """Recursive 2^n-way subdivision of the feature space.

    A cell is emitted once all its corner vertices agree on a label (sound
    for convex label regions) or at the depth cap, where the cell center's
    label is used. Cells are (per-feature prefix, depth, label); child order
    fixes feature 0 as the most significant split bit.
    """
    schema = spec.schema
    n = schema.n
    w = schema.features[0].bit_width
    cells = []

    def cell_box(prefix: tuple[int, ...], d: int) -> list[tuple[int, int]]:
        shift = w - d
        return [(p << shift, (p << shift) | ((1 << shift) - 1)) for p in prefix]

    def walk(prefix: tuple[int, ...], d: int) -> None:
        box = cell_box(prefix, d)
        corners = {tuple(lo if bit == 0 else hi for (lo, hi), bit in zip(box, combo))
                   for combo in product((0, 1), repeat=n)}
        labels = {corner_label(c) for c in corners}
        if len(labels) == 1:
            cells.append((prefix, d, labels.pop()))
            return
        if d == depth:
            center = tuple((lo + hi) / 2.0 for lo, hi in box)
            cells.append((prefix, d, center_label(center)))
            return
        for bits in product((0, 1), repeat=n):
            walk(tuple((p << 1) | b for p, b in zip(prefix, bits)), d + 1)

    walk(tuple(0 for _ in range(n)), 0)
    return cells


def _quadtree_program(spec: ModelSpec, cfg: RunConfig, name: str,
                      corner_label, center_label) -> PipelineProgram:
    schema = spec.schema
    widths = {f.bit_width for f in schema.features}
    if len(widths) != 1:
        raise SpecValidationError(
            f"{name} needs all features on one power-of-two domain; "
            f"got widths {sorted(widths)}")
    w = widths.pop()
    depth = cfg.quadtree_depth(spec.family, w)
    if depth * schema.n > cfg.max_key_bits:
        raise BudgetError(
            f"cell code width {depth * schema.n} exceeds key budget {cfg.max_key_bits}")

    cells = _quadtree_cells(spec, depth, corner_label, center_label)
    check_entry_budget("cells", len(cells), cfg.max_entries_per_table)

    feat_names = feature_field_names(schema)
    fields = list(input_field_decls(schema))
    fields.append(FieldDecl(name="label", width=label_bits(spec.n_classes)))

    entries = []
    label_weights: dict[int, int] = {}
    for prefix, d, label in cells:
        shift = w - d
        keys = tuple(MatchKey.ternary(p << shift, prefix_mask(d, w)) for p in prefix)
        entries.append(TableEntry(keys=keys, action_data=(label,)))
        label_weights[label] = label_weights.get(label, 0) + (1 << (shift * schema.n))
    default_label = min(label_weights, key=lambda l: (-label_weights[l], l))

    table = Table(
        name="cells", match_kind="ternary", key_fields=tuple(feat_names),
        actions=(ActionDef(name="set_label", writes=("label",)),),
        entries=tuple(assign_ternary_priorities(entries)),
        default=(0, (default_label,)))
    return PipelineProgram(
        name=name, family=spec.family, variant="eb",
        fields=tuple(fields), steps=(table,), registers=(),
        output=OutputSpec(kind="label", fields=("label",)),
        meta={"n_classes": spec.n_classes, "depth": depth,
              "code_bits": depth * schema.n, "cells": len(cells)})


def map_km_eb(spec: ModelSpec, cfg: Optional[RunConfig] = None) -> PipelineProgram:
    """K-means over a quadtree-encoded feature space.

    Corner agreement is exact here: nearest-centroid regions are convex, so a
    cell whose corners agree lies entirely in that centroid's region.
    """
    cfg = cfg or RunConfig()
    if spec.family != "kmeans":
        raise SpecValidationError(f"map_km_eb expects a kmeans spec, got {spec.family!r}")
    centroids = spec.params.centroids

    def corner(x) -> int:
        return argmin_low(sq_distances(centroids, x))

    return _quadtree_program(spec, cfg, "km_eb", corner, corner)


def map_knn_eb(spec: ModelSpec, cfg: Optional[RunConfig] = None) -> PipelineProgram:
    """K-nearest-neighbors over the same quadtree split; vertex labels come
    from the exact KNN oracle. Cells below the depth cap fall back to the
    center's label, so coarse depths trade accuracy, not safety."""
    cfg = cfg or RunConfig()
    if spec.family != "knn":
        raise SpecValidationError(f"map_knn_eb expects a knn spec, got {spec.family!r}")

    def vertex(x) -> int:
        return knn_label(spec, x)

    return _quadtree_program(spec, cfg, "knn_eb", vertex, vertex)
