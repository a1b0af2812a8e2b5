"""Direct-mapping converters.

Trees are transcribed level by level: each depth gets a node table keyed
jointly on (previous node id, previous comparison), followed by a feature
multiplex and a compare in logic. That models the real per-stage cost of the
approach, which grows with tree depth where the encode-based pipelines stay
flat.

Binarized networks keep their weights in register banks and run as
xnor / popcount / sign chains; the final layer skips the activation and the
label is the argmax of its raw popcounts.
"""

from __future__ import annotations

from collections import deque
from typing import Optional, Sequence

from ..config import RunConfig, label_bits
from ..errors import SpecValidationError
from ..ir import (
    ActionDef,
    FieldDecl,
    LogicOp,
    OutputSpec,
    PipelineProgram,
    Register,
    Table,
)
from ..model_spec import ModelSpec, Tree
from ..table_utils import MatchKey, TableEntry
from .common import feature_field_names, input_field_decls, width_for_count
from .eb import _vote_logic_steps


def _bfs_ids(tree: Tree) -> dict[int, int]:
    """Breadth-first node numbering (root = 0) over node-array indices."""
    ids = {}
    queue = deque([0])
    while queue:
        idx = queue.popleft()
        ids[idx] = len(ids)
        node = tree.nodes[idx]
        if not node.is_leaf:
            queue.append(node.left)
            queue.append(node.right)
    return ids


def _nodes_by_depth(tree: Tree) -> list[list[int]]:
    """Node-array indices grouped by depth, root at depth 0."""
    levels: list[list[int]] = []

    def walk(idx: int, d: int) -> None:
        while len(levels) <= d:
            levels.append([])
        levels[d].append(idx)
        node = tree.nodes[idx]
        if not node.is_leaf:
            walk(node.left, d + 1)
            walk(node.right, d + 1)

    walk(0, 0)
    return levels


def _tree_ladder(tree: Tree, spec: ModelSpec, prefix: str, label_field: str,
                 fields: list[FieldDecl], steps: list) -> None:
    """Emit the per-depth tables and compare logic for one tree.

    Level 0 is a default-only table installing the root; level l >= 1 is
    keyed on (node id at level l-1, its comparison result) and either
    descends into an internal node or resolves a leaf label. Once a leaf
    resolves, deeper tables miss and their no-op default preserves the label
    (level >= 2 keys never collide with the zero-initialized id fields
    because only the root carries breadth-first id 0).
    """
    schema = spec.schema
    feat_names = feature_field_names(schema)
    ids = _bfs_ids(tree)
    levels = _nodes_by_depth(tree)
    depth = len(levels) - 1
    id_w = width_for_count(len(tree.nodes))
    thr_w = max(f.bit_width for f in schema.features)
    fidx_w = width_for_count(schema.n)

    def level_fields(l: int) -> tuple[str, str, str, str, str]:
        return (f"{prefix}node_{l}", f"{prefix}cmp_{l}", f"{prefix}fidx_{l}",
                f"{prefix}thr_{l}", f"{prefix}fval_{l}")

    def descend_data(idx: int) -> tuple[int, ...]:
        node = tree.nodes[idx]
        return (ids[idx], node.feature_index, node.threshold)

    for l in range(depth + 1):
        node_f, cmp_f, fidx_f, thr_f, fval_f = level_fields(l)
        has_internal = any(not tree.nodes[i].is_leaf for i in levels[l])
        if has_internal:
            fields.append(FieldDecl(name=node_f, width=id_w))
            fields.append(FieldDecl(name=cmp_f, width=1))
            fields.append(FieldDecl(name=fidx_f, width=fidx_w))
            fields.append(FieldDecl(name=thr_f, width=thr_w))
            fields.append(FieldDecl(name=fval_f, width=thr_w))

        actions = [ActionDef(name="noop", writes=()),
                   ActionDef(name="resolve", writes=(label_field,))]
        resolve_id = 1
        descend_id = None
        if has_internal:
            actions.append(ActionDef(name="descend", writes=(node_f, fidx_f, thr_f)))
            descend_id = 2

        if l == 0:
            root = tree.nodes[0]
            default = (resolve_id, (root.label,)) if root.is_leaf \
                else (descend_id, descend_data(0))
            steps.append(Table(name=f"{prefix}level_0", match_kind="exact",
                               key_fields=(), actions=tuple(actions),
                               entries=(), default=default))
        else:
            prev_node_f, prev_cmp_f = level_fields(l - 1)[0], level_fields(l - 1)[1]
            entries = []
            for parent_idx in levels[l - 1]:
                parent = tree.nodes[parent_idx]
                if parent.is_leaf:
                    continue
                for cmp_val, child_idx in ((1, parent.left), (0, parent.right)):
                    child = tree.nodes[child_idx]
                    keys = (MatchKey.exact(ids[parent_idx]), MatchKey.exact(cmp_val))
                    if child.is_leaf:
                        entries.append(TableEntry(keys=keys, action_id=resolve_id,
                                                  action_data=(child.label,)))
                    else:
                        entries.append(TableEntry(keys=keys, action_id=descend_id,
                                                  action_data=descend_data(child_idx)))
            steps.append(Table(name=f"{prefix}level_{l}", match_kind="exact",
                               key_fields=(prev_node_f, prev_cmp_f),
                               actions=tuple(actions),
                               entries=tuple(entries), default=(0, ())))

        if has_internal:
            steps.append(LogicOp(kind="select", dst=fval_f,
                                 srcs=(fidx_f,) + tuple(feat_names),
                                 name=f"{prefix}mux_{l}"))
            steps.append(LogicOp(kind="compare", dst=cmp_f, srcs=(fval_f, thr_f),
                                 cmp="le", name=f"{prefix}cmp_op_{l}"))


def map_dt_dm(spec: ModelSpec, cfg: Optional[RunConfig] = None) -> PipelineProgram:
    """Decision tree as a chain of per-depth node tables."""
    cfg = cfg or RunConfig()
    if spec.family != "dt":
        raise SpecValidationError(f"map_dt_dm expects a dt spec, got {spec.family!r}")
    tree: Tree = spec.params
    fields = list(input_field_decls(spec.schema))
    fields.append(FieldDecl(name="label", width=label_bits(spec.n_classes)))
    steps: list = []
    _tree_ladder(tree, spec, "", "label", fields, steps)
    return PipelineProgram(
        name="dt_dm", family="dt", variant="dm",
        fields=tuple(fields), steps=tuple(steps), registers=(),
        output=OutputSpec(kind="label", fields=("label",)),
        meta={"n_classes": spec.n_classes, "depth": tree.depth()})


def map_rf_dm(spec: ModelSpec, cfg: Optional[RunConfig] = None) -> PipelineProgram:
    """Random forest as independent tree ladders plus arithmetic vote counting."""
    cfg = cfg or RunConfig()
    if spec.family != "rf":
        raise SpecValidationError(f"map_rf_dm expects an rf spec, got {spec.family!r}")
    trees = spec.params.trees
    fields = list(input_field_decls(spec.schema))
    steps: list = []
    lw = label_bits(spec.n_classes)
    vote_fields = []
    for t, tree in enumerate(trees):
        label_f = f"t{t}_label"
        fields.append(FieldDecl(name=label_f, width=lw))
        vote_fields.append(label_f)
        _tree_ladder(tree, spec, f"t{t}_", label_f, fields, steps)
    logic_steps, label_field = _vote_logic_steps(vote_fields, spec.n_classes, fields)
    steps.extend(logic_steps)
    return PipelineProgram(
        name="rf_dm", family="rf", variant="dm",
        fields=tuple(fields), steps=tuple(steps), registers=(),
        output=OutputSpec(kind="label", fields=(label_field,)),
        meta={"n_classes": spec.n_classes, "n_trees": len(trees),
              "depth": max(t.depth() for t in trees)})


def map_bnn_dm(spec: ModelSpec, cfg: Optional[RunConfig] = None) -> PipelineProgram:
    """Binarized network over register-resident weight rows."""
    cfg = cfg or RunConfig()
    if spec.family != "bnn":
        raise SpecValidationError(f"map_bnn_dm expects a bnn spec, got {spec.family!r}")
    layers = spec.params.layers
    schema = spec.schema
    feat_names = feature_field_names(schema)

    fields = list(input_field_decls(schema))
    steps: list = []
    registers = []

    vec = "vec_0"
    fields.append(FieldDecl(name=vec, width=schema.total_bits))
    steps.append(LogicOp(kind="concat", dst=vec, srcs=tuple(feat_names),
                         widths=schema.bit_widths, name="pack_features"))

    final_counts: list[str] = []
    for l, layer in enumerate(layers):
        reg = Register(name=f"w{l}", width=layer.in_width, values=layer.rows)
        registers.append(reg)
        is_last = l == len(layers) - 1
        pc_w = width_for_count(layer.in_width + 1)
        sign_bits = []
        counts = []
        for j in range(len(layer.rows)):
            xn = f"l{l}_xnor{j}"
            pc = f"l{l}_pc{j}"
            fields.append(FieldDecl(name=xn, width=layer.in_width))
            fields.append(FieldDecl(name=pc, width=pc_w))
            steps.append(LogicOp(kind="xnor", dst=xn, srcs=(vec, (reg.name, j)),
                                 width=layer.in_width, name=f"l{l}_xnor_op{j}"))
            steps.append(LogicOp(kind="popcount", dst=pc, srcs=(xn,),
                                 name=f"l{l}_pc_op{j}"))
            counts.append(pc)
            if not is_last:
                sb = f"l{l}_sign{j}"
                fields.append(FieldDecl(name=sb, width=1))
                # A popcount of exactly half the width signs to 1.
                steps.append(LogicOp(kind="sign", dst=sb, srcs=(pc,),
                                     threshold=(layer.in_width + 1) // 2,
                                     name=f"l{l}_sign_op{j}"))
                sign_bits.append(sb)
        if is_last:
            final_counts = counts
        else:
            vec = f"vec_{l + 1}"
            fields.append(FieldDecl(name=vec, width=len(layer.rows)))
            steps.append(LogicOp(kind="concat", dst=vec, srcs=tuple(sign_bits),
                                 widths=tuple(1 for _ in sign_bits),
                                 name=f"pack_layer_{l + 1}"))

    fields.append(FieldDecl(name="label", width=label_bits(spec.n_classes)))
    steps.append(LogicOp(kind="argmax", dst="label", srcs=tuple(final_counts),
                         name="pc_argmax"))
    return PipelineProgram(
        name="bnn_dm", family="bnn", variant="dm",
        fields=tuple(fields), steps=tuple(steps), registers=tuple(registers),
        output=OutputSpec(kind="label", fields=("label",)),
        meta={"n_classes": spec.n_classes,
              "layer_widths": [l.in_width for l in layers] + [len(layers[-1].rows)]})
