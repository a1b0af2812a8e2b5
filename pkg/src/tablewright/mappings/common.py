"""Helpers shared by the converter families."""

from __future__ import annotations

import math
import re
from typing import Sequence

from ..errors import BudgetError
from ..ir import FieldDecl
from ..model_spec import FeatureSchema, Tree

_IDENT = re.compile(r"[^A-Za-z0-9_]")


def feature_field_names(schema: FeatureSchema) -> list[str]:
    """Stable identifier-safe field names for the input features."""
    names = []
    for i, f in enumerate(schema.features):
        name = _IDENT.sub("_", f.name)
        if not name or name[0].isdigit():
            name = f"f{i}_{name}" if name else f"f{i}"
        if name in names:
            name = f"f{i}_{name}"
        names.append(name)
    return names


def input_field_decls(schema: FeatureSchema) -> list[FieldDecl]:
    return [FieldDecl(name=n, width=f.bit_width, is_input=True)
            for n, f in zip(feature_field_names(schema), schema.features)]


def width_for_count(count: int) -> int:
    """Bits needed to store values 0..count-1 (at least one bit)."""
    return max(1, math.ceil(math.log2(max(2, count))))


def check_entry_budget(table_name: str, count: int, budget: int, hint: str = "") -> None:
    if count > budget:
        msg = f"table {table_name!r} would need {count} entries (budget {budget})"
        if hint:
            msg += f"; {hint}"
        raise BudgetError(msg)


def leaf_boxes(tree: Tree, schema: FeatureSchema) -> list[tuple[int, list[tuple[int, int]]]]:
    """(leaf node index, value box) for every geometrically reachable leaf.

    The box is a per-feature closed range [lo, hi]; branches whose region is
    empty (e.g. a right branch of a threshold at the domain maximum) are
    dropped entirely.
    """
    out = []
    init = [(0, schema.domain_max(i)) for i in range(schema.n)]

    def walk(idx: int, box: list[tuple[int, int]]) -> None:
        node = tree.nodes[idx]
        if node.is_leaf:
            out.append((idx, box))
            return
        f, t = node.feature_index, node.threshold
        lo, hi = box[f]
        if lo <= min(t, hi):
            left = list(box)
            left[f] = (lo, min(t, hi))
            walk(node.left, left)
        if max(lo, t + 1) <= hi:
            right = list(box)
            right[f] = (max(lo, t + 1), hi)
            walk(node.right, right)

    walk(0, init)
    return out


def intersect_boxes(a: Sequence[tuple[int, int]],
                    b: Sequence[tuple[int, int]]):
    """Intersection box, or None when empty."""
    out = []
    for (alo, ahi), (blo, bhi) in zip(a, b):
        lo, hi = max(alo, blo), min(ahi, bhi)
        if lo > hi:
            return None
        out.append((lo, hi))
    return out
