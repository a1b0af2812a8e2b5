"""Exact reference inference for every supported model family.

These are plain floating-point forward passes. Every converter's output
program is verified against them, so they deliberately avoid any of the
table/quantization machinery.

Tie rules are global: every argmax/argmin breaks ties toward the lowest
index. A point exactly on an SVM hyperplane votes for the lower-indexed
class of its pair. A BNN popcount exactly at half the width signs to 1.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Sequence

from .errors import SpecValidationError
from .model_spec import (
    ModelSpec,
    Tree,
    iforest_threshold,
)


def _argbest(scores: Sequence[float], reverse: bool = False) -> int:
    """Index of the max (or min) score; ties go to the lowest index."""
    best_i = 0
    best = scores[0]
    for i in range(1, len(scores)):
        s = scores[i]
        if (s > best) if not reverse else (s < best):
            best, best_i = s, i
    return best_i


def argmax_low(scores: Sequence[float]) -> int:
    return _argbest(scores)


def argmin_low(scores: Sequence[float]) -> int:
    return _argbest(scores, reverse=True)


def tree_leaf(tree: Tree, x: Sequence[int]) -> int:
    """Node index of the leaf reached by x (left branch on value <= threshold)."""
    i = 0
    node = tree.nodes[0]
    while not node.is_leaf:
        i = node.left if x[node.feature_index] <= node.threshold else node.right
        node = tree.nodes[i]
    return i


def _majority(labels: Sequence[int], n_classes: int) -> int:
    counts = [0] * n_classes
    for l in labels:
        counts[l] += 1
    return argmax_low(counts)


def _xgb_scores(spec: ModelSpec, x: Sequence[int]) -> list[float]:
    p = spec.params
    k = spec.n_classes
    if k == 2:
        s = p.base_scores[0]
        for t in p.trees:
            s += t.nodes[tree_leaf(t, x)].leaf_value
        # Binary decision is sigmoid(s) >= 0.5, i.e. s >= 0; expressed as a
        # two-class score vector so the global tie rule applies at s == 0.
        return [-s, s]
    scores = list(p.base_scores)
    for i, t in enumerate(p.trees):
        scores[i % k] += t.nodes[tree_leaf(t, x)].leaf_value
    return scores


def _svm_votes(spec: ModelSpec, x: Sequence[int]) -> list[int]:
    votes = [0] * spec.n_classes
    for h in spec.params.hyperplanes:
        d = h.b + sum(w * v for w, v in zip(h.w, x))
        votes[h.class_pair[0] if d >= 0 else h.class_pair[1]] += 1
    return votes


def _nb_log_scores(spec: ModelSpec, x: Sequence[int]) -> list[float]:
    p = spec.params
    scores = []
    for c in range(spec.n_classes):
        s = math.log(p.priors[c]) if p.priors[c] > 0 else -math.inf
        for i, v in enumerate(x):
            g = p.gaussians[i][c]
            s += -0.5 * math.log(2.0 * math.pi * g.variance) \
                 - (v - g.mean) ** 2 / (2.0 * g.variance)
        scores.append(s)
    return scores


def sq_distances(centroids: Sequence[Sequence[float]], x: Sequence[float]) -> list[float]:
    return [sum((xv - cv) ** 2 for xv, cv in zip(x, c)) for c in centroids]


def knn_label(spec: ModelSpec, x: Sequence[float]) -> int:
    """Majority label of the k nearest training points.

    Distance ties resolve by point index, so the neighbor set is deterministic.
    """
    p = spec.params
    ranked = sorted(
        (sum((xv - pv) ** 2 for xv, pv in zip(x, pt.x)), idx)
        for idx, pt in enumerate(p.points))
    labels = [p.points[idx].label for _, idx in ranked[:p.k]]
    return _majority(labels, spec.n_classes)


def bnn_concat_features(spec: ModelSpec, x: Sequence[int]) -> int:
    """Concatenate feature values into one input word, feature 0 in the MSBs."""
    acc = 0
    for v, f in zip(x, spec.schema.features):
        acc = (acc << f.bit_width) | v
    return acc


def bnn_forward(spec: ModelSpec, x: Sequence[int]) -> list[int]:
    """Per-class popcounts of the final layer (no activation on the last layer)."""
    vec = bnn_concat_features(spec, x)
    layers = spec.params.layers
    for li, layer in enumerate(layers):
        mask = (1 << layer.in_width) - 1
        counts = [bin(~(vec ^ row) & mask).count("1") for row in layer.rows]
        if li == len(layers) - 1:
            return counts
        threshold = (layer.in_width + 1) // 2  # popcount == width/2 signs to 1
        vec = 0
        for c in counts:  # node 0 lands in the MSB of the next layer input
            vec = (vec << 1) | (1 if c >= threshold else 0)
    return counts  # pragma: no cover


def reference_predict(spec: ModelSpec, x: Sequence[int]) -> int:
    """Exact label for a classifier spec on one feature vector."""
    if not spec.is_classifier:
        raise SpecValidationError(
            f"family {spec.family!r} has no labels; use reference_transform")
    xs = spec.schema.validate_vector(x)
    family = spec.family

    if family == "dt":
        tree = spec.params
        return tree.nodes[tree_leaf(tree, xs)].label
    if family == "rf":
        labels = [t.nodes[tree_leaf(t, xs)].label for t in spec.params.trees]
        return _majority(labels, spec.n_classes)
    if family == "xgb":
        return argmax_low(_xgb_scores(spec, xs))
    if family == "iforest":
        p = spec.params
        mean_h = sum(t.nodes[tree_leaf(t, xs)].path_length for t in p.trees) / len(p.trees)
        return 1 if mean_h <= iforest_threshold(p) else 0
    if family == "kmeans":
        return argmin_low(sq_distances(spec.params.centroids, xs))
    if family == "knn":
        return knn_label(spec, xs)
    if family == "svm":
        return argmax_low(_svm_votes(spec, xs))
    if family == "nb":
        return argmax_low(_nb_log_scores(spec, xs))
    if family == "bnn":
        return argmax_low(bnn_forward(spec, xs))
    raise SpecValidationError(f"unknown family {family!r}")  # pragma: no cover


def reference_transform(spec: ModelSpec, x: Sequence[int]) -> list[float]:
    """Exact output vector for a pca/ae spec on one feature vector."""
    if spec.is_classifier:
        raise SpecValidationError(
            f"family {spec.family!r} is a classifier; use reference_predict")
    xs = spec.schema.validate_vector(x)
    p = spec.params
    if spec.family == "pca":
        centered = [v - m for v, m in zip(xs, p.means)]
        return [sum(centered[i] * p.components[i][j] for i in range(spec.n))
                for j in range(spec.out_dim)]
    # ae: x @ W + B
    return [p.biases[j] + sum(xs[i] * p.weights[i][j] for i in range(spec.n))
            for j in range(spec.out_dim)]
