"""Seeded generators for models and datasets.

Used by the sweep command and the test suite. Everything is driven by an
explicit ``random.Random`` so identical seeds reproduce identical models,
datasets, and therefore identical sweep rows.
"""

from __future__ import annotations

import random
from typing import Optional, Sequence

from .model_spec import ModelSpec, parse_model_dict


def schema_dict(widths: Sequence[int]) -> dict:
    return {"features": [{"name": f"f{i}", "bit_width": w}
                         for i, w in enumerate(widths)]}


def random_tree_nodes(rng: random.Random, widths: Sequence[int], depth: int,
                      leaf_fn, branch_prob: float = 0.85) -> list[dict]:
    """Binary tree grown to at most ``depth`` with random axis-aligned splits."""
    nodes: list[Optional[dict]] = []

    def build(d: int) -> int:
        idx = len(nodes)
        if d == 0 or rng.random() > branch_prob:
            nodes.append(leaf_fn())
            return idx
        f = rng.randrange(len(widths))
        t = rng.randrange(1 << widths[f])
        nodes.append(None)
        left = build(d - 1)
        right = build(d - 1)
        nodes[idx] = {"kind": "split", "feature_index": f, "threshold": t,
                      "left": left, "right": right}
        return idx

    build(depth)
    return nodes  # type: ignore[return-value]


def truncate_tree_nodes(nodes: list[dict], depth: int) -> list[dict]:
    """Cut a tree at ``depth``, replacing each removed subtree with its
    leftmost leaf. Thresholds of the truncated tree are a subset of the
    original's, so resource use grows monotonically along a depth sweep."""
    out: list[dict] = []

    def first_leaf(idx: int) -> dict:
        node = nodes[idx]
        while node["kind"] == "split":
            node = nodes[node["left"]]
        return node

    def build(idx: int, d: int) -> int:
        node = nodes[idx]
        pos = len(out)
        if node["kind"] == "leaf" or d == depth:
            out.append(dict(first_leaf(idx)))
            return pos
        out.append(None)  # type: ignore[arg-type]
        left = build(node["left"], d + 1)
        right = build(node["right"], d + 1)
        out[pos] = {"kind": "split", "feature_index": node["feature_index"],
                    "threshold": node["threshold"], "left": left, "right": right}
        return pos

    build(0, 0)
    return out


def random_dt(rng: random.Random, widths: Sequence[int], depth: int,
              n_classes: int = 2) -> ModelSpec:
    leaf = lambda: {"kind": "leaf", "label": rng.randrange(n_classes)}
    return parse_model_dict({
        "schema_version": 1, "family": "dt", "n_classes": n_classes,
        "schema": schema_dict(widths),
        "params": {"tree": {"nodes": random_tree_nodes(rng, widths, depth, leaf)}},
    })


def random_rf(rng: random.Random, widths: Sequence[int], depth: int,
              n_trees: int, n_classes: int = 2) -> ModelSpec:
    leaf = lambda: {"kind": "leaf", "label": rng.randrange(n_classes)}
    return parse_model_dict({
        "schema_version": 1, "family": "rf", "n_classes": n_classes,
        "schema": schema_dict(widths),
        "params": {"trees": [
            {"nodes": random_tree_nodes(rng, widths, depth, leaf)}
            for _ in range(n_trees)]},
    })


def random_xgb(rng: random.Random, widths: Sequence[int], depth: int,
               n_trees: int, n_classes: int = 2) -> ModelSpec:
    leaf = lambda: {"kind": "leaf", "leaf_value": rng.uniform(-1.0, 1.0)}
    if n_classes > 2 and n_trees % n_classes:
        n_trees += n_classes - n_trees % n_classes
    base = [rng.uniform(-0.2, 0.2)] if n_classes == 2 \
        else [rng.uniform(-0.2, 0.2) for _ in range(n_classes)]
    return parse_model_dict({
        "schema_version": 1, "family": "xgb", "n_classes": n_classes,
        "schema": schema_dict(widths),
        "params": {"trees": [
            {"nodes": random_tree_nodes(rng, widths, depth, leaf)}
            for _ in range(n_trees)], "base_scores": base},
    })


def random_iforest(rng: random.Random, widths: Sequence[int], depth: int,
                   n_trees: int, n_instances: int = 128) -> ModelSpec:
    # Leaf path lengths straddle the anomaly threshold for the instance count
    # so both outcomes occur.
    leaf = lambda: {"kind": "leaf", "path_length": rng.uniform(2.0, 14.0)}
    return parse_model_dict({
        "schema_version": 1, "family": "iforest", "n_classes": 2,
        "schema": schema_dict(widths),
        "params": {"trees": [
            {"nodes": random_tree_nodes(rng, widths, depth, leaf)}
            for _ in range(n_trees)], "n_instances": n_instances},
    })


def random_kmeans(rng: random.Random, widths: Sequence[int], k: int) -> ModelSpec:
    cents = [[rng.uniform(0, (1 << w) - 1) for w in widths] for _ in range(k)]
    return parse_model_dict({
        "schema_version": 1, "family": "kmeans", "n_classes": k,
        "schema": schema_dict(widths), "params": {"centroids": cents},
    })


def random_knn(rng: random.Random, widths: Sequence[int], n_points: int,
               k: int, n_classes: int = 2, distinct_labels: bool = False) -> ModelSpec:
    points = []
    for i in range(n_points):
        label = i if distinct_labels else rng.randrange(n_classes)
        points.append({"x": [rng.randrange(1 << w) for w in widths], "label": label})
    classes = n_points if distinct_labels else n_classes
    return parse_model_dict({
        "schema_version": 1, "family": "knn", "n_classes": classes,
        "schema": schema_dict(widths), "params": {"points": points, "k": k},
    })


def random_svm(rng: random.Random, widths: Sequence[int], n_classes: int = 2,
               integer_weights: bool = False) -> ModelSpec:
    n = len(widths)
    centers = {}
    planes = []
    for a in range(n_classes):
        centers[a] = [rng.uniform(0.2, 0.8) * ((1 << w) - 1) for w in widths]
    for a in range(n_classes):
        for b in range(a + 1, n_classes):
            # Separating hyperplane between the two synthetic class centers,
            # oriented so the decision value is positive on class a's side.
            w = [centers[a][i] - centers[b][i] for i in range(n)]
            mid = [(centers[a][i] + centers[b][i]) / 2 for i in range(n)]
            if integer_weights:
                w = [round(x) or 1 for x in w]
            bias = -sum(wi * mi for wi, mi in zip(w, mid))
            if integer_weights:
                bias = round(bias)
            planes.append({"w": [float(x) for x in w], "b": float(bias),
                           "class_pair": [a, b]})
    return parse_model_dict({
        "schema_version": 1, "family": "svm", "n_classes": n_classes,
        "schema": schema_dict(widths), "params": {"hyperplanes": planes},
    })


def random_nb(rng: random.Random, widths: Sequence[int], n_classes: int = 2) -> ModelSpec:
    n = len(widths)
    priors = [rng.uniform(0.5, 1.5) for _ in range(n_classes)]
    s = sum(priors)
    priors = [p / s for p in priors]
    priors[-1] = 1.0 - sum(priors[:-1])
    gaussians = []
    for i in range(n):
        dmax = (1 << widths[i]) - 1
        row = []
        for _ in range(n_classes):
            row.append({"mean": rng.uniform(0.15, 0.85) * dmax,
                        "variance": (rng.uniform(0.05, 0.15) * dmax) ** 2})
        gaussians.append(row)
    return parse_model_dict({
        "schema_version": 1, "family": "nb", "n_classes": n_classes,
        "schema": schema_dict(widths),
        "params": {"priors": priors, "gaussians": gaussians},
    })


def random_pca(rng: random.Random, widths: Sequence[int], out_dim: int) -> ModelSpec:
    n = len(widths)
    return parse_model_dict({
        "schema_version": 1, "family": "pca", "out_dim": out_dim,
        "schema": schema_dict(widths),
        "params": {
            "means": [((1 << w) - 1) / 2 for w in widths],
            "components": [[rng.uniform(-1, 1) for _ in range(out_dim)]
                           for _ in range(n)],
        },
    })


def random_ae(rng: random.Random, widths: Sequence[int], out_dim: int) -> ModelSpec:
    n = len(widths)
    return parse_model_dict({
        "schema_version": 1, "family": "ae", "out_dim": out_dim,
        "schema": schema_dict(widths),
        "params": {
            "weights": [[rng.uniform(-1, 1) for _ in range(out_dim)] for _ in range(n)],
            "biases": [rng.uniform(-10, 10) for _ in range(out_dim)],
        },
    })


def random_bnn(rng: random.Random, widths: Sequence[int], hidden: Sequence[int],
               n_classes: int = 2) -> ModelSpec:
    total = sum(widths)
    layers = []
    in_w = total
    for h in list(hidden) + [n_classes]:
        layers.append({"in_width": in_w,
                       "rows": [rng.getrandbits(in_w) for _ in range(h)]})
        in_w = h
    return parse_model_dict({
        "schema_version": 1, "family": "bnn", "n_classes": n_classes,
        "schema": schema_dict(widths), "params": {"layers": layers},
    })


def random_model(rng: random.Random, family: str, widths: Sequence[int],
                 n_classes: int = 2, depth: int = 4, n_trees: int = 3,
                 out_dim: int = 2) -> ModelSpec:
    if family == "dt":
        return random_dt(rng, widths, depth, n_classes)
    if family == "rf":
        return random_rf(rng, widths, depth, n_trees, n_classes)
    if family == "xgb":
        return random_xgb(rng, widths, depth, n_trees, n_classes)
    if family == "iforest":
        return random_iforest(rng, widths, depth, n_trees)
    if family == "kmeans":
        return random_kmeans(rng, widths, n_classes)
    if family == "knn":
        return random_knn(rng, widths, n_points=8, k=3, n_classes=n_classes)
    if family == "svm":
        return random_svm(rng, widths, n_classes)
    if family == "nb":
        return random_nb(rng, widths, n_classes)
    if family == "pca":
        return random_pca(rng, widths, out_dim)
    if family == "ae":
        return random_ae(rng, widths, out_dim)
    if family == "bnn":
        return random_bnn(rng, widths, hidden=[16], n_classes=n_classes)
    raise ValueError(f"unknown family {family!r}")


def uniform_inputs(rng: random.Random, widths: Sequence[int],
                   count: int) -> list[list[int]]:
    return [[rng.randrange(1 << w) for w in widths] for _ in range(count)]


# ---------------------------------------------------------------------------
# A 2-class Gaussian classification problem with the true model parameters
# available, so lookup-based fidelity can be measured against exact specs.
# ---------------------------------------------------------------------------

class GaussianProblem:
    """Two Gaussian classes on an integer feature domain.

    Class means sit ``separation`` standard deviations apart per feature;
    samples are clipped to the domain and rounded. The matching nb, kmeans,
    and svm specs use the true distribution parameters, not an estimate.
    """

    def __init__(self, rng: random.Random, n_features: int = 4, bits: int = 8,
                 separation: float = 3.0):
        self.widths = [bits] * n_features
        dmax = (1 << bits) - 1
        self.sigma = 0.08 * dmax
        self.means = [[], []]
        for _ in range(n_features):
            center = rng.uniform(0.35, 0.65) * dmax
            delta = separation * self.sigma / 2.0
            self.means[0].append(center - delta)
            self.means[1].append(center + delta)

    def sample(self, rng: random.Random, count: int) -> tuple[list[list[int]], list[int]]:
        xs, ys = [], []
        dmax = (1 << self.widths[0]) - 1
        for _ in range(count):
            c = rng.randrange(2)
            row = []
            for i in range(len(self.widths)):
                v = rng.gauss(self.means[c][i], self.sigma)
                row.append(min(dmax, max(0, round(v))))
            xs.append(row)
            ys.append(c)
        return xs, ys

    def nb_spec(self) -> ModelSpec:
        gaussians = [[{"mean": self.means[c][i], "variance": self.sigma ** 2}
                      for c in range(2)] for i in range(len(self.widths))]
        return parse_model_dict({
            "schema_version": 1, "family": "nb", "n_classes": 2,
            "schema": schema_dict(self.widths),
            "params": {"priors": [0.5, 0.5], "gaussians": gaussians},
        })

    def kmeans_spec(self) -> ModelSpec:
        return parse_model_dict({
            "schema_version": 1, "family": "kmeans", "n_classes": 2,
            "schema": schema_dict(self.widths),
            "params": {"centroids": [list(self.means[0]), list(self.means[1])]},
        })

    def svm_spec(self) -> ModelSpec:
        n = len(self.widths)
        w = [self.means[0][i] - self.means[1][i] for i in range(n)]
        mid = [(self.means[0][i] + self.means[1][i]) / 2 for i in range(n)]
        b = -sum(wi * mi for wi, mi in zip(w, mid))
        return parse_model_dict({
            "schema_version": 1, "family": "svm", "n_classes": 2,
            "schema": schema_dict(self.widths),
            "params": {"hyperplanes": [{"w": w, "b": b, "class_pair": [0, 1]}]},
        })
