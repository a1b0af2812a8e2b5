"""Train a toy model on a CSV dataset and export it as a model spec document.

Exports carry the quantization scaling record plus held-out test vectors with
the toolkit's own predictions, so the compiler side can cross-check its
reference engine against what was actually trained.

Prediction conventions written to the vectors file:

* dt: the fitted tree's predict().
* rf: a hard majority vote over the individual trees' predict() outputs,
  ties to the lowest label (the ensemble semantics the exported spec
  declares; scikit-learn's own predict() averages probabilities instead and
  can differ on split votes).
* everything else: the fitted estimator's predict()/transform().
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from sklearn.cluster import KMeans
from sklearn.decomposition import PCA
from sklearn.ensemble import (
    GradientBoostingClassifier,
    IsolationForest,
    RandomForestClassifier,
)
from sklearn.model_selection import train_test_split
from sklearn.naive_bayes import GaussianNB
from sklearn.neighbors import KNeighborsClassifier
from sklearn.neural_network import MLPClassifier
from sklearn.svm import SVC
from sklearn.tree import DecisionTreeClassifier

from .quantize import quantize_features

SCHEMA_VERSION = 1
EULER_GAMMA = 0.5772156649

FAMILIES = ("dt", "rf", "xgb", "iforest", "kmeans", "knn", "svm", "nb",
            "pca", "ae", "bnn")

# Named model-size presets: tree depth / counts, isolation-forest subsample
# size, neighbor count, and binarized hidden width per size class.
PRESETS = {
    "S": {"depth": 4, "n_trees": 6, "max_leaf": 1000, "if_trees": 3,
          "if_instances": 128, "knn_k": 5, "bnn_hidden": 16, "out_dim": 2,
          "n_clusters": 3},
    "M": {"depth": 5, "n_trees": 9, "max_leaf": 1000, "if_trees": 9,
          "if_instances": 128, "knn_k": 5, "bnn_hidden": 32, "out_dim": 2,
          "n_clusters": 3},
    "L": {"depth": 6, "n_trees": 12, "max_leaf": 1000, "if_trees": 12,
          "if_instances": 128, "knn_k": 5, "bnn_hidden": 48, "out_dim": 2,
          "n_clusters": 3},
    "H": {"depth": 30, "n_trees": 200, "max_leaf": 100000, "if_trees": 200,
          "if_instances": 1280, "knn_k": 5, "bnn_hidden": 48, "out_dim": 2,
          "n_clusters": 3},
}


class ExportError(RuntimeError):
    pass


@dataclass
class ExportJob:
    dataset: str
    family: str
    preset: str = "S"
    bits: int = 8
    seed: int = 0
    test_frac: float = 0.25
    knn_max_points: int = 100
    n_clusters: Optional[int] = None  # kmeans; defaults to the preset value

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ExportError(f"unsupported family {self.family!r}")
        if self.preset not in PRESETS:
            raise ExportError(f"unknown preset {self.preset!r}")
        if not 1 <= self.bits <= 16:
            raise ExportError("bits must be in 1..16")


def load_dataset(path: str):
    """CSV with a header of feature names plus a 'label' column."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        raise ExportError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    if "label" not in header:
        raise ExportError("dataset needs a 'label' column")
    label_idx = header.index("label")
    names = [h for i, h in enumerate(header) if i != label_idx]
    X, y = [], []
    for row in rows[1:]:
        if not row:
            continue
        try:
            vals = [float(c) for c in row]
        except ValueError as exc:
            raise ExportError(f"non-numeric cell in {path}: {exc}") from exc
        y.append(int(vals[label_idx]))
        X.append([v for i, v in enumerate(vals) if i != label_idx])
    return np.array(X, dtype=float), np.array(y, dtype=int), names


def _dense_classes(y: np.ndarray) -> int:
    classes = sorted(set(int(v) for v in y))
    if classes != list(range(len(classes))):
        raise ExportError(f"labels must be dense 0..k-1, got {classes}")
    return len(classes)


def _tree_nodes(tree, widths: list[int], leaf_payload) -> list[dict]:
    """Convert a fitted sklearn tree into the spec node list.

    Thresholds are midpoints between integers, so flooring is exact for
    integer features; they are clamped into the declared domain.
    """
    t = tree.tree_
    nodes = []
    for i in range(t.node_count):
        if t.children_left[i] == -1:
            nodes.append(leaf_payload(t, i))
        else:
            f = int(t.feature[i])
            thr = min(max(int(math.floor(t.threshold[i])), 0), (1 << widths[f]) - 1)
            nodes.append({"kind": "split", "feature_index": f, "threshold": thr,
                          "left": int(t.children_left[i]),
                          "right": int(t.children_right[i])})
    return nodes


def _label_leaf(classes):
    def payload(t, i):
        return {"kind": "leaf", "label": int(classes[int(np.argmax(t.value[i][0]))])}
    return payload


def _avg_path_length(n: int) -> float:
    if n <= 1:
        return 0.0
    if n == 2:
        return 1.0
    return 2.0 * (math.log(n - 1) + EULER_GAMMA) - 2.0 * (n - 1) / n


def _iforest_leaf(t, i):
    depth = _node_depth(t, i)
    return {"kind": "leaf",
            "path_length": depth + _avg_path_length(int(t.n_node_samples[i]))}


def _node_depth(t, target: int) -> int:
    # Depth by upward search over the children arrays; trees are small.
    depth = 0
    node = target
    while node != 0:
        parent = int(np.where((t.children_left == node) | (t.children_right == node))[0][0])
        node = parent
        depth += 1
    return depth


def _majority_vote(per_tree_labels: np.ndarray, k: int) -> np.ndarray:
    out = np.zeros(per_tree_labels.shape[1], dtype=int)
    for col in range(per_tree_labels.shape[1]):
        counts = np.bincount(per_tree_labels[:, col], minlength=k)
        out[col] = int(np.argmax(counts))
    return out


def _bit_expand(Xq: np.ndarray, widths: list[int]) -> np.ndarray:
    """Integer features to a +/-1 bit matrix, feature 0's MSB first."""
    cols = []
    for j, w in enumerate(widths):
        for b in range(w - 1, -1, -1):
            cols.append(((Xq[:, j] >> b) & 1) * 2.0 - 1.0)
    return np.stack(cols, axis=1)


def _sign_row(weights: np.ndarray, total_bits: int) -> int:
    """Column of float weights to a row bitmask; position 0 is the MSB, and
    sign(0) counts as +1."""
    row = 0
    for p, w in enumerate(weights):
        if w >= 0:
            row |= 1 << (total_bits - 1 - p)
    return row


def export_model(job: ExportJob):
    """Train per the job and return (model document, vectors header, vectors rows)."""
    X_raw, y, names = load_dataset(job.dataset)
    widths = [job.bits] * X_raw.shape[1]
    Xq, scaling = quantize_features(X_raw, widths)
    p = PRESETS[job.preset]

    stratify = y if np.min(np.bincount(y)) >= 2 else None
    X_tr, X_te, y_tr, y_te = train_test_split(
        Xq, y, test_size=job.test_frac, random_state=job.seed, stratify=stratify)

    schema = {"features": [{"name": n, "bit_width": w}
                           for n, w in zip(names, widths)]}
    doc = {"schema_version": SCHEMA_VERSION, "family": job.family,
           "schema": schema,
           "feature_scaling": scaling}
    family = job.family
    header = names + ["label", "prediction"]

    def classifier_rows(pred):
        return [list(map(int, x)) + [int(t), int(pr)]
                for x, t, pr in zip(X_te, y_te, pred)]

    if family == "dt":
        k = _dense_classes(y)
        clf = DecisionTreeClassifier(max_depth=p["depth"],
                                     max_leaf_nodes=p["max_leaf"],
                                     random_state=job.seed).fit(X_tr, y_tr)
        doc["n_classes"] = k
        doc["params"] = {"tree": {"nodes": _tree_nodes(clf, widths,
                                                       _label_leaf(clf.classes_))}}
        return doc, header, classifier_rows(clf.predict(X_te))

    if family == "rf":
        k = _dense_classes(y)
        clf = RandomForestClassifier(n_estimators=p["n_trees"],
                                     max_depth=p["depth"],
                                     max_leaf_nodes=p["max_leaf"],
                                     random_state=job.seed).fit(X_tr, y_tr)
        doc["n_classes"] = k
        doc["params"] = {"trees": [
            {"nodes": _tree_nodes(est, widths, _label_leaf(clf.classes_))}
            for est in clf.estimators_]}
        votes = np.stack([clf.classes_[np.argmax(est.predict_proba(X_te), axis=1)]
                          for est in clf.estimators_])
        return doc, header, classifier_rows(_majority_vote(votes, k))

    if family == "xgb":
        k = _dense_classes(y)
        clf = GradientBoostingClassifier(n_estimators=p["n_trees"],
                                         max_depth=p["depth"],
                                         max_leaf_nodes=p["max_leaf"],
                                         init="zero",
                                         random_state=job.seed).fit(X_tr, y_tr)
        lr = clf.learning_rate

        def leaf(t, i):
            return {"kind": "leaf", "leaf_value": float(lr * t.value[i][0][0])}

        # estimators_ is (stages, columns); flattening stage-major makes tree
        # index i score class i mod n_classes, matching the spec layout.
        trees = [{"nodes": _tree_nodes(est, widths, leaf)}
                 for stage in clf.estimators_ for est in stage]
        doc["n_classes"] = k
        doc["params"] = {"trees": trees,
                         "base_scores": [0.0] * (1 if k == 2 else k)}
        return doc, header, classifier_rows(clf.predict(X_te))

    if family == "iforest":
        ifo = IsolationForest(n_estimators=p["if_trees"],
                              max_samples=min(p["if_instances"], len(X_tr)),
                              random_state=job.seed).fit(X_tr)
        t_count = int(ifo.max_samples_)
        doc["n_classes"] = 2
        params = {"trees": [{"nodes": _tree_nodes(est, widths, _iforest_leaf)}
                            for est in ifo.estimators_],
                  "n_instances": t_count}
        # contamination="auto" pins the offset at -0.5, which is exactly the
        # default mean-path threshold; other offsets translate into an
        # explicit path-length threshold.
        if ifo.offset_ != -0.5:
            params["path_threshold"] = float(
                -_avg_path_length(t_count) * math.log2(-ifo.offset_))
        doc["params"] = params
        pred = (ifo.predict(X_te) == -1).astype(int)
        return doc, header, classifier_rows(pred)

    if family == "kmeans":
        n_clusters = job.n_clusters or p["n_clusters"]
        km = KMeans(n_clusters=n_clusters, random_state=job.seed,
                    n_init=10).fit(X_tr)
        doc["n_classes"] = n_clusters
        doc["params"] = {"centroids": [[float(v) for v in c]
                                       for c in km.cluster_centers_]}
        observed = [sorted(int(v) for v in set(X_tr[:, j].tolist()))
                    for j in range(X_tr.shape[1])]
        doc["observed_values"] = observed
        return doc, header, classifier_rows(km.predict(X_te))

    if family == "knn":
        k = _dense_classes(y)
        rng = np.random.RandomState(job.seed)
        idx = rng.choice(len(X_tr), size=min(job.knn_max_points, len(X_tr)),
                         replace=False)
        pts, labels = X_tr[idx], y_tr[idx]
        n_neighbors = min(p["knn_k"], len(pts))
        clf = KNeighborsClassifier(n_neighbors=n_neighbors).fit(pts, labels)
        doc["n_classes"] = k
        doc["params"] = {"points": [{"x": list(map(int, x)), "label": int(l)}
                                    for x, l in zip(pts, labels)],
                         "k": n_neighbors}
        return doc, header, classifier_rows(clf.predict(X_te))

    if family == "svm":
        k = _dense_classes(y)
        clf = SVC(kernel="linear", decision_function_shape="ovo",
                  random_state=job.seed).fit(X_tr, y_tr)
        pairs = [(a, b) for a in range(k) for b in range(a + 1, k)]
        doc["n_classes"] = k
        doc["params"] = {"hyperplanes": [
            {"w": [float(v) for v in clf.coef_[i]],
             "b": float(clf.intercept_[i]),
             "class_pair": list(pairs[i])}
            for i in range(len(pairs))]}
        return doc, header, classifier_rows(clf.predict(X_te))

    if family == "nb":
        k = _dense_classes(y)
        clf = GaussianNB().fit(X_tr, y_tr)
        doc["n_classes"] = k
        doc["params"] = {
            "priors": [float(v) for v in clf.class_prior_],
            "gaussians": [[{"mean": float(clf.theta_[c][j]),
                            "variance": float(clf.var_[c][j])}
                           for c in range(k)]
                          for j in range(X_tr.shape[1])],
        }
        return doc, header, classifier_rows(clf.predict(X_te))

    if family == "pca":
        out_dim = min(p["out_dim"], X_tr.shape[1])
        pca = PCA(n_components=out_dim, random_state=job.seed).fit(X_tr)
        doc["out_dim"] = out_dim
        doc["params"] = {"means": [float(v) for v in pca.mean_],
                         "components": [[float(pca.components_[m][j])
                                         for m in range(out_dim)]
                                        for j in range(X_tr.shape[1])]}
        header = names + ["label"] + [f"pred_{m}" for m in range(out_dim)]
        proj = pca.transform(X_te)
        rows = [list(map(int, x)) + [int(t)] + [float(v) for v in pr]
                for x, t, pr in zip(X_te, y_te, proj)]
        return doc, header, rows

    if family == "ae":
        # Closed-form linear autoencoder: the least-squares optimal single
        # encoder layer spans the principal subspace.
        out_dim = min(p["out_dim"], X_tr.shape[1])
        mean = X_tr.mean(axis=0)
        _, _, vt = np.linalg.svd(X_tr - mean, full_matrices=False)
        W = vt[:out_dim].T              # (n, out_dim)
        B = -mean @ W
        doc["out_dim"] = out_dim
        doc["params"] = {"weights": [[float(W[j][m]) for m in range(out_dim)]
                                     for j in range(X_tr.shape[1])],
                         "biases": [float(v) for v in B]}
        header = names + ["label"] + [f"pred_{m}" for m in range(out_dim)]
        proj = X_te @ W + B
        rows = [list(map(int, x)) + [int(t)] + [float(v) for v in pr]
                for x, t, pr in zip(X_te, y_te, proj)]
        return doc, header, rows

    if family == "bnn":
        k = _dense_classes(y)
        total_bits = sum(widths)
        bits_tr = _bit_expand(X_tr, widths)
        bits_te = _bit_expand(X_te, widths)
        clf = MLPClassifier(hidden_layer_sizes=(p["bnn_hidden"],),
                            max_iter=300, random_state=job.seed).fit(bits_tr, y_tr)
        hidden_rows = [_sign_row(clf.coefs_[0][:, j], total_bits)
                       for j in range(p["bnn_hidden"])]
        out_w = clf.coefs_[1]
        if out_w.shape[1] == 1:
            # Binary nets have one logistic output; its sign row votes for
            # class 1 and the complement votes for class 0.
            row1 = _sign_row(out_w[:, 0], p["bnn_hidden"])
            out_rows = [~row1 & ((1 << p["bnn_hidden"]) - 1), row1]
        else:
            out_rows = [_sign_row(out_w[:, c], p["bnn_hidden"])
                        for c in range(out_w.shape[1])]
        doc["n_classes"] = k
        doc["params"] = {"layers": [
            {"in_width": total_bits, "rows": hidden_rows},
            {"in_width": p["bnn_hidden"], "rows": out_rows},
        ]}
        return doc, header, classifier_rows(clf.predict(bits_te))

    raise ExportError(f"unsupported family {family!r}")  # pragma: no cover
