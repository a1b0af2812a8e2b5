"""Portable trained-model interchange format.

A model spec is a JSON document (``schema_version: 1``) carrying the feature
schema plus family-specific parameters for one of eleven supported model
families. Features are unsigned integers with declared bit widths; real-valued
datasets must be quantized by the exporter before a spec is produced.

The JSON layout is documented in ``docs/model-spec-schema.md``. Parsing
validates every structural invariant and raises :class:`SpecValidationError`
naming the offending path.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

from .errors import SpecValidationError

SCHEMA_VERSION = 1

FAMILIES = ("dt", "rf", "xgb", "iforest", "kmeans", "knn", "svm", "nb", "pca", "ae", "bnn")
TRANSFORM_FAMILIES = ("pca", "ae")
CLASSIFIER_FAMILIES = tuple(f for f in FAMILIES if f not in TRANSFORM_FAMILIES)
TREE_FAMILIES = ("dt", "rf", "xgb", "iforest")

# Euler-Mascheroni constant used by the isolation-forest anomaly threshold.
EULER_GAMMA = 0.5772156649


@dataclass(frozen=True)
class Feature:
    name: str
    bit_width: int

    @property
    def domain_max(self) -> int:
        return (1 << self.bit_width) - 1


@dataclass(frozen=True)
class FeatureSchema:
    features: tuple[Feature, ...]

    @property
    def n(self) -> int:
        return len(self.features)

    @property
    def bit_widths(self) -> tuple[int, ...]:
        return tuple(f.bit_width for f in self.features)

    @property
    def total_bits(self) -> int:
        return sum(f.bit_width for f in self.features)

    def domain_max(self, i: int) -> int:
        return self.features[i].domain_max

    def validate_vector(self, values: Sequence[int]) -> tuple[int, ...]:
        """Check a feature vector against the schema and return it as a tuple."""
        if len(values) != self.n:
            raise SpecValidationError(
                f"expected {self.n} feature values, got {len(values)}")
        out = []
        for i, v in enumerate(values):
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise SpecValidationError(
                    f"feature value must be an unsigned integer, got {v!r}",
                    path=f"values[{i}]")
            if v > self.features[i].domain_max:
                raise SpecValidationError(
                    f"value {v} exceeds {self.features[i].bit_width}-bit domain "
                    f"of feature {self.features[i].name!r}",
                    path=f"values[{i}]")
            out.append(v)
        return tuple(out)


@dataclass(frozen=True)
class TreeNode:
    """One node of a binary decision tree.

    Split nodes carry (feature_index, threshold, left, right); the left child
    is taken when ``x[feature_index] <= threshold``. Leaves carry exactly one
    payload depending on the family: ``label`` (dt/rf), ``leaf_value`` (xgb)
    or ``path_length`` (iforest).
    """

    kind: str  # "split" | "leaf"
    feature_index: int = 0
    threshold: int = 0
    left: int = 0
    right: int = 0
    label: Optional[int] = None
    leaf_value: Optional[float] = None
    path_length: Optional[float] = None

    @property
    def is_leaf(self) -> bool:
        return self.kind == "leaf"


@dataclass(frozen=True)
class Tree:
    nodes: tuple[TreeNode, ...]

    @property
    def root(self) -> TreeNode:
        return self.nodes[0]

    def depth(self) -> int:
        """Longest root-to-leaf edge count."""
        def walk(i: int) -> int:
            node = self.nodes[i]
            if node.is_leaf:
                return 0
            return 1 + max(walk(node.left), walk(node.right))
        return walk(0)

    def leaf_indices(self) -> list[int]:
        """Node indices of leaves, in node-array order (defines dense leaf ids)."""
        return [i for i, nd in enumerate(self.nodes) if nd.is_leaf]


@dataclass(frozen=True)
class TreeEnsembleParams:
    trees: tuple[Tree, ...]


@dataclass(frozen=True)
class IForestParams:
    trees: tuple[Tree, ...]
    n_instances: int
    # None selects the anomaly threshold constant derived from n_instances;
    # a float is an explicit mean-path-length threshold from the exporter.
    path_threshold: Optional[float] = None


@dataclass(frozen=True)
class XgbParams:
    trees: tuple[Tree, ...]
    base_scores: tuple[float, ...]  # length 1 (binary) or n_classes


@dataclass(frozen=True)
class Hyperplane:
    w: tuple[float, ...]
    b: float
    class_pair: tuple[int, int]  # (a, b) with a < b


@dataclass(frozen=True)
class SvmParams:
    hyperplanes: tuple[Hyperplane, ...]


@dataclass(frozen=True)
class Gaussian:
    mean: float
    variance: float


@dataclass(frozen=True)
class NbParams:
    priors: tuple[float, ...]
    # gaussians[feature][class]
    gaussians: tuple[tuple[Gaussian, ...], ...]


@dataclass(frozen=True)
class KmParams:
    centroids: tuple[tuple[float, ...], ...]


@dataclass(frozen=True)
class KnnPoint:
    x: tuple[int, ...]
    label: int


@dataclass(frozen=True)
class KnnParams:
    points: tuple[KnnPoint, ...]
    k: int


@dataclass(frozen=True)
class PcaParams:
    means: tuple[float, ...]
    components: tuple[tuple[float, ...], ...]  # n rows, out_dim columns


@dataclass(frozen=True)
class AeParams:
    weights: tuple[tuple[float, ...], ...]  # n rows, out_dim columns
    biases: tuple[float, ...]


@dataclass(frozen=True)
class BnnLayerParams:
    """One binarized layer. ``rows[j]`` is a bitmask over ``in_width`` input
    bits; a set bit stands for weight +1, a clear bit for -1."""
    in_width: int
    rows: tuple[int, ...]


@dataclass(frozen=True)
class BnnParams:
    layers: tuple[BnnLayerParams, ...]


@dataclass(frozen=True)
class ModelSpec:
    schema: FeatureSchema
    family: str
    params: Any
    n_classes: int = 0   # classifiers
    out_dim: int = 0     # pca / ae
    # Optional per-feature sorted unique values seen in training; required by
    # the lookup-based converters' unique entry-population mode.
    observed_values: Optional[tuple[tuple[int, ...], ...]] = None
    # Optional provenance: per-feature (min, max) used by the exporter's
    # min-max quantization. Not consulted at inference time.
    feature_scaling: Optional[tuple[tuple[float, float], ...]] = None

    @property
    def n(self) -> int:
        return self.schema.n

    @property
    def is_classifier(self) -> bool:
        return self.family in CLASSIFIER_FAMILIES


# ---------------------------------------------------------------------------
# Parsing helpers. Every extractor threads a JSON-path string so validation
# errors point at the exact offending element.
# ---------------------------------------------------------------------------

def _expect(cond: bool, message: str, path: str) -> None:
    if not cond:
        raise SpecValidationError(message, path=path)


def _get(obj: dict, key: str, path: str, required: bool = True, default: Any = None) -> Any:
    if key not in obj:
        _expect(not required, f"missing required key {key!r}", path)
        return default
    return obj[key]


def _as_int(v: Any, path: str) -> int:
    _expect(isinstance(v, int) and not isinstance(v, bool), "expected an integer", path)
    return v


def _as_uint(v: Any, path: str) -> int:
    iv = _as_int(v, path)
    _expect(iv >= 0, "expected a non-negative integer", path)
    return iv


def _as_real(v: Any, path: str) -> float:
    _expect(isinstance(v, (int, float)) and not isinstance(v, bool), "expected a number", path)
    fv = float(v)
    _expect(math.isfinite(fv), "number must be finite", path)
    return fv


def _as_list(v: Any, path: str, min_len: int = 0) -> list:
    _expect(isinstance(v, list), "expected a list", path)
    _expect(len(v) >= min_len, f"expected at least {min_len} elements", path)
    return v


def _as_dict(v: Any, path: str) -> dict:
    _expect(isinstance(v, dict), "expected an object", path)
    return v


def _real_vector(v: Any, length: int, path: str) -> tuple[float, ...]:
    lst = _as_list(v, path)
    _expect(len(lst) == length, f"expected {length} elements, got {len(lst)}", path)
    return tuple(_as_real(x, f"{path}[{i}]") for i, x in enumerate(lst))


def _parse_schema(obj: Any, path: str) -> FeatureSchema:
    d = _as_dict(obj, path)
    raw = _as_list(_get(d, "features", path), f"{path}.features", min_len=1)
    feats = []
    names = set()
    for i, f in enumerate(raw):
        fp = f"{path}.features[{i}]"
        fd = _as_dict(f, fp)
        name = _get(fd, "name", fp)
        _expect(isinstance(name, str) and name, "feature name must be a non-empty string", fp)
        _expect(name not in names, f"duplicate feature name {name!r}", fp)
        names.add(name)
        bits = _as_int(_get(fd, "bit_width", fp), f"{fp}.bit_width")
        _expect(1 <= bits <= 32, "bit_width must be in 1..32", f"{fp}.bit_width")
        feats.append(Feature(name=name, bit_width=bits))
    return FeatureSchema(features=tuple(feats))


def _parse_tree(obj: Any, schema: FeatureSchema, leaf_kind: str, n_classes: int,
                path: str) -> Tree:
    d = _as_dict(obj, path)
    raw = _as_list(_get(d, "nodes", path), f"{path}.nodes", min_len=1)
    nodes: list[TreeNode] = []
    for i, nd in enumerate(raw):
        np_ = f"{path}.nodes[{i}]"
        ndd = _as_dict(nd, np_)
        kind = _get(ndd, "kind", np_)
        if kind == "split":
            fi = _as_uint(_get(ndd, "feature_index", np_), f"{np_}.feature_index")
            _expect(fi < schema.n, f"feature_index {fi} out of range (n={schema.n})",
                    f"{np_}.feature_index")
            thr = _as_uint(_get(ndd, "threshold", np_), f"{np_}.threshold")
            _expect(thr <= schema.domain_max(fi),
                    f"threshold {thr} outside {schema.features[fi].bit_width}-bit domain",
                    f"{np_}.threshold")
            left = _as_uint(_get(ndd, "left", np_), f"{np_}.left")
            right = _as_uint(_get(ndd, "right", np_), f"{np_}.right")
            for childp, child in (("left", left), ("right", right)):
                _expect(child < len(raw), f"child index {child} out of range",
                        f"{np_}.{childp}")
            nodes.append(TreeNode(kind="split", feature_index=fi, threshold=thr,
                                  left=left, right=right))
        elif kind == "leaf":
            if leaf_kind == "label":
                label = _as_uint(_get(ndd, "label", np_), f"{np_}.label")
                _expect(label < n_classes, f"label {label} >= n_classes {n_classes}",
                        f"{np_}.label")
                nodes.append(TreeNode(kind="leaf", label=label))
            elif leaf_kind == "leaf_value":
                nodes.append(TreeNode(kind="leaf",
                                      leaf_value=_as_real(_get(ndd, "leaf_value", np_),
                                                          f"{np_}.leaf_value")))
            else:
                pl = _as_real(_get(ndd, "path_length", np_), f"{np_}.path_length")
                _expect(pl >= 0, "path_length must be non-negative", f"{np_}.path_length")
                nodes.append(TreeNode(kind="leaf", path_length=pl))
        else:
            raise SpecValidationError(f"unknown node kind {kind!r}", path=np_)

    # Reachability walk doubles as the acyclicity check: a well-formed tree
    # visits each node at most once starting from the root.
    seen: set[int] = set()
    stack = [0]
    while stack:
        i = stack.pop()
        _expect(i not in seen, f"node {i} reached twice (not a tree)", f"{path}.nodes")
        seen.add(i)
        nd = nodes[i]
        if not nd.is_leaf:
            stack.extend((nd.left, nd.right))
    return Tree(nodes=tuple(nodes))


def _parse_params(family: str, params: Any, schema: FeatureSchema, n_classes: int,
                  out_dim: int, path: str) -> Any:
    d = _as_dict(params, path)
    n = schema.n

    if family == "dt":
        return _parse_tree(_get(d, "tree", path), schema, "label", n_classes, f"{path}.tree")

    if family == "rf":
        raw = _as_list(_get(d, "trees", path), f"{path}.trees", min_len=1)
        return TreeEnsembleParams(trees=tuple(
            _parse_tree(t, schema, "label", n_classes, f"{path}.trees[{i}]")
            for i, t in enumerate(raw)))

    if family == "xgb":
        raw = _as_list(_get(d, "trees", path), f"{path}.trees", min_len=1)
        trees = tuple(_parse_tree(t, schema, "leaf_value", n_classes, f"{path}.trees[{i}]")
                      for i, t in enumerate(raw))
        want = 1 if n_classes == 2 else n_classes
        base = _real_vector(_get(d, "base_scores", path), want, f"{path}.base_scores")
        if n_classes > 2:
            _expect(len(trees) % n_classes == 0,
                    f"multi-class ensemble needs a multiple of {n_classes} trees "
                    "(tree i scores class i mod n_classes)", f"{path}.trees")
        return XgbParams(trees=trees, base_scores=base)

    if family == "iforest":
        raw = _as_list(_get(d, "trees", path), f"{path}.trees", min_len=1)
        trees = tuple(_parse_tree(t, schema, "path_length", n_classes, f"{path}.trees[{i}]")
                      for i, t in enumerate(raw))
        t_count = _as_int(_get(d, "n_instances", path), f"{path}.n_instances")
        _expect(t_count >= 2, "n_instances must be >= 2", f"{path}.n_instances")
        thr = _get(d, "path_threshold", path, required=False)
        if thr is not None:
            thr = _as_real(thr, f"{path}.path_threshold")
        return IForestParams(trees=trees, n_instances=t_count, path_threshold=thr)

    if family == "svm":
        raw = _as_list(_get(d, "hyperplanes", path), f"{path}.hyperplanes", min_len=1)
        m_want = n_classes * (n_classes - 1) // 2
        _expect(len(raw) == m_want,
                f"expected m={m_want} hyperplanes for {n_classes} classes, got {len(raw)}",
                f"{path}.hyperplanes")
        planes = []
        pairs = set()
        for i, h in enumerate(raw):
            hp = f"{path}.hyperplanes[{i}]"
            hd = _as_dict(h, hp)
            w = _real_vector(_get(hd, "w", hp), n, f"{hp}.w")
            b = _as_real(_get(hd, "b", hp), f"{hp}.b")
            pr = _as_list(_get(hd, "class_pair", hp), f"{hp}.class_pair")
            _expect(len(pr) == 2, "class_pair must have two elements", f"{hp}.class_pair")
            a, bb = (_as_uint(pr[0], f"{hp}.class_pair[0]"),
                     _as_uint(pr[1], f"{hp}.class_pair[1]"))
            _expect(a < bb < n_classes, "class_pair must be (a, b) with a < b < n_classes",
                    f"{hp}.class_pair")
            _expect((a, bb) not in pairs, f"duplicate class_pair ({a}, {bb})",
                    f"{hp}.class_pair")
            pairs.add((a, bb))
            planes.append(Hyperplane(w=w, b=b, class_pair=(a, bb)))
        return SvmParams(hyperplanes=tuple(planes))

    if family == "nb":
        priors = _real_vector(_get(d, "priors", path), n_classes, f"{path}.priors")
        _expect(all(p >= 0 for p in priors), "priors must be non-negative", f"{path}.priors")
        _expect(abs(sum(priors) - 1.0) <= 1e-9, "priors must sum to 1", f"{path}.priors")
        raw = _as_list(_get(d, "gaussians", path), f"{path}.gaussians")
        _expect(len(raw) == n, f"expected {n} per-feature entries", f"{path}.gaussians")
        gs = []
        for i, per_class in enumerate(raw):
            gp = f"{path}.gaussians[{i}]"
            lst = _as_list(per_class, gp)
            _expect(len(lst) == n_classes, f"expected {n_classes} class entries", gp)
            row = []
            for c, g in enumerate(lst):
                cp = f"{gp}[{c}]"
                gd = _as_dict(g, cp)
                mean = _as_real(_get(gd, "mean", cp), f"{cp}.mean")
                var = _as_real(_get(gd, "variance", cp), f"{cp}.variance")
                _expect(var > 0, "variance must be > 0", f"{cp}.variance")
                row.append(Gaussian(mean=mean, variance=var))
            gs.append(tuple(row))
        return NbParams(priors=priors, gaussians=tuple(gs))

    if family == "kmeans":
        raw = _as_list(_get(d, "centroids", path), f"{path}.centroids", min_len=1)
        cents = tuple(_real_vector(c, n, f"{path}.centroids[{i}]")
                      for i, c in enumerate(raw))
        return KmParams(centroids=cents)

    if family == "knn":
        raw = _as_list(_get(d, "points", path), f"{path}.points", min_len=1)
        pts = []
        for i, p in enumerate(raw):
            pp = f"{path}.points[{i}]"
            pd = _as_dict(p, pp)
            xs = _as_list(_get(pd, "x", pp), f"{pp}.x")
            _expect(len(xs) == n, f"expected {n} coordinates", f"{pp}.x")
            coords = []
            for j, v in enumerate(xs):
                uv = _as_uint(v, f"{pp}.x[{j}]")
                _expect(uv <= schema.domain_max(j), "coordinate outside feature domain",
                        f"{pp}.x[{j}]")
                coords.append(uv)
            label = _as_uint(_get(pd, "label", pp), f"{pp}.label")
            _expect(label < n_classes, f"label {label} >= n_classes", f"{pp}.label")
            pts.append(KnnPoint(x=tuple(coords), label=label))
        k = _as_int(_get(d, "k", path), f"{path}.k")
        _expect(1 <= k <= len(pts), "k must be in 1..len(points)", f"{path}.k")
        return KnnParams(points=tuple(pts), k=k)

    if family == "pca":
        means = _real_vector(_get(d, "means", path), n, f"{path}.means")
        raw = _as_list(_get(d, "components", path), f"{path}.components")
        _expect(len(raw) == n, f"components must have {n} rows", f"{path}.components")
        comps = tuple(_real_vector(r, out_dim, f"{path}.components[{i}]")
                      for i, r in enumerate(raw))
        return PcaParams(means=means, components=comps)

    if family == "ae":
        raw = _as_list(_get(d, "weights", path), f"{path}.weights")
        _expect(len(raw) == n, f"weights must have {n} rows", f"{path}.weights")
        w = tuple(_real_vector(r, out_dim, f"{path}.weights[{i}]")
                  for i, r in enumerate(raw))
        b = _real_vector(_get(d, "biases", path), out_dim, f"{path}.biases")
        return AeParams(weights=w, biases=b)

    if family == "bnn":
        raw = _as_list(_get(d, "layers", path), f"{path}.layers", min_len=1)
        layers = []
        expect_width = schema.total_bits
        for i, l in enumerate(raw):
            lp = f"{path}.layers[{i}]"
            ld = _as_dict(l, lp)
            in_w = _as_int(_get(ld, "in_width", lp), f"{lp}.in_width")
            _expect(in_w == expect_width,
                    f"layer in_width {in_w} does not chain (expected {expect_width})",
                    f"{lp}.in_width")
            rows_raw = _as_list(_get(ld, "rows", lp), f"{lp}.rows", min_len=1)
            rows = []
            for j, r in enumerate(rows_raw):
                rv = _as_uint(r, f"{lp}.rows[{j}]")
                _expect(rv < (1 << in_w), f"row bitmask wider than {in_w} bits",
                        f"{lp}.rows[{j}]")
                rows.append(rv)
            layers.append(BnnLayerParams(in_width=in_w, rows=tuple(rows)))
            expect_width = len(rows)
        _expect(len(layers[-1].rows) == n_classes,
                f"final layer has {len(layers[-1].rows)} outputs, expected n_classes={n_classes}",
                f"{path}.layers")
        return BnnParams(layers=tuple(layers))

    raise SpecValidationError(f"unknown family {family!r}", path="family")


def parse_model_dict(obj: Any) -> ModelSpec:
    """Validate an already-decoded model document and build a ModelSpec."""
    d = _as_dict(obj, "$")
    version = _get(d, "schema_version", "$")
    _expect(version == SCHEMA_VERSION, f"unsupported schema_version {version!r}",
            "schema_version")
    family = _get(d, "family", "$")
    _expect(family in FAMILIES, f"unknown family {family!r}", "family")
    schema = _parse_schema(_get(d, "schema", "$"), "schema")

    if family in TRANSFORM_FAMILIES:
        out_dim = _as_int(_get(d, "out_dim", "$"), "out_dim")
        _expect(out_dim >= 1, "out_dim must be >= 1", "out_dim")
        n_classes = 0
    else:
        n_classes = _as_int(_get(d, "n_classes", "$"), "n_classes")
        _expect(n_classes >= 1, "n_classes must be >= 1", "n_classes")
        out_dim = 0

    params = _parse_params(family, _get(d, "params", "$"), schema, n_classes,
                           out_dim, "params")

    observed = _get(d, "observed_values", "$", required=False)
    obs = None
    if observed is not None:
        lst = _as_list(observed, "observed_values")
        _expect(len(lst) == schema.n, f"expected {schema.n} per-feature lists",
                "observed_values")
        obs_rows = []
        for i, vals in enumerate(lst):
            vp = f"observed_values[{i}]"
            vlist = _as_list(vals, vp, min_len=1)
            row = []
            for j, v in enumerate(vlist):
                uv = _as_uint(v, f"{vp}[{j}]")
                _expect(uv <= schema.domain_max(i), "value outside feature domain",
                        f"{vp}[{j}]")
                row.append(uv)
            _expect(row == sorted(set(row)), "values must be sorted and unique", vp)
            obs_rows.append(tuple(row))
        obs = tuple(obs_rows)

    scaling = _get(d, "feature_scaling", "$", required=False)
    scl = None
    if scaling is not None:
        lst = _as_list(scaling, "feature_scaling")
        _expect(len(lst) == schema.n, f"expected {schema.n} entries", "feature_scaling")
        rows = []
        for i, s in enumerate(lst):
            sp = f"feature_scaling[{i}]"
            sd = _as_dict(s, sp)
            rows.append((_as_real(_get(sd, "min", sp), f"{sp}.min"),
                         _as_real(_get(sd, "max", sp), f"{sp}.max")))
        scl = tuple(rows)

    return ModelSpec(schema=schema, family=family, params=params,
                     n_classes=n_classes, out_dim=out_dim,
                     observed_values=obs, feature_scaling=scl)


def parse_model_spec(text: str) -> ModelSpec:
    """Parse and validate a model spec from JSON text."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecValidationError(f"malformed JSON: {e}") from e
    return parse_model_dict(obj)


# ---------------------------------------------------------------------------
# Serialization. ``parse(serialize(spec))`` is the identity on the canonical
# form; documents are emitted with sorted keys for byte stability.
# ---------------------------------------------------------------------------

def _tree_to_dict(tree: Tree, leaf_kind: str) -> dict:
    nodes = []
    for nd in tree.nodes:
        if nd.is_leaf:
            if leaf_kind == "label":
                nodes.append({"kind": "leaf", "label": nd.label})
            elif leaf_kind == "leaf_value":
                nodes.append({"kind": "leaf", "leaf_value": nd.leaf_value})
            else:
                nodes.append({"kind": "leaf", "path_length": nd.path_length})
        else:
            nodes.append({"kind": "split", "feature_index": nd.feature_index,
                          "threshold": nd.threshold, "left": nd.left, "right": nd.right})
    return {"nodes": nodes}


def model_to_dict(spec: ModelSpec) -> dict:
    """Canonical JSON-ready dict for a ModelSpec."""
    family = spec.family
    p = spec.params
    if family == "dt":
        params: dict[str, Any] = {"tree": _tree_to_dict(p, "label")}
    elif family == "rf":
        params = {"trees": [_tree_to_dict(t, "label") for t in p.trees]}
    elif family == "xgb":
        params = {"trees": [_tree_to_dict(t, "leaf_value") for t in p.trees],
                  "base_scores": list(p.base_scores)}
    elif family == "iforest":
        params = {"trees": [_tree_to_dict(t, "path_length") for t in p.trees],
                  "n_instances": p.n_instances}
        if p.path_threshold is not None:
            params["path_threshold"] = p.path_threshold
    elif family == "svm":
        params = {"hyperplanes": [
            {"w": list(h.w), "b": h.b, "class_pair": list(h.class_pair)}
            for h in p.hyperplanes]}
    elif family == "nb":
        params = {"priors": list(p.priors),
                  "gaussians": [[{"mean": g.mean, "variance": g.variance} for g in row]
                                for row in p.gaussians]}
    elif family == "kmeans":
        params = {"centroids": [list(c) for c in p.centroids]}
    elif family == "knn":
        params = {"points": [{"x": list(pt.x), "label": pt.label} for pt in p.points],
                  "k": p.k}
    elif family == "pca":
        params = {"means": list(p.means), "components": [list(r) for r in p.components]}
    elif family == "ae":
        params = {"weights": [list(r) for r in p.weights], "biases": list(p.biases)}
    elif family == "bnn":
        params = {"layers": [{"in_width": l.in_width, "rows": list(l.rows)}
                             for l in p.layers]}
    else:  # pragma: no cover
        raise SpecValidationError(f"unknown family {family!r}")

    doc: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "family": family,
        "schema": {"features": [{"name": f.name, "bit_width": f.bit_width}
                                for f in spec.schema.features]},
        "params": params,
    }
    if family in TRANSFORM_FAMILIES:
        doc["out_dim"] = spec.out_dim
    else:
        doc["n_classes"] = spec.n_classes
    if spec.observed_values is not None:
        doc["observed_values"] = [list(v) for v in spec.observed_values]
    if spec.feature_scaling is not None:
        doc["feature_scaling"] = [{"min": lo, "max": hi} for lo, hi in spec.feature_scaling]
    return doc


def serialize_model_spec(spec: ModelSpec) -> str:
    return json.dumps(model_to_dict(spec), sort_keys=True, indent=2) + "\n"


def iforest_threshold(params: IForestParams) -> float:
    """Mean-path-length anomaly threshold.

    Defaults to the average unsuccessful-search path length for ``t`` training
    instances, ``2(ln(t-1) + gamma) - 2(t-1)/t``; an input whose mean path
    length is at or below it is isolated unusually early and flags as anomaly.
    """
    if params.path_threshold is not None:
        return params.path_threshold
    t = params.n_instances
    return 2.0 * (math.log(t - 1) + EULER_GAMMA) - 2.0 * (t - 1) / t
