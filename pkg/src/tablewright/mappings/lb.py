"""Lookup-based converters.

Per-feature tables store precomputed, quantized intermediate terms of the
model's scoring function; the final stage is unsigned addition into per-class
(or per-output) accumulators followed by an arg-select. One quantizer is
fitted per program over every value that ends up in a table or a bias
constant, so the shared offset cancels in every comparison.

Entry population is either the full feature domain (default up to 16-bit
features) or the spec's observed unique values with a default action holding
the intermediate vector of the domain median.
"""

from __future__ import annotations

import math
from typing import Callable, Optional, Sequence

from ..config import RunConfig, label_bits
from ..errors import BudgetError, SpecValidationError
from ..ir import ActionDef, FieldDecl, LogicOp, OutputSpec, PipelineProgram, Table
from ..model_spec import ModelSpec
from ..table_utils import (
    MatchKey,
    QuantizerConfig,
    TableEntry,
    exact_to_lpm,
    exact_to_ternary,
)
from .common import feature_field_names, input_field_decls, width_for_count

# Log-probabilities more than this many log2 units below the largest one are
# floored before the quantizer is fitted, so Gaussian tails cannot crush the
# resolution of the useful range. Wide words have resolution to spare and
# skip the floor entirely.
LOG2_FLOOR_RANGE = 64.0
_FLOOR_EXEMPT_BITS = 24


def _domain_values(spec: ModelSpec, i: int) -> range:
    return range(spec.schema.domain_max(i) + 1)


def _population(spec: ModelSpec, cfg: RunConfig, i: int) -> Sequence[int]:
    """Feature values that get table entries; raises on impossible modes."""
    bits = spec.schema.features[i].bit_width
    mode = cfg.entry_mode
    if mode == "auto":
        mode = "full-domain" if bits <= 16 else "unique"
    if mode == "full-domain":
        if (1 << bits) > cfg.max_entries_per_table:
            raise BudgetError(
                f"feature {spec.schema.features[i].name!r} spans 2^{bits} values "
                f"(budget {cfg.max_entries_per_table}); use unique entry mode")
        return _domain_values(spec, i)
    if spec.observed_values is None:
        raise SpecValidationError(
            "unique entry mode needs observed_values in the model spec",
            path="observed_values")
    return spec.observed_values[i]


def _feature_word_tables(spec: ModelSpec, cfg: RunConfig, n_out: int,
                         word_fn: Callable[[int, int], tuple[int, ...]],
                         acc_bits: int):
    """One table per feature mapping values to ``n_out`` quantized words."""
    feat_names = feature_field_names(spec.schema)
    fields = list(input_field_decls(spec.schema))
    steps = []
    word_fields: list[list[str]] = []
    for i in range(spec.n):
        names = [f"{feat_names[i]}_ir{j}" for j in range(n_out)]
        for nm in names:
            fields.append(FieldDecl(name=nm, width=acc_bits))
        word_fields.append(names)

        entries = [TableEntry(keys=(MatchKey.exact(v),), action_data=word_fn(i, v))
                   for v in _population(spec, cfg, i)]
        median = spec.schema.domain_max(i) // 2
        default = (0, word_fn(i, median))
        width = spec.schema.features[i].bit_width
        match_kind = "exact"
        if cfg.lb_match == "ternary":
            entries = exact_to_ternary(entries, width)
            match_kind = "ternary"
        elif cfg.lb_match == "lpm":
            entries = exact_to_lpm(entries, width)
            match_kind = "lpm"
        steps.append(Table(
            name=f"feat_{feat_names[i]}", match_kind=match_kind,
            key_fields=(feat_names[i],),
            actions=(ActionDef(name="set_words", writes=tuple(names)),),
            entries=tuple(entries), default=default))
    return fields, steps, word_fields


def _quant_meta(q: QuantizerConfig) -> dict:
    return {"n_bits": q.n_bits, "n_terms": q.n_terms, "signed": q.signed,
            "scale": q.scale, "offset": q.offset, "excess": q.excess}


def map_svm_lb(spec: ModelSpec, cfg: Optional[RunConfig] = None) -> PipelineProgram:
    """One-vs-one linear SVM.

    Feature table i stores the quantized products of x_i against every
    hyperplane's weight; each hyperplane accumulator starts from its bias
    word, crosses the offset-binary zero threshold to cast a vote, and the
    label is the argmax of the vote counts.
    """
    cfg = cfg or RunConfig()
    if spec.family != "svm":
        raise SpecValidationError(f"map_svm_lb expects an svm spec, got {spec.family!r}")
    planes = spec.params.hyperplanes
    m = len(planes)
    n = spec.n
    bits = cfg.action_bits()
    n_terms = n + 1

    # Products are linear in the feature value, so the fit only needs the
    # population endpoints.
    fit_values = [h.b for h in planes]
    for i in range(n):
        pop = _population(spec, cfg, i)
        lo, hi = (pop[0], pop[-1]) if not isinstance(pop, range) else (0, pop[-1])
        for h in planes:
            fit_values.extend((h.w[i] * lo, h.w[i] * hi))
    quant = QuantizerConfig.fit(fit_values, bits, n_terms, signed=True, symmetric=True)
    # Snap the scale down to a power of two: per-term roundings then cancel
    # exactly for dyadic weights, so a point lying exactly on a hyperplane
    # sums to the offset-binary zero and votes like the reference predictor.
    if quant.scale > 0:
        quant = QuantizerConfig(
            n_bits=bits, n_terms=n_terms, signed=True,
            scale=2.0 ** math.floor(math.log2(quant.scale)), offset=0.0)

    def words(i: int, v: int) -> tuple[int, ...]:
        return tuple(quant.quantize(h.w[i] * v) for h in planes)

    fields, steps, word_fields = _feature_word_tables(spec, cfg, m, words, bits)

    # Zero in offset-binary: each accumulator sums n words plus a bias word.
    zero_sum = n_terms * quant.excess
    vote_bits_a: dict[int, list[str]] = {c: [] for c in range(spec.n_classes)}
    vote_bits_b: dict[int, list[str]] = {c: [] for c in range(spec.n_classes)}
    for j, h in enumerate(planes):
        acc = f"hp{j}_acc"
        fields.append(FieldDecl(name=acc, width=bits))
        srcs = tuple(word_fields[i][j] for i in range(n)) + (quant.quantize(h.b),)
        steps.append(LogicOp(kind="add", dst=acc, srcs=srcs, name=f"hp{j}_sum"))
        side = f"hp{j}_side"
        fields.append(FieldDecl(name=side, width=1))
        steps.append(LogicOp(kind="compare", dst=side, srcs=(acc, zero_sum),
                             cmp="ge", name=f"hp{j}_cmp"))
        vote_bits_a[h.class_pair[0]].append(side)
        vote_bits_b[h.class_pair[1]].append(side)

    count_fields = []
    count_w = width_for_count(m + 1)
    for c in range(spec.n_classes):
        terms: list = list(vote_bits_a[c])
        for side in vote_bits_b[c]:
            neg = f"not_{side}_c{c}"
            fields.append(FieldDecl(name=neg, width=1))
            steps.append(LogicOp(kind="compare", dst=neg, srcs=(side, 0), cmp="eq",
                                 name=f"neg_{side}_c{c}"))
            terms.append(neg)
        cname = f"votes_c{c}"
        fields.append(FieldDecl(name=cname, width=count_w))
        if terms:
            steps.append(LogicOp(kind="add", dst=cname, srcs=tuple(terms),
                                 name=f"count_c{c}"))
        else:
            steps.append(LogicOp(kind="add", dst=cname, srcs=(0,), name=f"count_c{c}"))
        count_fields.append(cname)

    fields.append(FieldDecl(name="label", width=label_bits(spec.n_classes)))
    steps.append(LogicOp(kind="argmax", dst="label", srcs=tuple(count_fields),
                         name="vote_argmax"))

    return PipelineProgram(
        name="svm_lb", family="svm", variant="lb",
        fields=tuple(fields), steps=tuple(steps), registers=(),
        output=OutputSpec(kind="label", fields=("label",)),
        meta={"n_classes": spec.n_classes, "hyperplanes": m,
              "quantizer": _quant_meta(quant)})


def _log2_gaussian(mean: float, variance: float, v: float) -> float:
    return -0.5 * math.log2(2.0 * math.pi * variance) \
        - ((v - mean) ** 2 / (2.0 * variance)) / math.log(2.0)


def map_nb_lb(spec: ModelSpec, cfg: Optional[RunConfig] = None) -> PipelineProgram:
    """Gaussian naive Bayes with log-domain lookup tables.

    Logarithms turn the product of per-feature likelihoods into a sum, so
    feature table i stores quantized log2 P(x_i | class) words and the final
    stage adds the prior word per class and arg-maxes.
    """
    cfg = cfg or RunConfig()
    if spec.family != "nb":
        raise SpecValidationError(f"map_nb_lb expects an nb spec, got {spec.family!r}")
    p = spec.params
    k = spec.n_classes
    n = spec.n
    bits = cfg.action_bits()
    n_terms = n + 1

    raw: dict[tuple[int, int, int], float] = {}
    for i in range(n):
        for v in _population(spec, cfg, i):
            for c in range(k):
                g = p.gaussians[i][c]
                raw[(i, v, c)] = _log2_gaussian(g.mean, g.variance, v)
        median = spec.schema.domain_max(i) // 2
        for c in range(k):
            g = p.gaussians[i][c]
            raw.setdefault((i, median, c), _log2_gaussian(g.mean, g.variance, median))
    log_priors = [math.log2(pr) if pr > 0 else -math.inf for pr in p.priors]

    finite = [x for x in list(raw.values()) + log_priors if math.isfinite(x)]
    vmax = max(finite)
    floor = -math.inf if bits >= _FLOOR_EXEMPT_BITS else vmax - LOG2_FLOOR_RANGE

    def clamp(x: float) -> float:
        return max(x, floor) if math.isfinite(floor) else (x if math.isfinite(x) else vmax - 1e9)

    values = [clamp(x) for x in raw.values()] + [clamp(x) for x in log_priors]
    quant = QuantizerConfig.fit(values, bits, n_terms, signed=True)

    def words(i: int, v: int) -> tuple[int, ...]:
        return tuple(quant.quantize(clamp(raw[(i, v, c)])) for c in range(k))

    fields, steps, word_fields = _feature_word_tables(spec, cfg, k, words, bits)

    acc_fields = []
    for c in range(k):
        acc = f"cls{c}_acc"
        fields.append(FieldDecl(name=acc, width=bits))
        srcs = tuple(word_fields[i][c] for i in range(n)) \
            + (quant.quantize(clamp(log_priors[c])),)
        steps.append(LogicOp(kind="add", dst=acc, srcs=srcs, name=f"cls{c}_sum"))
        acc_fields.append(acc)

    fields.append(FieldDecl(name="label", width=label_bits(k)))
    steps.append(LogicOp(kind="argmax", dst="label", srcs=tuple(acc_fields),
                         name="cls_argmax"))
    return PipelineProgram(
        name="nb_lb", family="nb", variant="lb",
        fields=tuple(fields), steps=tuple(steps), registers=(),
        output=OutputSpec(kind="label", fields=("label",)),
        meta={"n_classes": k, "quantizer": _quant_meta(quant),
              "log2_floor": None if not math.isfinite(floor) else floor})


def map_km_lb(spec: ModelSpec, cfg: Optional[RunConfig] = None) -> PipelineProgram:
    """K-means: tables store quantized squared per-feature differences.

    The square root of the true distance is monotone, so dropping it never
    changes the argmin; squares are precomputed because the final stage
    cannot multiply.
    """
    cfg = cfg or RunConfig()
    if spec.family != "kmeans":
        raise SpecValidationError(f"map_km_lb expects a kmeans spec, got {spec.family!r}")
    cents = spec.params.centroids
    k = len(cents)
    n = spec.n
    bits = cfg.action_bits()

    values = []
    for i in range(n):
        pop = _population(spec, cfg, i)
        lo, hi = (pop[0], pop[-1]) if not isinstance(pop, range) else (0, pop[-1])
        for c in cents:
            # Quadratic in v: extremes sit at the population endpoints or at
            # the vertex when the centroid coordinate is interior.
            candidates = [(lo - c[i]) ** 2, (hi - c[i]) ** 2]
            if lo <= c[i] <= hi:
                candidates.append(0.0)
            values.extend(candidates)
    quant = QuantizerConfig.fit(values, bits, n, signed=False)

    def words(i: int, v: int) -> tuple[int, ...]:
        return tuple(quant.quantize((v - c[i]) ** 2) for c in cents)

    fields, steps, word_fields = _feature_word_tables(spec, cfg, k, words, bits)

    acc_fields = []
    for j in range(k):
        acc = f"cent{j}_acc"
        fields.append(FieldDecl(name=acc, width=bits))
        steps.append(LogicOp(kind="add", dst=acc,
                             srcs=tuple(word_fields[i][j] for i in range(n)),
                             name=f"cent{j}_sum"))
        acc_fields.append(acc)

    fields.append(FieldDecl(name="label", width=label_bits(k)))
    steps.append(LogicOp(kind="argmin", dst="label", srcs=tuple(acc_fields),
                         name="dist_argmin"))
    return PipelineProgram(
        name="km_lb", family="kmeans", variant="lb",
        fields=tuple(fields), steps=tuple(steps), registers=(),
        output=OutputSpec(kind="label", fields=("label",)),
        meta={"n_classes": k, "quantizer": _quant_meta(quant)})


def _linear_map_program(spec: ModelSpec, cfg: RunConfig, name: str,
                        term: Callable[[int, int, int], float],
                        biases: Optional[Sequence[float]]) -> PipelineProgram:
    """Shared pca/ae shape: tables of per-output quantized terms, one adder
    per output dimension, dequantized vector output."""
    out_dim = spec.out_dim
    n = spec.n
    bits = cfg.action_bits()
    n_terms = n + (1 if biases is not None else 0)

    fit_values = list(biases) if biases is not None else []
    for i in range(n):
        pop = _population(spec, cfg, i)
        lo, hi = (pop[0], pop[-1]) if not isinstance(pop, range) else (0, pop[-1])
        for j in range(out_dim):
            fit_values.extend((term(i, lo, j), term(i, hi, j)))
    quant = QuantizerConfig.fit(fit_values, bits, n_terms, signed=True)

    def words(i: int, v: int) -> tuple[int, ...]:
        return tuple(quant.quantize(term(i, v, j)) for j in range(out_dim))

    fields, steps, word_fields = _feature_word_tables(spec, cfg, out_dim, words, bits)

    out_fields = []
    for j in range(out_dim):
        acc = f"out{j}_acc"
        fields.append(FieldDecl(name=acc, width=bits))
        srcs: tuple = tuple(word_fields[i][j] for i in range(n))
        if biases is not None:
            srcs = srcs + (quant.quantize(biases[j]),)
        steps.append(LogicOp(kind="add", dst=acc, srcs=srcs, name=f"out{j}_sum"))
        out_fields.append(acc)

    return PipelineProgram(
        name=name, family=spec.family, variant="lb",
        fields=tuple(fields), steps=tuple(steps), registers=(),
        output=OutputSpec(kind="vector", fields=tuple(out_fields),
                          dequant_sub=n_terms * quant.excess,
                          dequant_scale=quant.scale,
                          dequant_add=n_terms * quant.offset),
        meta={"out_dim": out_dim, "quantizer": _quant_meta(quant)})


def map_pca_lb(spec: ModelSpec, cfg: Optional[RunConfig] = None) -> PipelineProgram:
    """Principal components: move (subtract means) and map (project), with
    both steps folded into the per-feature lookup words."""
    cfg = cfg or RunConfig()
    if spec.family != "pca":
        raise SpecValidationError(f"map_pca_lb expects a pca spec, got {spec.family!r}")
    p = spec.params
    return _linear_map_program(
        spec, cfg, "pca_lb",
        term=lambda i, v, j: (v - p.means[i]) * p.components[i][j],
        biases=None)


def map_ae_lb(spec: ModelSpec, cfg: Optional[RunConfig] = None) -> PipelineProgram:
    """Single-layer autoencoder forward pass: x @ W + B."""
    cfg = cfg or RunConfig()
    if spec.family != "ae":
        raise SpecValidationError(f"map_ae_lb expects an ae spec, got {spec.family!r}")
    p = spec.params
    return _linear_map_program(
        spec, cfg, "ae_lb",
        term=lambda i, v, j: v * p.weights[i][j],
        biases=p.biases)
