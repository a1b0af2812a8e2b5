import math
import random

import pytest

from tablewright.errors import SpecValidationError
from tablewright.model_spec import iforest_threshold, parse_model_dict
from tablewright.reference import (
    _nb_log_scores,
    argmax_low,
    bnn_forward,
    reference_predict,
    reference_transform,
)
from tablewright.synth import random_svm


def dt_spec(threshold=4, bits=3):
    return parse_model_dict({
        "schema_version": 1, "family": "dt", "n_classes": 2,
        "schema": {"features": [{"name": "x0", "bit_width": bits}]},
        "params": {"tree": {"nodes": [
            {"kind": "split", "feature_index": 0, "threshold": threshold,
             "left": 1, "right": 2},
            {"kind": "leaf", "label": 0},
            {"kind": "leaf", "label": 1},
        ]}},
    })


def test_dt_single_split():
    spec = dt_spec()
    assert reference_predict(spec, [3]) == 0  # left: x <= 4
    assert reference_predict(spec, [4]) == 0
    assert reference_predict(spec, [5]) == 1


def test_dt_rejects_out_of_domain_value():
    with pytest.raises(SpecValidationError):
        reference_predict(dt_spec(), [8])


def test_svm_tie_votes_lower_class():
    spec = parse_model_dict({
        "schema_version": 1, "family": "svm", "n_classes": 2,
        "schema": {"features": [{"name": "a", "bit_width": 4},
                                {"name": "b", "bit_width": 4}]},
        "params": {"hyperplanes": [
            {"w": [1.0, -1.0], "b": 0.0, "class_pair": [0, 1]}]},
    })
    # x = (5, 5) lies exactly on the hyperplane; the vote goes to class 0.
    assert reference_predict(spec, [5, 5]) == 0
    assert reference_predict(spec, [9, 5]) == 0
    assert reference_predict(spec, [5, 9]) == 1


def test_svm_vote_order_invariance():
    rng = random.Random(5)
    spec = random_svm(rng, [5, 5], n_classes=4)
    planes = list(spec.params.hyperplanes)
    rng.shuffle(planes)
    shuffled = parse_model_dict({
        "schema_version": 1, "family": "svm", "n_classes": 4,
        "schema": {"features": [{"name": f.name, "bit_width": f.bit_width}
                                for f in spec.schema.features]},
        "params": {"hyperplanes": [
            {"w": list(h.w), "b": h.b, "class_pair": list(h.class_pair)}
            for h in planes]},
    })
    for _ in range(300):
        x = [rng.randrange(32), rng.randrange(32)]
        assert reference_predict(spec, x) == reference_predict(shuffled, x)


def iforest_spec(path_lengths, t=128):
    nodes = [{"kind": "leaf", "path_length": pl} for pl in path_lengths]
    trees = [{"nodes": [n]} for n in nodes]
    return parse_model_dict({
        "schema_version": 1, "family": "iforest", "n_classes": 2,
        "schema": {"features": [{"name": "a", "bit_width": 3}]},
        "params": {"trees": trees, "n_instances": t},
    })


def test_iforest_threshold_t128():
    # 2*(ln(127) + gamma) - 2*127/128, evaluated once and frozen.
    spec = iforest_spec([2.0])
    assert iforest_threshold(spec.params) == pytest.approx(8.858430502717182, abs=1e-12)
    # Mean path 2.0 <= threshold: isolated early, anomaly.
    assert reference_predict(spec, [0]) == 1
    assert reference_predict(iforest_spec([12.0]), [0]) == 0


def test_iforest_explicit_threshold_overrides():
    spec = parse_model_dict({
        "schema_version": 1, "family": "iforest", "n_classes": 2,
        "schema": {"features": [{"name": "a", "bit_width": 3}]},
        "params": {"trees": [{"nodes": [{"kind": "leaf", "path_length": 5.0}]}],
                   "n_instances": 128, "path_threshold": 4.0},
    })
    assert iforest_threshold(spec.params) == 4.0
    assert reference_predict(spec, [0]) == 0


def test_nb_logscore_shift_invariance():
    spec = parse_model_dict({
        "schema_version": 1, "family": "nb", "n_classes": 3,
        "schema": {"features": [{"name": "a", "bit_width": 5}]},
        "params": {"priors": [0.2, 0.3, 0.5],
                   "gaussians": [[{"mean": 5, "variance": 4},
                                  {"mean": 15, "variance": 9},
                                  {"mean": 25, "variance": 16}]]},
    })
    for v in range(32):
        scores = _nb_log_scores(spec, (v,))
        shifted = [s + 123.456 for s in scores]
        assert argmax_low(scores) == argmax_low(shifted)


def test_kmeans_tie_breaks_low():
    spec = parse_model_dict({
        "schema_version": 1, "family": "kmeans", "n_classes": 2,
        "schema": {"features": [{"name": "a", "bit_width": 3}]},
        "params": {"centroids": [[2.0], [4.0]]},
    })
    assert reference_predict(spec, [3]) == 0  # equidistant
    assert reference_predict(spec, [4]) == 1


def test_knn_majority_and_distance_tiebreak():
    spec = parse_model_dict({
        "schema_version": 1, "family": "knn", "n_classes": 2,
        "schema": {"features": [{"name": "a", "bit_width": 4}]},
        "params": {"points": [{"x": [2], "label": 0}, {"x": [6], "label": 1},
                              {"x": [10], "label": 1}], "k": 3},
    })
    assert reference_predict(spec, [0]) == 1  # majority of all three points
    one_nn = parse_model_dict({
        "schema_version": 1, "family": "knn", "n_classes": 2,
        "schema": {"features": [{"name": "a", "bit_width": 4}]},
        "params": {"points": [{"x": [2], "label": 0}, {"x": [6], "label": 1}], "k": 1},
    })
    # x=4 is equidistant; the lower point index wins.
    assert reference_predict(one_nn, [4]) == 0


def test_transform_pca_centered_input_is_zero():
    spec = parse_model_dict({
        "schema_version": 1, "family": "pca", "out_dim": 2,
        "schema": {"features": [{"name": "a", "bit_width": 4},
                                {"name": "b", "bit_width": 4}]},
        "params": {"means": [3.0, 7.0],
                   "components": [[0.5, -0.5], [1.0, 2.0]]},
    })
    assert reference_transform(spec, [3, 7]) == [0.0, 0.0]


def test_transform_pca_hand_case():
    spec = parse_model_dict({
        "schema_version": 1, "family": "pca", "out_dim": 1,
        "schema": {"features": [{"name": "a", "bit_width": 4},
                                {"name": "b", "bit_width": 4}]},
        "params": {"means": [0.0, 0.0], "components": [[1.0], [1.0]]},
    })
    assert reference_transform(spec, [3, 4]) == [7.0]


def test_transform_ae_identity():
    spec = parse_model_dict({
        "schema_version": 1, "family": "ae", "out_dim": 2,
        "schema": {"features": [{"name": "a", "bit_width": 4},
                                {"name": "b", "bit_width": 4}]},
        "params": {"weights": [[1.0, 0.0], [0.0, 1.0]], "biases": [0.0, 0.0]},
    })
    assert reference_transform(spec, [9, 13]) == [9.0, 13.0]


def test_transform_wrong_family_raises():
    with pytest.raises(SpecValidationError):
        reference_transform(dt_spec(), [1])
    pca = parse_model_dict({
        "schema_version": 1, "family": "pca", "out_dim": 1,
        "schema": {"features": [{"name": "a", "bit_width": 3}]},
        "params": {"means": [0.0], "components": [[1.0]]},
    })
    with pytest.raises(SpecValidationError):
        reference_predict(pca, [1])


def bnn_spec(hidden_row):
    return parse_model_dict({
        "schema_version": 1, "family": "bnn", "n_classes": 2,
        "schema": {"features": [{"name": "a", "bit_width": 4}]},
        "params": {"layers": [
            {"in_width": 4, "rows": [hidden_row]},
            {"in_width": 1, "rows": [0b1, 0b0]},
        ]}})


def test_bnn_identical_vectors_sign_to_one():
    # X = 1010 against row 1010: xnor = 1111, popcount 4 >= 2, sign 1.
    spec = bnn_spec(0b1010)
    assert reference_predict(spec, [0b1010]) == 0  # final row 1 matches the set bit


def test_bnn_complement_signs_to_zero():
    spec = bnn_spec(0b0101)  # row = ~X: popcount 0, sign 0
    assert reference_predict(spec, [0b1010]) == 1


def test_bnn_final_layer_emits_popcounts():
    spec = bnn_spec(0b1010)
    assert bnn_forward(spec, [0b1010]) == [1, 0]


def test_bnn_sign_tie_maps_to_one():
    # Even width 4: popcount exactly 2 must sign to 1.
    spec = parse_model_dict({
        "schema_version": 1, "family": "bnn", "n_classes": 2,
        "schema": {"features": [{"name": "a", "bit_width": 4}]},
        "params": {"layers": [
            {"in_width": 4, "rows": [0b1100]},
            {"in_width": 1, "rows": [1, 0]},
        ]}})
    # X = 1010: xnor(1010, 1100) = 1001 -> popcount 2 == width/2 -> sign 1.
    assert reference_predict(spec, [0b1010]) == 0


def test_reference_predict_deterministic(rng):
    spec = random_svm(rng, [6, 6], n_classes=3)
    xs = [[rng.randrange(64), rng.randrange(64)] for _ in range(100)]
    first = [reference_predict(spec, x) for x in xs]
    second = [reference_predict(spec, x) for x in xs]
    assert first == second
