import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tablewright.errors import SpecValidationError
from tablewright.model_spec import (
    model_to_dict,
    parse_model_dict,
    parse_model_spec,
    serialize_model_spec,
)
from tablewright.synth import random_model
import random

MINIMAL_DT = {
    "schema_version": 1,
    "family": "dt",
    "n_classes": 2,
    "schema": {"features": [{"name": "x0", "bit_width": 3}]},
    "params": {"tree": {"nodes": [
        {"kind": "split", "feature_index": 0, "threshold": 4, "left": 1, "right": 2},
        {"kind": "leaf", "label": 0},
        {"kind": "leaf", "label": 1},
    ]}},
}


def test_minimal_dt_parses():
    spec = parse_model_spec(json.dumps(MINIMAL_DT))
    assert spec.family == "dt"
    assert spec.n == 1
    assert spec.params.depth() == 1


def test_malformed_json_rejected():
    with pytest.raises(SpecValidationError, match="malformed JSON"):
        parse_model_spec("{not json")


def test_unknown_family_rejected():
    doc = dict(MINIMAL_DT, family="perceptron")
    with pytest.raises(SpecValidationError, match="unknown family"):
        parse_model_dict(doc)


def test_svm_hyperplane_count_enforced():
    # 3 classes need m = 3*2/2 = 3 one-vs-one hyperplanes.
    doc = {
        "schema_version": 1, "family": "svm", "n_classes": 3,
        "schema": {"features": [{"name": "a", "bit_width": 4}]},
        "params": {"hyperplanes": [
            {"w": [1.0], "b": 0.0, "class_pair": [0, 1]},
            {"w": [1.0], "b": 0.0, "class_pair": [0, 2]},
        ]},
    }
    with pytest.raises(SpecValidationError, match="expected m=3 hyperplanes"):
        parse_model_dict(doc)


def test_nb_zero_variance_rejected():
    doc = {
        "schema_version": 1, "family": "nb", "n_classes": 2,
        "schema": {"features": [{"name": "a", "bit_width": 4}]},
        "params": {"priors": [0.5, 0.5],
                   "gaussians": [[{"mean": 1.0, "variance": 0.0},
                                  {"mean": 2.0, "variance": 1.0}]]},
    }
    with pytest.raises(SpecValidationError, match="variance"):
        parse_model_dict(doc)


def test_errors_name_offending_path():
    doc = {
        "schema_version": 1, "family": "svm", "n_classes": 2,
        "schema": {"features": [{"name": "a", "bit_width": 4}]},
        "params": {"hyperplanes": [
            {"w": [1.0, 2.0], "b": 0.0, "class_pair": [0, 1]},
        ]},
    }
    with pytest.raises(SpecValidationError) as err:
        parse_model_dict(doc)
    assert "params.hyperplanes[0].w" in str(err.value)


def test_duplicate_feature_names_rejected():
    doc = dict(MINIMAL_DT)
    doc["schema"] = {"features": [{"name": "a", "bit_width": 3},
                                  {"name": "a", "bit_width": 4}]}
    with pytest.raises(SpecValidationError, match="duplicate feature name"):
        parse_model_dict(doc)


def test_tree_cycle_rejected():
    doc = dict(MINIMAL_DT)
    doc["params"] = {"tree": {"nodes": [
        {"kind": "split", "feature_index": 0, "threshold": 1, "left": 1, "right": 1},
        {"kind": "leaf", "label": 0},
    ]}}
    with pytest.raises(SpecValidationError, match="reached twice"):
        parse_model_dict(doc)


def test_threshold_outside_domain_rejected():
    doc = dict(MINIMAL_DT)
    doc["params"] = {"tree": {"nodes": [
        {"kind": "split", "feature_index": 0, "threshold": 9, "left": 1, "right": 2},
        {"kind": "leaf", "label": 0},
        {"kind": "leaf", "label": 1},
    ]}}
    with pytest.raises(SpecValidationError, match="threshold"):
        parse_model_dict(doc)


def test_bnn_width_chain_enforced():
    doc = {
        "schema_version": 1, "family": "bnn", "n_classes": 2,
        "schema": {"features": [{"name": "a", "bit_width": 4}]},
        "params": {"layers": [
            {"in_width": 4, "rows": [3, 5]},
            {"in_width": 3, "rows": [1, 2]},  # should be 2
        ]},
    }
    with pytest.raises(SpecValidationError, match="does not chain"):
        parse_model_dict(doc)


FAMILIES = ("dt", "rf", "xgb", "iforest", "kmeans", "knn", "svm", "nb",
            "pca", "ae", "bnn")


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(min_value=0, max_value=10_000),
       family=st.sampled_from(FAMILIES))
def test_serialize_parse_round_trip(seed, family):
    rng = random.Random(seed)
    spec = random_model(rng, family, widths=[4, 5], n_classes=3, depth=3, n_trees=2)
    text = serialize_model_spec(spec)
    again = parse_model_spec(text)
    assert model_to_dict(again) == model_to_dict(spec)
    assert serialize_model_spec(again) == text


def test_observed_values_validated():
    doc = dict(MINIMAL_DT)
    doc["observed_values"] = [[3, 1]]  # unsorted
    with pytest.raises(SpecValidationError, match="sorted"):
        parse_model_dict(doc)
    doc["observed_values"] = [[1, 3]]
    spec = parse_model_dict(doc)
    assert spec.observed_values == ((1, 3),)
