"""Shared helpers for the test suite."""

from __future__ import annotations

import itertools
import random
from typing import Iterator, Sequence

import pytest

from tablewright.ir import PipelineProgram, Simulator
from tablewright.model_spec import ModelSpec
from tablewright.reference import reference_predict


def iter_domain(widths: Sequence[int]) -> Iterator[tuple[int, ...]]:
    return itertools.product(*(range(1 << w) for w in widths))


def exhaustive_disagreements(spec: ModelSpec, program: PipelineProgram,
                             limit: int = 5) -> list:
    """Feature vectors where simulate() and the oracle differ (up to limit)."""
    sim = Simulator(program)
    bad = []
    for x in iter_domain(spec.schema.bit_widths):
        if sim.run(x) != reference_predict(spec, x):
            bad.append(x)
            if len(bad) >= limit:
                break
    return bad


def sampled_agreement(spec: ModelSpec, program: PipelineProgram,
                      inputs: Sequence[Sequence[int]]) -> float:
    sim = Simulator(program)
    hits = sum(1 for x in inputs if sim.run(x) == reference_predict(spec, x))
    return hits / len(inputs)


@pytest.fixture
def rng() -> random.Random:
    return random.Random(0xC0FFEE)
