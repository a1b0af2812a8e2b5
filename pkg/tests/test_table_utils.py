import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tablewright.errors import SpecValidationError
from tablewright.table_utils import (
    MatchKey,
    QuantizerConfig,
    TableEntry,
    exact_to_lpm,
    exact_to_ternary,
    prefix_mask,
    quantize_map,
    range_to_prefixes,
)


# ---------------------------------------------------------------------------
# quantize_map
# ---------------------------------------------------------------------------

def test_quantize_endpoints_8bit_4term():
    cfg = QuantizerConfig.fit([0.0, 1.0], n_bits=8, n_terms=4)
    assert cfg.domain_size == 64
    assert quantize_map(0.0, cfg) == 0
    assert quantize_map(1.0, cfg) == 63


def test_quantize_saturates_outside_fit_range():
    cfg = QuantizerConfig.fit([0.0, 1.0], n_bits=8, n_terms=4)
    assert quantize_map(-5.0, cfg) == 0
    assert quantize_map(7.0, cfg) == 63


@settings(max_examples=200, deadline=None)
@given(v1=st.floats(-1e6, 1e6), v2=st.floats(-1e6, 1e6),
       signed=st.booleans())
def test_quantize_monotone(v1, v2, signed):
    cfg = QuantizerConfig.fit([-1e6, 1e6], n_bits=10, n_terms=3, signed=signed)
    lo, hi = sorted((v1, v2))
    assert quantize_map(lo, cfg) <= quantize_map(hi, cfg)


def test_sum_safety_at_saturation_corners():
    # Any 4 outputs of an 8-bit/4-term quantizer sum below 256, even the
    # saturated extremes.
    cfg = QuantizerConfig.fit([-3.0, 9.0], n_bits=8, n_terms=4, signed=True)
    corners = [quantize_map(v, cfg) for v in (-1e9, -3.0, 0.0, 9.0, 1e9)]
    for a in corners:
        for b in corners:
            for c in corners:
                for d in corners:
                    assert a + b + c + d < 256


def test_quantizer_rejects_degenerate_config():
    with pytest.raises(SpecValidationError):
        QuantizerConfig(n_bits=1, n_terms=1)
    with pytest.raises(SpecValidationError):
        QuantizerConfig(n_bits=4, n_terms=16)  # codomain collapses to one value


def test_dequantize_inverts_quantize_on_grid():
    cfg = QuantizerConfig.fit([-10.0, 10.0], n_bits=12, n_terms=2, signed=True)
    for v in (-10.0, -3.25, 0.0, 7.5, 10.0):
        w = cfg.quantize(v)
        assert cfg.dequantize(w) == pytest.approx(v, abs=1.5 / cfg.scale)


# ---------------------------------------------------------------------------
# range_to_prefixes
# ---------------------------------------------------------------------------

def test_prefixes_example_0_to_5():
    assert range_to_prefixes(0, 5, 3) == [(0, 1), (4, 2)]


def test_prefixes_full_range_is_single_zero_length():
    assert range_to_prefixes(0, 7, 3) == [(0, 0)]
    assert range_to_prefixes(0, (1 << 12) - 1, 12) == [(0, 0)]


def test_prefixes_singleton():
    assert range_to_prefixes(3, 3, 3) == [(3, 3)]


def test_prefixes_empty_range_rejected():
    with pytest.raises(SpecValidationError):
        range_to_prefixes(5, 4, 3)


def _covered(prefixes, width):
    seen = []
    for value, plen in prefixes:
        size = 1 << (width - plen)
        assert value % size == 0, "prefix value must be aligned"
        seen.extend(range(value, value + size))
    return seen


@pytest.mark.parametrize("width", [1, 2, 3, 4, 5])
def test_prefixes_partition_exhaustive_small_widths(width):
    top = (1 << width) - 1
    for lo in range(top + 1):
        for hi in range(lo, top + 1):
            cover = _covered(range_to_prefixes(lo, hi, width), width)
            assert cover == list(range(lo, hi + 1))
            assert len(range_to_prefixes(lo, hi, width)) <= max(1, 2 * width - 2)


def test_prefixes_partition_random_width_12():
    rnd = random.Random(99)
    for _ in range(200):
        lo = rnd.randrange(1 << 12)
        hi = rnd.randrange(lo, 1 << 12)
        cover = _covered(range_to_prefixes(lo, hi, 12), 12)
        assert cover == list(range(lo, hi + 1))


# ---------------------------------------------------------------------------
# exact -> ternary / lpm transformers
# ---------------------------------------------------------------------------

def exact_entries(mapping):
    return [TableEntry(keys=(MatchKey.exact(v),), action_id=a, action_data=(a,))
            for v, a in mapping.items()]


def lookup_ternary(entries, key):
    """Reference semantics: scan everything, highest priority wins."""
    best = None
    for e in entries:
        if (key & e.keys[0].mask) == e.keys[0].value:
            if best is None or e.priority > best.priority:
                best = e
    return best.action_id if best else None


def lookup_lpm(entries, key, width):
    best = None
    for e in entries:
        mask = prefix_mask(e.keys[0].prefix_len, width)
        if (key & mask) == e.keys[0].value:
            if best is None or e.keys[0].prefix_len > best.keys[0].prefix_len:
                best = e
    return best.action_id if best else None


def lookup_exact(entries, key):
    for e in entries:
        if e.keys[0].value == key:
            return e.action_id
    return None


def test_constant_table_compresses_to_single_entry():
    entries = exact_entries({v: 7 for v in range(8)})
    out = exact_to_ternary(entries, 3)
    assert len(out) == 1
    assert out[0].keys[0].mask == 0

    out_lpm = exact_to_lpm(entries, 3)
    assert len(out_lpm) == 1
    assert out_lpm[0].keys[0].prefix_len == 0


def test_two_run_table_equivalence():
    mapping = {v: (0 if v <= 4 else 1) for v in range(8)}
    entries = exact_entries(mapping)
    tern = exact_to_ternary(entries, 3)
    lpm = exact_to_lpm(entries, 3)
    assert len(tern) <= len(entries)
    for key in range(8):
        assert lookup_ternary(tern, key) == mapping[key]
        assert lookup_lpm(lpm, key, 3) == mapping[key]


def test_two_prefix_lpm_for_halved_domain():
    mapping = {v: (0 if v <= 3 else 1) for v in range(8)}
    lpm = exact_to_lpm(exact_entries(mapping), 3)
    assert sorted((e.keys[0].value, e.keys[0].prefix_len) for e in lpm) \
        == [(0, 1), (4, 1)]


def test_empty_input_gives_empty_output():
    assert exact_to_ternary([], 4) == []
    assert exact_to_lpm([], 4) == []


def test_conflicting_duplicates_rejected():
    entries = exact_entries({3: 1}) + exact_entries({3: 2})
    with pytest.raises(SpecValidationError, match="conflicting duplicate"):
        exact_to_ternary(entries, 3)


def test_partial_tables_preserve_misses():
    mapping = {1: 0, 2: 0, 6: 1}
    tern = exact_to_ternary(exact_entries(mapping), 3)
    lpm = exact_to_lpm(exact_entries(mapping), 3)
    for key in range(8):
        want = mapping.get(key)
        assert lookup_ternary(tern, key) == want
        assert lookup_lpm(lpm, key, 3) == want


def test_priorities_unique_and_specificity_ordered():
    mapping = {v: (0 if v <= 4 else 1) for v in range(8)}
    tern = exact_to_ternary(exact_entries(mapping), 3)
    prios = [e.priority for e in tern]
    assert len(set(prios)) == len(prios)
    by_prio = sorted(tern, key=lambda e: -e.priority)
    bits = [bin(e.keys[0].mask).count("1") for e in by_prio]
    assert bits == sorted(bits, reverse=True)


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 10_000), width=st.integers(2, 12),
       n_actions=st.integers(1, 4))
def test_compression_never_changes_lookup_semantics(seed, width, n_actions):
    rnd = random.Random(seed)
    domain = 1 << width
    # Random partial table with random action runs.
    mapping = {}
    v = 0
    while v < domain:
        run = min(domain - v, rnd.randint(1, max(1, domain // 4)))
        if rnd.random() < 0.8:
            action = rnd.randrange(n_actions)
            for u in range(v, v + run):
                mapping[u] = action
        v += run
    entries = exact_entries(mapping)
    tern = exact_to_ternary(entries, width)
    lpm = exact_to_lpm(entries, width)
    assert len(tern) <= max(1, len(entries))
    assert len(lpm) <= max(1, len(entries))
    step = max(1, domain // 256)
    keys = set(range(0, domain, step)) | set(mapping) | {0, domain - 1}
    for key in keys:
        want = mapping.get(key)
        assert lookup_ternary(tern, key) == want
        assert lookup_lpm(lpm, key, width) == want
