"""Shared encoding machinery for table construction.

Holds the fixed-point quantizer used by all lookup-based mappings, the
range-to-prefix decomposition behind ternary/LPM feature tables, and the
exact-to-ternary / exact-to-LPM table transformers.

Quantized words live in ``[0, 2**n_bits // n_terms)`` so that ``n_terms`` of
them always sum inside an ``n_bits``-wide accumulator. Signed quantities are
stored offset-binary (excess-K, K = half the codomain); because every
accumulator in a program adds the same number of words under one shared
quantizer, the excess cancels in any argmax/argmin comparison and the final
stage needs unsigned addition only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .errors import SpecValidationError


@dataclass(frozen=True)
class MatchKey:
    """One match field of a table entry.

    kind "exact": value only. kind "ternary": value plus mask, normalized so
    value & ~mask == 0. kind "lpm": value plus prefix_len (mask of that many
    high-order bits out of ``width``).
    """

    kind: str
    value: int
    mask: int = 0
    prefix_len: int = 0

    @staticmethod
    def exact(value: int) -> "MatchKey":
        return MatchKey(kind="exact", value=value)

    @staticmethod
    def ternary(value: int, mask: int) -> "MatchKey":
        return MatchKey(kind="ternary", value=value & mask, mask=mask)

    @staticmethod
    def lpm(value: int, prefix_len: int, width: int) -> "MatchKey":
        mask = prefix_mask(prefix_len, width)
        return MatchKey(kind="lpm", value=value & mask, prefix_len=prefix_len)

    def matches(self, key: int, width: int = 0) -> bool:
        if self.kind == "exact":
            return key == self.value
        if self.kind == "ternary":
            return (key & self.mask) == self.value
        return (key & prefix_mask(self.prefix_len, width)) == self.value


@dataclass(frozen=True)
class TableEntry:
    """One match row: keys, priority, action id, and action data words."""

    keys: tuple[MatchKey, ...]
    priority: int = 0
    action_id: int = 0
    action_data: tuple[int, ...] = ()


def prefix_mask(prefix_len: int, width: int) -> int:
    """Bit mask covering the ``prefix_len`` high-order bits of a ``width``-bit field."""
    if prefix_len == 0:
        return 0
    return ((1 << prefix_len) - 1) << (width - prefix_len)


@dataclass(frozen=True)
class QuantizerConfig:
    """Affine fixed-point map into the [0, 2**n_bits / n_terms) domain.

    ``scale``/``offset`` are chosen per model from the min/max of the values
    being quantized; ``signed`` selects the excess-K encoding.
    """

    n_bits: int
    n_terms: int
    signed: bool = False
    scale: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        if self.n_bits < 2:
            raise SpecValidationError("n_bits must be >= 2")
        if self.n_terms < 1:
            raise SpecValidationError("n_terms must be >= 1")
        if self.domain_size < 2:
            raise SpecValidationError(
                f"codomain 2^{self.n_bits}/{self.n_terms} has fewer than 2 values")

    @property
    def domain_size(self) -> int:
        return (1 << self.n_bits) // self.n_terms

    @property
    def excess(self) -> int:
        return self.domain_size // 2 if self.signed else 0

    @staticmethod
    def fit(values: Iterable[float], n_bits: int, n_terms: int,
            signed: bool = False, symmetric: bool = False) -> "QuantizerConfig":
        """Choose scale/offset so the observed value range spans the codomain.

        ``symmetric`` pins the offset at zero (word K encodes exactly 0.0),
        which keeps integer compare thresholds exact at the cost of codomain
        coverage for lopsided value ranges.
        """
        vals = list(values)
        if not vals:
            raise SpecValidationError("cannot fit a quantizer to no values")
        lo, hi = min(vals), max(vals)
        d = (1 << n_bits) // n_terms
        if signed:
            k = d // 2
            limit = min(k, d - 1 - k)
            if symmetric:
                bound = max(abs(lo), abs(hi))
                scale = limit / bound if bound > 0 else 1.0
                return QuantizerConfig(n_bits=n_bits, n_terms=n_terms, signed=True,
                                       scale=scale, offset=0.0)
            half_span = (hi - lo) / 2.0
            scale = limit / half_span if half_span > 0 else 1.0
            return QuantizerConfig(n_bits=n_bits, n_terms=n_terms, signed=True,
                                   scale=scale, offset=(lo + hi) / 2.0)
        span = hi - lo
        scale = (d - 1) / span if span > 0 else 1.0
        return QuantizerConfig(n_bits=n_bits, n_terms=n_terms, signed=False,
                               scale=scale, offset=lo)

    def quantize(self, v: float) -> int:
        word = round((v - self.offset) * self.scale) + self.excess
        if word < 0:
            return 0
        top = self.domain_size - 1
        return top if word > top else int(word)

    def dequantize(self, word: int) -> float:
        return (word - self.excess) / self.scale + self.offset

    def dequantize_sum(self, acc: int, n_words: int) -> float:
        """Invert a sum of ``n_words`` quantized words (biases included)."""
        return (acc - n_words * self.excess) / self.scale + n_words * self.offset


def quantize_map(v: float, cfg: QuantizerConfig) -> int:
    """Quantize one value; monotone non-decreasing in v and saturating."""
    return cfg.quantize(v)


def range_to_prefixes(lo: int, hi: int, width: int) -> list[tuple[int, int]]:
    """Decompose [lo, hi] into at most 2*width - 2 disjoint covering prefixes.

    Returns (value, prefix_len) pairs in ascending value order. Greedy: at
    each step take the largest aligned power-of-two block that starts at
    ``lo`` and stays inside the range.
    """
    if lo > hi:
        raise SpecValidationError(f"empty range [{lo}, {hi}]")
    if hi >= (1 << width):
        raise SpecValidationError(f"range end {hi} does not fit in {width} bits")
    out = []
    while lo <= hi:
        size = 1
        while size < (1 << width):
            nxt = size << 1
            if lo & (nxt - 1) or lo + nxt - 1 > hi:
                break
            size = nxt
        out.append((lo, width - size.bit_length() + 1))
        lo += size
    return out


def _runs_by_action(entries: Sequence[TableEntry]) -> list[tuple[int, int, TableEntry]]:
    """Collapse single-key exact entries into maximal runs of equal action.

    Returns (lo, hi, representative entry) per run, ascending. Duplicate keys
    with different actions are rejected.
    """
    by_value: dict[int, TableEntry] = {}
    for e in entries:
        if len(e.keys) != 1 or e.keys[0].kind != "exact":
            raise SpecValidationError("transformer input must be single-key exact entries")
        v = e.keys[0].value
        if v in by_value:
            prev = by_value[v]
            if (prev.action_id, prev.action_data) != (e.action_id, e.action_data):
                raise SpecValidationError(f"conflicting duplicate key {v}")
            continue
        by_value[v] = e
    runs = []
    for v in sorted(by_value):
        e = by_value[v]
        if runs and runs[-1][1] == v - 1 and \
                (runs[-1][2].action_id, runs[-1][2].action_data) == (e.action_id, e.action_data):
            runs[-1] = (runs[-1][0], v, runs[-1][2])
        else:
            runs.append((v, v, e))
    return runs


def assign_ternary_priorities(entries: list[TableEntry]) -> list[TableEntry]:
    """Unique priorities, higher wins: more-specific masks first, then insertion order."""
    def specificity(e: TableEntry) -> int:
        return sum(bin(k.mask).count("1") for k in e.keys)

    order = sorted(range(len(entries)), key=lambda i: (-specificity(entries[i]), i))
    n = len(entries)
    out = list(entries)
    for rank, i in enumerate(order):
        e = out[i]
        out[i] = TableEntry(keys=e.keys, priority=n - 1 - rank,
                            action_id=e.action_id, action_data=e.action_data)
    return out


def exact_to_ternary(entries: Sequence[TableEntry], width: int) -> list[TableEntry]:
    """Compress an exact table into an equivalent ternary table.

    Contiguous value runs with identical actions become prefix entries; keys
    absent from the input stay absent (they fall through to the table's
    default either way). Never emits more entries than it was given.
    """
    out = []
    for lo, hi, e in _runs_by_action(entries):
        for value, plen in range_to_prefixes(lo, hi, width):
            out.append(TableEntry(keys=(MatchKey.ternary(value, prefix_mask(plen, width)),),
                                  action_id=e.action_id, action_data=e.action_data))
    return assign_ternary_priorities(out)


def exact_to_lpm(entries: Sequence[TableEntry], width: int) -> list[TableEntry]:
    """Compress an exact table into an equivalent LPM table.

    The run decomposition already produces disjoint prefixes, so
    longest-prefix-wins semantics hold trivially; priority mirrors the prefix
    length for reporting purposes.
    """
    out = []
    for lo, hi, e in _runs_by_action(entries):
        for value, plen in range_to_prefixes(lo, hi, width):
            out.append(TableEntry(keys=(MatchKey.lpm(value, plen, width),),
                                  priority=plen,
                                  action_id=e.action_id, action_data=e.action_data))
    return out
