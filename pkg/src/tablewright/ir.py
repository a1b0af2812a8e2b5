"""Target-agnostic match/action intermediate representation.

A program is a straight-line sequence of steps (tables and logic ops) over
declared metadata fields, plus constant register banks. Execution semantics
are those of a single pipeline pass: fields initialize to zero, feature
fields are populated from the input vector, steps run in declared order, and
the declared output fields carry the result.

``check_program`` returns structural diagnostics as data, ``stage_schedule``
levels the def-use DAG (independent steps share a stage), and ``simulate``
is the deterministic reference executor that every converter is verified
against.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Any, Optional, Sequence, Union

from .errors import ProgramError, SpecValidationError
from .table_utils import MatchKey, TableEntry, prefix_mask

IR_VERSION = 1

# Logic operand: integer literal, field name, or (register name, cell index).
Operand = Union[int, str, tuple]

OP_KINDS = ("add", "sub", "compare", "xnor", "popcount", "sign",
            "argmax", "argmin", "select", "concat")
MATCH_KINDS = ("exact", "ternary", "lpm")


@dataclass(frozen=True)
class FieldDecl:
    name: str
    width: int
    is_input: bool = False


@dataclass(frozen=True)
class ActionDef:
    name: str
    writes: tuple[str, ...] = ()


@dataclass(frozen=True)
class Table:
    name: str
    match_kind: str
    key_fields: tuple[str, ...]
    actions: tuple[ActionDef, ...]
    entries: tuple[TableEntry, ...]
    default: Optional[tuple[int, tuple[int, ...]]] = None  # (action_id, action_data)

    def written_fields(self) -> set[str]:
        out = set()
        for a in self.actions:
            out.update(a.writes)
        return out


@dataclass(frozen=True)
class LogicOp:
    """One arithmetic/bit step.

    kinds: add (dst = sum of srcs), sub (dst = srcs[0] - srcs[1], modular over
    dst width), compare (dst = 1 if cmp holds; cmp in le/ge/eq), xnor (over
    ``width`` bits), popcount, sign (dst = 1 if srcs[0] >= threshold), argmax
    and argmin (index of best src, ties to lowest), select (dst = value of
    srcs[1 + srcs[0]]), concat (srcs packed MSB-first with ``widths``).
    """

    kind: str
    dst: str
    srcs: tuple[Operand, ...]
    name: str = ""
    cmp: str = ""
    width: int = 0
    threshold: int = 0
    widths: tuple[int, ...] = ()


Step = Union[Table, LogicOp]


@dataclass(frozen=True)
class Register:
    name: str
    width: int
    values: tuple[int, ...]


@dataclass(frozen=True)
class OutputSpec:
    """Declared program result.

    kind "label": single field holding the class label. kind "vector": one
    accumulator field per output dimension; the real-valued result is
    ``(word - dequant_sub) / dequant_scale + dequant_add``.
    """

    kind: str
    fields: tuple[str, ...]
    dequant_sub: float = 0.0
    dequant_scale: float = 1.0
    dequant_add: float = 0.0


@dataclass(frozen=True)
class PipelineProgram:
    name: str
    family: str
    variant: str
    fields: tuple[FieldDecl, ...]
    steps: tuple[Step, ...]
    registers: tuple[Register, ...]
    output: OutputSpec
    meta: dict = field(default_factory=dict)

    @property
    def tables(self) -> list[Table]:
        return [s for s in self.steps if isinstance(s, Table)]

    @property
    def ops(self) -> list[LogicOp]:
        return [s for s in self.steps if isinstance(s, LogicOp)]

    def field_width(self, name: str) -> int:
        for f in self.fields:
            if f.name == name:
                return f.width
        raise ProgramError(f"undeclared field {name!r}")

    def input_fields(self) -> list[FieldDecl]:
        return [f for f in self.fields if f.is_input]


def _step_name(step: Step) -> str:
    if isinstance(step, Table):
        return f"table {step.name!r}"
    return f"op {step.name or step.kind!r}"


def _op_reads(op: LogicOp) -> set[str]:
    return {s for s in op.srcs if isinstance(s, str)}


def _step_reads(step: Step) -> set[str]:
    if isinstance(step, Table):
        return set(step.key_fields)
    return _op_reads(step)


def _step_writes(step: Step) -> set[str]:
    if isinstance(step, Table):
        return step.written_fields()
    return {step.dst}


def dependency_edges(p: PipelineProgram) -> list[tuple[int, int]]:
    """Def-use edges between step indices.

    Read-after-write edges connect every writer of a field to every reader of
    it; write-after-write and write-after-read ordering edges follow the
    declared sequence. A malformed program can make this graph cyclic, which
    check_program reports.
    """
    n = len(p.steps)
    reads = [_step_reads(s) for s in p.steps]
    writes = [_step_writes(s) for s in p.steps]
    edges = set()
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if writes[i] & reads[j]:
                edges.add((i, j))
    for fname in {f.name for f in p.fields}:
        writers = [i for i in range(n) if fname in writes[i]]
        readers = [i for i in range(n) if fname in reads[i]]
        for a, b in zip(writers, writers[1:]):
            edges.add((a, b))
        for r in readers:
            for w in writers:
                if w > r:
                    edges.add((r, w))
    return sorted(edges)


def check_program(p: PipelineProgram) -> list[str]:
    """Structural diagnostics; an empty list means the program is well formed."""
    diags: list[str] = []
    declared: dict[str, FieldDecl] = {}
    for f in p.fields:
        if f.name in declared:
            diags.append(f"duplicate field declaration {f.name!r}")
        declared[f.name] = f
    regs = {r.name: r for r in p.registers}
    for r in p.registers:
        for i, v in enumerate(r.values):
            if v < 0 or v >= (1 << r.width):
                diags.append(f"register {r.name!r}[{i}] value {v} exceeds {r.width} bits")

    seen_tables = set()
    for step in p.steps:
        if isinstance(step, Table):
            diags.extend(_check_table(step, declared))
            if step.name in seen_tables:
                diags.append(f"duplicate table name {step.name!r}")
            seen_tables.add(step.name)
        else:
            diags.extend(_check_op(step, declared, regs))

    # Output fields must exist.
    for fname in p.output.fields:
        if fname not in declared:
            diags.append(f"output references undeclared field {fname!r}")

    # Cycle check via leveling; report once.
    try:
        _level_steps(p)
    except ProgramError as e:
        diags.append(str(e))
    return diags


def _check_table(t: Table, declared: dict[str, FieldDecl]) -> list[str]:
    diags = []
    if t.match_kind not in MATCH_KINDS:
        diags.append(f"table {t.name!r}: unknown match kind {t.match_kind!r}")
        return diags
    widths = []
    for k in t.key_fields:
        if k not in declared:
            diags.append(f"table {t.name!r}: undeclared key field {k!r}")
            widths.append(0)
        else:
            widths.append(declared[k].width)
    if t.match_kind == "lpm" and len(t.key_fields) != 1:
        diags.append(f"table {t.name!r}: lpm tables take exactly one key field")
    for a in t.actions:
        for w in a.writes:
            if w not in declared:
                diags.append(f"table {t.name!r}: action {a.name!r} writes undeclared field {w!r}")

    seen_exact = set()
    seen_prio = set()
    for ei, e in enumerate(t.entries):
        where = f"table {t.name!r} entry {ei}"
        if len(e.keys) != len(t.key_fields):
            diags.append(f"{where}: {len(e.keys)} keys for {len(t.key_fields)} key fields")
            continue
        for ki, mk in enumerate(e.keys):
            w = widths[ki]
            if mk.kind != t.match_kind:
                diags.append(f"{where}: key {ki} kind {mk.kind!r} != table kind")
            if mk.value >= (1 << w):
                diags.append(f"{where}: key {ki} value {mk.value} wider than field "
                             f"{t.key_fields[ki]!r} ({w} bits)")
            if mk.kind == "ternary":
                if mk.mask >= (1 << w):
                    diags.append(f"{where}: key {ki} mask wider than {w} bits")
                if mk.value & ~mk.mask:
                    diags.append(f"{where}: key {ki} not normalized (value & ~mask != 0)")
            if mk.kind == "lpm" and mk.prefix_len > w:
                diags.append(f"{where}: prefix_len {mk.prefix_len} > width {w}")
        if e.action_id >= len(t.actions):
            diags.append(f"{where}: action id {e.action_id} out of range")
        elif len(e.action_data) != len(t.actions[e.action_id].writes):
            diags.append(f"{where}: {len(e.action_data)} action words for "
                         f"{len(t.actions[e.action_id].writes)} destinations")
        if t.match_kind == "exact":
            kv = tuple(k.value for k in e.keys)
            if kv in seen_exact:
                diags.append(f"{where}: duplicate exact key {kv}")
            seen_exact.add(kv)
        if t.match_kind == "ternary":
            if e.priority in seen_prio:
                diags.append(f"{where}: duplicate ternary priority {e.priority}")
            seen_prio.add(e.priority)
    if t.default is not None:
        aid, data = t.default
        if aid >= len(t.actions):
            diags.append(f"table {t.name!r}: default action id {aid} out of range")
        elif len(data) != len(t.actions[aid].writes):
            diags.append(f"table {t.name!r}: default action data arity mismatch")
    return diags


def _check_op(op: LogicOp, declared: dict[str, FieldDecl], regs: dict[str, Register]) -> list[str]:
    diags = []
    where = _step_name(op)
    if op.kind not in OP_KINDS:
        diags.append(f"{where}: unknown op kind {op.kind!r}")
        return diags
    if op.dst not in declared:
        diags.append(f"{where}: writes undeclared field {op.dst!r}")
    for s in op.srcs:
        if isinstance(s, str):
            if s not in declared:
                diags.append(f"{where}: reads undeclared field {s!r}")
        elif isinstance(s, tuple):
            rname, idx = s
            if rname not in regs:
                diags.append(f"{where}: reads undeclared register {rname!r}")
            elif not (0 <= idx < len(regs[rname].values)):
                diags.append(f"{where}: register {rname!r} index {idx} out of range")
    if op.kind == "compare" and op.cmp not in ("le", "ge", "eq"):
        diags.append(f"{where}: unknown comparison {op.cmp!r}")
    if op.kind == "select" and len(op.srcs) < 2:
        diags.append(f"{where}: select needs an index source and at least one input")
    if op.kind == "concat" and len(op.widths) != len(op.srcs):
        diags.append(f"{where}: concat needs one width per source")
    return diags


@dataclass(frozen=True)
class StageSchedule:
    stage_of: tuple[int, ...]  # per step index
    total: int

    def tables_per_stage(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for s in self.stage_of:
            out[s] = out.get(s, 0) + 1
        return out


def _level_steps(p: PipelineProgram) -> list[int]:
    n = len(p.steps)
    preds: list[set[int]] = [set() for _ in range(n)]
    succs: list[set[int]] = [set() for _ in range(n)]
    for a, b in dependency_edges(p):
        preds[b].add(a)
        succs[a].add(b)
    level = [0] * n
    remaining = [len(pr) for pr in preds]
    ready = [i for i in range(n) if remaining[i] == 0]
    done = 0
    while ready:
        i = ready.pop()
        done += 1
        for j in succs[i]:
            level[j] = max(level[j], level[i] + 1)
            remaining[j] -= 1
            if remaining[j] == 0:
                ready.append(j)
    if done != n:
        stuck = [_step_name(p.steps[i]) for i in range(n) if remaining[i] > 0]
        raise ProgramError(f"dependency cycle involving {', '.join(stuck)}")
    return level


def stage_schedule(p: PipelineProgram) -> StageSchedule:
    """Greedy longest-path leveling; dependent steps never share a stage."""
    if not p.steps:
        return StageSchedule(stage_of=(), total=0)
    level = _level_steps(p)
    return StageSchedule(stage_of=tuple(level), total=max(level) + 1)


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

class _CompiledTable:
    """Per-table match structure built once per Simulator.

    Ternary entries are grouped by mask vector (tuple-space style), so a
    lookup probes one dict per distinct mask combination instead of scanning
    every entry. Semantics are identical to a priority-ordered linear scan.
    """

    __slots__ = ("table", "kind", "exact", "groups", "lpm_by_len", "table_key_width")

    def __init__(self, table: Table):
        self.table = table
        self.kind = table.match_kind
        self.table_key_width = 0  # patched by Simulator for lpm tables
        if self.kind == "exact":
            self.exact = {tuple(k.value for k in e.keys): (e.action_id, e.action_data)
                          for e in table.entries}
        elif self.kind == "ternary":
            grouped: dict[tuple[int, ...], dict] = {}
            for e in table.entries:
                masks = tuple(k.mask for k in e.keys)
                bucket = grouped.setdefault(masks, {})
                vals = tuple(k.value for k in e.keys)
                prev = bucket.get(vals)
                if prev is None or e.priority > prev[0]:
                    bucket[vals] = (e.priority, e.action_id, e.action_data)
            self.groups = sorted(grouped.items())
        else:
            by_len: dict[int, dict[int, tuple]] = {}
            for e in table.entries:
                k = e.keys[0]
                by_len.setdefault(k.prefix_len, {})[k.value] = (e.action_id, e.action_data)
            self.lpm_by_len = sorted(by_len.items(), reverse=True)

    def lookup(self, key: tuple[int, ...]) -> Optional[tuple[int, tuple[int, ...]]]:
        if self.kind == "exact":
            return self.exact.get(key)
        if self.kind == "ternary":
            best = None
            for masks, bucket in self.groups:
                masked = tuple(v & m for v, m in zip(key, masks))
                hit = bucket.get(masked)
                if hit is not None and (best is None or hit[0] > best[0]):
                    best = hit
            if best is not None:
                return (best[1], best[2])
            return None
        v = key[0]
        width = self.table_key_width
        for plen, bucket in self.lpm_by_len:
            hit = bucket.get(v & prefix_mask(plen, width))
            if hit is not None:
                return hit
        return None


class Simulator:
    """Reusable executor for one program; reentrant across calls."""

    def __init__(self, program: PipelineProgram, track_defaults: bool = False):
        diags = check_program(program)
        if diags:
            raise ProgramError("program failed checks: " + "; ".join(diags[:5]))
        self.program = program
        self.inputs = [f.name for f in program.input_fields()]
        self.registers = {r.name: r.values for r in program.registers}
        self.track_defaults = track_defaults
        self.default_hits: dict[str, int] = {}
        self.lookups: dict[str, int] = {}
        self._steps = []
        for step in program.steps:
            if isinstance(step, Table):
                ct = _CompiledTable(step)
                if step.match_kind == "lpm":
                    ct.table_key_width = program.field_width(step.key_fields[0])
                self._steps.append(("t", ct))
            else:
                self._steps.append(("o", step))
        self._widths = {f.name: f.width for f in program.fields}

    def _read(self, ctx: dict, src: Operand) -> int:
        if isinstance(src, str):
            return ctx.get(src, 0)
        if isinstance(src, int):
            return src
        name, idx = src
        return self.registers[name][idx]

    def _exec_op(self, ctx: dict, op: LogicOp) -> None:
        kind = op.kind
        if kind == "add":
            ctx[op.dst] = sum(self._read(ctx, s) for s in op.srcs)
        elif kind == "sub":
            width = self._widths[op.dst]
            ctx[op.dst] = (self._read(ctx, op.srcs[0]) - self._read(ctx, op.srcs[1])) \
                & ((1 << width) - 1)
        elif kind == "compare":
            a = self._read(ctx, op.srcs[0])
            b = self._read(ctx, op.srcs[1])
            ok = a <= b if op.cmp == "le" else a >= b if op.cmp == "ge" else a == b
            ctx[op.dst] = 1 if ok else 0
        elif kind == "xnor":
            a = self._read(ctx, op.srcs[0])
            b = self._read(ctx, op.srcs[1])
            ctx[op.dst] = ~(a ^ b) & ((1 << op.width) - 1)
        elif kind == "popcount":
            ctx[op.dst] = bin(self._read(ctx, op.srcs[0])).count("1")
        elif kind == "sign":
            ctx[op.dst] = 1 if self._read(ctx, op.srcs[0]) >= op.threshold else 0
        elif kind in ("argmax", "argmin"):
            vals = [self._read(ctx, s) for s in op.srcs]
            best_i = 0
            for i in range(1, len(vals)):
                if (vals[i] > vals[best_i]) if kind == "argmax" else (vals[i] < vals[best_i]):
                    best_i = i
            ctx[op.dst] = best_i
        elif kind == "select":
            idx = self._read(ctx, op.srcs[0])
            if not (0 <= idx < len(op.srcs) - 1):
                raise ProgramError(f"select index {idx} out of range in {op.name or op.kind}")
            ctx[op.dst] = self._read(ctx, op.srcs[1 + idx])
        elif kind == "concat":
            acc = 0
            for s, w in zip(op.srcs, op.widths):
                acc = (acc << w) | (self._read(ctx, s) & ((1 << w) - 1))
            ctx[op.dst] = acc
        else:  # pragma: no cover
            raise ProgramError(f"unknown op kind {kind!r}")

    def run_context(self, x: Sequence[int]) -> dict:
        if len(x) != len(self.inputs):
            raise SpecValidationError(
                f"expected {len(self.inputs)} feature values, got {len(x)}")
        ctx: dict[str, int] = dict(zip(self.inputs, x))
        for tag, step in self._steps:
            if tag == "o":
                self._exec_op(ctx, step)
                continue
            table = step.table
            key = tuple(ctx.get(f, 0) for f in table.key_fields)
            if self.track_defaults:
                self.lookups[table.name] = self.lookups.get(table.name, 0) + 1
            hit = step.lookup(key)
            if hit is None:
                if table.default is None:
                    raise ProgramError(
                        f"table {table.name!r} missed key {key} with no default action")
                if self.track_defaults:
                    self.default_hits[table.name] = self.default_hits.get(table.name, 0) + 1
                aid, data = table.default
            else:
                aid, data = hit
            action = table.actions[aid]
            for fname, word in zip(action.writes, data):
                ctx[fname] = word
        return ctx

    def run(self, x: Sequence[int]):
        """Label for label programs; dequantized float vector for vector programs."""
        ctx = self.run_context(x)
        out = self.program.output
        if out.kind == "label":
            return ctx.get(out.fields[0], 0)
        return [(ctx.get(f, 0) - out.dequant_sub) / out.dequant_scale + out.dequant_add
                for f in out.fields]

    def run_words(self, x: Sequence[int]) -> list[int]:
        """Raw output field words without dequantization."""
        ctx = self.run_context(x)
        return [ctx.get(f, 0) for f in self.program.output.fields]


def simulate(p: PipelineProgram, x: Sequence[int]):
    """One-shot execution; builds a Simulator per call, so prefer the
    Simulator class when sweeping many inputs."""
    return Simulator(p).run(x)


# ---------------------------------------------------------------------------
# Canonical JSON serialization (ir_version 1)
# ---------------------------------------------------------------------------

def _operand_to_json(s: Operand) -> dict:
    if isinstance(s, str):
        return {"field": s}
    if isinstance(s, int):
        return {"const": s}
    return {"reg": s[0], "index": s[1]}


def _operand_from_json(d: dict) -> Operand:
    if "field" in d:
        return d["field"]
    if "const" in d:
        return d["const"]
    return (d["reg"], d["index"])


def _matchkey_to_json(k: MatchKey) -> dict:
    out: dict[str, Any] = {"kind": k.kind, "value": k.value}
    if k.kind == "ternary":
        out["mask"] = k.mask
    elif k.kind == "lpm":
        out["prefix_len"] = k.prefix_len
    return out


def _matchkey_from_json(d: dict) -> MatchKey:
    return MatchKey(kind=d["kind"], value=d["value"],
                    mask=d.get("mask", 0), prefix_len=d.get("prefix_len", 0))


def entry_to_json(e: TableEntry) -> dict:
    return {"keys": [_matchkey_to_json(k) for k in e.keys],
            "priority": e.priority,
            "action_id": e.action_id,
            "action_data": list(e.action_data)}


def entry_from_json(d: dict) -> TableEntry:
    return TableEntry(keys=tuple(_matchkey_from_json(k) for k in d["keys"]),
                      priority=d.get("priority", 0),
                      action_id=d["action_id"],
                      action_data=tuple(d.get("action_data", [])))


def _step_to_json(s: Step) -> dict:
    if isinstance(s, Table):
        return {
            "type": "table",
            "name": s.name,
            "match_kind": s.match_kind,
            "key_fields": list(s.key_fields),
            "actions": [{"name": a.name, "writes": list(a.writes)} for a in s.actions],
            "entries": [entry_to_json(e) for e in s.entries],
            "default": None if s.default is None else
                       {"action_id": s.default[0], "action_data": list(s.default[1])},
        }
    out: dict[str, Any] = {"type": "op", "kind": s.kind, "dst": s.dst,
                           "srcs": [_operand_to_json(x) for x in s.srcs]}
    if s.name:
        out["name"] = s.name
    if s.cmp:
        out["cmp"] = s.cmp
    if s.width:
        out["width"] = s.width
    if s.threshold:
        out["threshold"] = s.threshold
    if s.widths:
        out["widths"] = list(s.widths)
    return out


def _step_from_json(d: dict) -> Step:
    if d["type"] == "table":
        default = None
        if d.get("default") is not None:
            default = (d["default"]["action_id"], tuple(d["default"]["action_data"]))
        return Table(name=d["name"], match_kind=d["match_kind"],
                     key_fields=tuple(d["key_fields"]),
                     actions=tuple(ActionDef(name=a["name"], writes=tuple(a["writes"]))
                                   for a in d["actions"]),
                     entries=tuple(entry_from_json(e) for e in d["entries"]),
                     default=default)
    return LogicOp(kind=d["kind"], dst=d["dst"],
                   srcs=tuple(_operand_from_json(x) for x in d["srcs"]),
                   name=d.get("name", ""), cmp=d.get("cmp", ""),
                   width=d.get("width", 0), threshold=d.get("threshold", 0),
                   widths=tuple(d.get("widths", [])))


def program_to_dict(p: PipelineProgram) -> dict:
    return {
        "ir_version": IR_VERSION,
        "name": p.name,
        "family": p.family,
        "variant": p.variant,
        "fields": [{"name": f.name, "width": f.width, "is_input": f.is_input}
                   for f in p.fields],
        "steps": [_step_to_json(s) for s in p.steps],
        "registers": [{"name": r.name, "width": r.width, "values": list(r.values)}
                      for r in p.registers],
        "output": {"kind": p.output.kind, "fields": list(p.output.fields),
                   "dequant_sub": p.output.dequant_sub,
                   "dequant_scale": p.output.dequant_scale,
                   "dequant_add": p.output.dequant_add},
        "meta": p.meta,
    }


def program_from_dict(d: dict) -> PipelineProgram:
    if d.get("ir_version") != IR_VERSION:
        raise SpecValidationError(f"unsupported ir_version {d.get('ir_version')!r}")
    out = d["output"]
    return PipelineProgram(
        name=d["name"], family=d["family"], variant=d["variant"],
        fields=tuple(FieldDecl(name=f["name"], width=f["width"],
                               is_input=f.get("is_input", False)) for f in d["fields"]),
        steps=tuple(_step_from_json(s) for s in d["steps"]),
        registers=tuple(Register(name=r["name"], width=r["width"],
                                 values=tuple(r["values"])) for r in d["registers"]),
        output=OutputSpec(kind=out["kind"], fields=tuple(out["fields"]),
                          dequant_sub=out.get("dequant_sub", 0.0),
                          dequant_scale=out.get("dequant_scale", 1.0),
                          dequant_add=out.get("dequant_add", 0.0)),
        meta=d.get("meta", {}),
    )


def program_to_json(p: PipelineProgram) -> str:
    return json.dumps(program_to_dict(p), sort_keys=True, indent=2) + "\n"


def program_from_json(text: str) -> PipelineProgram:
    return program_from_dict(json.loads(text))


def with_entries(p: PipelineProgram, entries_by_table: dict[str, list[TableEntry]],
                 registers: Optional[dict[str, tuple[int, ...]]] = None) -> PipelineProgram:
    """Copy of the program with table entries (and optionally registers) replaced."""
    steps = []
    for s in p.steps:
        if isinstance(s, Table) and s.name in entries_by_table:
            steps.append(replace(s, entries=tuple(entries_by_table[s.name])))
        else:
            steps.append(s)
    regs = p.registers
    if registers:
        regs = tuple(Register(name=r.name, width=r.width,
                              values=registers.get(r.name, r.values))
                     for r in p.registers)
    return replace(p, steps=tuple(steps), registers=regs)
