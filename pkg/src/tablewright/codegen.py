"""P4-style source emission, entry/weight files, and resource reporting.

The emitted source targets a v1model-shaped architecture and is meant to be
read (and golden-tested): it is syntactically plausible P4-16, but compiling
it with a vendor toolchain is out of scope. Table entries and register
initializers travel separately as a JSON document that round-trips through
``load_entries`` into the simulator.
"""

from __future__ import annotations

import json
from typing import Optional

from .config import HARDWARE_PROFILE
from .errors import SpecValidationError
from .ir import (
    LogicOp,
    PipelineProgram,
    Table,
    entry_from_json,
    entry_to_json,
    stage_schedule,
    with_entries,
)

ENTRIES_VERSION = 1


# ---------------------------------------------------------------------------
# Entries document
# ---------------------------------------------------------------------------

def emit_entries(p: PipelineProgram) -> dict:
    """JSON-ready document with every table's entries plus register banks."""
    tables = []
    for t in p.tables:
        tables.append({
            "name": t.name,
            "match_kind": t.match_kind,
            "key_fields": list(t.key_fields),
            "entries": [entry_to_json(e) for e in t.entries],
            "default": None if t.default is None else
                       {"action_id": t.default[0], "action_data": list(t.default[1])},
        })
    return {
        "entries_version": ENTRIES_VERSION,
        "program": p.name,
        "tables": tables,
        "registers": {r.name: list(r.values) for r in p.registers},
    }


def emit_entries_json(p: PipelineProgram) -> str:
    return json.dumps(emit_entries(p), sort_keys=True, indent=2) + "\n"


def load_entries(p: PipelineProgram, doc: dict) -> PipelineProgram:
    """Install a previously emitted entries document into a program skeleton."""
    if doc.get("entries_version") != ENTRIES_VERSION:
        raise SpecValidationError(
            f"unsupported entries_version {doc.get('entries_version')!r}")
    known = {t.name for t in p.tables}
    entries_by_table = {}
    defaults = {}
    for tdoc in doc.get("tables", []):
        name = tdoc["name"]
        if name not in known:
            raise SpecValidationError(f"entries for unknown table {name!r}")
        entries_by_table[name] = [entry_from_json(e) for e in tdoc["entries"]]
        defaults[name] = tdoc.get("default")
    registers = {name: tuple(vals) for name, vals in doc.get("registers", {}).items()}
    for rname in registers:
        if rname not in {r.name for r in p.registers}:
            raise SpecValidationError(f"values for unknown register {rname!r}")
    return with_entries(p, entries_by_table, registers)


# ---------------------------------------------------------------------------
# Resource report
# ---------------------------------------------------------------------------

def resource_report(p: PipelineProgram, profile: str = "software") -> dict:
    """Entry counts, key/action widths, stage usage, and profile warnings."""
    schedule = stage_schedule(p)
    widths = {f.name: f.width for f in p.fields}
    stage_of = {}
    for idx, step in enumerate(p.steps):
        stage_of[id(step)] = schedule.stage_of[idx]

    tables = []
    total_entries = 0
    for t in p.tables:
        key_bits = sum(widths[k] for k in t.key_fields)
        action_bits = max((sum(widths[w] for w in a.writes) for a in t.actions),
                          default=0)
        total_entries += len(t.entries)
        tables.append({
            "name": t.name,
            "match_kind": t.match_kind,
            "entries": len(t.entries),
            "key_bits": key_bits,
            "action_data_bits": action_bits,
            "stage": stage_of[id(t)],
        })

    register_bits = sum(r.width * len(r.values) for r in p.registers)
    report = {
        "program": p.name,
        "family": p.family,
        "variant": p.variant,
        "tables": tables,
        "totals": {
            "entries": total_entries,
            "tables": len(tables),
            "logic_ops": len(p.ops),
            "stages": schedule.total,
            "register_bits": register_bits,
        },
        "profile": profile,
        "meta": p.meta,
        "warnings": [],
    }

    if profile == "hardware":
        caps = HARDWARE_PROFILE
        warnings = []
        if schedule.total > caps["max_stages"]:
            warnings.append(
                f"{schedule.total} stages exceed the profile cap of {caps['max_stages']}")
        per_stage: dict[int, int] = {}
        for trow in tables:
            per_stage[trow["stage"]] = per_stage.get(trow["stage"], 0) + 1
            if trow["entries"] > caps["entries_per_table"]:
                warnings.append(
                    f"table {trow['name']!r} holds {trow['entries']} entries "
                    f"(cap {caps['entries_per_table']})")
            if trow["key_bits"] > caps["key_bits_per_table"]:
                warnings.append(
                    f"table {trow['name']!r} key is {trow['key_bits']} bits wide "
                    f"(cap {caps['key_bits_per_table']})")
        for stage, count in sorted(per_stage.items()):
            if count > caps["tables_per_stage"]:
                warnings.append(
                    f"stage {stage} schedules {count} tables "
                    f"(cap {caps['tables_per_stage']})")
        report["warnings"] = warnings
    return report


# ---------------------------------------------------------------------------
# P4 source emission (v1model shell)
# ---------------------------------------------------------------------------

def _ref(p: PipelineProgram, name: str) -> str:
    for f in p.fields:
        if f.name == name:
            return f"hdr.features.{name}" if f.is_input else f"meta.{name}"
    raise SpecValidationError(f"undeclared field {name!r}")


def _operand(p: PipelineProgram, src, temps: dict) -> str:
    if isinstance(src, str):
        return _ref(p, src)
    if isinstance(src, int):
        return str(src)
    name, idx = src
    return temps[(name, idx)]


def _emit_op(p: PipelineProgram, op: LogicOp, lines: list[str], temps: dict) -> None:
    ind = "        "
    dst = _ref(p, op.dst)
    width = p.field_width(op.dst)
    if op.kind == "add":
        expr = " + ".join(f"(bit<{width}>){_operand(p, s, temps)}" for s in op.srcs)
        lines.append(f"{ind}{dst} = {expr};")
    elif op.kind == "sub":
        a, b = (_operand(p, s, temps) for s in op.srcs)
        lines.append(f"{ind}{dst} = (bit<{width}>){a} - (bit<{width}>){b};")
    elif op.kind == "compare":
        a, b = (_operand(p, s, temps) for s in op.srcs)
        cmp = {"le": "<=", "ge": ">=", "eq": "=="}[op.cmp]
        lines.append(f"{ind}{dst} = ((bit<64>){a} {cmp} (bit<64>){b}) "
                     f"? (bit<{width}>)1 : (bit<{width}>)0;")
    elif op.kind == "xnor":
        a, b = (_operand(p, s, temps) for s in op.srcs)
        lines.append(f"{ind}{dst} = ~({a} ^ {b});")
    elif op.kind == "popcount":
        a = _operand(p, op.srcs[0], temps)
        lines.append(f"{ind}{dst} = popcount({a});")
    elif op.kind == "sign":
        a = _operand(p, op.srcs[0], temps)
        lines.append(f"{ind}{dst} = ((bit<64>){a} >= {op.threshold}) "
                     f"? (bit<{width}>)1 : (bit<{width}>)0;")
    elif op.kind in ("argmax", "argmin"):
        cmp = ">" if op.kind == "argmax" else "<"
        best = f"best_{op.dst}"
        first = _operand(p, op.srcs[0], temps)
        src_w = p.field_width(op.srcs[0]) if isinstance(op.srcs[0], str) else 64
        lines.append(f"{ind}bit<{src_w}> {best} = {first};")
        lines.append(f"{ind}{dst} = 0;")
        for i, s in enumerate(op.srcs[1:], start=1):
            v = _operand(p, s, temps)
            lines.append(f"{ind}if ({v} {cmp} {best}) {{ {best} = {v}; "
                         f"{dst} = {i}; }}")
    elif op.kind == "select":
        idx = _operand(p, op.srcs[0], temps)
        for i, s in enumerate(op.srcs[1:]):
            v = _operand(p, s, temps)
            kw = "if" if i == 0 else "else if"
            lines.append(f"{ind}{kw} ({idx} == {i}) {{ {dst} = (bit<{width}>){v}; }}")
    elif op.kind == "concat":
        parts = [f"(bit<{w}>){_operand(p, s, temps)}" for s, w in zip(op.srcs, op.widths)]
        lines.append(f"{ind}{dst} = {' ++ '.join(parts)};")
    else:  # pragma: no cover
        raise SpecValidationError(f"cannot emit op kind {op.kind!r}")


def _emit_table(p: PipelineProgram, t: Table, lines: list[str]) -> None:
    match_kw = {"exact": "exact", "ternary": "ternary", "lpm": "lpm"}[t.match_kind]
    widths = {f.name: f.width for f in p.fields}
    for a in t.actions:
        params = ", ".join(f"bit<{widths[w]}> v{i}" for i, w in enumerate(a.writes))
        lines.append(f"    action {t.name}_{a.name}({params}) {{")
        for i, w in enumerate(a.writes):
            lines.append(f"        {_ref(p, w)} = v{i};")
        lines.append("    }")
    lines.append(f"    table {t.name} {{")
    if t.key_fields:
        lines.append("        key = {")
        for k in t.key_fields:
            lines.append(f"            {_ref(p, k)} : {match_kw};")
        lines.append("        }")
    lines.append("        actions = { " +
                  "; ".join(f"{t.name}_{a.name}" for a in t.actions) + "; }")
    if t.default is not None:
        aid, data = t.default
        args = ", ".join(str(v) for v in data)
        lines.append(f"        const default_action = {t.name}_{t.actions[aid].name}({args});")
    lines.append(f"        size = {max(1, len(t.entries))};")
    lines.append("    }")
    lines.append("")


def emit_p4(p: PipelineProgram, arch: str = "v1model") -> str:
    """Deterministic P4-16 text for the program; byte-identical across runs."""
    if arch != "v1model":
        raise SpecValidationError(f"unsupported architecture {arch!r}; only v1model "
                                  "is emitted (TNA/PSA are extension seams)")
    schedule = stage_schedule(p)
    feat_bits = sum(f.width for f in p.input_fields())
    pad = (8 - feat_bits % 8) % 8

    out: list[str] = []
    w = out.append
    w(f"// {p.name}: generated match/action pipeline ({p.family}/{p.variant}).")
    w("// Entries and register initializers are loaded from the companion")
    w("// entries.json via the control plane.")
    w("#include <core.p4>")
    w("#include <v1model.p4>")
    w("")
    if any(op.kind == "popcount" for op in p.ops):
        w("// Bit-count helper; targets lacking a native popcount can expand this")
        w("// into a shift-add tree.")
        w("extern bit<8> popcount<T>(in T x);")
        w("")
    w("header ethernet_t {")
    w("    bit<48> dst_addr;")
    w("    bit<48> src_addr;")
    w("    bit<16> ether_type;")
    w("}")
    w("")
    w("header features_t {")
    for f in p.input_fields():
        w(f"    bit<{f.width}> {f.name};")
    if pad:
        w(f"    bit<{pad}> pad;")
    w("}")
    w("")
    w("struct headers_t {")
    w("    ethernet_t ethernet;")
    w("    features_t features;")
    w("}")
    w("")
    w("struct metadata_t {")
    for f in p.fields:
        if not f.is_input:
            w(f"    bit<{f.width}> {f.name};")
    w("}")
    w("")
    w("parser FeatureParser(packet_in pkt, out headers_t hdr,")
    w("                     inout metadata_t meta,")
    w("                     inout standard_metadata_t standard_metadata) {")
    w("    state start {")
    w("        pkt.extract(hdr.ethernet);")
    w("        pkt.extract(hdr.features);")
    w("        transition accept;")
    w("    }")
    w("}")
    w("")
    w("control VerifyChecksumImpl(inout headers_t hdr, inout metadata_t meta) {")
    w("    apply { }")
    w("}")
    w("")
    w("control IngressImpl(inout headers_t hdr, inout metadata_t meta,")
    w("                    inout standard_metadata_t standard_metadata) {")
    for r in p.registers:
        w(f"    register<bit<{r.width}>>({len(r.values)}) {r.name};")
    if p.registers:
        w("")

    body: list[str] = []
    temps: dict = {}
    temp_decls: list[str] = []
    # Register cells referenced by ops become local reads at the top of apply.
    for op in p.ops:
        for s in op.srcs:
            if isinstance(s, tuple) and s not in temps:
                rname, idx = s
                reg = next(r for r in p.registers if r.name == rname)
                tname = f"{rname}_row{idx}"
                temps[s] = tname
                temp_decls.append(f"        bit<{reg.width}> {tname};")
                temp_decls.append(f"        {rname}.read({tname}, {idx});")

    for t in p.tables:
        _emit_table(p, t, out)

    # Apply in stage order (stable within a stage); dependencies guarantee
    # this is a valid topological order of the step sequence.
    order = sorted(range(len(p.steps)), key=lambda i: (schedule.stage_of[i], i))
    last_stage = None
    for idx in order:
        step = p.steps[idx]
        stage = schedule.stage_of[idx]
        if stage != last_stage:
            body.append(f"        // stage {stage}")
            last_stage = stage
        if isinstance(step, Table):
            body.append(f"        {step.name}.apply();")
        else:
            _emit_op(p, step, body, temps)

    w("    apply {")
    for line in temp_decls:
        w(line)
    for line in body:
        w(line)
    w("    }")
    w("}")
    w("")
    w("control EgressImpl(inout headers_t hdr, inout metadata_t meta,")
    w("                   inout standard_metadata_t standard_metadata) {")
    w("    apply { }")
    w("}")
    w("")
    w("control ComputeChecksumImpl(inout headers_t hdr, inout metadata_t meta) {")
    w("    apply { }")
    w("}")
    w("")
    w("control DeparserImpl(packet_out pkt, in headers_t hdr) {")
    w("    apply {")
    w("        pkt.emit(hdr.ethernet);")
    w("        pkt.emit(hdr.features);")
    w("    }")
    w("}")
    w("")
    w("V1Switch(FeatureParser(), VerifyChecksumImpl(), IngressImpl(),")
    w("         EgressImpl(), ComputeChecksumImpl(), DeparserImpl()) main;")
    return "\n".join(out) + "\n"


def emit_weights(p: PipelineProgram) -> Optional[dict]:
    """Standalone weights document for register-resident models (bnn)."""
    if not p.registers:
        return None
    return {
        "program": p.name,
        "weights": {r.name: {"width": r.width, "rows": list(r.values)}
                    for r in p.registers},
    }
