"""Command-line front end.

The CLI is a thin client of the conversion service: every command builds the
same request models the HTTP API accepts and dispatches them either in-process
(default) or against a running server (``--server http://...``). File I/O and
exit codes live here; all conversion logic lives behind the service layer.

Exit codes: 0 success, 2 validation failure, 3 I/O failure, 4 budget overrun.
Set TABLEWRIGHT_LOG=debug|info|warning for logging verbosity.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import re
import sys
from pathlib import Path
from typing import Optional

import click
import httpx
from fastapi import HTTPException

from . import __version__
from .service import routes
from .service.models import (
    CompareRequest,
    ConvertConfig,
    ConvertRequest,
    SimulateRequest,
    SweepRequest,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_BUDGET = 4

log = logging.getLogger("tablewright")

_IDENT = re.compile(r"[^A-Za-z0-9_]")


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _status_to_exit(status: int) -> int:
    if status == 409:
        return EXIT_BUDGET
    if status in (400, 404, 422):
        return EXIT_VALIDATION
    return EXIT_IO


class Client:
    """Dispatches request models either in-process or over HTTP."""

    _LOCAL = {
        "convert": (routes.convert, ConvertRequest),
        "simulate": (routes.simulate, SimulateRequest),
        "compare": (routes.compare, CompareRequest),
        "sweep": (routes.sweep, SweepRequest),
    }

    def __init__(self, server: Optional[str] = None):
        self.server = server.rstrip("/") if server else None

    def call(self, endpoint: str, request) -> dict:
        if self.server is None:
            handler, _ = self._LOCAL[endpoint]
            try:
                return handler(request).model_dump()
            except HTTPException as exc:
                detail = exc.detail if isinstance(exc.detail, dict) else {"detail": exc.detail}
                _fail(_status_to_exit(exc.status_code), detail.get("detail", str(exc)))
        try:
            resp = httpx.post(f"{self.server}/v1/{endpoint}",
                              json=request.model_dump(), timeout=600.0)
        except httpx.HTTPError as exc:
            _fail(EXIT_IO, f"cannot reach {self.server}: {exc}")
        if resp.status_code >= 400:
            try:
                detail = resp.json().get("detail", {})
            except ValueError:
                detail = {}
            message = detail.get("detail") if isinstance(detail, dict) else str(detail)
            _fail(_status_to_exit(resp.status_code), message or resp.text)
        return resp.json()


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        _fail(EXIT_IO, f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        _fail(EXIT_VALIDATION, f"{path} is not valid JSON: {exc}")


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot write {path}: {exc}")


def _sanitize(name: str) -> str:
    out = _IDENT.sub("_", name)
    return out


def _read_dataset(path: str, expected: Optional[list[str]] = None):
    """Dataset CSV: header of feature names plus an optional label column."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot read {path}: {exc}")
    if not rows:
        _fail(EXIT_VALIDATION, f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    has_label = header and header[-1] == "label"
    feat_cols = header[:-1] if has_label else header
    if expected is not None:
        got = [_sanitize(h) for h in feat_cols]
        if len(got) != len(expected):
            _fail(EXIT_VALIDATION,
                  f"dataset has {len(got)} feature columns, program expects "
                  f"{len(expected)}")
        for g, e in zip(got, expected):
            if g != e:
                _fail(EXIT_VALIDATION, f"dataset column {g!r} does not match "
                                       f"expected feature {e!r}")
    inputs, labels = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            vals = [int(c) for c in row]
        except ValueError as exc:
            _fail(EXIT_VALIDATION, f"{path}:{lineno}: {exc}")
        if len(vals) != len(header):
            _fail(EXIT_VALIDATION,
                  f"{path}:{lineno}: expected {len(header)} cells, got {len(vals)}")
        if has_label:
            inputs.append(vals[:-1])
            labels.append(vals[-1])
        else:
            inputs.append(vals)
    return inputs, (labels if has_label else None)


def _program_input_fields(program_doc: dict) -> list[str]:
    return [f["name"] for f in program_doc.get("fields", []) if f.get("is_input")]


def _convert_config(variant, bits, depth, preset, mode, rf_vote, feature_match,
                    lb_match, profile, seed) -> ConvertConfig:
    parsed_bits = None
    if bits is not None:
        parsed_bits = "full" if bits == "full" else int(bits)
    try:
        return ConvertConfig(variant=variant, bits=parsed_bits, max_depth=depth,
                             preset=preset, mode=mode, rf_vote=rf_vote,
                             feature_match=feature_match, lb_match=lb_match,
                             profile=profile, seed=seed)
    except Exception as exc:
        _fail(EXIT_VALIDATION, str(exc))


_shared_options = [
    click.option("--server", default=None, metavar="URL",
                 help="Use a running service instead of in-process conversion."),
]


def _apply(options):
    def deco(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn
    return deco


@click.group()
@click.version_option(__version__)
def main():
    """Compile trained ML models into match/action pipeline programs."""
    level = os.environ.get("TABLEWRIGHT_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(), metavar="FILE",
              help="Model spec JSON produced by an exporter.")
@click.option("--variant", type=click.Choice(["eb", "lb", "dm"]), default=None,
              help="Mapping strategy; defaults per family.")
@click.option("--bits", default=None, metavar="N|full",
              help="Action-data bit width for lookup-based mappings.")
@click.option("--depth", type=int, default=None,
              help="Quadtree depth cap for kmeans/knn encode-based mappings.")
@click.option("--preset", type=click.Choice(["S", "M", "L", "H"]), default=None,
              help="Named size preset supplying defaults.")
@click.option("--mode", type=click.Choice(["auto", "full-domain", "unique"]),
              default="auto", help="Lookup-table entry population mode.")
@click.option("--rf-vote", type=click.Choice(["table", "logic"]), default="table")
@click.option("--feature-match", type=click.Choice(["ternary", "exact"]),
              default="ternary")
@click.option("--lb-match", type=click.Choice(["exact", "ternary", "lpm"]),
              default="exact")
@click.option("--profile", type=click.Choice(["software", "hardware"]),
              default="software")
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_dir", required=True, type=click.Path(), metavar="DIR")
@_apply(_shared_options)
def convert(model_path, variant, bits, depth, preset, mode, rf_vote, feature_match,
            lb_match, profile, seed, out_dir, server):
    """Convert a model spec into program, entries, P4 source, and report."""
    model = _read_json(model_path)
    cfg = _convert_config(variant, bits, depth, preset, mode, rf_vote,
                          feature_match, lb_match, profile, seed)
    result = Client(server).call("convert", ConvertRequest(model=model, config=cfg))
    out = Path(out_dir)
    _write(out / "program.json", json.dumps(result["program"], sort_keys=True, indent=2) + "\n")
    _write(out / "entries.json", json.dumps(result["entries"], sort_keys=True, indent=2) + "\n")
    _write(out / "model.p4", result["p4"])
    _write(out / "report.json", json.dumps(result["report"], sort_keys=True, indent=2) + "\n")
    if result.get("weights"):
        _write(out / "weights.json",
               json.dumps(result["weights"], sort_keys=True, indent=2) + "\n")
    totals = result["report"]["totals"]
    click.echo(f"wrote {out}/program.json entries.json model.p4 report.json "
               f"({totals['entries']} entries, {totals['stages']} stages)")
    for warning in result["report"].get("warnings", []):
        click.echo(f"warning: {warning}", err=True)


@main.command()
@click.option("--program", "program_path", required=True, type=click.Path())
@click.option("--entries", "entries_path", default=None, type=click.Path(),
              help="Optional entries document overriding the program's own.")
@click.option("--dataset", "dataset_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@_apply(_shared_options)
def simulate(program_path, entries_path, dataset_path, out_path, server):
    """Run a dataset through the pipeline simulator; write predictions CSV."""
    program = _read_json(program_path)
    entries = _read_json(entries_path) if entries_path else None
    inputs, _ = _read_dataset(dataset_path, _program_input_fields(program))
    result = Client(server).call(
        "simulate", SimulateRequest(program=program, entries=entries, inputs=inputs))
    lines = []
    if result["kind"] == "label":
        lines.append("prediction")
        lines.extend(str(v) for v in result["labels"])
    else:
        width = len(result["vectors"][0]) if result["vectors"] else 0
        lines.append(",".join(f"out{j}" for j in range(width)))
        lines.extend(",".join(f"{v:.9g}" for v in row) for row in result["vectors"])
    _write(Path(out_path), "\n".join(lines) + "\n")
    click.echo(f"wrote {out_path} ({len(inputs)} predictions)")


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--program", "program_path", required=True, type=click.Path())
@click.option("--entries", "entries_path", default=None, type=click.Path())
@click.option("--dataset", "dataset_path", required=True, type=click.Path())
@click.option("--out", "out_path", default=None, type=click.Path(),
              help="Write the full metrics report JSON here.")
@_apply(_shared_options)
def compare(model_path, program_path, entries_path, dataset_path, out_path, server):
    """Compare pipeline output against the model's reference predictions."""
    model = _read_json(model_path)
    program = _read_json(program_path)
    entries = _read_json(entries_path) if entries_path else None
    inputs, labels = _read_dataset(dataset_path, _program_input_fields(program))
    result = Client(server).call(
        "compare", CompareRequest(model=model, program=program, entries=entries,
                                  inputs=inputs, labels=labels))
    if out_path:
        _write(Path(out_path), json.dumps(result, sort_keys=True, indent=2) + "\n")
    if result["kind"] == "label":
        click.echo(f"relative accuracy: {result['relative_accuracy']:.4f} "
                   f"({result['samples']} samples)")
        if result.get("pipeline_accuracy") is not None:
            click.echo(f"accuracy pipeline/oracle: {result['pipeline_accuracy']:.4f}"
                       f"/{result['oracle_accuracy']:.4f} "
                       f"macro-F1 {result['pipeline_macro_f1']:.4f}"
                       f"/{result['oracle_macro_f1']:.4f}")
    else:
        click.echo(f"pearson per dim: "
                   + " ".join(f"{r:.5f}" for r in result["pearson"])
                   + f" (mean {result['pearson_mean']:.5f})")


@main.command()
@click.option("--family", required=True)
@click.option("--axis", required=True,
              type=click.Choice(["depth", "n_trees", "n_bits", "n_features",
                                 "unique_values"]))
@click.option("--range", "range_", required=True, metavar="LO:HI|A,B,C",
              help="Axis values, e.g. 1:12 or 4,6,8,12.")
@click.option("--bits", default=None, metavar="N|full")
@click.option("--preset", type=click.Choice(["S", "M", "L", "H"]), default=None)
@click.option("--seed", type=int, default=0)
@click.option("--samples", type=int, default=2000)
@click.option("--feature-bits", type=int, default=8)
@click.option("--n-features", type=int, default=3)
@click.option("--dataset", "dataset_path", default=None, type=click.Path(),
              help="Evaluate fidelity on this CSV instead of synthetic inputs.")
@click.option("--out", "out_path", required=True, type=click.Path())
@_apply(_shared_options)
def sweep(family, axis, range_, bits, preset, seed, samples, feature_bits,
          n_features, dataset_path, out_path, server):
    """Sweep one hyperparameter axis; write (value, entries, stages, accuracy) CSV."""
    if ":" in range_:
        try:
            lo, hi = (int(x) for x in range_.split(":", 1))
        except ValueError:
            _fail(EXIT_VALIDATION, f"bad range {range_!r}")
        values = list(range(lo, hi + 1))
    else:
        try:
            values = [int(x) for x in range_.split(",") if x]
        except ValueError:
            _fail(EXIT_VALIDATION, f"bad range {range_!r}")
    dataset = None
    if dataset_path:
        dataset, _ = _read_dataset(dataset_path)
    cfg = _convert_config(None, bits, None, preset, "auto", "table", "ternary",
                          "exact", "software", seed)
    result = Client(server).call(
        "sweep", SweepRequest(family=family, axis=axis, values=values, config=cfg,
                              seed=seed, samples=samples, feature_bits=feature_bits,
                              n_features=n_features, dataset=dataset))
    _write(Path(out_path), result["csv"])
    click.echo(f"wrote {out_path} ({len(result['rows'])} rows)")


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host, port):
    """Run the conversion service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
