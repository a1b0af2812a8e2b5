"""Service handlers. Plain synchronous functions over the core package, so
the CLI can call them in-process and the FastAPI app can mount them as-is."""

from __future__ import annotations

from fastapi import HTTPException

from .. import __version__
from ..codegen import emit_entries, emit_p4, emit_weights, load_entries, resource_report
from ..config import PRESETS, VARIANTS
from ..errors import BudgetError, ProgramError, SpecValidationError
from ..ir import Simulator, program_from_dict, program_to_dict
from ..mappings import convert as convert_model
from ..metrics import accuracy, confusion_matrix, macro_f1, pearson, relative_accuracy
from ..model_spec import parse_model_dict
from ..reference import reference_predict, reference_transform
from ..sweep import axis_families, run_sweep, sweep_rows_to_csv, AXES
from .models import (
    CompareRequest,
    CompareResponse,
    ConvertRequest,
    ConvertResponse,
    HealthResponse,
    MetaResponse,
    PredictRequest,
    PredictResponse,
    SimulateRequest,
    SimulateResponse,
    SweepRequest,
    SweepResponse,
    ValidateRequest,
    ValidateResponse,
    error_payload,
)


def _raise_http(exc: Exception):
    if isinstance(exc, BudgetError):
        raise HTTPException(status_code=409, detail=error_payload(exc, "budget")) from exc
    if isinstance(exc, (SpecValidationError, ProgramError)):
        raise HTTPException(status_code=422, detail=error_payload(exc, "validation")) from exc
    raise exc


def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


def meta() -> MetaResponse:
    return MetaResponse(
        version=__version__,
        families={f: list(v) for f, v in VARIANTS.items()},
        presets=PRESETS,
        axes={a: list(axis_families(a)) for a in AXES},
    )


def validate(req: ValidateRequest) -> ValidateResponse:
    try:
        spec = parse_model_dict(req.model)
    except Exception as exc:
        _raise_http(exc)
    return ValidateResponse(family=spec.family, n_features=spec.n,
                            n_classes=spec.n_classes, out_dim=spec.out_dim,
                            variants=list(VARIANTS[spec.family]))


def predict(req: PredictRequest) -> PredictResponse:
    try:
        spec = parse_model_dict(req.model)
        if spec.is_classifier:
            labels = [reference_predict(spec, x) for x in req.inputs]
            return PredictResponse(kind="label", labels=labels)
        vectors = [reference_transform(spec, x) for x in req.inputs]
        return PredictResponse(kind="vector", vectors=vectors)
    except Exception as exc:
        _raise_http(exc)


def convert(req: ConvertRequest) -> ConvertResponse:
    try:
        spec = parse_model_dict(req.model)
        cfg = req.config.to_run_config()
        program = convert_model(spec, cfg)
        return ConvertResponse(
            program=program_to_dict(program),
            entries=emit_entries(program),
            p4=emit_p4(program),
            report=resource_report(program, profile=cfg.profile),
            weights=emit_weights(program),
        )
    except Exception as exc:
        _raise_http(exc)


def _build_simulator(program_doc: dict, entries_doc=None,
                     track_defaults: bool = False) -> Simulator:
    program = program_from_dict(program_doc)
    if entries_doc is not None:
        program = load_entries(program, entries_doc)
    return Simulator(program, track_defaults=track_defaults)


def simulate(req: SimulateRequest) -> SimulateResponse:
    try:
        sim = _build_simulator(req.program, req.entries)
        if sim.program.output.kind == "label":
            return SimulateResponse(kind="label",
                                    labels=[sim.run(x) for x in req.inputs])
        return SimulateResponse(kind="vector",
                                vectors=[sim.run(x) for x in req.inputs])
    except Exception as exc:
        _raise_http(exc)


def compare(req: CompareRequest) -> CompareResponse:
    try:
        spec = parse_model_dict(req.model)
        sim = _build_simulator(req.program, req.entries, track_defaults=True)
        inputs = req.inputs
        if spec.is_classifier:
            oracle = [reference_predict(spec, x) for x in inputs]
            pipe = [sim.run(x) for x in inputs]
            k = spec.n_classes
            resp = CompareResponse(
                kind="label", samples=len(inputs),
                relative_accuracy=relative_accuracy(oracle, pipe),
                confusion_pipeline_vs_oracle=confusion_matrix(oracle, pipe, k),
            )
            if req.labels is not None:
                resp.pipeline_accuracy = accuracy(req.labels, pipe)
                resp.oracle_accuracy = accuracy(req.labels, oracle)
                resp.accuracy_ratio = (resp.pipeline_accuracy / resp.oracle_accuracy
                                       if resp.oracle_accuracy else 0.0)
                resp.pipeline_macro_f1 = macro_f1(req.labels, pipe, k)
                resp.oracle_macro_f1 = macro_f1(req.labels, oracle, k)
        else:
            oracle_cols = list(zip(*(reference_transform(spec, x) for x in inputs)))
            pipe_cols = list(zip(*(sim.run(x) for x in inputs)))
            rs = [pearson(o, g) for o, g in zip(oracle_cols, pipe_cols)]
            resp = CompareResponse(kind="vector", samples=len(inputs),
                                   pearson=rs,
                                   pearson_mean=sum(rs) / len(rs) if rs else 0.0)
        # Surface how often lookup tables fell back to their default action
        # (relevant for unique entry-population mode).
        if sim.lookups:
            resp.default_hit_rate = {
                name: sim.default_hits.get(name, 0) / count
                for name, count in sim.lookups.items() if count}
        return resp
    except Exception as exc:
        _raise_http(exc)


def sweep(req: SweepRequest) -> SweepResponse:
    try:
        rows = run_sweep(req.family, req.axis, req.values,
                         cfg=req.config.to_run_config(), seed=req.seed,
                         samples=req.samples, feature_bits=req.feature_bits,
                         n_features=req.n_features, dataset=req.dataset)
        return SweepResponse(rows=rows, csv=sweep_rows_to_csv(rows))
    except Exception as exc:
        _raise_http(exc)
