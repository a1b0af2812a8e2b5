"""Request/response models for the conversion service."""

from __future__ import annotations

from typing import Any, Literal, Optional, Union

from pydantic import BaseModel, Field

from ..config import RunConfig


class ConvertConfig(BaseModel):
    """Serializable mirror of RunConfig used at the service boundary."""

    variant: Optional[str] = None
    bits: Optional[Union[int, Literal["full"]]] = None
    max_depth: Optional[int] = None
    preset: Optional[Literal["S", "M", "L", "H"]] = None
    mode: Literal["auto", "full-domain", "unique"] = "auto"
    rf_vote: Literal["table", "logic"] = "table"
    use_default_action: bool = True
    feature_match: Literal["ternary", "exact"] = "ternary"
    lb_match: Literal["exact", "ternary", "lpm"] = "exact"
    profile: Literal["software", "hardware"] = "software"
    seed: int = 0

    def to_run_config(self) -> RunConfig:
        return RunConfig(
            variant=self.variant,
            n_bits=self.bits,
            max_depth=self.max_depth,
            preset=self.preset,
            entry_mode=self.mode,
            rf_vote=self.rf_vote,
            use_default_action=self.use_default_action,
            feature_match=self.feature_match,
            lb_match=self.lb_match,
            profile=self.profile,
            seed=self.seed,
        )


class ValidateRequest(BaseModel):
    model: dict


class ValidateResponse(BaseModel):
    family: str
    n_features: int
    n_classes: int
    out_dim: int
    variants: list[str]


class PredictRequest(BaseModel):
    model: dict
    inputs: list[list[int]]


class PredictResponse(BaseModel):
    kind: Literal["label", "vector"]
    labels: Optional[list[int]] = None
    vectors: Optional[list[list[float]]] = None


class ConvertRequest(BaseModel):
    model: dict
    config: ConvertConfig = Field(default_factory=ConvertConfig)


class ConvertResponse(BaseModel):
    program: dict
    entries: dict
    p4: str
    report: dict
    weights: Optional[dict] = None


class SimulateRequest(BaseModel):
    program: dict
    entries: Optional[dict] = None
    inputs: list[list[int]]


class SimulateResponse(BaseModel):
    kind: Literal["label", "vector"]
    labels: Optional[list[int]] = None
    vectors: Optional[list[list[float]]] = None


class CompareRequest(BaseModel):
    model: dict
    program: dict
    entries: Optional[dict] = None
    inputs: list[list[int]]
    labels: Optional[list[int]] = None


class CompareResponse(BaseModel):
    kind: Literal["label", "vector"]
    samples: int
    relative_accuracy: Optional[float] = None
    pipeline_accuracy: Optional[float] = None
    oracle_accuracy: Optional[float] = None
    accuracy_ratio: Optional[float] = None
    pipeline_macro_f1: Optional[float] = None
    oracle_macro_f1: Optional[float] = None
    confusion_pipeline_vs_oracle: Optional[list[list[int]]] = None
    pearson: Optional[list[float]] = None
    pearson_mean: Optional[float] = None
    default_hit_rate: dict[str, float] = Field(default_factory=dict)


class SweepRequest(BaseModel):
    family: str
    axis: str
    values: list[int]
    config: ConvertConfig = Field(default_factory=ConvertConfig)
    seed: int = 0
    samples: int = 2000
    feature_bits: int = 8
    n_features: int = 3
    dataset: Optional[list[list[int]]] = None


class SweepResponse(BaseModel):
    rows: list[dict]
    csv: str


class MetaResponse(BaseModel):
    version: str
    families: dict[str, list[str]]
    presets: dict[str, dict]
    axes: dict[str, list[str]]


class HealthResponse(BaseModel):
    status: str
    version: str


class ErrorBody(BaseModel):
    detail: str
    kind: str  # validation | budget | program
    path: Optional[str] = None


def error_payload(exc: Exception, kind: str) -> dict[str, Any]:
    body = {"detail": str(exc), "kind": kind}
    path = getattr(exc, "path", "")
    if path:
        body["path"] = path
    return body
