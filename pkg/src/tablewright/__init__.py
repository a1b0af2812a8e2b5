"""tablewright: compile trained ML models into match/action pipeline programs.

Converters turn a validated model spec into a target-agnostic pipeline IR
(tables, entries, registers, final-stage logic); the IR ships with a stage
scheduler, a deterministic simulator used as the verification oracle, P4-style
code generation, and resource reporting.
"""

from .config import RunConfig, resolve_variant
from .errors import (
    BudgetError,
    ProgramError,
    SpecValidationError,
    TablewrightError,
    VariantError,
)
from .ir import (
    PipelineProgram,
    Simulator,
    StageSchedule,
    check_program,
    program_from_json,
    program_to_json,
    simulate,
    stage_schedule,
)
from .mappings import convert
from .model_spec import (
    FeatureSchema,
    ModelSpec,
    parse_model_dict,
    parse_model_spec,
    serialize_model_spec,
)
from .reference import reference_predict, reference_transform
from .table_utils import (
    MatchKey,
    QuantizerConfig,
    TableEntry,
    exact_to_lpm,
    exact_to_ternary,
    quantize_map,
    range_to_prefixes,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetError",
    "FeatureSchema",
    "MatchKey",
    "ModelSpec",
    "PipelineProgram",
    "ProgramError",
    "QuantizerConfig",
    "RunConfig",
    "Simulator",
    "SpecValidationError",
    "StageSchedule",
    "TableEntry",
    "TablewrightError",
    "VariantError",
    "check_program",
    "convert",
    "exact_to_lpm",
    "exact_to_ternary",
    "parse_model_dict",
    "parse_model_spec",
    "program_from_json",
    "program_to_json",
    "quantize_map",
    "range_to_prefixes",
    "reference_predict",
    "reference_transform",
    "resolve_variant",
    "serialize_model_spec",
    "simulate",
    "stage_schedule",
]
