"""Trains toy models with scikit-learn and exports them to the tablewright
model spec JSON schema. The JSON/CSV files are the only coupling to the
compiler package."""

from .export import ExportJob, export_model
from .quantize import quantize_features

__version__ = "0.1.0"

__all__ = ["ExportJob", "export_model", "quantize_features"]
