"""Batch-exports segmentation-model predictions to the SegMap/confidence
text format consumed by the classification pipeline's file predictor."""

from .adapter import (AdapterConfig, AdapterError, FormatViolation, StubModel,
                      export_predictions, load_mapping, load_model,
                      read_image, validate_format, write_grid)

__version__ = "0.1.0"
