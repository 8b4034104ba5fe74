"""
Core utilities for majlab runners.

Framework code: run configuration and report output.
Domain logic lives in src/.
"""

from .base_runner import BaseRunner, RunConfig
from .errors import RunError
from .report_writer import ReportWriter, dump_json
from .schemas import (
    MatrixPayload,
    MeasurePayload,
    PhiPayload,
    RunReport,
    SequencePayload,
    VerticesPayload,
)

__all__ = [
    "BaseRunner",
    "RunConfig",
    "RunError",
    "ReportWriter",
    "dump_json",
    "MatrixPayload",
    "MeasurePayload",
    "PhiPayload",
    "RunReport",
    "SequencePayload",
    "VerticesPayload",
]
