"""Per-layer transformer hidden-state exporter for TPEB embedding dumps."""

from .export import ExportJob, ExportResult, export, read_sentences
from .writer import SentenceRecord, TpebWriter

__all__ = [
    "ExportJob",
    "ExportResult",
    "SentenceRecord",
    "TpebWriter",
    "export",
    "read_sentences",
]
