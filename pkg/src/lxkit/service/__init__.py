from .engine import (
    AnalysisConfig,
    IngestResult,
    ParsedRow,
    analyze_rows,
    ingest_csv,
    output_columns,
    preview,
    selectable_perceptions,
    word_count,
)
from .jobs import Job, JobState, JobStore

__all__ = [
    "AnalysisConfig",
    "IngestResult",
    "ParsedRow",
    "analyze_rows",
    "ingest_csv",
    "output_columns",
    "preview",
    "selectable_perceptions",
    "word_count",
    "Job",
    "JobState",
    "JobStore",
]
