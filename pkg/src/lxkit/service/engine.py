"""CSV-in/CSV-out analysis core.

Ingests an uploaded CSV, classifies each row's text for the selected
perceptions through the configured backend, and renders one output row per
input row: emotion dummies (0/1), evaluation polarities (-1/0/+1), and a word
count. Column order is deterministic (taxonomy order filtered by the
selection), so identical inputs through the lexicon backend produce
byte-identical output.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..errors import ConfigError, EmptyFile, MissingColumn, NotUtf8, SizeExceeded
from ..inference import BackendConfig, classify_batch, make_backend
from ..instructions import (
    LABEL_TO_POLARITY,
    PRESENT,
    InstructionRecord,
    build_record,
)
from ..scales import overall_sentiment
from ..taxonomy import Taxonomy, default_taxonomy, lookup

DEFAULT_MAX_UPLOAD_BYTES = 1024 * 1024  # demo limit: 1 MB

THEME_IDS = ("trust", "commitment", "recommendation")
ASPECT_IDS = ("price", "product", "place", "promotion")
SENTIMENT_COLUMN = "sentiment"


def selectable_perceptions(taxonomy: Optional[Taxonomy] = None) -> tuple[str, ...]:
    """The 20 selectable analysis outputs: 16 emotions, 3 themes, and the
    overall sentiment roll-up."""
    tax = taxonomy or default_taxonomy()
    return tax.emotion_ids() + THEME_IDS + (SENTIMENT_COLUMN,)


@dataclass(frozen=True)
class AnalysisConfig:
    id_column: str
    text_column: str
    selected_perceptions: tuple[str, ...]
    backend: BackendConfig = field(default_factory=BackendConfig)
    include_word_count: bool = True
    include_text: bool = False
    include_aspect_columns: bool = False
    # strict by default: unparseable backend replies become empty cells plus
    # a warning, never a silently coerced label
    lenient: bool = False

    def __post_init__(self):
        if not self.text_column:
            raise ConfigError("text_column must be non-empty")
        if not self.id_column:
            raise ConfigError("id_column must be non-empty")
        if not self.selected_perceptions:
            raise ConfigError("select at least one perception")
        allowed = set(selectable_perceptions())
        unknown = [p for p in self.selected_perceptions if p not in allowed]
        if unknown:
            raise ConfigError(f"unknown perception(s): {unknown}")

    @classmethod
    def from_json(cls, text: str) -> "AnalysisConfig":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        backend_raw = raw.get("backend", {})
        try:
            backend = BackendConfig(**{
                k: backend_raw[k]
                for k in backend_raw
                if k in BackendConfig.__dataclass_fields__
            })
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad backend config: {exc}") from exc
        return cls(
            id_column=raw.get("id_column", ""),
            text_column=raw.get("text_column", ""),
            selected_perceptions=tuple(raw.get("selected_perceptions", ())),
            backend=backend,
            include_word_count=bool(raw.get("include_word_count", True)),
            include_text=bool(raw.get("include_text", False)),
            include_aspect_columns=bool(raw.get("include_aspect_columns", False)),
            lenient=bool(raw.get("lenient", False)),
        )


@dataclass(frozen=True)
class ParsedRow:
    index: int  # 0-based data-row index (header excluded)
    row_id: str
    text: str


@dataclass(frozen=True)
class IngestResult:
    rows: tuple[ParsedRow, ...]
    issues: tuple[str, ...]
    header: tuple[str, ...]


def ingest_csv(
    data: bytes,
    config: AnalysisConfig,
    max_bytes: int = DEFAULT_MAX_UPLOAD_BYTES,
) -> IngestResult:
    """Decode, bound, and parse the upload; malformed rows are reported by
    index rather than failing the ingest."""
    if len(data) > max_bytes:
        raise SizeExceeded(f"{len(data)} bytes exceeds the {max_bytes}-byte limit")
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise NotUtf8(f"upload is not UTF-8: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyFile("upload has no header row") from None
    if not any(cell.strip() for cell in header):
        raise EmptyFile("upload has an empty header row")
    for column in (config.id_column, config.text_column):
        if column not in header:
            raise MissingColumn(f"column {column!r} not in header {header}")
    id_pos = header.index(config.id_column)
    text_pos = header.index(config.text_column)

    rows: list[ParsedRow] = []
    issues: list[str] = []
    for index, cells in enumerate(reader):
        if not cells or all(not c.strip() for c in cells):
            continue  # skip blank lines silently
        if len(cells) <= max(id_pos, text_pos):
            issues.append(f"row {index}: expected {len(header)} fields, got {len(cells)}")
            continue
        rows.append(ParsedRow(index=index, row_id=cells[id_pos], text=cells[text_pos]))
    return IngestResult(rows=tuple(rows), issues=tuple(issues), header=tuple(header))


def preview(rows: Sequence[ParsedRow], n: int = 5) -> list[str]:
    """First n text values in original order."""
    return [row.text for row in rows[:n]]


def word_count(text: str) -> int:
    """Maximal nonempty whitespace-delimited segments."""
    return len(text.split())


def output_columns(config: AnalysisConfig, taxonomy: Optional[Taxonomy] = None) -> list[str]:
    """Output header: id, optional text, selected perceptions in taxonomy
    order, optional aspect detail columns, optional word count."""
    tax = taxonomy or default_taxonomy()
    selected = set(config.selected_perceptions)
    columns = [config.id_column]
    if config.include_text:
        columns.append(config.text_column)
    columns.extend(eid for eid in tax.emotion_ids() if eid in selected)
    columns.extend(tid for tid in THEME_IDS if tid in selected)
    if SENTIMENT_COLUMN in selected:
        if config.include_aspect_columns:
            columns.extend(ASPECT_IDS)
        columns.append(SENTIMENT_COLUMN)
    if config.include_word_count:
        columns.append("word_count")
    return columns


@dataclass(frozen=True)
class AnalysisOutput:
    header: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]
    warnings: tuple[str, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header)
        writer.writerows(self.rows)
        return buf.getvalue()


def _classification_plan(
    config: AnalysisConfig, taxonomy: Taxonomy
) -> list[str]:
    """Perception ids that require a backend call, in column order; the
    sentiment roll-up expands to the four aspects."""
    selected = set(config.selected_perceptions)
    plan = [eid for eid in taxonomy.emotion_ids() if eid in selected]
    plan.extend(tid for tid in THEME_IDS if tid in selected)
    if SENTIMENT_COLUMN in selected:
        plan.extend(ASPECT_IDS)
    return plan


def analyze_rows(
    rows: Sequence[ParsedRow],
    config: AnalysisConfig,
    taxonomy: Optional[Taxonomy] = None,
    backend=None,
) -> AnalysisOutput:
    """Classify every row for the selected perceptions and assemble the
    output table. Backend failures blank the affected cell and add a warning;
    they never abort the run. `backend` overrides the config-built one
    (tests inject instrumented clients here)."""
    tax = taxonomy or default_taxonomy()
    plan = _classification_plan(config, tax)
    if backend is None:
        backend = make_backend(config.backend, taxonomy=tax)

    # Empty-text rows bypass the backend entirely: zeros everywhere.
    records: list[InstructionRecord] = []
    owners: list[tuple[int, str]] = []  # (row position, perception id)
    for pos, row in enumerate(rows):
        if not row.text.strip():
            continue
        for pid in plan:
            records.append(build_record(lookup(tax, pid), row.text))
            owners.append((pos, pid))

    predictions, _ = classify_batch(records, backend, lenient=config.lenient)

    # labels[row position][perception id] -> label or None (failure)
    labels: list[dict[str, Optional[str]]] = [dict() for _ in rows]
    warnings: list[str] = []
    for (pos, pid), prediction in zip(owners, predictions):
        labels[pos][pid] = prediction.label
        if prediction.label is None:
            warnings.append(
                f"row {rows[pos].row_id}: {pid}: {prediction.error or 'unclassified'}"
            )

    selected = set(config.selected_perceptions)
    header = tuple(output_columns(config, tax))
    out_rows: list[tuple[str, ...]] = []
    for pos, row in enumerate(rows):
        empty_text = not row.text.strip()
        cells: list[str] = [row.row_id]
        if config.include_text:
            cells.append(row.text)

        def cell_for(pid: str) -> str:
            if empty_text:
                return "0"
            label = labels[pos].get(pid)
            if label is None:
                return ""  # failure sentinel
            if label in (PRESENT,):
                return "1"
            if label in LABEL_TO_POLARITY:
                return str(int(LABEL_TO_POLARITY[label]))
            return "0"  # not_present

        for eid in tax.emotion_ids():
            if eid in selected:
                cells.append(cell_for(eid))
        for tid in THEME_IDS:
            if tid in selected:
                cells.append(cell_for(tid))
        if SENTIMENT_COLUMN in selected:
            aspect_cells = [cell_for(aid) for aid in ASPECT_IDS]
            if config.include_aspect_columns:
                cells.extend(aspect_cells)
            if empty_text:
                cells.append("0")
            elif "" in aspect_cells:
                cells.append("")
                warnings.append(
                    f"row {row.row_id}: {SENTIMENT_COLUMN}: aspect classification failed"
                )
            else:
                codes = [int(c) for c in aspect_cells]
                cells.append(str(int(overall_sentiment(codes))))
        if config.include_word_count:
            cells.append(str(word_count(row.text)))
        out_rows.append(tuple(cells))
    return AnalysisOutput(header=header, rows=tuple(out_rows), warnings=tuple(warnings))
