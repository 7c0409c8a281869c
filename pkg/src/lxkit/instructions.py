"""Instruction-record construction, stratified splits, class balancing,
and option-letter decoding.

Records pair an input text with a per-perception task instruction whose
answer space is rendered as lettered options, so a model reply can be decoded
from its leading option letter alone.
"""
from __future__ import annotations

import json
import re
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DegenerateClass, EmptyStratumWarning, Unparseable, WrongKind
from .taxonomy import Perception, PerceptionKind, Polarity, Taxonomy

# Canonical label tokens used in records, JSONL files, and decoding maps.
PRESENT = "present"
NOT_PRESENT = "not_present"
POSITIVE = "positive"
NEGATIVE = "negative"
NEUTRAL = "neutral"

POLARITY_TO_LABEL = {
    Polarity.POSITIVE: POSITIVE,
    Polarity.NEGATIVE: NEGATIVE,
    Polarity.NEUTRAL_OR_NO_MENTION: NEUTRAL,
}
LABEL_TO_POLARITY = {v: k for k, v in POLARITY_TO_LABEL.items()}


class Task(str, Enum):
    EMOTION_DETECTION = "emotion_detection"
    POLARITY_DETECTION = "polarity_detection"
    SENTIMENT_ANALYSIS = "sentiment_analysis"


@dataclass(frozen=True)
class InstructionRecord:
    task: Task
    perception_id: str
    instruction_text: str
    input_text: str
    options: tuple[tuple[str, str], ...]  # (letter, label) in option order
    target: str | None = None
    source: str = "survey"

    def __post_init__(self):
        letters = [letter for letter, _ in self.options]
        expected = [chr(ord("A") + i) for i in range(len(letters))]
        if letters != expected:
            raise ValueError(f"option letters must be consecutive from A, got {letters}")
        if self.target is not None and self.target not in self.labels():
            raise ValueError(f"target {self.target!r} not among options {self.labels()}")

    def labels(self) -> tuple[str, ...]:
        return tuple(label for _, label in self.options)


def _require_kind(perception: Perception, kind: PerceptionKind) -> None:
    if perception.kind is not kind:
        raise WrongKind(f"{perception.id} is {perception.kind.value}, expected {kind.value}")


def build_emotion_prompt(perception: Perception) -> tuple[str, tuple[tuple[str, str], ...]]:
    _require_kind(perception, PerceptionKind.EMOTION)
    name = perception.display_name
    instruction = (
        f"Detect emotion ({name}) present or not in the given text. "
        f"Provide your answer by choosing the option letter: "
        f"A. {name} is present in the text, or B. {name} is not present in the text."
    )
    return instruction, (("A", PRESENT), ("B", NOT_PRESENT))


def _three_way_options() -> tuple[tuple[str, str], ...]:
    return (("A", POSITIVE), ("B", NEGATIVE), ("C", NEUTRAL))


def build_polarity_prompt(theme: Perception) -> tuple[str, tuple[tuple[str, str], ...]]:
    _require_kind(theme, PerceptionKind.EVALUATION_THEME)
    name = theme.display_name
    instruction = (
        f"Determine the polarity for perception theme ({name}) in the given text. "
        f"Choose from {name} positive, negative, or neutral. "
        f"Provide your answer by choosing the option letter: "
        f"A. {name} positive, B. {name} negative, or C. {name} neutral or no mention."
    )
    return instruction, _three_way_options()


def build_sentiment_prompt(aspect: Perception) -> tuple[str, tuple[tuple[str, str], ...]]:
    _require_kind(aspect, PerceptionKind.SENTIMENT_ASPECT)
    name = aspect.display_name
    instruction = (
        f"Determine the sentiment for marketing aspect ({name}) in the given text. "
        f"Choose from {name} positive, negative, or neutral. "
        f"Provide your answer by choosing the option letter: "
        f"A. {name} positive, B. {name} negative, or C. {name} neutral or no mention."
    )
    return instruction, _three_way_options()


def build_record(
    perception: Perception,
    input_text: str,
    target: str | None = None,
    source: str = "survey",
) -> InstructionRecord:
    """One inference- or training-time record for a single perception."""
    if perception.kind is PerceptionKind.EMOTION:
        task, (instruction, options) = Task.EMOTION_DETECTION, build_emotion_prompt(perception)
    elif perception.kind is PerceptionKind.EVALUATION_THEME:
        task, (instruction, options) = Task.POLARITY_DETECTION, build_polarity_prompt(perception)
    else:
        task, (instruction, options) = Task.SENTIMENT_ANALYSIS, build_sentiment_prompt(perception)
    return InstructionRecord(
        task=task,
        perception_id=perception.id,
        instruction_text=instruction,
        input_text=input_text,
        options=options,
        target=target,
        source=source,
    )


@dataclass(frozen=True)
class LabeledText:
    """One authored text with whatever ground-truth labels are available.

    Perceptions without a label simply emit no record.
    """

    text: str
    emotions: Mapping[str, bool] = field(default_factory=dict)
    theme_polarities: Mapping[str, Polarity] = field(default_factory=dict)
    aspect_polarities: Mapping[str, Polarity] = field(default_factory=dict)
    source: str = "survey"


def build_dataset(texts: Iterable[LabeledText], taxonomy: Taxonomy) -> list[InstructionRecord]:
    """One record per (text, perception) pair that has a label."""
    records: list[InstructionRecord] = []
    for lt in texts:
        for p in taxonomy.emotions:
            if p.id in lt.emotions:
                target = PRESENT if lt.emotions[p.id] else NOT_PRESENT
                records.append(build_record(p, lt.text, target, lt.source))
        for p in taxonomy.evaluation_themes:
            if p.id in lt.theme_polarities:
                records.append(
                    build_record(p, lt.text, POLARITY_TO_LABEL[lt.theme_polarities[p.id]], lt.source)
                )
        for p in taxonomy.sentiment_aspects:
            if p.id in lt.aspect_polarities:
                records.append(
                    build_record(p, lt.text, POLARITY_TO_LABEL[lt.aspect_polarities[p.id]], lt.source)
                )
    return records


# -- stratified splitting -------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    train: float = 0.64
    validation: float = 0.16
    test: float = 0.20
    seed: int = 0

    def __post_init__(self):
        if abs(self.train + self.validation + self.test - 1.0) > 1e-9:
            raise ValueError("split fractions must sum to 1")


@dataclass(frozen=True)
class SplitResult:
    train: tuple[InstructionRecord, ...]
    validation: tuple[InstructionRecord, ...]
    test: tuple[InstructionRecord, ...]


def _largest_remainder(total: int, fractions: Sequence[float]) -> list[int]:
    """Apportion `total` across parts, floors first then by descending
    remainder; remainder ties go to the earlier part."""
    exact = [total * f for f in fractions]
    sizes = [int(e) for e in exact]
    leftover = total - sum(sizes)
    order = sorted(range(len(fractions)), key=lambda i: (-(exact[i] - sizes[i]), i))
    for i in order[:leftover]:
        sizes[i] += 1
    return sizes


def stratified_split(records: Sequence[InstructionRecord], spec: SplitSpec) -> SplitResult:
    """Split within each (task, perception, target) stratum at the spec
    fractions; deterministic given the seed."""
    for r in records:
        if r.target is None:
            raise ValueError("stratified_split requires every record to carry a target")
    strata: dict[tuple[str, str, str], list[InstructionRecord]] = {}
    for r in records:
        strata.setdefault((r.task.value, r.perception_id, r.target), []).append(r)

    rng = np.random.default_rng(spec.seed)
    parts: tuple[list[InstructionRecord], ...] = ([], [], [])
    for key in sorted(strata):
        group = strata[key]
        if len(group) < 5:
            warnings.warn(
                f"stratum {key} has only {len(group)} records", EmptyStratumWarning
            )
        order = rng.permutation(len(group))
        shuffled = [group[i] for i in order]
        n_train, n_val, n_test = _largest_remainder(
            len(group), (spec.train, spec.validation, spec.test)
        )
        parts[0].extend(shuffled[:n_train])
        parts[1].extend(shuffled[n_train:n_train + n_val])
        parts[2].extend(shuffled[n_train + n_val:])
    return SplitResult(tuple(parts[0]), tuple(parts[1]), tuple(parts[2]))


# -- class balancing ------------------------------------------------------------

class BalanceStrategy(str, Enum):
    UNDERSAMPLE_MAJORITY = "undersample_majority"
    OVERSAMPLE_MINORITY = "oversample_minority"


@dataclass(frozen=True)
class BalanceSpec:
    strategy: BalanceStrategy
    seed: int = 0


def balance(records: Sequence[InstructionRecord], spec: BalanceSpec) -> list[InstructionRecord]:
    """Equalize label-class counts within one perception's records."""
    if not records:
        return []
    perceptions = {(r.task, r.perception_id) for r in records}
    if len(perceptions) > 1:
        raise ValueError(f"balance expects records of one perception, got {sorted(p for _, p in perceptions)}")
    classes: dict[str, list[InstructionRecord]] = {label: [] for label in records[0].labels()}
    for r in records:
        if r.target is None:
            raise ValueError("balance requires every record to carry a target")
        classes[r.target].append(r)
    empty = [label for label, group in classes.items() if not group]
    if empty:
        raise DegenerateClass(f"no records for label(s) {empty}")

    rng = np.random.default_rng(spec.seed)
    counts = {label: len(group) for label, group in classes.items()}
    out: list[InstructionRecord] = []
    if spec.strategy is BalanceStrategy.UNDERSAMPLE_MAJORITY:
        floor = min(counts.values())
        for label in classes:
            group = classes[label]
            if len(group) == floor:
                out.extend(group)
            else:
                picked = rng.choice(len(group), size=floor, replace=False)
                out.extend(group[i] for i in sorted(picked))
    else:
        ceiling = max(counts.values())
        for label in classes:
            group = classes[label]
            out.extend(group)
            shortfall = ceiling - len(group)
            if shortfall:
                picked = rng.choice(len(group), size=shortfall, replace=True)
                out.extend(group[i] for i in picked)
    return out


# -- option-letter decoding -------------------------------------------------------

# A leading standalone letter, optionally preceded by punctuation/whitespace,
# not run into a longer word ("B." yes, "Because" no).
_LETTER_RE = re.compile(r"^[\W_]*([A-Za-z])(?![A-Za-z0-9])")


def parse_option_letter(raw_output: str, options: Sequence[tuple[str, str]]) -> str:
    """Map a model reply to its option label via the leading option letter."""
    match = _LETTER_RE.match(raw_output or "")
    if match:
        letter = match.group(1).upper()
        for option_letter, label in options:
            if option_letter == letter:
                return label
    raise Unparseable(f"no option letter in {raw_output!r}")


def fallback_label(options: Sequence[tuple[str, str]]) -> str:
    """Lenient-mode default: neutral for three-way tasks, not-present for binary."""
    labels = [label for _, label in options]
    if NEUTRAL in labels:
        return NEUTRAL
    if NOT_PRESENT in labels:
        return NOT_PRESENT
    return labels[-1]


# -- JSON-lines serialization -----------------------------------------------------

def record_to_dict(record: InstructionRecord) -> dict:
    return {
        "task": record.task.value,
        "perception": record.perception_id,
        "instruction": record.instruction_text,
        "input": record.input_text,
        "options": [[letter, label] for letter, label in record.options],
        "target": record.target,
        "source": record.source,
    }


def record_from_dict(raw: dict) -> InstructionRecord:
    return InstructionRecord(
        task=Task(raw["task"]),
        perception_id=raw["perception"],
        instruction_text=raw["instruction"],
        input_text=raw["input"],
        options=tuple((letter, label) for letter, label in raw["options"]),
        target=raw.get("target"),
        source=raw.get("source", "survey"),
    )


def records_to_jsonl(records: Iterable[InstructionRecord]) -> str:
    return "\n".join(json.dumps(record_to_dict(r), ensure_ascii=False) for r in records)


def records_from_jsonl(text: str) -> list[InstructionRecord]:
    return [record_from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]


def merge_neutral_supplement(
    records: Sequence[InstructionRecord], supplement: Sequence[InstructionRecord]
) -> list[InstructionRecord]:
    """Append externally sourced neutral records (tagged source='review')
    without touching other strata."""
    extra = [replace(r, source="review") if r.source != "review" else r for r in supplement]
    for r in extra:
        if r.target != NEUTRAL:
            raise ValueError("supplement records must carry the neutral target")
    return list(records) + extra
