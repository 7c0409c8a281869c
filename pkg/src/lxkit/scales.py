"""Survey scale scoring: Likert/NPS responses to ground-truth labels.

Scoring rules:
  * reverse-coded items map raw -> min + max - raw before averaging
  * item means below the neutral point (4 on a 1-7 scale) are negative,
    exactly 4 neutral, above 4 positive
  * the 0-10 recommendation score maps <=6 / 7-8 / >=9 to
    negative / neutral / positive (detractor / passive / promoter)
  * the four aspect codes (-1/0/+1) sum to the overall sentiment sign

Means are computed in exact rational arithmetic so a response set that
averages to exactly 4 can never be misclassified by floating-point noise.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import MismatchedDefinition, OutOfRange, UnknownPerception
from .taxonomy import Polarity, Taxonomy

NEUTRAL_POINT = 4


@dataclass(frozen=True)
class ScaleItem:
    item_id: str
    prompt_text: str
    reversed: bool = False


@dataclass(frozen=True)
class ScaleDefinition:
    perception_id: str
    items: tuple[ScaleItem, ...]
    scale_min: int = 1
    scale_max: int = 7

    def __post_init__(self):
        if self.scale_min >= self.scale_max:
            raise ValueError("scale_min must be below scale_max")
        if not self.items:
            raise ValueError("a scale needs at least one item")


@dataclass(frozen=True)
class LikertResponseSet:
    perception_id: str
    values: tuple[int, ...]


@dataclass(frozen=True)
class EmotionSelection:
    selected: frozenset[str]


def reverse_code(raw: int, scale_min: int, scale_max: int) -> int:
    """Mirror a raw response around the scale midpoint."""
    if not scale_min <= raw <= scale_max:
        raise OutOfRange(f"response {raw} outside [{scale_min}, {scale_max}]")
    return scale_min + scale_max - raw


def scale_mean(responses: LikertResponseSet, definition: ScaleDefinition) -> Fraction:
    """Average the item responses after reverse-coding flagged items.

    Returns an exact Fraction; compare it against the neutral point without
    rounding.
    """
    if responses.perception_id != definition.perception_id:
        raise MismatchedDefinition(
            f"responses for {responses.perception_id!r} scored against "
            f"{definition.perception_id!r}"
        )
    if len(responses.values) != len(definition.items):
        raise MismatchedDefinition(
            f"{len(responses.values)} responses for {len(definition.items)} items"
        )
    total = Fraction(0)
    for value, item in zip(responses.values, definition.items):
        if not definition.scale_min <= value <= definition.scale_max:
            raise MismatchedDefinition(
                f"response {value} outside [{definition.scale_min}, {definition.scale_max}]"
            )
        coded = reverse_code(value, definition.scale_min, definition.scale_max) if item.reversed else value
        total += coded
    return total / len(definition.items)


def polarity_from_mean(mean, neutral_point=NEUTRAL_POINT) -> Polarity:
    if mean < neutral_point:
        return Polarity.NEGATIVE
    if mean == neutral_point:
        return Polarity.NEUTRAL_OR_NO_MENTION
    return Polarity.POSITIVE


def nps_category(score: int) -> Polarity:
    """Detractor (<=6), passive (7-8), promoter (>=9) on the 0-10 scale."""
    if not 0 <= score <= 10:
        raise OutOfRange(f"recommendation score {score} outside [0, 10]")
    if score <= 6:
        return Polarity.NEGATIVE
    if score <= 8:
        return Polarity.NEUTRAL_OR_NO_MENTION
    return Polarity.POSITIVE


def aspect_code(mean) -> int:
    """Integer sign code of one aspect relative to the neutral point."""
    return int(polarity_from_mean(mean))


def overall_sentiment(aspect_codes: Sequence[int]) -> Polarity:
    """Sign of the summed aspect codes."""
    for code in aspect_codes:
        if code not in (-1, 0, 1):
            raise OutOfRange(f"aspect code {code} not in {{-1, 0, +1}}")
    total = sum(aspect_codes)
    if total < 0:
        return Polarity.NEGATIVE
    if total == 0:
        return Polarity.NEUTRAL_OR_NO_MENTION
    return Polarity.POSITIVE


def emotion_label_vector(selection: EmotionSelection, taxonomy: Taxonomy) -> tuple[int, ...]:
    """Binary presence flags in taxonomy emotion order."""
    known = set(taxonomy.emotion_ids())
    foreign = selection.selected - known
    if foreign:
        raise UnknownPerception(sorted(foreign)[0])
    return tuple(1 if eid in selection.selected else 0 for eid in taxonomy.emotion_ids())


# -- default scale definitions -------------------------------------------------
#
# Item text follows the survey instrument; reversal flags are data so
# researchers can override them. Only the trust and price reversals are
# explicitly documented; the remaining flags follow the semantic direction of
# each item (negatively worded items are reversed).

def default_scale_definitions() -> dict[str, ScaleDefinition]:
    def items(*rows: tuple[str, bool]) -> tuple[ScaleItem, ...]:
        return tuple(
            ScaleItem(item_id=f"item{i + 1}", prompt_text=text, reversed=rev)
            for i, (text, rev) in enumerate(rows)
        )

    defs = [
        ScaleDefinition(
            "trust",
            items(
                ("The product/service cannot be trusted at times.", True),
                ("The product/service can be counted on to do what is right.", False),
                ("The product/service has high integrity.", False),
            ),
        ),
        ScaleDefinition(
            "commitment",
            items(
                ("I am very committed to the product/service.", False),
                ("I intend to use the product/service indefinitely.", False),
            ),
        ),
        ScaleDefinition(
            "price",
            items(
                ("The product/service I bought was overpriced.", True),
                ("The price for the product/service was fair.", False),
                ("In general, I am satisfied with the price I paid.", False),
            ),
        ),
        ScaleDefinition(
            "product",
            items(
                ("The quality of the product/service is as good as can be expected.", False),
                ("I am satisfied with the product/service.", False),
                ("The business that made the product/provided the service doesn't care "
                 "enough about how well they perform.", True),
            ),
        ),
        ScaleDefinition(
            "place",
            items(
                ("I am satisfied with the place where I bought/used the product/service "
                 "or how it was delivered.", False),
                ("I have problems with or complaints about the place where I bought/used "
                 "the product/service or how it was delivered.", True),
                ("Because of the place where I bought/used the product/service or how it "
                 "was delivered most of my experience was pleasant.", False),
            ),
        ),
        ScaleDefinition(
            "promotion",
            items(
                ("The communication was very annoying.", True),
                ("I enjoyed the communication.", False),
                ("If the communication was eliminated, I would have been better off.", True),
            ),
        ),
    ]
    return {d.perception_id: d for d in defs}


def scale_definitions_to_json(definitions: Iterable[ScaleDefinition]) -> str:
    return json.dumps(
        [
            {
                "perception_id": d.perception_id,
                "scale_min": d.scale_min,
                "scale_max": d.scale_max,
                "items": [
                    {"item_id": it.item_id, "prompt_text": it.prompt_text, "reversed": it.reversed}
                    for it in d.items
                ],
            }
            for d in definitions
        ],
        indent=2,
    )


def scale_definitions_from_json(text: str) -> dict[str, ScaleDefinition]:
    defs = {}
    for raw in json.loads(text):
        d = ScaleDefinition(
            perception_id=raw["perception_id"],
            scale_min=int(raw.get("scale_min", 1)),
            scale_max=int(raw.get("scale_max", 7)),
            items=tuple(
                ScaleItem(it["item_id"], it["prompt_text"], bool(it["reversed"]))
                for it in raw["items"]
            ),
        )
        defs[d.perception_id] = d
    return defs


def scale_definitions_from_csv(text: str) -> dict[str, ScaleDefinition]:
    """Columns: perception_id, item_id, prompt_text, reversed, scale_min, scale_max."""
    grouped: dict[str, dict] = {}
    for row in csv.DictReader(text.splitlines()):
        g = grouped.setdefault(
            row["perception_id"],
            {"items": [], "scale_min": int(row.get("scale_min") or 1),
             "scale_max": int(row.get("scale_max") or 7)},
        )
        g["items"].append(
            ScaleItem(
                item_id=row["item_id"],
                prompt_text=row["prompt_text"],
                reversed=row["reversed"].strip().lower() in ("1", "true", "yes"),
            )
        )
    return {
        pid: ScaleDefinition(pid, tuple(g["items"]), g["scale_min"], g["scale_max"])
        for pid, g in grouped.items()
    }
