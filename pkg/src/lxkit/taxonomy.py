"""Canonical perception taxonomy.

Defines the 16 consumption emotions (with their descriptor synonyms), the 3
deliberative evaluation themes (trust, commitment, recommendation), and the 4
marketing-mix sentiment aspects (price, product, place, promotion). Every
other module keys its labels, prompts, and output columns off these ids, so
the ordering here is the one source of truth for column order everywhere.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Iterator

from .errors import UnknownPerception


class PerceptionKind(str, Enum):
    EMOTION = "emotion"
    EVALUATION_THEME = "evaluation_theme"
    SENTIMENT_ASPECT = "sentiment_aspect"


class Polarity(IntEnum):
    """Three-way outcome for themes and aspects; integer encoding is part of
    the CSV contract and must stay -1/0/+1."""

    NEGATIVE = -1
    NEUTRAL_OR_NO_MENTION = 0
    POSITIVE = 1


@dataclass(frozen=True)
class Perception:
    id: str
    kind: PerceptionKind
    display_name: str
    descriptors: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind is PerceptionKind.EMOTION and not self.descriptors:
            raise ValueError(f"emotion {self.id!r} requires descriptors")


# (id, display name, descriptors). Emotion order is load-bearing: it fixes
# label-vector order and output CSV column order.
_EMOTION_ROWS = (
    ("anger", "Anger", ("frustrated", "angry", "irritated")),
    ("discontent", "Discontent", ("unfulfilled", "discontented")),
    ("worry", "Worry", ("nervous", "worried", "tense")),
    ("sadness", "Sadness", ("depressed", "sad", "miserable")),
    ("fear", "Fear", ("scared", "afraid", "panicky")),
    ("shame", "Shame", ("embarrassed", "ashamed", "humiliated")),
    ("envy", "Envy", ("envious", "jealous")),
    ("loneliness", "Loneliness", ("lonely", "homesick")),
    ("romantic_love", "Romantic Love", ("sexy", "romantic", "passionate")),
    ("love", "Love", ("loving", "sentimental", "warm hearted")),
    ("peacefulness", "Peacefulness", ("calm", "peaceful")),
    ("contentment", "Contentment", ("contented", "fulfilled")),
    ("optimism", "Optimism", ("optimistic", "encouraged", "hopeful")),
    ("joy", "Joy", ("happy", "pleased", "joyful")),
    ("excitement", "Excitement", ("excited", "thrilled", "enthusiastic")),
    ("surprise", "Surprise", ("surprised", "amazed", "astonished")),
)

# Theme/aspect descriptors double as the lexicon backend's anchor keywords.
_THEME_ROWS = (
    ("trust", "Trust", ("trust", "trusted", "trustworthy", "reliable", "honest")),
    ("commitment", "Commitment", ("commitment", "committed", "loyal", "loyalty")),
    ("recommendation", "Recommendation", ("recommend", "recommended", "recommendation")),
)

_ASPECT_ROWS = (
    ("price", "Price", ("price", "prices", "priced", "pricing", "cost", "costs", "overpriced")),
    ("product", "Product", ("product", "products", "quality", "service", "performance", "item")),
    ("place", "Place", ("place", "store", "location", "shop", "delivery", "delivered", "shipping")),
    ("promotion", "Promotion", ("promotion", "promotions", "communication", "advertising",
                                "advertisement", "ads", "email", "emails", "staff", "support")),
)

# "communication" is the survey-facing name for the promotion aspect.
ASPECT_ALIASES = {"communication": "promotion"}


@dataclass(frozen=True)
class Taxonomy:
    emotions: tuple[Perception, ...]
    evaluation_themes: tuple[Perception, ...]
    sentiment_aspects: tuple[Perception, ...]

    def __post_init__(self):
        ids = [p.id for p in self.all()]
        if len(ids) != len(set(ids)):
            raise ValueError("perception ids must be unique within a taxonomy")

    def all(self) -> tuple[Perception, ...]:
        return self.emotions + self.evaluation_themes + self.sentiment_aspects

    def emotion_ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.emotions)

    def __iter__(self) -> Iterator[Perception]:
        return iter(self.all())

    def to_json(self) -> str:
        def enc(p: Perception) -> dict:
            return {
                "id": p.id,
                "kind": p.kind.value,
                "display_name": p.display_name,
                "descriptors": list(p.descriptors),
            }

        return json.dumps(
            {
                "emotions": [enc(p) for p in self.emotions],
                "evaluation_themes": [enc(p) for p in self.evaluation_themes],
                "sentiment_aspects": [enc(p) for p in self.sentiment_aspects],
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "Taxonomy":
        raw = json.loads(text)

        def dec(d: dict) -> Perception:
            return Perception(
                id=d["id"],
                kind=PerceptionKind(d["kind"]),
                display_name=d["display_name"],
                descriptors=tuple(d.get("descriptors", ())),
            )

        return cls(
            emotions=tuple(dec(d) for d in raw["emotions"]),
            evaluation_themes=tuple(dec(d) for d in raw["evaluation_themes"]),
            sentiment_aspects=tuple(dec(d) for d in raw["sentiment_aspects"]),
        )


def default_taxonomy() -> Taxonomy:
    """The fixed 16-emotion / 3-theme / 4-aspect taxonomy."""
    return Taxonomy(
        emotions=tuple(
            Perception(i, PerceptionKind.EMOTION, n, d) for i, n, d in _EMOTION_ROWS
        ),
        evaluation_themes=tuple(
            Perception(i, PerceptionKind.EVALUATION_THEME, n, d) for i, n, d in _THEME_ROWS
        ),
        sentiment_aspects=tuple(
            Perception(i, PerceptionKind.SENTIMENT_ASPECT, n, d) for i, n, d in _ASPECT_ROWS
        ),
    )


def lookup(taxonomy: Taxonomy, perception_id: str) -> Perception:
    """Return the perception with this id; aliases resolve to their canonical
    perception. Raises UnknownPerception when absent."""
    wanted = ASPECT_ALIASES.get(perception_id, perception_id)
    for p in taxonomy:
        if p.id == wanted:
            return p
    raise UnknownPerception(perception_id)
