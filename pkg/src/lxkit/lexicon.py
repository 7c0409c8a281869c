"""Deterministic offline classification backend.

Emotions: present iff any taxonomy descriptor occurs as a (possibly
multi-word) case-folded token phrase in the text. Themes and aspects: the
valence wordlists below are scored inside sentences anchored by one of the
perception's keywords; positive-minus-negative hits decide the polarity,
no anchored sentence means neutral/no-mention.

The wordlists are intentionally small and fixed: this backend exists to make
pipelines testable and reproducible, not to compete with a trained model.
"""
from __future__ import annotations

import re

from .instructions import NEGATIVE, NEUTRAL, NOT_PRESENT, POSITIVE, PRESENT
from .taxonomy import Perception, PerceptionKind, Taxonomy, lookup

POSITIVE_WORDS = frozenset(
    {
        "good", "great", "excellent", "amazing", "wonderful", "fantastic", "best",
        "love", "loved", "like", "liked", "enjoy", "enjoyed", "happy", "pleased",
        "satisfied", "satisfying", "fair", "reasonable", "impressed", "impressive",
        "pleasant", "recommend", "recommended", "perfect", "awesome", "outstanding",
        "reliable", "helpful", "friendly", "easy", "worth", "definitely",
    }
)

NEGATIVE_WORDS = frozenset(
    {
        "bad", "poor", "terrible", "awful", "horrible", "worst", "hate", "hated",
        "dislike", "disliked", "disappointed", "disappointing", "unfair",
        "overpriced", "expensive", "annoying", "annoyed", "problem", "problems",
        "complaint", "complaints", "broken", "slow", "rude", "dirty", "unreliable",
        "never", "waste", "useless", "difficult", "unhappy",
    }
)

_SENTENCE_RE = re.compile(r"[.!?]+")
_WORD_RE = re.compile(r"[a-z']+")


def _words(text: str) -> list[str]:
    return _WORD_RE.findall(text.casefold())


def _phrase_in(words: list[str], phrase: str) -> bool:
    target = phrase.casefold().split()
    k = len(target)
    if k == 1:
        return target[0] in words
    return any(words[i:i + k] == target for i in range(len(words) - k + 1))


def _emotion_present(text: str, perception: Perception) -> bool:
    words = _words(text)
    return any(_phrase_in(words, d) for d in perception.descriptors)


def _keyword_polarity(text: str, perception: Perception) -> str:
    score = 0
    anchored = False
    for sentence in _SENTENCE_RE.split(text):
        words = _words(sentence)
        if not any(_phrase_in(words, k) for k in perception.descriptors):
            continue
        anchored = True
        score += sum(1 for w in words if w in POSITIVE_WORDS)
        score -= sum(1 for w in words if w in NEGATIVE_WORDS)
    if not anchored or score == 0:
        return NEUTRAL
    return POSITIVE if score > 0 else NEGATIVE


def lexicon_classify(text: str, perception: Perception, taxonomy: Taxonomy) -> str:
    """Label for one perception over one text; pure function of its inputs."""
    lookup(taxonomy, perception.id)  # raises UnknownPerception for foreign ids
    if perception.kind is PerceptionKind.EMOTION:
        return PRESENT if _emotion_present(text, perception) else NOT_PRESENT
    return _keyword_polarity(text, perception)
