"""Word-list sentiment scoring with a short negation window."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

from .errors import LexiconError

NEGATION_WINDOW = 2


class Sentiment(str, enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    NEUTRAL = "neutral"


@dataclass(frozen=True)
class SentimentLexicon:
    polarity: dict
    negations: frozenset

    def __post_init__(self):
        bad = {t: p for t, p in self.polarity.items() if not -1.0 <= p <= 1.0}
        if bad:
            raise LexiconError(f"polarities outside [-1, 1]: {bad}")
        overlap = self.negations & self.polarity.keys()
        if overlap:
            raise LexiconError(f"negation terms also carry polarity: {sorted(overlap)}")

    @classmethod
    def from_files(cls, lexicon_path=None, negations_path=None) -> "SentimentLexicon":
        """Read ``term,polarity`` CSV and a one-per-line negation list.

        Either path may be omitted to use the bundled English default.
        """
        data = resources.files("stancekit").joinpath("data")
        lex_text = (data.joinpath("sentiment_lexicon.csv").read_text("utf-8") if lexicon_path is None
                    else open(lexicon_path, encoding="utf-8").read())
        neg_text = (data.joinpath("negations.txt").read_text("utf-8") if negations_path is None
                    else open(negations_path, encoding="utf-8").read())
        polarity = {}
        for row in csv.DictReader(lex_text.splitlines()):
            try:
                polarity[row["term"].strip().lower()] = float(row["polarity"])
            except (KeyError, TypeError, ValueError):
                raise LexiconError(f"bad sentiment lexicon row: {row}") from None
        negations = frozenset(line.strip().lower() for line in neg_text.splitlines()
                              if line.strip() and not line.startswith("#"))
        return cls(polarity, negations)

    @classmethod
    def default(cls) -> "SentimentLexicon":
        return cls.from_files()

    def inverted(self) -> "SentimentLexicon":
        return SentimentLexicon({t: -p for t, p in self.polarity.items()}, self.negations)


def label_for(score: float) -> Sentiment:
    if score > 0:
        return Sentiment.POSITIVE
    if score < 0:
        return Sentiment.NEGATIVE
    return Sentiment.NEUTRAL


def score_sentiment(doc: Sequence[str], lexicon: SentimentLexicon) -> tuple[float, Sentiment]:
    """Sum token polarities, flipping a token's sign when a negation term
    appears among the two tokens before it."""
    score = 0.0
    for i, tok in enumerate(doc):
        p = lexicon.polarity.get(tok)
        if p is None:
            continue
        window = doc[max(0, i - NEGATION_WINDOW):i]
        if any(w in lexicon.negations for w in window):
            p = -p
        score += p
    return score, label_for(score)
