"""Hashtag rule stance classification and user-level stance scoring."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Iterable

from .errors import AnalysisError, LexiconError


class Stance(str, enum.Enum):
    # declaration order is the tie-break order used by the linear model
    REMAIN = "remain"
    LEAVE = "leave"
    NONE = "none"

    @classmethod
    def ordered(cls):
        return [cls.REMAIN, cls.LEAVE, cls.NONE]


class Source(str, enum.Enum):
    RULE = "rule"
    MODEL = "model"


@dataclass(frozen=True)
class TweetStance:
    label: Stance
    source: Source


REMAIN_HASHTAGS = (
    "strongerin", "voteremain", "intogether", "labourinforbritain", "moreincommon",
    "greenerin", "catsagainstbrexit", "bremain", "betteroffin", "leadnotleave",
    "remain", "stay", "ukineu", "votein", "voteyes", "yes2eu", "yestoeu",
    "sayyes2europe", "fbpe", "stopbrexit", "stopbrexitsavebritain",
)
LEAVE_HASHTAGS = (
    "leaveeuofficial", "leaveeu", "leave", "labourleave", "votetoleave", "voteleave",
    "takebackcontrol", "ivotedleave", "beleave", "betteroffout", "britainout", "nottip",
    "takecontrol", "voteno", "voteout", "voteleaveeu", "leavers", "vote_leave",
    "leavetheeu", "voteleavetakecontrol", "votedleave",
)
AMBIGUOUS_HASHTAGS = ("euref", "eureferendum", "eu", "uk")


@dataclass(frozen=True)
class HashtagLexicon:
    remain: frozenset
    leave: frozenset
    ambiguous: frozenset = frozenset()

    def __post_init__(self):
        for name in ("remain", "leave", "ambiguous"):
            tags = getattr(self, name)
            bad = [t for t in tags if t != t.lower() or t.startswith("#") or not t]
            if bad:
                raise LexiconError(f"{name} hashtags must be lowercase without '#': {sorted(bad)}")
        for a, b in (("remain", "leave"), ("remain", "ambiguous"), ("leave", "ambiguous")):
            overlap = getattr(self, a) & getattr(self, b)
            if overlap:
                raise LexiconError(f"{a} and {b} hashtags overlap: {sorted(overlap)}")

    @classmethod
    def default(cls) -> "HashtagLexicon":
        """The Brexit stance-indicative / ambiguous hashtag table."""
        return cls(frozenset(REMAIN_HASHTAGS), frozenset(LEAVE_HASHTAGS),
                   frozenset(AMBIGUOUS_HASHTAGS))

    @classmethod
    def from_file(cls, path) -> "HashtagLexicon":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise LexiconError(f"cannot read hashtag lexicon {path}: {exc}") from None
        if not isinstance(data, dict) or not {"remain", "leave"} <= data.keys():
            raise LexiconError(f"{path}: expected an object with 'remain' and 'leave' lists")

        def tags(key):
            values = data.get(key, [])
            if not isinstance(values, list) or not all(isinstance(v, str) for v in values):
                raise LexiconError(f"{path}: '{key}' must be a list of strings")
            return frozenset(v.strip().lstrip("#").lower() for v in values)

        return cls(tags("remain"), tags("leave"), tags("ambiguous"))

    def to_json(self) -> dict:
        return {"remain": sorted(self.remain), "leave": sorted(self.leave),
                "ambiguous": sorted(self.ambiguous)}


def classify_tweet_rules(hashtags: Iterable[str], lexicon: HashtagLexicon) -> TweetStance | None:
    """Rule stance of one tweet from its hashtags.

    Returns ``None`` when the tweet carries no stance-indicative hashtag, which
    routes it to the learned classifier. A tweet with hashtags from both sides
    is terminally non-polarized.
    """
    tags = set(hashtags)
    has_remain = not tags.isdisjoint(lexicon.remain)
    has_leave = not tags.isdisjoint(lexicon.leave)
    if has_remain and has_leave:
        return TweetStance(Stance.NONE, Source.RULE)
    if has_remain:
        return TweetStance(Stance.REMAIN, Source.RULE)
    if has_leave:
        return TweetStance(Stance.LEAVE, Source.RULE)
    return None


@dataclass(frozen=True)
class UserStance:
    prt: int
    prl: int
    score: float | None
    label: Stance


def label_from_score(score: float | None, leave_below: float = 0.4,
                     remain_above: float = 0.6) -> Stance:
    if score is None:
        return Stance.NONE
    if score < leave_below:
        return Stance.LEAVE
    if score > remain_above:
        return Stance.REMAIN
    return Stance.NONE


def user_stance_from_counts(prt: int, prl: int, leave_below: float = 0.4,
                            remain_above: float = 0.6) -> UserStance:
    total = prt + prl
    score = prt / total if total else None
    return UserStance(prt, prl, score, label_from_score(score, leave_below, remain_above))


def user_stance(tweet_stances: Iterable, leave_below: float = 0.4,
                remain_above: float = 0.6) -> UserStance:
    """Aggregate a user's tweet stances into a Remain score and label.

    Accepts :class:`TweetStance` objects or bare :class:`Stance` labels.
    Users with no polarized tweets get ``score=None`` and are non-polarized.
    """
    prt = prl = 0
    for s in tweet_stances:
        label = s.label if isinstance(s, TweetStance) else Stance(s)
        if label is Stance.REMAIN:
            prt += 1
        elif label is Stance.LEAVE:
            prl += 1
    return user_stance_from_counts(prt, prl, leave_below, remain_above)


def comparative_share(users: Iterable) -> tuple[float, float]:
    """(remain_share, leave_share) over polarized users only.

    Items may be :class:`UserStance` or :class:`Stance` values.
    """
    n_remain = n_leave = 0
    for u in users:
        label = u.label if isinstance(u, UserStance) else Stance(u)
        if label is Stance.REMAIN:
            n_remain += 1
        elif label is Stance.LEAVE:
            n_leave += 1
    total = n_remain + n_leave
    if total == 0:
        raise AnalysisError("no polarized users")
    return n_remain / total, n_leave / total


def share_from_counts(n_remain: int, n_leave: int) -> tuple[float, float]:
    total = n_remain + n_leave
    if total == 0:
        raise AnalysisError("no polarized users")
    return n_remain / total, n_leave / total
