"""Tweet corpus ingestion, filtering and descriptive statistics.

Input is newline-delimited JSON, one tweet per line. Required keys are
``id, user_id, created_at, text, lang, retweet_count, like_count``;
``hashtags``, ``mentions`` and ``user_followers`` are optional.
"""

from __future__ import annotations

import csv
import json
import logging
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator

from .errors import CorpusError, RecordError

logger = logging.getLogger(__name__)

REQUIRED_FIELDS = ("id", "user_id", "created_at", "text", "lang", "retweet_count", "like_count")

_HASHTAG_RE = re.compile(r"(?<!\w)#(\w+)")
_MENTION_RE = re.compile(r"(?<!\w)@(\w+)")
_EDGE_PUNCT_RE = re.compile(r"^[^\w]+|[^\w]+$")


@dataclass(frozen=True)
class TweetRecord:
    id: str
    user_id: str
    created_at: datetime
    text: str
    lang: str
    retweet_count: int
    like_count: int
    hashtags: frozenset = frozenset()
    mentions: frozenset = frozenset()
    user_followers: int | None = None

    @property
    def month(self) -> str:
        return month_key(self.created_at)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "user_id": self.user_id,
            "created_at": format_timestamp(self.created_at),
            "text": self.text,
            "lang": self.lang,
            "retweet_count": self.retweet_count,
            "like_count": self.like_count,
            "hashtags": sorted(self.hashtags),
            "mentions": sorted(self.mentions),
            "user_followers": self.user_followers,
        }


@dataclass(frozen=True)
class TimeWindow:
    """Half-open UTC interval ``[start, end)``."""

    start: datetime
    end: datetime

    def __post_init__(self):
        if self.start.tzinfo is None or self.end.tzinfo is None:
            raise ValueError("TimeWindow bounds must be timezone-aware")
        if not self.start < self.end:
            raise ValueError(f"empty time window: {self.start} >= {self.end}")

    def __contains__(self, ts: datetime) -> bool:
        return self.start <= ts < self.end


@dataclass
class CorpusStats:
    n_tweets: int
    n_users: int
    tweets_per_month: dict[str, int]
    users_by_post_count: dict[int, int]
    language_shares: dict[str, float]
    mean_followers: float | None
    monthly_engagement: dict[str, tuple[float, float]]


@dataclass
class InputSchema:
    """Maps canonical field names to the keys used by a particular export.

    Only fields that differ need to be listed, e.g.
    ``InputSchema({"id": "id_str", "created_at": "timestamp"})``.
    """

    field_map: dict[str, str] = field(default_factory=dict)

    def key(self, name: str) -> str:
        return self.field_map.get(name, name)


@dataclass
class RejectLog:
    rows: list[tuple[int, str]] = field(default_factory=list)

    def add(self, line_no: int, reason: str):
        self.rows.append((line_no, reason))

    def __len__(self):
        return len(self.rows)

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["line_no", "reason"])
            writer.writerows(self.rows)


def month_key(ts: datetime) -> str:
    return f"{ts.year:04d}-{ts.month:02d}"


def parse_timestamp(value) -> datetime:
    """Parse an ISO-8601 timestamp; naive values are taken as UTC."""
    if not isinstance(value, str) or not value.strip():
        raise ValueError(f"unparseable timestamp {value!r}")
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).replace(microsecond=0)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def extract_hashtags(text: str) -> frozenset:
    return frozenset(m.lower() for m in _HASHTAG_RE.findall(text))


def extract_mentions(text: str) -> frozenset:
    return frozenset(m.lower() for m in _MENTION_RE.findall(text))


def _normalize_tags(values, prefix: str) -> frozenset:
    if not isinstance(values, list):
        raise ValueError(f"expected a list, got {type(values).__name__}")
    out = set()
    for v in values:
        if not isinstance(v, str):
            raise ValueError(f"non-string entry {v!r}")
        tag = _EDGE_PUNCT_RE.sub("", v.lstrip(prefix)).lower()
        if tag:
            out.add(tag)
    return frozenset(out)


def _count(obj: dict, key: str, optional=False):
    value = obj.get(key)
    if value is None and optional:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"'{key}' must be an integer, got {value!r}")
    if value < 0:
        raise ValueError(f"'{key}' must be non-negative, got {value}")
    return value


def parse_record(obj, schema: InputSchema | None = None) -> TweetRecord:
    """Validate one decoded JSON object and build a :class:`TweetRecord`.

    Raises ``ValueError`` describing the first problem found.
    """
    schema = schema or InputSchema()
    if not isinstance(obj, dict):
        raise ValueError("line is not a JSON object")
    raw = {name: obj.get(schema.key(name)) for name in
           REQUIRED_FIELDS + ("hashtags", "mentions", "user_followers")}
    for name in REQUIRED_FIELDS:
        if raw[name] is None:
            raise ValueError(f"missing required field '{name}'")

    tweet_id = raw["id"]
    if isinstance(tweet_id, int) and not isinstance(tweet_id, bool):
        tweet_id = str(tweet_id)
    if not isinstance(tweet_id, str) or not tweet_id:
        raise ValueError("'id' must be a non-empty string")
    user_id = raw["user_id"]
    if isinstance(user_id, int) and not isinstance(user_id, bool):
        user_id = str(user_id)
    if not isinstance(user_id, str) or not user_id:
        raise ValueError("'user_id' must be a non-empty string")
    if not isinstance(raw["text"], str):
        raise ValueError("'text' must be a string")
    if not isinstance(raw["lang"], str):
        raise ValueError("'lang' must be a string")
    try:
        created_at = parse_timestamp(raw["created_at"])
    except ValueError:
        raise ValueError(f"unparseable created_at {raw['created_at']!r}") from None

    text = raw["text"]
    hashtags = (_normalize_tags(raw["hashtags"], "#") if raw["hashtags"] is not None
                else extract_hashtags(text))
    mentions = (_normalize_tags(raw["mentions"], "@") if raw["mentions"] is not None
                else extract_mentions(text))
    return TweetRecord(
        id=tweet_id,
        user_id=user_id,
        created_at=created_at,
        text=text,
        lang=raw["lang"].lower(),
        retweet_count=_count(raw, "retweet_count"),
        like_count=_count(raw, "like_count"),
        hashtags=hashtags,
        mentions=mentions,
        user_followers=_count(raw, "user_followers", optional=True),
    )


def load_corpus(path, schema: InputSchema | None = None, *, strict: bool = False,
                rejects: RejectLog | None = None) -> Iterator[TweetRecord]:
    """Stream validated tweets from a JSONL file in file order.

    Malformed lines are skipped and appended to ``rejects``; with
    ``strict=True`` the first one raises :class:`RecordError` instead.
    A repeated id keeps the first occurrence.
    """
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"input file not found: {path}")
    if rejects is None:
        rejects = RejectLog()
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                if line_no == 1 and isinstance(obj, dict) and obj.keys() == {"meta"}:
                    continue  # artifact header written by the CLI
                record = parse_record(obj, schema)
            except (ValueError, json.JSONDecodeError) as exc:
                reason = str(exc) if not isinstance(exc, json.JSONDecodeError) else f"invalid JSON: {exc.msg}"
                if strict:
                    raise RecordError(line_no, reason) from None
                rejects.add(line_no, reason)
                continue
            if record.id in seen:
                logger.warning("line %d: duplicate id %s skipped", line_no, record.id)
                rejects.add(line_no, "duplicate id")
                continue
            seen.add(record.id)
            yield record


def write_corpus(tweets: Iterable[TweetRecord], path):
    with open(path, "w", encoding="utf-8") as fh:
        for t in tweets:
            fh.write(json.dumps(t.to_json(), ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def filter_corpus(tweets: Iterable[TweetRecord], lang: str | None = None,
                  window: TimeWindow | None = None) -> Iterator[TweetRecord]:
    lang = lang.lower() if lang else None
    for t in tweets:
        if lang is not None and t.lang != lang:
            continue
        if window is not None and t.created_at not in window:
            continue
        yield t


def word_count(text: str) -> int:
    return len(text.split())


def influence_filter(tweets: Iterable[TweetRecord], min_retweets: int = 10,
                     min_words: int = 10) -> Iterator[TweetRecord]:
    """Drop tweets retweeted fewer than ``min_retweets`` times or shorter
    than ``min_words`` whitespace tokens."""
    if min_retweets < 0 or min_words < 0:
        raise ValueError("influence thresholds must be non-negative")
    for t in tweets:
        if t.retweet_count >= min_retweets and word_count(t.text) >= min_words:
            yield t


def corpus_stats(tweets: Iterable[TweetRecord]) -> CorpusStats:
    per_month = Counter()
    per_user = Counter()
    langs = Counter()
    retweets = defaultdict(int)
    likes = defaultdict(int)
    followers: dict[str, int] = {}
    n = 0
    for t in tweets:
        n += 1
        m = t.month
        per_month[m] += 1
        per_user[t.user_id] += 1
        langs[t.lang] += 1
        retweets[m] += t.retweet_count
        likes[m] += t.like_count
        if t.user_followers is not None:
            # latest value wins; follower counts drift over a collection period
            followers[t.user_id] = t.user_followers
    if n == 0:
        raise CorpusError("empty corpus")

    months = sorted(per_month)
    return CorpusStats(
        n_tweets=n,
        n_users=len(per_user),
        tweets_per_month={m: per_month[m] for m in months},
        users_by_post_count=dict(sorted(Counter(per_user.values()).items())),
        language_shares={k: langs[k] / n for k in sorted(langs)},
        mean_followers=(sum(followers.values()) / len(followers)) if followers else None,
        monthly_engagement={m: (retweets[m] / per_month[m], likes[m] / per_month[m]) for m in months},
    )
