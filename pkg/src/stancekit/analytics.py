"""Cross-cutting analyses over classified tweets: merged stance routing,
monthly series, pre/post transitions, bot-score bins, mentions, cross-tabs
and trend correlation."""

from __future__ import annotations

import csv
import enum
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import TweetRecord, month_key
from .errors import AnalysisError
from .sentiment import Sentiment
from .stance_ml import LinearStanceModel, predict, tokenize
from .stance_rules import (
    HashtagLexicon,
    Source,
    Stance,
    TweetStance,
    UserStance,
    classify_tweet_rules,
    user_stance,
)

DEFAULT_EVENT_DATE = datetime(2016, 6, 23, tzinfo=timezone.utc)
BOT_THRESHOLD = 0.8
MENTION_THRESHOLD = 10000


def classify_all(tweets: Iterable[TweetRecord], lexicon: HashtagLexicon,
                 model: LinearStanceModel | None) -> dict[str, TweetStance]:
    """Rule stance where a tweet has stance hashtags, model prediction otherwise."""
    out = {}
    for t in tweets:
        stance = classify_tweet_rules(t.hashtags, lexicon)
        if stance is None:
            if model is None:
                raise AnalysisError(f"tweet {t.id} needs the learned model but none was given")
            label, _ = predict(model, tokenize(t.text))
            stance = TweetStance(label, Source.MODEL)
        out[t.id] = stance
    return out


def user_stances(tweet_stances: Sequence[TweetStance], user_ids: Sequence[str],
                 leave_below: float = 0.4, remain_above: float = 0.6) -> dict[str, UserStance]:
    by_user = defaultdict(list)
    for s, u in zip(tweet_stances, user_ids, strict=True):
        by_user[u].append(s)
    return {u: user_stance(v, leave_below, remain_above) for u, v in sorted(by_user.items())}


@dataclass
class StancePoint:
    remain_share: float | None
    leave_share: float | None
    polarized_users: int


def _as_month(ts) -> str:
    return month_key(ts) if isinstance(ts, datetime) else str(ts)


def monthly_stance_series(tweet_stances: Sequence[TweetStance], timestamps: Sequence,
                          user_ids: Sequence[str], leave_below: float = 0.4,
                          remain_above: float = 0.6) -> dict[str, StancePoint]:
    """Per-month shares of polarized users, each user's stance recomputed
    from that month's tweets alone."""
    grouped = defaultdict(lambda: defaultdict(list))
    for s, ts, u in zip(tweet_stances, timestamps, user_ids, strict=True):
        grouped[_as_month(ts)][u].append(s)
    series = {}
    for month in sorted(grouped):
        labels = Counter(user_stance(v, leave_below, remain_above).label
                         for v in grouped[month].values())
        n = labels[Stance.REMAIN] + labels[Stance.LEAVE]
        if n:
            series[month] = StancePoint(labels[Stance.REMAIN] / n, labels[Stance.LEAVE] / n, n)
        else:
            series[month] = StancePoint(None, None, 0)
    return series


@dataclass
class TransitionReport:
    classes: list[Stance]
    matrix: np.ndarray  # rows = pre-event label, cols = post-event label
    change_rates: dict[Stance, float | None]
    n_users: int


def pre_post_transitions(tweet_stances: Sequence[TweetStance], timestamps: Sequence[datetime],
                         user_ids: Sequence[str], event_date: datetime = DEFAULT_EVENT_DATE,
                         leave_below: float = 0.4, remain_above: float = 0.6) -> TransitionReport:
    """Compare each user's stance before ``event_date`` with their stance from
    it onwards. Only users who tweeted in both windows are counted."""
    if event_date.tzinfo is None:
        event_date = event_date.replace(tzinfo=timezone.utc)
    pre = defaultdict(list)
    post = defaultdict(list)
    for s, ts, u in zip(tweet_stances, timestamps, user_ids, strict=True):
        (pre if ts < event_date else post)[u].append(s)
    both = sorted(pre.keys() & post.keys())
    if not both:
        raise AnalysisError("no user is active both before and after the event date")
    classes = Stance.ordered()
    pos = {c: i for i, c in enumerate(classes)}
    matrix = np.zeros((3, 3), dtype=np.int64)
    for u in both:
        a = user_stance(pre[u], leave_below, remain_above).label
        b = user_stance(post[u], leave_below, remain_above).label
        matrix[pos[a], pos[b]] += 1
    rates = {}
    for c in classes:
        row = matrix[pos[c]]
        rates[c] = float((row.sum() - row[pos[c]]) / row.sum()) if row.sum() else None
    return TransitionReport(classes, matrix, rates, len(both))


@dataclass
class BotBin:
    lower: float
    upper: float
    remain_share: float | None
    leave_share: float | None
    user_count: int


@dataclass
class BotSummary:
    bins: list[BotBin]
    joined_users: int
    missing_scores: int
    bot_users: int
    bot_fraction: float
    mean_posts_bot: float | None
    mean_posts_human: float | None


def is_bot(score: float, threshold: float = BOT_THRESHOLD) -> bool:
    return score > threshold


def read_score_csv(path, key: str = "user_id", value: str = "score") -> dict[str, float]:
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            s = float(row[value])
            if not 0.0 <= s <= 1.0:
                raise AnalysisError(f"bot score for {row[key]} outside [0, 1]: {s}")
            out[row[key]] = s
    return out


def bot_stance_bins(users: Mapping[str, UserStance], bot_scores: Mapping[str, float],
                    bin_width: float = 0.1, post_counts: Mapping[str, int] | None = None,
                    threshold: float = BOT_THRESHOLD) -> BotSummary:
    """Stance shares of users grouped by bot-score bin.

    Bins are ``[0,w), [w,2w), ..., [1-w, 1]``. Users without a score are left
    out and counted in ``missing_scores``.
    """
    n_bins = round(1.0 / bin_width)
    if n_bins < 1 or abs(n_bins * bin_width - 1.0) > 1e-9:
        raise AnalysisError(f"bin width {bin_width} does not divide 1 evenly")
    counts = [Counter() for _ in range(n_bins)]
    joined = missing = bots = 0
    posts_bot, posts_human = [], []
    for u, st in users.items():
        score = bot_scores.get(u)
        if score is None:
            missing += 1
            continue
        if not 0.0 <= score <= 1.0:
            raise AnalysisError(f"bot score for {u} outside [0, 1]: {score}")
        joined += 1
        # small epsilon keeps exact multiples of w (e.g. 0.3) in the upper bin
        b = min(int(math.floor(score * n_bins + 1e-9)), n_bins - 1)
        counts[b][st.label] += 1
        counts[b]["n"] += 1
        bot = is_bot(score, threshold)
        bots += bot
        if post_counts is not None:
            (posts_bot if bot else posts_human).append(post_counts.get(u, 0))
    if joined == 0:
        raise AnalysisError("no users could be joined with bot scores")
    bins = []
    for i, c in enumerate(counts):
        polar = c[Stance.REMAIN] + c[Stance.LEAVE]
        bins.append(BotBin(
            lower=i / n_bins, upper=(i + 1) / n_bins,
            remain_share=c[Stance.REMAIN] / polar if polar else None,
            leave_share=c[Stance.LEAVE] / polar if polar else None,
            user_count=c["n"],
        ))
    return BotSummary(
        bins=bins, joined_users=joined, missing_scores=missing, bot_users=bots,
        bot_fraction=bots / joined,
        mean_posts_bot=float(np.mean(posts_bot)) if posts_bot else None,
        mean_posts_human=float(np.mean(posts_human)) if posts_human else None,
    )


class MentionCategory(str, enum.Enum):
    POLITICIAN = "politician"
    NEWS = "news"
    CAMPAIGN_PARTY = "campaign_party"
    UNCATEGORIZED = "uncategorized"


_CATEGORY_ALIASES = {
    "politician": MentionCategory.POLITICIAN, "politicians": MentionCategory.POLITICIAN,
    "news": MentionCategory.NEWS, "news channel": MentionCategory.NEWS,
    "campaign_party": MentionCategory.CAMPAIGN_PARTY, "campaign": MentionCategory.CAMPAIGN_PARTY,
    "party": MentionCategory.CAMPAIGN_PARTY, "campaign/party": MentionCategory.CAMPAIGN_PARTY,
    "uncategorized": MentionCategory.UNCATEGORIZED,
}


def read_categories(path) -> dict[str, MentionCategory]:
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            raw = row["category"].strip().lower()
            if raw not in _CATEGORY_ALIASES:
                raise AnalysisError(f"unknown mention category {row['category']!r}")
            out[row["handle"].strip().lstrip("@").lower()] = _CATEGORY_ALIASES[raw]
    return out


@dataclass
class MentionLedger:
    totals: dict[str, int]
    tracked: list[str]
    monthly: dict[str, dict[str, int]]  # handle -> month -> count, tracked handles only
    categories: dict[str, MentionCategory] = field(default_factory=dict)


def mention_ledger(tweets: Iterable[TweetRecord], categories: Mapping[str, MentionCategory] | None = None,
                   threshold: int = MENTION_THRESHOLD) -> MentionLedger:
    """Count mentions per handle; handles mentioned more than ``threshold``
    times are tracked with a monthly breakdown and a category."""
    if threshold < 0:
        raise AnalysisError("mention threshold must be >= 0")
    categories = categories or {}
    totals = Counter()
    monthly = defaultdict(Counter)
    for t in tweets:
        m = t.month
        for h in t.mentions:
            totals[h] += 1
            monthly[h][m] += 1
    tracked = sorted((h for h, c in totals.items() if c > threshold), key=lambda h: (-totals[h], h))
    return MentionLedger(
        totals=dict(sorted(totals.items())),
        tracked=tracked,
        monthly={h: dict(sorted(monthly[h].items())) for h in tracked},
        categories={h: categories.get(h, MentionCategory.UNCATEGORIZED) for h in tracked},
    )


def influence_series(ledger: MentionLedger, handles: Sequence[str]) -> dict[str, dict[str, float]]:
    """Per month, each handle's share of the mentions received by ``handles``."""
    unknown = [h for h in handles if h not in ledger.monthly]
    if unknown:
        raise AnalysisError(f"handles not tracked in the ledger: {unknown}")
    per_month = defaultdict(dict)
    for h in handles:
        for m, c in ledger.monthly[h].items():
            per_month[m][h] = c
    out = {}
    for m in sorted(per_month):
        total = sum(per_month[m].values())
        if total:
            out[m] = {h: per_month[m].get(h, 0) / total for h in handles}
    return out


@dataclass
class GroupProfile:
    n: int
    polarized: int
    non_neutral: int
    remain_share: float | None
    leave_share: float | None
    positive_share: float | None
    negative_share: float | None


def cross_tab(groups: Mapping[str, Iterable], stances: Mapping[str, Stance],
              sentiments: Mapping[str, Sentiment]) -> dict:
    """Stance and sentiment profile per group.

    ``groups`` maps a tweet id to a group key or to an iterable of keys (a
    tweet mentioning two tracked handles counts for both). Stance shares are
    over polarized tweets, sentiment shares over non-neutral tweets; a share
    pair is ``None`` when its denominator is zero.
    """
    tallies = defaultdict(Counter)
    for tid, keys in groups.items():
        if tid not in stances or tid not in sentiments:
            raise AnalysisError(f"tweet {tid} lacks a stance or sentiment result")
        if isinstance(keys, (str, int, np.integer)):
            keys = (keys,)
        st = stances[tid].label if isinstance(stances[tid], TweetStance) else Stance(stances[tid])
        se = Sentiment(sentiments[tid])
        for key in keys:
            c = tallies[key]
            c["n"] += 1
            c[st] += 1
            c[se] += 1
    out = {}
    for key in sorted(tallies, key=str):
        c = tallies[key]
        polar = c[Stance.REMAIN] + c[Stance.LEAVE]
        emo = c[Sentiment.POSITIVE] + c[Sentiment.NEGATIVE]
        out[key] = GroupProfile(
            n=c["n"], polarized=polar, non_neutral=emo,
            remain_share=c[Stance.REMAIN] / polar if polar else None,
            leave_share=c[Stance.LEAVE] / polar if polar else None,
            positive_share=c[Sentiment.POSITIVE] / emo if emo else None,
            negative_share=c[Sentiment.NEGATIVE] / emo if emo else None,
        )
    return out


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise AnalysisError("pearson needs two equal-length series of at least 2 points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise AnalysisError("zero variance")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def read_trend_csv(path) -> dict[str, float]:
    with open(path, newline="", encoding="utf-8") as fh:
        return {row["month"].strip(): float(row["value"]) for row in csv.DictReader(fh)}


def correlate_series(a: Mapping[str, float], b: Mapping[str, float]) -> tuple[float, list[str]]:
    """Pearson r over the months both series share."""
    months = sorted(a.keys() & b.keys())
    return pearson([a[m] for m in months], [b[m] for m in months]), months


@dataclass
class StanceCounts:
    method: str
    remain_tweets: int
    leave_tweets: int
    remain_users: int
    leave_users: int

    @property
    def user_shares(self) -> tuple[float | None, float | None]:
        n = self.remain_users + self.leave_users
        return (self.remain_users / n, self.leave_users / n) if n else (None, None)


def stance_counts(tweet_stances: Sequence[TweetStance], user_ids: Sequence[str],
                  sources: Iterable[Source] | None = None, method: str = "merged",
                  leave_below: float = 0.4, remain_above: float = 0.6) -> StanceCounts:
    """Tweet and user totals for one classification method.

    With ``sources`` given, only tweets classified by those sources count.
    """
    keep = set(sources) if sources is not None else set(Source)
    kept = [(s, u) for s, u in zip(tweet_stances, user_ids, strict=True) if s.source in keep]
    labels = Counter(s.label for s, _ in kept)
    users = user_stances([s for s, _ in kept], [u for _, u in kept], leave_below, remain_above)
    ulabels = Counter(u.label for u in users.values())
    return StanceCounts(method, labels[Stance.REMAIN], labels[Stance.LEAVE],
                        ulabels[Stance.REMAIN], ulabels[Stance.LEAVE])
