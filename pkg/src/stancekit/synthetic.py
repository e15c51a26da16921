"""Deterministic synthetic tweet corpora for tests and the bundled fixture.

The generator plants everything the pipeline is supposed to find: user
stances (with post-event drift), stance hashtags on a fixed share of tweets,
time-varying topic regimes, politician mention trends and bot scores that
lean towards one side.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .stance_rules import AMBIGUOUS_HASHTAGS, LEAVE_HASHTAGS, REMAIN_HASHTAGS

START = datetime(2016, 1, 1, tzinfo=timezone.utc)
N_MONTHS = 33  # Jan 2016 .. Sep 2018
EVENT_MONTH = 5  # June 2016, zero-based from START
SI_RATE = 0.08

STANCE_WORDS = {
    "remain": ["europe", "together", "future", "opportunity", "young", "erasmus", "solidarity",
               "partnership", "cooperation", "peoplesvote", "stronger", "open"],
    "leave": ["sovereignty", "independence", "brussels", "taxpayers", "bureaucrats", "global",
              "parliament", "freedom", "controlled", "democracy", "quit", "unelected"],
    "none": ["news", "today", "report", "update", "live", "read", "watch", "latest", "coverage",
             "breaking", "analysis", "story"],
}

TOPICS = {
    "campaign": ["poll", "debate", "campaign", "referendum", "ballot", "turnout", "undecided",
                 "canvass", "leaflet", "polling"],
    "economy": ["pound", "sterling", "market", "investor", "economy", "recession", "bank",
                "growth", "inflation", "treasury"],
    "immigration": ["immigration", "migrant", "border", "visa", "worker", "citizen", "passport",
                    "asylum", "settle", "points"],
    "article50": ["article", "trigger", "notice", "supreme", "court", "ruling", "lords",
                  "amendment", "royal", "assent"],
    "election": ["election", "snap", "manifesto", "majority", "hung", "seat", "constituency",
                 "coalition", "dup", "candidate"],
    "negotiation": ["negotiation", "barnier", "davis", "round", "divorce", "bill", "settlement",
                    "talks", "sufficient", "phase"],
    "trade": ["trade", "tariff", "customs", "union", "single", "export", "import", "wto",
              "agreement", "goods"],
    "ireland": ["ireland", "irish", "backstop", "northern", "frontier", "good", "friday",
                "checks", "dublin", "belfast"],
    "cabinet": ["cabinet", "resign", "chequers", "secretary", "reshuffle", "minister", "plan",
                "white", "paper", "downing"],
    "newvote": ["final", "say", "second", "vote", "march", "petition", "rally", "demand",
                "revoke", "people"],
}

# active topics per period; boundaries are the first month of each period
PERIODS = [
    (0, ["campaign", "economy", "immigration"]),
    (EVENT_MONTH, ["economy", "article50", "immigration"]),
    (13, ["election", "negotiation", "article50"]),   # Feb 2017
    (22, ["trade", "ireland", "cabinet", "newvote"]),  # Nov 2017
]

FILLER = ["think", "really", "time", "week", "going", "know", "see", "make", "country",
          "government", "british", "uk", "eu", "brexit", "brexit", "brexit", "need", "thing",
          "look", "come", "year", "point", "ever", "world", "work"]

SENTIMENT_POS = ["good", "great", "hope", "proud", "strong", "win", "brilliant", "welcome"]
SENTIMENT_NEG = ["bad", "disaster", "chaos", "mess", "lies", "shame", "fail", "crisis"]
NEGATORS = ["not", "never", "no"]

FOREIGN = {
    "de": ["die", "der", "und", "nicht", "europa", "austritt", "briten", "verhandlungen"],
    "fr": ["le", "la", "et", "pas", "europe", "sortie", "britanniques", "accord"],
    "es": ["el", "la", "y", "no", "europa", "salida", "britanicos", "acuerdo"],
    "it": ["il", "la", "e", "non", "europa", "uscita", "britannici", "accordo"],
}

HANDLES = {
    # handle: (category, popularity weight at month 0, weight at last month)
    "theresa_may": ("politician", 0.2, 5.0),
    "david_cameron": ("politician", 4.0, 0.2),
    "nigel_farage": ("politician", 3.0, 1.5),
    "borisjohnson": ("politician", 2.0, 2.5),
    "jeremycorbyn": ("politician", 1.0, 2.0),
    "bbcnews": ("news", 2.0, 2.0),
    "guardian": ("news", 1.5, 1.5),
    "vote_leave": ("campaign_party", 3.0, 0.3),
    "strongerin": ("campaign_party", 3.0, 0.2),
    "ukip": ("campaign_party", 1.0, 0.5),
}


@dataclass
class SyntheticCorpus:
    tweets: list[dict]
    labeled: list[tuple[str, str, str]]
    bot_scores: dict[str, float]
    categories: dict[str, str]
    trend: dict[str, float]
    user_stance: dict[str, str]


def _month_start(i: int) -> datetime:
    y, m = divmod(i, 12)
    return datetime(2016 + y, m + 1, 1, tzinfo=timezone.utc)


def _month_key(i: int) -> str:
    d = _month_start(i)
    return f"{d.year:04d}-{d.month:02d}"


def _active_topics(month: int) -> list[str]:
    active = PERIODS[0][1]
    for start, topics in PERIODS:
        if month >= start:
            active = topics
    return active


def _volume_profile() -> np.ndarray:
    months = np.arange(N_MONTHS)
    base = 1.0 + 0.03 * months
    spikes = {EVENT_MONTH: 4.0, EVENT_MONTH - 1: 1.5, 14: 1.2, 17: 0.8, 29: 0.9}
    for m, v in spikes.items():
        base[m] += v
    return base / base.sum()


def _stance_sentence(rng, stance: str, n: int) -> list[str]:
    return list(rng.choice(STANCE_WORDS[stance], size=n))


def _english_text(rng, stance: str, topic: str, min_len: int) -> list[str]:
    words = list(rng.choice(TOPICS[topic], size=int(rng.integers(3, 7))))
    words += _stance_sentence(rng, stance, int(rng.integers(1, 4)))
    words += list(rng.choice(FILLER, size=int(rng.integers(min_len // 2, min_len))))
    r = rng.random()
    if r < 0.3:
        words.append(str(rng.choice(SENTIMENT_POS)))
    elif r < 0.6:
        words.append(str(rng.choice(SENTIMENT_NEG)))
    elif r < 0.7:
        words += [str(rng.choice(NEGATORS)), str(rng.choice(SENTIMENT_POS))]
    rng.shuffle(words)
    if topic == "trade" and rng.random() < 0.6:
        words += ["customs", "union"]
    return words


def generate(n_tweets: int = 10000, n_users: int = 2500, seed: int = 7,
             n_labeled_per_class: int = 300) -> SyntheticCorpus:
    rng = np.random.default_rng(seed)
    users = [f"u{i:05d}" for i in range(n_users)]
    stance0 = rng.choice(["remain", "leave", "none"], size=n_users, p=[0.52, 0.38, 0.10])
    # post-event drift: leave users change more often than remain users
    stance1 = stance0.copy()
    for i, s in enumerate(stance0):
        if s == "leave" and rng.random() < 0.3:
            stance1[i] = "remain"
        elif s == "remain" and rng.random() < 0.1:
            stance1[i] = "leave"

    bot_scores = {}
    for i, u in enumerate(users):
        if rng.random() < 0.05:
            continue  # no score available for this account
        a, b = {"leave": (2.0, 3.0), "remain": (1.2, 5.0), "none": (1.5, 4.0)}[stance0[i]]
        bot_scores[u] = float(np.round(rng.beta(a, b), 3))
    activity = rng.zipf(1.8, size=n_users).astype(float)
    activity = np.minimum(activity, 60)
    for i, u in enumerate(users):
        if bot_scores.get(u, 0.0) > 0.8:
            activity[i] *= 1.5
    activity /= activity.sum()
    followers = np.round(np.exp(rng.normal(6.0, 1.5, size=n_users))).astype(int)

    volume = _volume_profile()
    month_of = rng.choice(N_MONTHS, size=n_tweets, p=volume)
    author = rng.choice(n_users, size=n_tweets, p=activity)
    langs = rng.choice(["en", "de", "fr", "es", "it"], size=n_tweets, p=[0.85, 0.05, 0.04, 0.03, 0.03])
    handles = list(HANDLES)

    tweets = []
    order = np.lexsort((rng.random(n_tweets), month_of))
    for n, j in enumerate(order):
        month = int(month_of[j])
        u = int(author[j])
        start = _month_start(month)
        span = (_month_start(month + 1) - start).total_seconds()
        created = start + timedelta(seconds=int(rng.integers(0, int(span))))
        stance = (stance0 if month < EVENT_MONTH else stance1)[u]
        # SI hashtags go on 8% of all tweets; those are always English
        si = rng.random() < SI_RATE
        lang = "en" if si else str(langs[j])
        hashtags = []
        if lang == "en":
            topic = str(rng.choice(_active_topics(month)))
            words = _english_text(rng, stance, topic, 14)
            if si and stance == "none":
                hashtags += [str(rng.choice(REMAIN_HASHTAGS)), str(rng.choice(LEAVE_HASHTAGS))]
            elif si:
                side = REMAIN_HASHTAGS if stance == "remain" else LEAVE_HASHTAGS
                hashtags.append(str(rng.choice(side)))
                if rng.random() < 0.05:
                    other = LEAVE_HASHTAGS if stance == "remain" else REMAIN_HASHTAGS
                    hashtags.append(str(rng.choice(other)))
            elif rng.random() < 0.3:
                hashtags.append(str(rng.choice(AMBIGUOUS_HASHTAGS)))
        else:
            words = list(rng.choice(FOREIGN[lang], size=int(rng.integers(6, 14))))
        mentions = []
        if rng.random() < 0.45:
            t = month / (N_MONTHS - 1)
            w = np.array([HANDLES[h][1] * (1 - t) + HANDLES[h][2] * t for h in handles])
            mentions.append(str(rng.choice(handles, p=w / w.sum())))
        text = " ".join(words)
        if hashtags:
            text += " " + " ".join("#" + h for h in hashtags)
        if mentions:
            text = "@" + mentions[0] + " " + text
        if rng.random() < 0.2:
            text += f" https://t.co/{rng.integers(10**6, 10**7)}"
        if rng.random() < 0.1:
            text = text.replace(" ", " #Brexit ", 1)
        growth = 1.0 + month / 12.0
        rt = int(rng.geometric(1 / (8.0 * growth)) - 1)
        tweets.append({
            "id": f"t{n:06d}",
            "user_id": users[u],
            "created_at": created.strftime("%Y-%m-%dT%H:%M:%SZ"),
            "text": text,
            "lang": lang,
            "retweet_count": rt,
            "like_count": int(rt * rng.uniform(1.0, 3.0) + rng.integers(0, 5)),
            "user_followers": int(followers[u]),
        })

    labeled = []
    for stance in ("remain", "leave", "none"):
        for i in range(n_labeled_per_class):
            month = int(rng.integers(0, N_MONTHS))
            topic = str(rng.choice(_active_topics(month)))
            words = _english_text(rng, stance, topic, 10)
            labeled.append((f"l{stance[0]}{i:04d}", " ".join(words), stance))

    counts = np.bincount(month_of, minlength=N_MONTHS)
    trend = {_month_key(m): float(np.round(100 * counts[m] / counts.max() + rng.normal(0, 3), 2))
             for m in range(N_MONTHS)}
    return SyntheticCorpus(
        tweets=tweets,
        labeled=labeled,
        bot_scores=bot_scores,
        categories={h: c for h, (c, _, _) in HANDLES.items()},
        trend=trend,
        user_stance={u: str(s) for u, s in zip(users, stance0)},
    )


FIXTURE_CONFIG = """\
# Configuration for the bundled synthetic fixture. Paths are relative to this file.
input = tweets.jsonl
labeled = labeled.csv
bot_scores = bot_scores.csv
categories = categories.csv
trend = trend.csv
lang = en
seed = 42
topics_k = 20
topics_iterations = 500
topics_seed = 42
mention_threshold = 100
event_date = 2016-06-23
"""

MALFORMED_LINES = [
    '{"id": "bad1", "user_id": "u00001", "text": "no timestamp here", "lang": "en", '
    '"retweet_count": 1, "like_count": 0}',
    '{"id": "bad2", "user_id": "u00002", "created_at": "2016-03-01T10:00:00Z", ',
]


def write_fixture(out_dir, corpus: SyntheticCorpus | None = None):
    """Write the fixture file set (tweets, labels, scores, categories, trend, config)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus = corpus or generate()
    with open(out / "tweets.jsonl", "w", encoding="utf-8") as fh:
        for i, t in enumerate(corpus.tweets):
            fh.write(json.dumps(t, sort_keys=True) + "\n")
            if i in (1000, 5000):
                fh.write(MALFORMED_LINES[0 if i == 1000 else 1] + "\n")
    with open(out / "labeled.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tweet_id", "text", "label"])
        w.writerows(corpus.labeled)
    with open(out / "bot_scores.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user_id", "score"])
        w.writerows(sorted(corpus.bot_scores.items()))
    with open(out / "categories.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["handle", "category"])
        w.writerows(sorted(corpus.categories.items()))
    with open(out / "trend.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["month", "value"])
        w.writerows(sorted(corpus.trend.items()))
    (out / "stancekit.ini").write_text(FIXTURE_CONFIG, encoding="utf-8")
    return out
