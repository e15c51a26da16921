"""Topic discovery: preprocessing, phrase merging, collapsed Gibbs LDA,
coherence and change-driven period segmentation."""

from __future__ import annotations

import csv
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from typing import Callable, Iterable, Sequence

import numpy as np
from numba import njit
from scipy.special import gammaln

from .corpus import TimeWindow, TweetRecord, month_key
from .errors import AnalysisError
from .stance_ml import MENTION_TOKEN, URL_TOKEN, tokenize

logger = logging.getLogger(__name__)

DEFAULT_K = 20
DEFAULT_ITERATIONS = 500
DEFAULT_BETA = 0.01
BIGRAM_MIN_COUNT = 5
BIGRAM_THRESHOLD = 10.0
MIN_TOKEN_LEN = 3

_PLACEHOLDERS = frozenset({URL_TOKEN, MENTION_TOKEN})


def load_stopwords(path=None) -> frozenset:
    """One term per line; blank lines and ``#`` comments ignored."""
    if path is None:
        text = resources.files("stancekit").joinpath("data/stopwords_en.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return frozenset(line.strip().lower() for line in text.splitlines()
                     if line.strip() and not line.startswith("#"))


def load_lemmas(path=None) -> dict[str, str]:
    """CSV ``form,lemma`` with a header row."""
    if path is None:
        text = resources.files("stancekit").joinpath("data/lemmas_en.csv").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    rows = csv.DictReader(text.splitlines())
    return {r["form"].strip().lower(): r["lemma"].strip().lower() for r in rows}


@dataclass
class Dictionary:
    token2id: dict[str, int]
    id2token: list[str]
    dfs: list[int]

    def __len__(self):
        return len(self.id2token)

    @classmethod
    def from_documents(cls, term_lists: Iterable[Sequence[str]]) -> "Dictionary":
        df = Counter()
        for terms in term_lists:
            df.update(set(terms))
        id2token = sorted(df)
        return cls({t: i for i, t in enumerate(id2token)}, id2token, [df[t] for t in id2token])


@dataclass
class Document:
    tweet_id: str
    terms: list[int]


def normalize_tokens(tokens: Sequence[str], stopwords, lemma_map) -> list[str]:
    out = []
    for tok in tokens:
        if tok in _PLACEHOLDERS or len(tok) < MIN_TOKEN_LEN or tok in stopwords:
            continue
        out.append(lemma_map.get(tok, tok))
    return out


def bigram_scores(docs: Sequence[Sequence[str]], min_count: int) -> dict[tuple[str, str], float]:
    """Score every adjacent pair: (count(a,b) - min_count) * N / (count(a) * count(b))."""
    unigrams = Counter()
    pairs = Counter()
    for doc in docs:
        unigrams.update(doc)
        pairs.update(zip(doc, doc[1:]))
    n_tokens = sum(unigrams.values())
    return {(a, b): (c - min_count) * n_tokens / (unigrams[a] * unigrams[b])
            for (a, b), c in pairs.items() if c >= min_count}


def detect_bigrams(docs: Sequence[Sequence[str]], min_count: int = BIGRAM_MIN_COUNT,
                   threshold: float = BIGRAM_THRESHOLD) -> set[tuple[str, str]]:
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    return {pair for pair, score in bigram_scores(docs, min_count).items() if score >= threshold}


def merge_bigrams(tokens: Sequence[str], bigrams: set) -> list[str]:
    out = []
    i = 0
    while i < len(tokens):
        if i + 1 < len(tokens) and (tokens[i], tokens[i + 1]) in bigrams:
            out.append(f"{tokens[i]}_{tokens[i + 1]}")
            i += 2
        else:
            out.append(tokens[i])
            i += 1
    return out


def preprocess(tweets: Iterable[TweetRecord], stopwords=frozenset(), lemma_map=None,
               bigram_min_count: int = BIGRAM_MIN_COUNT,
               bigram_threshold: float = BIGRAM_THRESHOLD):
    """Tokenize, filter, lemmatize and phrase-merge tweets for LDA.

    Returns ``(dictionary, documents, kept_tweets)``; tweets left empty by
    preprocessing are dropped from both lists.
    """
    lemma_map = lemma_map or {}
    tweets = list(tweets)
    token_lists = [normalize_tokens(tokenize(t.text), stopwords, lemma_map) for t in tweets]
    bigrams = detect_bigrams(token_lists, bigram_min_count, bigram_threshold)
    merged = [merge_bigrams(toks, bigrams) for toks in token_lists]
    kept = [(t, terms) for t, terms in zip(tweets, merged) if terms]
    dictionary = Dictionary.from_documents(terms for _, terms in kept)
    docs = [Document(t.id, [dictionary.token2id[w] for w in terms]) for t, terms in kept]
    return dictionary, docs, [t for t, _ in kept]


# -- LDA --------------------------------------------------------------------

@dataclass
class LdaModel:
    k: int
    alpha: float
    beta: float
    terms: list[str]
    topic_word: np.ndarray   # (K, V) int64
    doc_topic: np.ndarray    # (D, K) int64
    topic_totals: np.ndarray  # (K,)
    words: np.ndarray        # flat token -> term id
    doc_of: np.ndarray       # flat token -> doc index
    z: np.ndarray            # flat token -> topic
    seed: int
    iterations_run: int = 0
    log_joint_history: list[float] = field(default_factory=list)

    @property
    def n_terms(self) -> int:
        return self.topic_word.shape[1]

    def phi(self) -> np.ndarray:
        return (self.topic_word + self.beta) / (self.topic_totals[:, None] + self.n_terms * self.beta)

    def theta(self) -> np.ndarray:
        lengths = self.doc_topic.sum(axis=1, keepdims=True)
        return (self.doc_topic + self.alpha) / (lengths + self.k * self.alpha)

    def check_counts(self):
        """Raise AssertionError if the count tables disagree with ``z``."""
        lengths = np.bincount(self.doc_of, minlength=self.doc_topic.shape[0])
        assert np.array_equal(self.doc_topic.sum(axis=1), lengths)
        assert np.array_equal(self.topic_word.sum(axis=1), self.topic_totals)
        assert self.topic_totals.sum() == len(self.z)
        assert (self.topic_word >= 0).all() and (self.doc_topic >= 0).all()
        tw = np.zeros_like(self.topic_word)
        np.add.at(tw, (self.z, self.words), 1)
        assert np.array_equal(tw, self.topic_word)
        dt = np.zeros_like(self.doc_topic)
        np.add.at(dt, (self.doc_of, self.z), 1)
        assert np.array_equal(dt, self.doc_topic)

    def to_json(self) -> dict:
        return {
            "k": self.k, "alpha": self.alpha, "beta": self.beta, "seed": self.seed,
            "iterations_run": self.iterations_run, "terms": self.terms,
            "topic_word_counts": self.topic_word.tolist(),
            "doc_topic_counts": self.doc_topic.tolist(),
        }


@njit(cache=True)
def _gibbs_sweep(words, doc_of, z, ndk, nkw, nk, alpha, beta, uniforms):
    n_topics = nk.shape[0]
    vbeta = nkw.shape[1] * beta
    cum = np.empty(n_topics)
    for i in range(words.shape[0]):
        w = words[i]
        d = doc_of[i]
        k = z[i]
        ndk[d, k] -= 1
        nkw[k, w] -= 1
        nk[k] -= 1
        total = 0.0
        for j in range(n_topics):
            total += (ndk[d, j] + alpha) * (nkw[j, w] + beta) / (nk[j] + vbeta)
            cum[j] = total
        u = uniforms[i] * total
        k = 0
        while k < n_topics - 1 and cum[k] <= u:
            k += 1
        z[i] = k
        ndk[d, k] += 1
        nkw[k, w] += 1
        nk[k] += 1


def log_joint(model: LdaModel) -> float:
    """Complete-data log p(w, z) with phi and theta integrated out."""
    k, vocab = model.k, model.n_terms
    a, b = model.alpha, model.beta
    lengths = model.doc_topic.sum(axis=1)
    word_part = (k * (gammaln(vocab * b) - vocab * gammaln(b))
                 + gammaln(model.topic_word + b).sum()
                 - gammaln(model.topic_totals + vocab * b).sum())
    doc_part = (len(lengths) * (gammaln(k * a) - k * gammaln(a))
                + gammaln(model.doc_topic + a).sum()
                - gammaln(lengths + k * a).sum())
    return float(word_part + doc_part)


def train_lda(docs: Sequence, n_terms: int, k: int = DEFAULT_K, alpha: float | None = None,
              beta: float = DEFAULT_BETA, iterations: int = DEFAULT_ITERATIONS, seed: int = 42,
              terms: Sequence[str] | None = None,
              callback: Callable[[LdaModel], None] | None = None,
              track_log_joint: bool = False) -> LdaModel:
    """Collapsed Gibbs sampling LDA.

    ``docs`` holds :class:`Document` objects or plain lists of term ids below
    ``n_terms``. ``alpha`` defaults to 50/K. ``callback`` runs after every sweep.
    """
    if not docs:
        raise AnalysisError("cannot train LDA on an empty corpus")
    if k < 2:
        raise AnalysisError(f"topic count must be >= 2, got {k}")
    alpha = 50.0 / k if alpha is None else alpha
    if alpha <= 0 or beta <= 0:
        raise AnalysisError("Dirichlet priors must be positive")
    term_lists = [d.terms if isinstance(d, Document) else list(d) for d in docs]
    words = np.array([w for t in term_lists for w in t], dtype=np.int64)
    if len(words) == 0:
        raise AnalysisError("cannot train LDA on documents without tokens")
    if words.min() < 0 or words.max() >= n_terms:
        raise AnalysisError("term id outside the dictionary")
    doc_of = np.repeat(np.arange(len(term_lists), dtype=np.int64), [len(t) for t in term_lists])

    rng = np.random.default_rng(seed)
    z = rng.integers(0, k, size=len(words), dtype=np.int64)
    topic_word = np.zeros((k, n_terms), dtype=np.int64)
    np.add.at(topic_word, (z, words), 1)
    doc_topic = np.zeros((len(term_lists), k), dtype=np.int64)
    np.add.at(doc_topic, (doc_of, z), 1)
    model = LdaModel(k, float(alpha), float(beta),
                     list(terms) if terms is not None else [str(i) for i in range(n_terms)],
                     topic_word, doc_topic, topic_word.sum(axis=1), words, doc_of, z, seed)

    for _ in range(iterations):
        _gibbs_sweep(words, doc_of, z, doc_topic, topic_word, model.topic_totals,
                     model.alpha, model.beta, rng.random(len(words)))
        model.iterations_run += 1
        if track_log_joint:
            model.log_joint_history.append(log_joint(model))
        if callback is not None:
            callback(model)
    return model


@dataclass
class TopicSummary:
    topic: int
    top_words: list[tuple[str, float]]
    label: str | None = None


def top_words(model: LdaModel, topic: int, n: int = 10) -> TopicSummary:
    if not 0 <= topic < model.k:
        raise AnalysisError(f"topic {topic} out of range for K={model.k}")
    row = model.phi()[topic]
    ranked = sorted(range(model.n_terms), key=lambda w: (-row[w], model.terms[w]))[:n]
    return TopicSummary(topic, [(model.terms[w], float(row[w])) for w in ranked])


def _top_ids(model: LdaModel, topic: int, n: int) -> list[int]:
    index = {t: i for i, t in enumerate(model.terms)}
    return [index[w] for w, _ in top_words(model, topic, n).top_words]


def umass_coherence(model: LdaModel, docs: Sequence, topic: int, n: int = 10) -> float:
    """UMass coherence of a topic's top-``n`` words over ``docs``.

    Sum over ranked pairs of log((D(w_m, w_l) + 1) / D(w_l)) where w_l is the
    higher-ranked word and D counts documents. Closer to zero is more coherent.
    """
    if n < 2:
        raise AnalysisError("coherence needs at least two top words")
    ids = _top_ids(model, topic, n)
    doc_sets = [set(d.terms if isinstance(d, Document) else d) for d in docs]
    occurs = {w: {i for i, s in enumerate(doc_sets) if w in s} for w in ids}
    score = 0.0
    for m in range(1, len(ids)):
        for l in range(m):
            d_l = len(occurs[ids[l]])
            if d_l == 0:
                raise AnalysisError(f"term {model.terms[ids[l]]!r} occurs in no document")
            d_ml = len(occurs[ids[m]] & occurs[ids[l]])
            score += math.log((d_ml + 1) / d_l)
    return score


def dominant_topics(model: LdaModel) -> np.ndarray:
    return np.argmax(model.theta(), axis=1)


def monthly_topic_shares(model: LdaModel, timestamps: Sequence) -> dict[str, np.ndarray]:
    """Share of assigned tokens per topic for each month (``YYYY-MM``) key.

    ``timestamps`` holds a datetime or month key per training document, in
    model order.
    """
    months = [month_key(t) if isinstance(t, datetime) else t for t in timestamps]
    if len(months) != model.doc_topic.shape[0]:
        raise AnalysisError("one month per training document is required")
    totals: dict[str, np.ndarray] = {}
    for m, row in zip(months, model.doc_topic):
        if m in totals:
            totals[m] = totals[m] + row
        else:
            totals[m] = row.astype(np.float64)
    return {m: totals[m] / totals[m].sum() for m in sorted(totals) if totals[m].sum() > 0}


def _month_start(key: str) -> datetime:
    year, month = map(int, key.split("-"))
    return datetime(year, month, 1, tzinfo=timezone.utc)


def _next_month(key: str) -> datetime:
    year, month = map(int, key.split("-"))
    year, month = (year + 1, 1) if month == 12 else (year, month + 1)
    return datetime(year, month, 1, tzinfo=timezone.utc)


def monthly_change(monthly_shares: dict[str, np.ndarray]) -> dict[str, float]:
    """L1 distance from the previous populated month, keyed by the later month."""
    keys = sorted(monthly_shares)
    return {b: float(np.abs(monthly_shares[b] - monthly_shares[a]).sum())
            for a, b in zip(keys, keys[1:])}


def segment_periods(monthly_shares: dict[str, np.ndarray], n_boundaries: int = 3) -> list[TimeWindow]:
    """Split the covered months at the ``n_boundaries`` largest changes.

    Ties go to the earlier month. Windows start on month boundaries and
    together cover first-month start to last-month end.
    """
    keys = sorted(monthly_shares)
    if n_boundaries < 0:
        raise AnalysisError("n_boundaries must be >= 0")
    if len(keys) < n_boundaries + 1:
        raise AnalysisError(f"need at least {n_boundaries + 1} months, got {len(keys)}")
    change = monthly_change(monthly_shares)
    if change and max(change.values()) == 0.0:
        logger.warning("topic shares are constant over time; boundaries are arbitrary")
    ranked = sorted(change, key=lambda m: (-change[m], m))[:n_boundaries]
    edges = [_month_start(keys[0])] + [_month_start(m) for m in sorted(ranked)] + [_next_month(keys[-1])]
    return [TimeWindow(a, b) for a, b in zip(edges, edges[1:])]
