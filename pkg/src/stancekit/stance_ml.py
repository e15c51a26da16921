"""Learned stance classifier for tweets without stance-indicative hashtags.

Tweets are tokenized, expanded to uni/bi/tri-grams, encoded as L2-normalized
count vectors and classified by one-vs-rest linear SVMs trained with the
Pegasos stochastic subgradient method.
"""

from __future__ import annotations

import csv
import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from numba import njit

from .errors import ModelFormatError, TrainingError
from .stance_rules import Stance

MODEL_FORMAT = "stancekit.linear_stance_model"
MODEL_VERSION = 1

DEFAULT_LAMBDA = 1e-4
DEFAULT_EPOCHS = 20
DEFAULT_MIN_DF = 2
DEFAULT_SEED = 42

URL_TOKEN = "<url>"
MENTION_TOKEN = "<mention>"

_URL_RE = re.compile(r"https?://\S+|www\.\S+", re.IGNORECASE)
_TOKEN_RE = re.compile(
    r"(?P<mention>(?<!\w)@\w+)"
    r"|(?P<hashtag>(?<!\w)#\w+)"
    r"|(?P<word>\w+(?:['’]\w+)*)"
    r"|(?P<punct>[^\w\s])"
)
_REPEAT_RE = re.compile(r"(.)\1{2,}")


# -- tokenization -----------------------------------------------------------

def _tokenize_segment(segment: str, out: list):
    segment = _REPEAT_RE.sub(r"\1\1", segment)
    for m in _TOKEN_RE.finditer(segment):
        kind = m.lastgroup
        if kind == "mention":
            out.append(MENTION_TOKEN)
        elif kind == "hashtag":
            out.append(m.group()[1:].lower())
        else:
            out.append(m.group().lower())


def tokenize(text: str) -> list[str]:
    """Normalize a tweet into lowercase tokens.

    URLs become ``<url>``, handles ``<mention>``; hashtags keep their word,
    punctuation characters are separate tokens and any character repeated
    three or more times is squeezed to two.

    >>> tokenize("I LOVE #Brexit http://t.co/x @user")
    ['i', 'love', 'brexit', '<url>', '<mention>']
    """
    tokens: list[str] = []
    pos = 0
    for m in _URL_RE.finditer(text):
        _tokenize_segment(text[pos:m.start()], tokens)
        tokens.append(URL_TOKEN)
        pos = m.end()
    _tokenize_segment(text[pos:], tokens)
    return tokens


def ngrams(tokens: Sequence[str], n_range=(1, 3)) -> list[str]:
    lo, hi = n_range
    out = []
    for n in range(lo, hi + 1):
        for i in range(len(tokens) - n + 1):
            out.append("_".join(tokens[i:i + n]))
    return out


# -- features ---------------------------------------------------------------

@dataclass
class NGramVocabulary:
    entries: dict[str, int]
    n_range: tuple[int, int] = (1, 3)
    min_df: int = DEFAULT_MIN_DF

    def __len__(self):
        return len(self.entries)

    def terms(self) -> list[str]:
        out = [""] * len(self.entries)
        for term, idx in self.entries.items():
            out[idx] = term
        return out


def build_vocabulary(docs: Sequence[Sequence[str]], min_df: int = DEFAULT_MIN_DF,
                     n_range=(1, 3)) -> NGramVocabulary:
    if not docs:
        raise TrainingError("cannot build a vocabulary from zero documents")
    df = Counter()
    for doc in docs:
        df.update(set(ngrams(doc, n_range)))
    kept = sorted(g for g, c in df.items() if c >= min_df)
    return NGramVocabulary({g: i for i, g in enumerate(kept)}, tuple(n_range), min_df)


def _count_features(doc, vocab: NGramVocabulary):
    counts = Counter()
    for g in ngrams(doc, vocab.n_range):
        idx = vocab.entries.get(g)
        if idx is not None:
            counts[idx] += 1
    idx = np.array(sorted(counts), dtype=np.int64)
    vals = np.array([counts[i] for i in idx], dtype=np.float64)
    norm = math.sqrt(float(vals @ vals)) if len(vals) else 0.0
    if norm > 0:
        vals /= norm
    return idx, vals


def vectorize(doc: Sequence[str], vocab: NGramVocabulary) -> sp.csr_matrix:
    """1 x |vocab| row of L2-normalized in-vocabulary n-gram counts."""
    return vectorize_many([doc], vocab)


def vectorize_many(docs: Iterable[Sequence[str]], vocab: NGramVocabulary) -> sp.csr_matrix:
    indptr = [0]
    all_idx = []
    all_vals = []
    for doc in docs:
        idx, vals = _count_features(doc, vocab)
        all_idx.append(idx)
        all_vals.append(vals)
        indptr.append(indptr[-1] + len(idx))
    indices = np.concatenate(all_idx) if all_idx else np.zeros(0, np.int64)
    data = np.concatenate(all_vals) if all_vals else np.zeros(0)
    return sp.csr_matrix((data, indices, np.array(indptr, dtype=np.int64)),
                         shape=(len(indptr) - 1, len(vocab)))


# -- model ------------------------------------------------------------------

@dataclass
class LinearStanceModel:
    vocabulary: NGramVocabulary
    classes: list[Stance]
    weights: np.ndarray  # (n_classes, n_features)
    bias: np.ndarray     # (n_classes,)
    training_meta: dict = field(default_factory=dict)

    def decision_function(self, X: sp.spmatrix) -> np.ndarray:
        return np.asarray(X @ self.weights.T) + self.bias

    def predict_matrix(self, X: sp.spmatrix) -> list[Stance]:
        return [self.classes[i] for i in np.argmax(self.decision_function(X), axis=1)]

    def __eq__(self, other):
        if not isinstance(other, LinearStanceModel):
            return NotImplemented
        return (self.vocabulary == other.vocabulary and self.classes == other.classes
                and np.array_equal(self.weights, other.weights)
                and np.array_equal(self.bias, other.bias)
                and self.training_meta == other.training_meta)


@njit(cache=True)
def _pegasos(indptr, indices, data, Y, order, lam, n_features):
    n_classes = Y.shape[1]
    n = Y.shape[0]
    epochs = order.shape[0]
    # last column is a constant-1 bias feature, regularized like the rest
    W = np.zeros((n_classes, n_features + 1))
    scale = np.ones(n_classes)
    losses = np.zeros(epochs)
    t = 0
    for e in range(epochs):
        for pos in range(n):
            i = order[e, pos]
            t += 1
            eta = 1.0 / (lam * t)
            shrink = 1.0 - eta * lam
            start = indptr[i]
            stop = indptr[i + 1]
            for c in range(n_classes):
                dot = W[c, n_features]
                for p in range(start, stop):
                    dot += W[c, indices[p]] * data[p]
                margin = scale[c] * dot
                if shrink < 1e-12:
                    for f in range(n_features + 1):
                        W[c, f] = 0.0
                    scale[c] = 1.0
                else:
                    scale[c] *= shrink
                if Y[i, c] * margin < 1.0:
                    coef = eta * Y[i, c] / scale[c]
                    for p in range(start, stop):
                        W[c, indices[p]] += coef * data[p]
                    W[c, n_features] += coef
                if scale[c] < 1e-6:
                    for f in range(n_features + 1):
                        W[c, f] *= scale[c]
                    scale[c] = 1.0
        # regularized hinge objective at the end of the epoch
        total = 0.0
        for c in range(n_classes):
            sq = 0.0
            for f in range(n_features + 1):
                sq += W[c, f] * W[c, f]
            total += 0.5 * lam * sq * scale[c] * scale[c]
            hinge = 0.0
            for i in range(n):
                dot = W[c, n_features]
                for p in range(indptr[i], indptr[i + 1]):
                    dot += W[c, indices[p]] * data[p]
                h = 1.0 - Y[i, c] * scale[c] * dot
                if h > 0.0:
                    hinge += h
            total += hinge / n
        losses[e] = total
    for c in range(n_classes):
        for f in range(n_features + 1):
            W[c, f] *= scale[c]
    return W, losses


def _class_order(labels) -> list[Stance]:
    present = {Stance(y) for y in labels}
    return [c for c in Stance.ordered() if c in present]


def train(X: sp.spmatrix, labels: Sequence, vocabulary: NGramVocabulary,
          lam: float = DEFAULT_LAMBDA, epochs: int = DEFAULT_EPOCHS,
          seed: int = DEFAULT_SEED) -> LinearStanceModel:
    """Fit one-vs-rest hinge-loss classifiers with step size 1/(lam*t).

    The sample order of every epoch comes from ``numpy.random.default_rng(seed)``
    so identical inputs give bit-identical weights.
    """
    if lam <= 0:
        raise TrainingError(f"regularization must be positive, got {lam}")
    if epochs < 1:
        raise TrainingError(f"epochs must be >= 1, got {epochs}")
    X = sp.csr_matrix(X, dtype=np.float64)
    X.sort_indices()
    labels = [Stance(y) for y in labels]
    if X.shape[0] != len(labels):
        raise TrainingError(f"{X.shape[0]} vectors but {len(labels)} labels")
    if X.shape[1] != len(vocabulary):
        raise TrainingError("feature width does not match the vocabulary")
    classes = _class_order(labels)
    if len(classes) < 2:
        raise TrainingError("degenerate training set")

    Y = np.array([[1.0 if y is c else -1.0 for c in classes] for y in labels])
    rng = np.random.default_rng(seed)
    order = np.stack([rng.permutation(len(labels)) for _ in range(epochs)]).astype(np.int64)
    W, losses = _pegasos(X.indptr.astype(np.int64), X.indices.astype(np.int64), X.data,
                         Y, order, float(lam), X.shape[1])
    return LinearStanceModel(
        vocabulary=vocabulary,
        classes=classes,
        weights=np.ascontiguousarray(W[:, :-1]),
        bias=np.ascontiguousarray(W[:, -1]),
        training_meta={"seed": seed, "epochs": epochs, "lambda": lam,
                       "n_train": len(labels), "loss_history": [float(x) for x in losses]},
    )


def fit_texts(texts: Sequence[str], labels: Sequence, min_df: int = DEFAULT_MIN_DF,
              lam: float = DEFAULT_LAMBDA, epochs: int = DEFAULT_EPOCHS,
              seed: int = DEFAULT_SEED) -> LinearStanceModel:
    docs = [tokenize(t) for t in texts]
    vocab = build_vocabulary(docs, min_df)
    model = train(vectorize_many(docs, vocab), labels, vocab, lam, epochs, seed)
    model.training_meta["min_df"] = min_df
    return model


def predict(model: LinearStanceModel, doc: Sequence[str]) -> tuple[Stance, dict[Stance, float]]:
    scores = model.decision_function(vectorize(doc, model.vocabulary))[0]
    # np.argmax keeps the first maximum, i.e. Remain < Leave < None on ties
    best = int(np.argmax(scores))
    return model.classes[best], {c: float(s) for c, s in zip(model.classes, scores)}


# -- evaluation -------------------------------------------------------------

def auc_binary(scores: Iterable[tuple[float, bool]]) -> float:
    """Rank AUC: P(random positive outranks random negative), ties count 1/2."""
    pairs = list(scores)
    s = np.array([p[0] for p in pairs], dtype=np.float64)
    pos = np.array([bool(p[1]) for p in pairs])
    n_pos = int(pos.sum())
    n_neg = len(pairs) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs at least one positive and one negative example")
    order = np.argsort(s, kind="mergesort")
    sorted_s = s[order]
    ranks = np.empty(len(s))
    i = 0
    while i < len(s):
        j = i
        while j + 1 < len(s) and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class CvReport:
    folds: int
    classes: list[Stance]
    per_class: dict[Stance, ClassMetrics]
    weighted_f1: float
    macro_ovr_auc: float
    confusion_matrix: np.ndarray  # rows = true, cols = predicted

    def to_json(self) -> dict:
        return {
            "folds": self.folds,
            "classes": [c.value for c in self.classes],
            "per_class": {c.value: vars(m) for c, m in self.per_class.items()},
            "weighted_f1": self.weighted_f1,
            "macro_ovr_auc": self.macro_ovr_auc,
            "confusion_matrix": self.confusion_matrix.tolist(),
        }


def confusion_matrix(y_true, y_pred, classes) -> np.ndarray:
    pos = {c: i for i, c in enumerate(classes)}
    cm = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        cm[pos[t], pos[p]] += 1
    return cm


def class_metrics(cm: np.ndarray) -> list[ClassMetrics]:
    out = []
    for i in range(cm.shape[0]):
        tp = cm[i, i]
        predicted = cm[:, i].sum()
        support = cm[i, :].sum()
        precision = tp / predicted if predicted else 0.0
        recall = tp / support if support else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        out.append(ClassMetrics(float(precision), float(recall), float(f1), int(support)))
    return out


def weighted_f1(cm: np.ndarray) -> float:
    metrics = class_metrics(cm)
    total = sum(m.support for m in metrics)
    return sum(m.f1 * m.support for m in metrics) / total


def stratified_folds(labels: Sequence, k: int, seed: int) -> np.ndarray:
    """Fold id per example; each class is shuffled then dealt round-robin."""
    rng = np.random.default_rng(seed)
    fold = np.empty(len(labels), dtype=np.int64)
    labels = [Stance(y) for y in labels]
    for c in _class_order(labels):
        members = np.array([i for i, y in enumerate(labels) if y is c])
        members = members[rng.permutation(len(members))]
        fold[members] = np.arange(len(members)) % k
    return fold


def kfold_cv(X: sp.spmatrix, labels: Sequence, vocabulary: NGramVocabulary, k: int = 10,
             lam: float = DEFAULT_LAMBDA, epochs: int = DEFAULT_EPOCHS,
             seed: int = DEFAULT_SEED) -> CvReport:
    """Stratified k-fold evaluation from pooled out-of-fold predictions."""
    if k < 2:
        raise TrainingError(f"k must be >= 2, got {k}")
    labels = [Stance(y) for y in labels]
    classes = _class_order(labels)
    counts = Counter(labels)
    small = [c.value for c in classes if counts[c] < k]
    if len(classes) < 2:
        raise TrainingError("degenerate training set")
    if small:
        raise TrainingError(f"classes {small} have fewer than k={k} examples")

    X = sp.csr_matrix(X)
    folds = stratified_folds(labels, k, seed)
    decision = np.zeros((len(labels), len(classes)))
    for f in range(k):
        train_idx = np.flatnonzero(folds != f)
        test_idx = np.flatnonzero(folds == f)
        model = train(X[train_idx], [labels[i] for i in train_idx], vocabulary, lam, epochs, seed)
        scores = model.decision_function(X[test_idx])
        cols = [model.classes.index(c) for c in classes]
        decision[test_idx] = scores[:, cols]

    predicted = [classes[i] for i in np.argmax(decision, axis=1)]
    cm = confusion_matrix(labels, predicted, classes)
    metrics = class_metrics(cm)
    aucs = [auc_binary(zip(decision[:, j], [y is c for y in labels])) for j, c in enumerate(classes)]
    return CvReport(
        folds=k,
        classes=classes,
        per_class=dict(zip(classes, metrics)),
        weighted_f1=weighted_f1(cm),
        macro_ovr_auc=float(np.mean(aucs)),
        confusion_matrix=cm,
    )


# -- persistence ------------------------------------------------------------

def model_to_json(model: LinearStanceModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "classes": [c.value for c in model.classes],
        "vocabulary": {
            "n_range": list(model.vocabulary.n_range),
            "min_df": model.vocabulary.min_df,
            "terms": model.vocabulary.terms(),
        },
        # json writes floats with repr(), which round-trips exactly
        "weights": model.weights.tolist(),
        "bias": model.bias.tolist(),
        "training_meta": model.training_meta,
    }


def model_from_json(data) -> LinearStanceModel:
    if not isinstance(data, dict) or data.get("format") != MODEL_FORMAT:
        raise ModelFormatError("not a stancekit linear stance model file")
    version = data.get("version")
    if version != MODEL_VERSION:
        raise ModelFormatError(
            f"model file version {version} is not supported by this code (version {MODEL_VERSION})")
    try:
        v = data["vocabulary"]
        vocab = NGramVocabulary({t: i for i, t in enumerate(v["terms"])},
                                tuple(v["n_range"]), int(v["min_df"]))
        classes = [Stance(c) for c in data["classes"]]
        weights = np.array(data["weights"], dtype=np.float64).reshape(len(classes), len(vocab))
        bias = np.array(data["bias"], dtype=np.float64).reshape(len(classes))
        meta = dict(data["training_meta"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"corrupt model file: {exc}") from None
    if not (np.all(np.isfinite(weights)) and np.all(np.isfinite(bias))):
        raise ModelFormatError("corrupt model file: non-finite weights")
    return LinearStanceModel(vocab, classes, weights, bias, meta)


def save_model(model: LinearStanceModel, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_json(model), fh)


def load_model(path) -> LinearStanceModel:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"corrupt model file {path}: {exc}") from None
    except OSError as exc:
        raise ModelFormatError(f"cannot read model file {path}: {exc}") from None
    return model_from_json(data)


# -- labeled data -----------------------------------------------------------

def read_labeled_csv(path) -> list[tuple[str, str, Stance]]:
    """Rows of ``tweet_id,text,label`` with label in remain/leave/none."""
    rows = []
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"tweet_id", "text", "label"} - set(reader.fieldnames or [])
        if missing:
            raise TrainingError(f"{path}: missing columns {sorted(missing)}")
        for line_no, row in enumerate(reader, start=2):
            try:
                label = Stance(row["label"].strip().lower())
            except ValueError:
                raise TrainingError(f"{path}:{line_no}: unknown label {row['label']!r}") from None
            rows.append((row["tweet_id"], row["text"], label))
    return rows
