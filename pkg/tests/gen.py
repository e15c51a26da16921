"""Synthetic data generators shared by unit and acceptance tests."""

import numpy as np

from stancekit.stance_rules import Stance

CLASS_KEYWORDS = {
    Stance.REMAIN: ["europe", "together", "single", "market", "erasmus"],
    Stance.LEAVE: ["sovereignty", "borders", "control", "independence", "fishing"],
    Stance.NONE: ["weather", "football", "traffic", "coffee", "holiday"],
}


def planted_corpus(n_per_class=100, seed=0, n_background=300, length=(8, 16)):
    """Docs of shared background words plus one class keyword each."""
    rng = np.random.default_rng(seed)
    background = [f"w{i}" for i in range(n_background)]
    docs, labels = [], []
    for cls, words in CLASS_KEYWORDS.items():
        for _ in range(n_per_class):
            n = int(rng.integers(*length))
            doc = [background[j] for j in rng.integers(0, n_background, n)]
            doc.insert(int(rng.integers(0, n + 1)), words[int(rng.integers(0, len(words)))])
            docs.append(doc)
            labels.append(cls)
    order = rng.permutation(len(docs))
    return [docs[i] for i in order], [labels[i] for i in order]


def planted_topics(k=5, n_docs=500, doc_len=40, words_per_topic=10, n_background=40,
                   topic_mass=0.9, seed=0):
    """LDA corpus where each topic owns a disjoint block of ``words_per_topic`` words.

    Returns (docs as lists of term ids, terms, true topic word sets).
    """
    rng = np.random.default_rng(seed)
    terms = [f"t{t}_{j}" for t in range(k) for j in range(words_per_topic)]
    terms += [f"bg{j}" for j in range(n_background)]
    docs = []
    for _ in range(n_docs):
        mix = rng.dirichlet(np.full(k, 0.2))
        topics = rng.choice(k, size=doc_len, p=mix)
        doc = []
        for t in topics:
            if rng.random() < topic_mass or n_background == 0:
                doc.append(int(t * words_per_topic + rng.integers(words_per_topic)))
            else:
                doc.append(int(k * words_per_topic + rng.integers(n_background)))
        docs.append(doc)
    truth = [set(terms[t * words_per_topic:(t + 1) * words_per_topic]) for t in range(k)]
    return docs, terms, truth


def greedy_match(learned: list[set], truth: list[set]) -> list[float]:
    """Greedy one-to-one matching by overlap; returns per-true-topic overlap fraction."""
    pairs = sorted(((len(l & t), i, j) for i, l in enumerate(learned) for j, t in enumerate(truth)),
                   key=lambda p: (-p[0], p[1], p[2]))
    used_l, used_t, out = set(), set(), [0.0] * len(truth)
    for overlap, i, j in pairs:
        if i in used_l or j in used_t:
            continue
        used_l.add(i)
        used_t.add(j)
        out[j] = overlap / len(truth[j])
    return out
