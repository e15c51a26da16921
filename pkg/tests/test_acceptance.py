"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""

import json
import math
import random
import time
from collections import Counter

import numpy as np

from conftest import make_tweet, utc
from gen import greedy_match, planted_corpus, planted_topics
from stancekit.analytics import cross_tab, pearson, pre_post_transitions
from stancekit.config import build_config
from stancekit.errors import ModelFormatError
from stancekit.pipeline import run_pipeline
from stancekit.sentiment import Sentiment
from stancekit.stance_ml import (
    auc_binary,
    build_vocabulary,
    kfold_cv,
    load_model,
    model_to_json,
    save_model,
    train,
    vectorize_many,
)
from stancekit.stance_rules import (
    AMBIGUOUS_HASHTAGS,
    LEAVE_HASHTAGS,
    REMAIN_HASHTAGS,
    HashtagLexicon,
    Source,
    Stance,
    TweetStance,
    classify_tweet_rules,
    user_stance,
)
from stancekit.topics import segment_periods, top_words, train_lda, umass_coherence
from test_topics import monthly, umass_fixture


def brute_force_rule(tags):
    remain = leave = 0
    for t in tags:
        for r in REMAIN_HASHTAGS:
            if t == r:
                remain += 1
        for l in LEAVE_HASHTAGS:
            if t == l:
                leave += 1
    if remain and leave:
        return "none"
    if remain:
        return "remain"
    if leave:
        return "leave"
    return None


def test_ac1_rule_stance(criterion):
    rng = random.Random(1)
    other = ["brexit", "news", "london", "may", "deal"]
    pool = list(REMAIN_HASHTAGS) + list(LEAVE_HASHTAGS) + list(AMBIGUOUS_HASHTAGS) + other
    tweets = [make_tweet(i, user=f"u{rng.randrange(120)}", text="x",
                         hashtags=rng.sample(pool, rng.randint(0, 4))) for i in range(1000)]
    lex = HashtagLexicon.default()

    start = time.perf_counter()
    results = [classify_tweet_rules(t.hashtags, lex) for t in tweets]
    by_user = {}
    for t, r in zip(tweets, results):
        by_user.setdefault(t.user_id, []).append(r if r is not None else TweetStance(Stance.NONE, Source.MODEL))
    users = {u: user_stance(v) for u, v in by_user.items()}
    elapsed = time.perf_counter() - start

    tweet_ok = sum((r.label.value if r else None) == brute_force_rule(t.hashtags)
                   for t, r in zip(tweets, results))
    user_ok = 0
    for u, stances in by_user.items():
        prt = sum(s.label is Stance.REMAIN for s in stances)
        prl = sum(s.label is Stance.LEAVE for s in stances)
        score = prt / (prt + prl) if prt + prl else None
        label = (Stance.NONE if score is None else Stance.LEAVE if score < 0.4
                 else Stance.REMAIN if score > 0.6 else Stance.NONE)
        user_ok += (users[u].score == score and users[u].label is label)
    ok = tweet_ok == 1000 and user_ok == len(users) and elapsed < 1.0
    criterion("AC1 rule stance", ok,
              f"tweets {tweet_ok}/1000, users {user_ok}/{len(users)}, {elapsed:.3f}s (< 1s)")
    assert ok


def test_ac2_ml_stance_cv(criterion):
    start = time.perf_counter()
    docs, labels = planted_corpus(100, seed=42)
    vocab = build_vocabulary(docs, min_df=2)
    report = kfold_cv(vectorize_many(docs, vocab), labels, vocab, k=10, seed=42)
    elapsed = time.perf_counter() - start
    ok = len(docs) == 300 and report.weighted_f1 >= 0.95 and report.macro_ovr_auc >= 0.98 and elapsed < 10
    criterion("AC2 ML stance 10-fold CV", ok,
              f"weighted F1 {report.weighted_f1:.4f} (>= 0.95), macro AUC {report.macro_ovr_auc:.4f} "
              f"(>= 0.98), {elapsed:.2f}s (< 10s)")
    assert ok


def test_ac3_auc_oracle(criterion):
    rng = np.random.default_rng(3)
    worst = 0.0
    for i in range(200):
        n = int(rng.integers(2, 501))
        scores = rng.normal(size=n)
        if i % 2:
            scores = np.round(scores, 1)  # force ties
        pos = rng.random(n) < rng.uniform(0.1, 0.9)
        pos[0], pos[1] = True, False
        p, q = scores[pos], scores[~pos]
        oracle = ((p[:, None] > q[None, :]).sum() + 0.5 * (p[:, None] == q[None, :]).sum()) / (len(p) * len(q))
        worst = max(worst, abs(auc_binary(zip(scores, pos)) - oracle))
    ok = worst <= 1e-9
    criterion("AC3 AUC vs pairwise oracle", ok, f"200 sets, max |diff| {worst:.2e} (<= 1e-9)")
    assert ok


def test_ac4_lda_recovery(criterion):
    docs, terms, truth = planted_topics(k=5, n_docs=500, seed=4)
    violations = []

    def check(model):
        try:
            model.check_counts()
        except AssertionError:
            violations.append(model.iterations_run)

    start = time.perf_counter()
    model = train_lda(docs, len(terms), k=5, iterations=300, seed=42, terms=terms, callback=check)
    elapsed = time.perf_counter() - start
    learned = [{w for w, _ in top_words(model, t, 10).top_words} for t in range(5)]
    overlaps = greedy_match(learned, truth)
    good = sum(o >= 0.7 for o in overlaps)
    ok = good >= 4 and not violations and model.iterations_run == 300 and elapsed < 60
    criterion("AC4 LDA recovery", ok,
              f"overlaps {[round(o, 2) for o in overlaps]} ({good}/5 >= 0.7, need 4), "
              f"count violations {len(violations)}, {elapsed:.2f}s (< 60s)")
    assert ok


def test_ac5_umass_fixture(criterion):
    model, docs = umass_fixture()
    value = umass_coherence(model, docs, 0, 3)
    expected = math.log(3 / 4) + math.log(3 / 4) + math.log(2 / 3)
    ok = abs(value - expected) <= 1e-9
    criterion("AC5 UMass coherence", ok, f"{value:.15f} vs hand {expected:.15f}")
    assert ok


def test_ac6_segmentation(criterion):
    shares = monthly([[0.7, 0.2, 0.1]] * 9 + [[0.1, 0.3, 0.6]] * 8)
    windows = segment_periods(shares, 1)
    boundary = windows[1].start
    ok = len(windows) == 2 and boundary == utc(2016, 10, 1)
    criterion("AC6 two-regime segmentation", ok, f"boundary {boundary:%Y-%m} (expected 2016-10)")
    assert ok


def test_ac7_analytics_fixtures(criterion):
    pre, post = utc(2016, 3, 1), utc(2016, 9, 1)
    stances, times, users = [], [], []
    for i in range(100):
        for u, a, b in ((f"l{i}", Stance.LEAVE, Stance.REMAIN if i < 62 else Stance.LEAVE),
                        (f"r{i}", Stance.REMAIN, Stance.LEAVE if i < 33 else Stance.REMAIN)):
            stances += [TweetStance(a, Source.RULE), TweetStance(b, Source.RULE)]
            times += [pre, post]
            users += [u, u]
    rates = pre_post_transitions(stances, times, users, event_date=utc(2016, 6, 23)).change_rates

    groups = {str(i): 0 for i in range(100)}
    tab = cross_tab(groups, {str(i): Stance.REMAIN if i < 97 else Stance.LEAVE for i in range(100)},
                    {str(i): Sentiment.NEUTRAL for i in range(100)})
    r = pearson([1, 2, 3, 4], [1, 3, 2, 4])
    ok = (rates[Stance.LEAVE] == 0.62 and rates[Stance.REMAIN] == 0.33
          and tab[0].remain_share == 0.97 and abs(r - 0.8) <= 1e-12)
    criterion("AC7 analytics fixtures", ok,
              f"leave change {rates[Stance.LEAVE]}, remain change {rates[Stance.REMAIN]}, "
              f"remain share {tab[0].remain_share}, pearson {r!r}")
    assert ok


def test_ac8_pipeline_determinism(criterion, fixture_dir, tmp_path):
    times_taken, outs = [], []
    for run in ("a", "b"):
        cfg = build_config(fixture_dir / "stancekit.ini", {"out": str(tmp_path / run)})
        start = time.perf_counter()
        run_pipeline(cfg)
        times_taken.append(time.perf_counter() - start)
        outs.append(tmp_path / run)
    names_a = sorted(p.name for p in outs[0].iterdir())
    names_b = sorted(p.name for p in outs[1].iterdir())
    differing = [n for n in names_a if (outs[0] / n).read_bytes() != (outs[1] / n).read_bytes()]
    ok = names_a == names_b and not differing and len(names_a) > 30 and max(times_taken) < 60
    criterion("AC8 pipeline determinism", ok,
              f"{len(names_a)} artifacts, {len(differing)} differ, runs "
              f"{times_taken[0]:.1f}s / {times_taken[1]:.1f}s (< 60s)")
    assert ok


def test_ac9_model_persistence(criterion, tmp_path):
    docs, labels = planted_corpus(40, seed=9)
    vocab = build_vocabulary(docs, min_df=2)
    model = train(vectorize_many(docs, vocab), labels, vocab)
    save_model(model, tmp_path / "m.json")
    loaded = load_model(tmp_path / "m.json")
    exact = (loaded == model and loaded.weights.tobytes() == model.weights.tobytes()
             and loaded.bias.tobytes() == model.bias.tobytes())

    errors = Counter()
    text = (tmp_path / "m.json").read_text()
    (tmp_path / "trunc.json").write_text(text[:-40])
    data = model_to_json(model)
    data["version"] = 0
    (tmp_path / "v0.json").write_text(json.dumps(data))
    for name, must in (("trunc.json", "corrupt"), ("v0.json", "version 0")):
        try:
            load_model(tmp_path / name)
        except ModelFormatError as exc:
            msg = str(exc)
            errors[name] = must in msg and (name != "v0.json" or "version 1" in msg)
    ok = exact and errors["trunc.json"] and errors["v0.json"]
    criterion("AC9 model persistence", ok,
              f"bit-exact round trip {exact}, truncated -> error {bool(errors['trunc.json'])}, "
              f"version 0 -> error naming both versions {bool(errors['v0.json'])}")
    assert ok
