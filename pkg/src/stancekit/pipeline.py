"""Pipeline stages. Each stage reads its inputs from the config or from
artifacts of earlier stages in the output directory, and writes CSV/JSON
artifacts plus a manifest entry."""

from __future__ import annotations

import logging
from collections import Counter, defaultdict
from pathlib import Path

from . import __version__
from .analytics import (
    MentionCategory,
    bot_stance_bins,
    classify_all,
    correlate_series,
    cross_tab,
    influence_series,
    mention_ledger,
    monthly_stance_series,
    pre_post_transitions,
    read_categories,
    read_score_csv,
    read_trend_csv,
    stance_counts,
    user_stances,
)
from .artifacts import ArtifactWriter, read_csv, read_json, require
from .config import RunConfig, parse_date
from .corpus import (
    RejectLog,
    TimeWindow,
    corpus_stats,
    filter_corpus,
    format_timestamp,
    influence_filter,
    load_corpus,
    parse_timestamp,
)
from .errors import AnalysisError, ConfigError
from .sentiment import Sentiment, SentimentLexicon, score_sentiment
from .stance_ml import (
    build_vocabulary,
    kfold_cv,
    model_from_json,
    model_to_json,
    read_labeled_csv,
    tokenize,
    train,
    vectorize_many,
)
from .stance_rules import (
    HashtagLexicon,
    Source,
    Stance,
    TweetStance,
    UserStance,
    classify_tweet_rules,
    comparative_share,
)
from .topics import (
    dominant_topics,
    load_lemmas,
    load_stopwords,
    monthly_change,
    monthly_topic_shares,
    preprocess,
    segment_periods,
    top_words,
    train_lda,
    umass_coherence,
)

logger = logging.getLogger(__name__)

CORPUS = "corpus.jsonl"
MODEL = "model.json"
TWEET_STANCES = "tweet_stances.csv"
USER_STANCES = "user_stances.csv"
SENTIMENT = "sentiment.csv"
DOC_TOPICS = "doc_topics.csv"
TRACKED = "tracked_mentions.csv"


def run_meta(cfg: RunConfig) -> dict:
    return {"tool": "stancekit", "version": __version__, "config_hash": cfg.config_hash(),
            "seed": cfg.seed, "topics_seed": cfg.topics_seed}


def _needs(cfg: RunConfig, key: str):
    value = getattr(cfg, key)
    if value is None:
        raise ConfigError(key, "required by this stage but not set")
    if not Path(value).exists():
        raise ConfigError(key, f"file not found: {value}")
    return value


def _corpus(cfg: RunConfig, english_only: bool):
    path = require(cfg.out, CORPUS, "ingest")
    tweets = load_corpus(path, strict=True)
    return list(filter_corpus(tweets, lang=cfg.lang if english_only else None))


def _hashtag_lexicon(cfg):
    return HashtagLexicon.from_file(cfg.hashtag_lexicon) if cfg.hashtag_lexicon else HashtagLexicon.default()


# -- stages -----------------------------------------------------------------

def stage_ingest(cfg: RunConfig, w: ArtifactWriter) -> dict:
    path = _needs(cfg, "input")
    rejects = RejectLog()
    window = None
    if cfg.date_from or cfg.date_to:
        start = parse_date(cfg.date_from) if cfg.date_from else parse_date("1970-01-01")
        end = parse_date(cfg.date_to) if cfg.date_to else parse_date("9999-01-01")
        window = TimeWindow(start, end)
    tweets = list(filter_corpus(load_corpus(path, strict=cfg.strict, rejects=rejects), window=window))
    w.write_jsonl(CORPUS, (t.to_json() for t in tweets))
    w.write_csv("rejects.csv", ["line_no", "reason"], rejects.rows)
    w.write_json("ingest.json", {"records": len(tweets), "rejects": len(rejects)})
    return {}


def stage_stats(cfg: RunConfig, w: ArtifactWriter) -> dict:
    stats = corpus_stats(_corpus(cfg, english_only=False))
    w.write_csv("tweets_per_month.csv", ["month", "tweets"], stats.tweets_per_month.items())
    w.write_csv("users_by_post_count.csv", ["posts", "users"], stats.users_by_post_count.items())
    w.write_csv("language_shares.csv", ["lang", "share"], stats.language_shares.items())
    w.write_csv("monthly_engagement.csv", ["month", "mean_retweets", "mean_likes"],
                ((m, rt, lk) for m, (rt, lk) in stats.monthly_engagement.items()))
    once = stats.users_by_post_count.get(1, 0)
    w.write_json("stats.json", {
        "tweets": stats.n_tweets, "users": stats.n_users,
        "single_post_user_share": once / stats.n_users,
        "mean_followers": stats.mean_followers,
        "language_shares": stats.language_shares,
    })
    return {}


def stage_stance_rules(cfg: RunConfig, w: ArtifactWriter) -> dict:
    tweets = _corpus(cfg, english_only=True)
    lexicon = _hashtag_lexicon(cfg)
    rows = []
    stances, users = [], []
    for t in tweets:
        s = classify_tweet_rules(t.hashtags, lexicon)
        rows.append((t.id, t.user_id, t.month, s.label if s else "no_signal"))
        if s is not None:
            stances.append(s)
            users.append(t.user_id)
    w.write_csv("rule_stances.csv", ["tweet_id", "user_id", "month", "label"], rows)
    ustances = user_stances(stances, users, cfg.stance_leave_below, cfg.stance_remain_above)
    w.write_csv("rule_users.csv", ["user_id", "prt", "prl", "score", "label"],
                ((u, s.prt, s.prl, s.score, s.label) for u, s in ustances.items()))
    try:
        shares = comparative_share(ustances.values())
    except AnalysisError:  # no polarized users in this corpus
        shares = (None, None)
    w.write_json("rule_summary.json", {
        "tweets": len(tweets),
        "si_tweets": len(stances),
        "si_share": len(stances) / len(tweets) if tweets else None,
        "remain_user_share": shares[0], "leave_user_share": shares[1],
    })
    return {}


def stage_stance_train(cfg: RunConfig, w: ArtifactWriter) -> dict:
    rows = read_labeled_csv(_needs(cfg, "labeled"))
    docs = [tokenize(text) for _, text, _ in rows]
    labels = [label for _, _, label in rows]
    vocab = build_vocabulary(docs, cfg.min_df)
    X = vectorize_many(docs, vocab)
    model = train(X, labels, vocab, cfg.svm_lambda, cfg.svm_epochs, cfg.seed)
    model.training_meta["min_df"] = cfg.min_df
    w.write_json(MODEL, model_to_json(model))
    counts = Counter(labels)
    if all(counts[c] >= cfg.cv_folds for c in model.classes):
        report = kfold_cv(X, labels, vocab, cfg.cv_folds, cfg.svm_lambda, cfg.svm_epochs, cfg.seed)
        w.write_json("cv_report.json", report.to_json())
        w.write_csv("cv_per_class.csv", ["class", "precision", "recall", "f1", "support"],
                    ((c, m.precision, m.recall, m.f1, m.support) for c, m in report.per_class.items()))
    else:
        logger.warning("skipping %d-fold CV: a class has fewer than %d examples", cfg.cv_folds, cfg.cv_folds)
    return {"svm": {"lambda": cfg.svm_lambda, "epochs": cfg.svm_epochs, "seed": cfg.seed,
                    "min_df": cfg.min_df}}


def stage_stance_predict(cfg: RunConfig, w: ArtifactWriter) -> dict:
    tweets = _corpus(cfg, english_only=True)
    model = model_from_json(read_json(require(cfg.out, MODEL, "stance-train")))
    result = classify_all(tweets, _hashtag_lexicon(cfg), model)
    stances = [result[t.id] for t in tweets]
    user_ids = [t.user_id for t in tweets]
    w.write_csv(TWEET_STANCES, ["tweet_id", "user_id", "created_at", "label", "source"],
                ((t.id, t.user_id, format_timestamp(t.created_at), s.label, s.source)
                 for t, s in zip(tweets, stances)))
    lb, ra = cfg.stance_leave_below, cfg.stance_remain_above
    users = user_stances(stances, user_ids, lb, ra)
    w.write_csv(USER_STANCES, ["user_id", "prt", "prl", "score", "label"],
                ((u, s.prt, s.prl, s.score, s.label) for u, s in users.items()))
    summary = [
        stance_counts(stances, user_ids, [Source.RULE], "rule", lb, ra),
        stance_counts(stances, user_ids, [Source.MODEL], "model", lb, ra),
        stance_counts(stances, user_ids, None, "merged", lb, ra),
    ]
    w.write_csv("stance_summary.csv",
                ["method", "remain_tweets", "leave_tweets", "remain_users", "leave_users",
                 "remain_user_share", "leave_user_share"],
                ((c.method, c.remain_tweets, c.leave_tweets, c.remain_users, c.leave_users, *c.user_shares)
                 for c in summary))
    return {}


def _load_tweet_stances(cfg):
    rows = read_csv(require(cfg.out, TWEET_STANCES, "stance-predict"))
    stances = [TweetStance(Stance(r["label"]), Source(r["source"])) for r in rows]
    return rows, stances


def stage_stance_report(cfg: RunConfig, w: ArtifactWriter) -> dict:
    rows, stances = _load_tweet_stances(cfg)
    timestamps = [parse_timestamp(r["created_at"]) for r in rows]
    user_ids = [r["user_id"] for r in rows]
    lb, ra = cfg.stance_leave_below, cfg.stance_remain_above
    series = monthly_stance_series(stances, timestamps, user_ids, lb, ra)
    w.write_csv("monthly_stance.csv", ["month", "remain_share", "leave_share", "polarized_users"],
                ((m, p.remain_share, p.leave_share, p.polarized_users) for m, p in series.items()))
    report = pre_post_transitions(stances, timestamps, user_ids, parse_date(cfg.event_date), lb, ra)
    w.write_csv("transitions.csv", ["pre_label", *[f"post_{c.value}" for c in report.classes]],
                ((c, *report.matrix[i]) for i, c in enumerate(report.classes)))
    w.write_json("transitions.json", {
        "event_date": cfg.event_date,
        "users_in_both_windows": report.n_users,
        "classes": [c.value for c in report.classes],
        "matrix": report.matrix.tolist(),
        "change_rates": {c.value: r for c, r in report.change_rates.items()},
    })
    return {}


def stage_sentiment(cfg: RunConfig, w: ArtifactWriter) -> dict:
    tweets = _corpus(cfg, english_only=True)
    lexicon = SentimentLexicon.from_files(cfg.sentiment_lexicon, cfg.negations)
    rows = []
    for t in tweets:
        score, label = score_sentiment(tokenize(t.text), lexicon)
        rows.append((t.id, score, label))
    w.write_csv(SENTIMENT, ["tweet_id", "score", "label"], rows)
    counts = Counter(r[2] for r in rows)
    w.write_json("sentiment_summary.json", {"tweets": len(rows),
                                             "labels": {s.value: counts[s] for s in Sentiment}})
    return {}


def _fit_topics(cfg, tweets, stopwords, lemmas, seed):
    dictionary, docs, kept = preprocess(tweets, stopwords, lemmas, cfg.bigram_min_count,
                                        cfg.bigram_threshold)
    model = train_lda(docs, len(dictionary), cfg.topics_k, cfg.topics_alpha, cfg.topics_beta,
                      cfg.topics_iterations, seed, terms=dictionary.id2token)
    return model, docs, kept


def stage_topics(cfg: RunConfig, w: ArtifactWriter) -> dict:
    tweets = list(influence_filter(_corpus(cfg, english_only=True), cfg.min_retweets, cfg.min_words))
    stopwords = load_stopwords(cfg.stopwords)
    lemmas = load_lemmas(cfg.lemmas)
    word_rows, coherence_rows, doc_rows = [], [], []
    seeds = {}

    def record(period, model, docs, kept):
        for k in range(model.k):
            for rank, (term, p) in enumerate(top_words(model, k, cfg.top_n).top_words, start=1):
                word_rows.append((period, k, rank, term, p))
            coherence_rows.append((period, k, umass_coherence(model, docs, k, cfg.top_n)))
        for t, topic in zip(kept, dominant_topics(model)):
            doc_rows.append((t.id, period, int(topic)))
        w.write_json(f"lda_{period}.json", model.to_json())

    full, docs, kept = _fit_topics(cfg, tweets, stopwords, lemmas, cfg.topics_seed)
    seeds["full"] = cfg.topics_seed
    record("full", full, docs, kept)

    shares = monthly_topic_shares(full, [t.created_at for t in kept])
    w.write_csv("monthly_topic_shares.csv", ["month", *[f"topic_{k}" for k in range(full.k)]],
                ((m, *[float(x) for x in v]) for m, v in shares.items()))
    w.write_csv("monthly_topic_change.csv", ["month", "l1_change"], monthly_change(shares).items())
    windows = segment_periods(shares, cfg.n_boundaries)
    period_rows = []
    for i, win in enumerate(windows, start=1):
        name = f"P{i}"
        members = [t for t in tweets if t.created_at in win]
        period_rows.append((name, format_timestamp(win.start), format_timestamp(win.end), len(members)))
        if len(members) < 2:
            logger.warning("period %s has %d tweets; no model trained", name, len(members))
            continue
        seeds[name] = cfg.topics_seed + i
        model, pdocs, pkept = _fit_topics(cfg, members, stopwords, lemmas, seeds[name])
        record(name, model, pdocs, pkept)
    w.write_csv("periods.csv", ["period", "start", "end", "tweets"], period_rows)
    w.write_csv("topic_words.csv", ["period", "topic", "rank", "term", "probability"], word_rows)
    w.write_csv("coherence.csv", ["period", "topic", "umass"], coherence_rows)
    w.write_csv(DOC_TOPICS, ["tweet_id", "period", "topic"], doc_rows)
    return {"lda": {"k": cfg.topics_k, "alpha": full.alpha, "beta": cfg.topics_beta,
                    "iterations": cfg.topics_iterations, "seeds": seeds}}


def stage_bots(cfg: RunConfig, w: ArtifactWriter) -> dict:
    scores = read_score_csv(_needs(cfg, "bot_scores"))
    rows = read_csv(require(cfg.out, USER_STANCES, "stance-predict"))
    users = {}
    for r in rows:
        score = float(r["score"]) if r["score"] else None
        users[r["user_id"]] = UserStance(int(r["prt"]), int(r["prl"]), score, Stance(r["label"]))
    posts = Counter(t.user_id for t in _corpus(cfg, english_only=False))
    summary = bot_stance_bins(users, scores, cfg.bot_bin_width, posts, cfg.bot_threshold)
    w.write_csv("bot_bins.csv", ["lower", "upper", "remain_share", "leave_share", "users"],
                ((b.lower, b.upper, b.remain_share, b.leave_share, b.user_count) for b in summary.bins))
    post_ratio = (summary.mean_posts_bot / summary.mean_posts_human
                  if summary.mean_posts_bot is not None and summary.mean_posts_human else None)
    w.write_json("bot_summary.json", {
        "threshold": cfg.bot_threshold, "joined_users": summary.joined_users,
        "missing_scores": summary.missing_scores, "bot_users": summary.bot_users,
        "bot_fraction": summary.bot_fraction, "mean_posts_bot": summary.mean_posts_bot,
        "mean_posts_human": summary.mean_posts_human, "bot_to_human_post_ratio": post_ratio,
    })
    return {}


def stage_mentions(cfg: RunConfig, w: ArtifactWriter) -> dict:
    tweets = _corpus(cfg, english_only=True)
    categories = read_categories(cfg.categories) if cfg.categories else {}
    ledger = mention_ledger(tweets, categories, cfg.mention_threshold)
    w.write_csv("mention_totals.csv", ["handle", "mentions"],
                sorted(ledger.totals.items(), key=lambda kv: (-kv[1], kv[0])))
    w.write_csv(TRACKED, ["handle", "category", "mentions"],
                ((h, ledger.categories[h], ledger.totals[h]) for h in ledger.tracked))
    w.write_csv("mention_monthly.csv", ["handle", "month", "mentions"],
                ((h, m, c) for h in ledger.tracked for m, c in ledger.monthly[h].items()))
    politicians = [h for h in ledger.tracked if ledger.categories[h] is MentionCategory.POLITICIAN]
    handles = politicians or ledger.tracked
    series = influence_series(ledger, handles) if handles else {}
    w.write_csv("influence.csv", ["month", *handles],
                ((m, *[shares[h] for h in handles]) for m, shares in series.items()))
    return {}


def stage_crosstab(cfg: RunConfig, w: ArtifactWriter) -> dict:
    rows, stances = _load_tweet_stances(cfg)
    stance_by_id = {r["tweet_id"]: s for r, s in zip(rows, stances)}
    senti = {r["tweet_id"]: Sentiment(r["label"])
             for r in read_csv(require(cfg.out, SENTIMENT, "sentiment"))}
    topic_rows = read_csv(require(cfg.out, DOC_TOPICS, "topics"))
    tracked = [r["handle"] for r in read_csv(require(cfg.out, TRACKED, "mentions"))]

    header = ["n", "polarized", "remain_share", "leave_share", "non_neutral",
              "positive_share", "negative_share"]

    def cells(p):
        return (p.n, p.polarized, p.remain_share, p.leave_share, p.non_neutral,
                p.positive_share, p.negative_share)

    by_period = defaultdict(dict)
    for r in topic_rows:
        by_period[r["period"]][r["tweet_id"]] = int(r["topic"])
    out = []
    for period in sorted(by_period, key=lambda p: (p != "full", p)):
        for topic, prof in cross_tab(by_period[period], stance_by_id, senti).items():
            out.append((period, topic, *cells(prof)))
    w.write_csv("crosstab_topics.csv", ["period", "topic", *header], out)

    tracked_set = set(tracked)
    groups = {}
    for t in _corpus(cfg, english_only=True):
        hit = sorted(tracked_set & t.mentions)
        if hit:
            groups[t.id] = hit
    mention_tab = cross_tab(groups, stance_by_id, senti)
    w.write_csv("crosstab_mentions.csv", ["handle", *header],
                ((h, *cells(p)) for h, p in mention_tab.items()))
    return {}


def stage_correlate(cfg: RunConfig, w: ArtifactWriter) -> dict:
    trend = read_trend_csv(_needs(cfg, "trend"))
    counts = Counter(t.month for t in _corpus(cfg, english_only=False))
    r, months = correlate_series(trend, {m: float(c) for m, c in counts.items()})
    w.write_json("correlation.json", {"pearson": r, "months": months, "n": len(months),
                                      "series": ["trend", "tweets_per_month"]})
    return {}


STAGES = {
    "ingest": stage_ingest,
    "stats": stage_stats,
    "stance-rules": stage_stance_rules,
    "stance-train": stage_stance_train,
    "stance-predict": stage_stance_predict,
    "stance-report": stage_stance_report,
    "sentiment": stage_sentiment,
    "topics": stage_topics,
    "bots": stage_bots,
    "mentions": stage_mentions,
    "crosstab": stage_crosstab,
    "correlate": stage_correlate,
}

# stages skipped by `pipeline` when their optional input is not configured
OPTIONAL_INPUT = {"bots": "bot_scores", "correlate": "trend"}


def run_stage(name: str, cfg: RunConfig):
    writer = ArtifactWriter(cfg.out, run_meta(cfg))
    extra = STAGES[name](cfg, writer)
    writer.update_manifest(name, _manifest_extra(cfg, writer, name, extra))


def _manifest_extra(cfg, writer, name, extra):
    path = writer.out / "manifest.json"
    params = read_json(path).get("params", {}) if path.exists() else {}
    if extra:
        params[name] = extra
    return {"config": cfg.hashed_view(), "config_hash": cfg.config_hash(),
            "params": dict(sorted(params.items()))}


def run_pipeline(cfg: RunConfig):
    for name in STAGES:
        key = OPTIONAL_INPUT.get(name)
        if key and getattr(cfg, key) is None:
            logger.warning("skipping stage %s: '%s' not configured", name, key)
            continue
        logger.info("running stage %s", name)
        run_stage(name, cfg)
