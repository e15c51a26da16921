"""Run configuration: defaults < config file < command-line overrides.

The config file is flat ``key = value`` text (``#`` comments allowed).
Relative paths in it resolve against the file's own directory.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, fields
from datetime import datetime, timezone
from pathlib import Path

from .errors import ConfigError

CONFIG_ENV = "STANCEKIT_CONFIG"

PATH_KEYS = ("input", "labeled", "bot_scores", "categories", "trend", "hashtag_lexicon",
             "stopwords", "lemmas", "sentiment_lexicon", "negations")


@dataclass
class RunConfig:
    # inputs
    input: str | None = None
    labeled: str | None = None
    bot_scores: str | None = None
    categories: str | None = None
    trend: str | None = None
    hashtag_lexicon: str | None = None
    stopwords: str | None = None
    lemmas: str | None = None
    sentiment_lexicon: str | None = None
    negations: str | None = None
    # corpus selection
    lang: str | None = "en"
    date_from: str | None = None
    date_to: str | None = None
    strict: bool = False
    # learned stance model
    svm_lambda: float = 1e-4
    svm_epochs: int = 20
    min_df: int = 2
    seed: int = 42
    cv_folds: int = 10
    # topics
    topics_k: int = 20
    topics_alpha: float | None = None
    topics_beta: float = 0.01
    topics_iterations: int = 500
    topics_seed: int = 42
    top_n: int = 10
    n_boundaries: int = 3
    bigram_min_count: int = 5
    bigram_threshold: float = 10.0
    # thresholds
    stance_leave_below: float = 0.4
    stance_remain_above: float = 0.6
    bot_threshold: float = 0.8
    bot_bin_width: float = 0.1
    min_retweets: int = 10
    min_words: int = 10
    mention_threshold: int = 10000
    event_date: str = "2016-06-23"
    # output
    out: str = "out"

    def validate(self):
        def check(key, ok, message):
            if not ok:
                raise ConfigError(key, message)

        check("stance_leave_below", 0.0 <= self.stance_leave_below <= 1.0, "must be in [0, 1]")
        check("stance_remain_above", 0.0 <= self.stance_remain_above <= 1.0, "must be in [0, 1]")
        check("stance_remain_above", self.stance_leave_below <= self.stance_remain_above,
              "must not be below stance_leave_below")
        check("bot_threshold", 0.0 <= self.bot_threshold <= 1.0, "must be in [0, 1]")
        n_bins = round(1 / self.bot_bin_width) if self.bot_bin_width > 0 else 0
        check("bot_bin_width", n_bins >= 1 and abs(n_bins * self.bot_bin_width - 1) < 1e-9,
              "must divide 1 evenly")
        check("svm_lambda", self.svm_lambda > 0, "must be positive")
        check("svm_epochs", self.svm_epochs >= 1, "must be >= 1")
        check("min_df", self.min_df >= 1, "must be >= 1")
        check("cv_folds", self.cv_folds >= 2, "must be >= 2")
        check("topics_k", self.topics_k >= 2, "must be >= 2")
        check("topics_alpha", self.topics_alpha is None or self.topics_alpha > 0, "must be positive")
        check("topics_beta", self.topics_beta > 0, "must be positive")
        check("topics_iterations", self.topics_iterations >= 1, "must be >= 1")
        check("top_n", self.top_n >= 2, "must be >= 2")
        check("n_boundaries", self.n_boundaries >= 0, "must be >= 0")
        check("bigram_min_count", self.bigram_min_count >= 1, "must be >= 1")
        check("min_retweets", self.min_retweets >= 0, "must be >= 0")
        check("min_words", self.min_words >= 0, "must be >= 0")
        check("mention_threshold", self.mention_threshold >= 0, "must be >= 0")
        for key in ("event_date", "date_from", "date_to"):
            value = getattr(self, key)
            if value is not None:
                try:
                    parse_date(value)
                except ValueError:
                    raise ConfigError(key, f"not an ISO date: {value!r}") from None
        if self.date_from and self.date_to:
            check("date_to", parse_date(self.date_from) < parse_date(self.date_to),
                  "must be after date_from")
        return self

    def hashed_view(self) -> dict:
        """Config values that determine artifact content (the output dir does not)."""
        d = dataclasses.asdict(self)
        d.pop("out")
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.hashed_view(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]


def parse_date(value: str) -> datetime:
    text = value.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    return ts.replace(tzinfo=timezone.utc) if ts.tzinfo is None else ts.astimezone(timezone.utc)


_FIELDS = {f.name: f for f in fields(RunConfig)}
_ALIASES = {"from": "date_from", "to": "date_to"}


def _coerce(key: str, raw):
    f = _FIELDS[key]
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    kind = f.type if isinstance(f.type, str) else str(f.type)
    optional = "None" in kind
    if optional and text.lower() in ("", "none", "null"):
        return None
    try:
        if kind.startswith("bool"):
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind.startswith("int"):
            return int(text)
        if kind.startswith("float"):
            return float(text)
    except ValueError:
        raise ConfigError(key, f"cannot parse {raw!r} as {kind.split()[0]}") from None
    return text


def canonical_key(key: str) -> str:
    key = key.strip().replace("-", "_")
    key = _ALIASES.get(key, key)
    if key not in _FIELDS:
        raise ConfigError(key, "unknown key")
    return key


def read_config_file(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError("config", f"file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + path.read_text(encoding="utf-8"), source=str(path))
    except configparser.Error as exc:
        raise ConfigError("config", f"{path}: {exc}") from None
    values = {}
    for raw_key, raw in parser["run"].items():
        key = canonical_key(raw_key)
        value = _coerce(key, raw)
        if key in PATH_KEYS and value is not None and not os.path.isabs(value):
            value = str((path.parent / value).resolve())
        values[key] = value
    return values


def build_config(config_path=None, overrides: dict | None = None) -> RunConfig:
    values = {}
    config_path = config_path or os.environ.get(CONFIG_ENV) or None
    if config_path:
        values.update(read_config_file(config_path))
    for raw_key, raw in (overrides or {}).items():
        if raw is None:
            continue
        key = canonical_key(raw_key)
        value = _coerce(key, raw)
        if key in PATH_KEYS and value is not None:
            value = str(Path(value).resolve())
        values[key] = value
    return RunConfig(**values).validate()
