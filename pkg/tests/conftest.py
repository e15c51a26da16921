import json
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import pytest

from stancekit.corpus import TweetRecord, extract_hashtags, extract_mentions


@pytest.fixture(scope="session")
def fixture_dir() -> Path:
    return Path(str(resources.files("stancekit").joinpath("data/fixture")))


def utc(*args):
    return datetime(*args, tzinfo=timezone.utc)


def make_tweet(id, user="u1", when=None, text="hello world", lang="en", rt=0, likes=0,
               hashtags=None, mentions=None, followers=None):
    return TweetRecord(
        id=str(id), user_id=user, created_at=when or utc(2016, 1, 1), text=text, lang=lang,
        retweet_count=rt, like_count=likes,
        hashtags=frozenset(hashtags) if hashtags is not None else extract_hashtags(text),
        mentions=frozenset(mentions) if mentions is not None else extract_mentions(text),
        user_followers=followers,
    )


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for r in rows:
            fh.write((r if isinstance(r, str) else json.dumps(r)) + "\n")
    return path


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion.

    Usage: ``criterion("AC1 rule stance", ok, "detail")`` then assert ``ok``.
    """
    def record(name, ok, detail=""):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
