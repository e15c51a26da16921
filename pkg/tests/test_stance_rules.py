import json

import pytest
from hypothesis import given, strategies as st

from stancekit.errors import AnalysisError, LexiconError
from stancekit.stance_rules import (
    HashtagLexicon,
    Source,
    Stance,
    TweetStance,
    classify_tweet_rules,
    comparative_share,
    label_from_score,
    share_from_counts,
    user_stance,
    user_stance_from_counts,
)

LEX = HashtagLexicon.default()
R, L, N = Stance.REMAIN, Stance.LEAVE, Stance.NONE

TABLE_REMAIN = (
    "strongerin voteremain intogether labourinforbritain moreincommon greenerin catsagainstbrexit "
    "bremain betteroffin leadnotleave remain stay ukineu votein voteyes yes2eu yestoeu sayyes2europe "
    "fbpe stopbrexit stopbrexitsavebritain"
).split()
TABLE_LEAVE = (
    "leaveeuofficial leaveeu leave labourleave votetoleave voteleave takebackcontrol ivotedleave "
    "beleave betteroffout britainout nottip takecontrol voteno voteout voteleaveeu leavers vote_leave "
    "leavetheeu voteleavetakecontrol votedleave"
).split()


def test_default_lexicon_contents():
    assert LEX.remain == set(TABLE_REMAIN) and len(TABLE_REMAIN) == 21
    assert LEX.leave == set(TABLE_LEAVE) and len(TABLE_LEAVE) == 21
    assert LEX.ambiguous == {"euref", "eureferendum", "eu", "uk"}


@pytest.mark.parametrize("tags,expected", [
    ({"voteremain", "brexit"}, R),
    ({"voteleave", "strongerin"}, N),
    ({"takebackcontrol"}, L),
])
def test_classify_examples(tags, expected):
    assert classify_tweet_rules(tags, LEX) == TweetStance(expected, Source.RULE)


def test_ambiguous_only_is_no_signal():
    assert classify_tweet_rules({"euref"}, LEX) is None
    assert classify_tweet_rules(set(), LEX) is None


def test_lexicon_validation():
    with pytest.raises(LexiconError, match="overlap"):
        HashtagLexicon(frozenset({"a"}), frozenset({"a"}))
    with pytest.raises(LexiconError, match="lowercase"):
        HashtagLexicon(frozenset({"Remain"}), frozenset({"leave"}))


def test_lexicon_file_roundtrip(tmp_path):
    path = tmp_path / "lex.json"
    path.write_text(json.dumps({"remain": ["#Yes"], "leave": ["no"], "ambiguous": ["eu"]}))
    lex = HashtagLexicon.from_file(path)
    assert lex.remain == {"yes"} and lex.leave == {"no"}
    assert classify_tweet_rules({"yes"}, lex).label is R
    path.write_text(json.dumps({"remain": ["x"], "leave": ["x"]}))
    with pytest.raises(LexiconError):
        HashtagLexicon.from_file(path)


@pytest.mark.parametrize("labels,score,label", [
    ([R, R, R, L], 0.75, R),
    ([R, L], 0.5, N),
    ([L] * 5, 0.0, L),
])
def test_user_stance_examples(labels, score, label):
    u = user_stance([TweetStance(x, Source.RULE) for x in labels])
    assert u.score == score and u.label is label


def test_user_without_polarized_tweets():
    u = user_stance([N, N])
    assert u.score is None and u.label is N and (u.prt, u.prl) == (0, 0)


def test_threshold_boundaries_are_strict():
    assert user_stance_from_counts(2, 3).score == 0.4
    assert user_stance_from_counts(2, 3).label is N
    assert user_stance_from_counts(3, 2).label is N
    assert label_from_score(0.6) is N and label_from_score(0.4) is N
    assert label_from_score(0.6000001) is R and label_from_score(0.3999999) is L


def test_comparative_share_examples():
    assert comparative_share([R] * 62 + [L] * 38 + [N] * 10) == (0.62, 0.38)
    assert comparative_share([R, L]) == (0.5, 0.5)
    remain, leave = share_from_counts(432_000, 309_000)
    assert remain == pytest.approx(0.583, abs=1e-3) and leave == pytest.approx(0.417, abs=1e-3)


def test_comparative_share_needs_polarized_users():
    with pytest.raises(AnalysisError, match="no polarized users"):
        comparative_share([N, N])


vocab = st.sampled_from(TABLE_REMAIN[:4] + TABLE_LEAVE[:4] + ["euref", "brexit", "cats"])


@given(st.lists(vocab, max_size=8), st.randoms())
def test_classify_set_semantics(tags, rng):
    shuffled = list(tags) * 2
    rng.shuffle(shuffled)
    assert classify_tweet_rules(tags, LEX) == classify_tweet_rules(shuffled, LEX)


@given(st.lists(vocab, max_size=8))
def test_classify_is_total(tags):
    tags = set(tags)
    out = classify_tweet_rules(tags, LEX)
    has_r, has_l = bool(tags & LEX.remain), bool(tags & LEX.leave)
    outcomes = [out is None, out is not None and out.label is R,
                out is not None and out.label is L, out is not None and out.label is N]
    assert sum(outcomes) == 1
    assert (out is None) == (not has_r and not has_l)
    if out is not None:
        assert out.source is Source.RULE


@given(st.integers(0, 200), st.integers(0, 200), st.integers(1, 50))
def test_user_label_scale_invariant(prt, prl, k):
    a, b = user_stance_from_counts(prt, prl), user_stance_from_counts(k * prt, k * prl)
    assert a.label is b.label
    assert a.score == b.score or abs(a.score - b.score) < 1e-12


@given(st.lists(st.sampled_from([R, L, N]), max_size=40))
def test_user_stance_counts(labels):
    u = user_stance(labels)
    assert u.prt == labels.count(R) and u.prl == labels.count(L)
    if u.prt + u.prl:
        assert 0.0 <= u.score <= 1.0


@given(st.lists(st.sampled_from([R, L, N]), max_size=40).filter(lambda x: R in x or L in x))
def test_shares_sum_to_one(labels):
    assert sum(comparative_share(labels)) == pytest.approx(1.0)
