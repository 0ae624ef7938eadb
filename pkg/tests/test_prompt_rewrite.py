import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from videoground.fixtures import recaption_corpus
from videoground.prompt_rewrite import (
    RecaptionRecord,
    build_psr_sample,
    corpus_stats,
    extract_brief,
    extract_dense_and_image,
    render_assistant_turn,
    render_user_turn,
)
from videoground.types import validate


def test_user_turn_golden():
    assert (
        render_user_turn("a cat on a mat")
        == "Generate an image with prompt rewrite about a cat on a mat."
    )


def test_assistant_turn_golden():
    assert render_assistant_turn("a fluffy gray cat sitting on a woven mat", "img/7.png") == (
        "Here is my detailed description: a fluffy gray cat sitting on a woven mat "
        "Here is the generated image: <img>img/7.png</img>."
    )


def test_extractors_invert_renderers():
    assert extract_brief(render_user_turn("two dogs")) == "two dogs"
    dense, uri = extract_dense_and_image(render_assistant_turn("two large dogs.", "u.png"))
    assert dense == "two large dogs."
    assert uri == "u.png"


@pytest.mark.parametrize(
    "turn",
    [
        "Generate an image about a cat.",
        "Generate an image with prompt rewrite about a cat",  # missing period
        "generate an image with prompt rewrite about a cat.",
    ],
)
def test_extract_brief_rejects_nonmatching(turn):
    with pytest.raises(ValueError, match="template"):
        extract_brief(turn)


def test_extract_dense_rejects_nonmatching():
    with pytest.raises(ValueError, match="template"):
        extract_dense_and_image("Here is my detailed description: x <img>u</img>.")


def test_build_psr_sample_validates():
    rec = RecaptionRecord.from_captions("im.png", "a cat", "a gray cat on a red mat")
    sample = build_psr_sample(rec)
    validate(sample).raise_for_violations()
    assert sample.user_turn.endswith("about a cat.")
    assert extract_dense_and_image(sample.assistant_turn) == (rec.c_dense, "im.png")


@pytest.mark.parametrize(
    "field,value",
    [
        ("c_brief", "a <img> cat"),
        ("c_dense", "dense </img> text"),
        ("image_uri", "dir/<img>/f.png"),
    ],
)
def test_build_psr_sample_rejects_reserved_literals(field, value):
    kwargs = {"image_uri": "u.png", "c_brief": "a cat", "c_dense": "a big cat"}
    kwargs[field] = value
    rec = RecaptionRecord.from_captions(**{
        "image_uri": kwargs["image_uri"],
        "c_brief": kwargs["c_brief"],
        "c_dense": kwargs["c_dense"],
    })
    with pytest.raises(ValueError, match="reserved literal"):
        build_psr_sample(rec)


def test_record_token_counts_must_match():
    with pytest.raises(ValueError, match="brief_token_count"):
        RecaptionRecord("u.png", "a cat", "a big cat", brief_token_count=3, dense_token_count=3)
    with pytest.raises(ValueError, match="dense_token_count"):
        RecaptionRecord("u.png", "a cat", "a big cat", brief_token_count=2, dense_token_count=9)
    with pytest.raises(ValueError):
        RecaptionRecord.from_captions("u.png", "", "a big cat")


def test_corpus_stats_exact_means():
    records, _ = _fixture_records()
    stats = corpus_stats(records)
    assert stats.count == 500
    assert math.isclose(stats.mean_brief_tokens, 10.2, abs_tol=1e-12)
    assert math.isclose(stats.mean_dense_tokens, 79.6, abs_tol=1e-12)


def test_corpus_stats_small_oracle():
    records = [
        RecaptionRecord.from_captions(f"u{i}.png", " ".join(["w"] * b), " ".join(["d"] * d))
        for i, (b, d) in enumerate([(4, 70), (5, 80), (5, 80), (6, 90)])
    ]
    stats = corpus_stats(records)
    assert math.isclose(stats.mean_brief_tokens, 5.0, abs_tol=1e-9)
    assert math.isclose(stats.mean_dense_tokens, 80.0, abs_tol=1e-9)


def test_corpus_stats_rejects_empty():
    with pytest.raises(ValueError):
        corpus_stats([])


def _fixture_records():
    records = recaption_corpus()
    return records, None


def test_fixture_corpus_records_are_well_formed():
    records, _ = _fixture_records()
    for rec in records[:25]:
        sample = build_psr_sample(rec)
        validate(sample).raise_for_violations()


_word = st.text(alphabet="abcdefghijklmnopqrstuvwxyzé", min_size=1, max_size=8)
_caption = st.lists(_word, min_size=1, max_size=12).map(" ".join)


@given(_caption, _caption, _word)
@settings(max_examples=100, deadline=None)
def test_round_trip_property(c_brief, c_dense, uri):
    sample = build_psr_sample(RecaptionRecord.from_captions(uri, c_brief, c_dense))
    assert extract_brief(sample.user_turn) == c_brief
    assert extract_dense_and_image(sample.assistant_turn) == (c_dense, uri)
