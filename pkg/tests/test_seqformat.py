import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from videoground.annotate import AnnotationConfig, annotate_corpus
from videoground.fixtures import random_frame_pair_sample
from videoground.seqformat import (
    TAG_LITERALS,
    DropConfig,
    ParsedGroup,
    SequenceParseError,
    parse,
    render,
    serialize,
)
from videoground.types import GroundedInstance

GOLDEN_LOSSLESS = (
    "<p>A girl</p><b>[100,50,400,900]</b><img>anno01/1/26.png</img>"
    " in a pink shirt with golden hair lies with "
    "<p>her golden retriever</p><b>[450,300,850,950]</b><img>anno01/4/26.png</img>"
    " on <p>the bed</p><b>[0,400,999,999]</b><img>anno01/5/26.png</img>."
)


@pytest.fixture(scope="module")
def girl_sample():
    from videoground.fixtures import annotation_corpus
    from videoground.gateway.stub import StubGateway

    videos, config = annotation_corpus()
    samples, _ = annotate_corpus(videos, StubGateway(config), AnnotationConfig())
    return next(s for s in samples if s.video_id == "anno01")


class TestSerialize:
    def test_lossless_golden(self, girl_sample):
        out = serialize(girl_sample, DropConfig(drop_prob=0.0))
        assert out.serialized_text == GOLDEN_LOSSLESS
        assert out.target_image_uri == "anno01/frame/1.png"
        assert out.attachments == (
            "anno01/1/26.png",
            "anno01/4/26.png",
            "anno01/5/26.png",
        )
        assert out.rng_seed == 0

    def test_full_drop_keeps_phrase_tags_only(self, girl_sample):
        out = serialize(girl_sample, DropConfig(drop_prob=1.0))
        assert out.serialized_text == (
            "<p>A girl</p> in a pink shirt with golden hair lies with "
            "<p>her golden retriever</p> on <p>the bed</p>."
        )
        assert out.attachments == ()

    def test_default_drop_decisions_are_frozen(self, girl_sample):
        out = serialize(girl_sample, DropConfig())
        groups = parse(out.serialized_text).groups()
        assert [(g.box is not None, g.segment_uri is not None) for g in groups] == [
            (True, True),   # A girl
            (False, False), # her golden retriever
            (False, True),  # the bed
        ]

    def test_drop_is_deterministic_and_seed_sensitive(self, girl_sample):
        a = serialize(girl_sample, DropConfig())
        b = serialize(girl_sample, DropConfig())
        c = serialize(girl_sample, DropConfig(seed=1))
        assert a == b
        assert a.serialized_text != c.serialized_text

    def test_joint_mode_never_splits_box_from_segment(self, girl_sample):
        for seed in range(32):
            out = serialize(girl_sample, DropConfig(independent=False, seed=seed))
            for g in parse(out.serialized_text).groups():
                assert (g.box is None) == (g.segment_uri is None)

    def test_attachments_follow_surviving_segment_order(self, girl_sample):
        for seed in range(16):
            out = serialize(girl_sample, DropConfig(seed=seed))
            uris = [g.segment_uri for g in parse(out.serialized_text).groups() if g.segment_uri]
            assert list(out.attachments) == uris

    @pytest.mark.parametrize("literal", TAG_LITERALS)
    def test_reserved_literal_in_caption_rejected(self, girl_sample, literal):
        import dataclasses

        bad = dataclasses.replace(girl_sample, caption=girl_sample.caption + " " + literal)
        with pytest.raises(ValueError, match="reserved tag literal"):
            serialize(bad, DropConfig(drop_prob=0.0))

    def test_reserved_literal_in_segment_uri_rejected(self, girl_sample):
        import dataclasses

        inst = girl_sample.instances[0]
        bad_inst = dataclasses.replace(inst, segment_uri="seg/</img>/x.png")
        bad = dataclasses.replace(
            girl_sample, instances=(bad_inst,) + girl_sample.instances[1:]
        )
        with pytest.raises(ValueError, match="reserved tag literal"):
            serialize(bad, DropConfig(drop_prob=0.0))

    def test_invalid_sample_rejected(self, girl_sample):
        import dataclasses

        bad = dataclasses.replace(girl_sample, caption="totally different text")
        with pytest.raises(ValueError):
            serialize(bad, DropConfig(drop_prob=0.0))

    def test_drop_config_validation(self):
        with pytest.raises(ValueError):
            DropConfig(drop_prob=1.5)
        with pytest.raises(ValueError):
            DropConfig(seed=-1)


class TestParse:
    def test_round_trip_of_golden(self):
        parsed = parse(GOLDEN_LOSSLESS)
        assert render(parsed) == GOLDEN_LOSSLESS
        assert parsed.skeleton() == (
            "A girl in a pink shirt with golden hair lies with"
            " her golden retriever on the bed."
        )
        assert parsed.groups()[0] == ParsedGroup(
            chunk_text="A girl", box=(100, 50, 400, 900), segment_uri="anno01/1/26.png"
        )

    def test_empty_and_plain_inputs(self):
        assert parse("").parts == ()
        assert parse("just words").parts == ("just words",)
        assert render(parse("just words")) == "just words"

    @pytest.mark.parametrize(
        "text,offset,fragment",
        [
            ("<p>cat", 0, "unclosed <p>"),
            ("xy<b>[1,2,3,4]</b>", 2, "must immediately follow"),
            ("<img>u</img>", 0, "must immediately follow"),
            ("</p>tail", 0, "unexpected </p>"),
            ("<p>cat</p><b>[01,2,3,4]</b>", 14, "leading zeros"),
            ("<p>cat</p><b>[1000,2,3,4]</b>", 14, "out of range"),
            ("<p>cat</p><b>[1,2,3]</b>", 19, "expected ','"),
            ("<p>cat</p><b>[1,2,3,4]</b", 10, "unclosed <b>"),
            ("<p>cat</p><img>uri", 10, "unclosed <img>"),
            ("<p>a</p><b>1,2,3,4]</b>", 11, "expected '\\['"),
            # Offsets count UTF-8 bytes: "café" is five of them.
            ("café<p>x", 5, "unclosed <p>"),
        ],
    )
    def test_error_offsets(self, text, offset, fragment):
        with pytest.raises(SequenceParseError, match=fragment) as exc:
            parse(text)
        assert exc.value.offset == offset

    def test_group_without_annotations_parses(self):
        parsed = parse("<p>a dog</p> runs")
        assert parsed.parts == (ParsedGroup("a dog", None, None), " runs")

    def test_box_only_and_segment_only(self):
        parsed = parse("<p>a</p><b>[1,2,3,4]</b>x<p>b</p><img>u</img>")
        a, _, b = parsed.parts
        assert a.box == (1, 2, 3, 4) and a.segment_uri is None
        assert b.box is None and b.segment_uri == "u"


class TestProperties:
    @given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=0, max_value=2**32))
    @settings(max_examples=60, deadline=None)
    def test_lossless_round_trip_on_random_samples(self, sample_seed, drop_seed):
        sample = random_frame_pair_sample(random.Random(sample_seed))
        out = serialize(sample, DropConfig(drop_prob=0.0, seed=drop_seed))
        parsed = parse(out.serialized_text)
        assert parsed.skeleton() == sample.caption
        ordered = sorted(sample.instances, key=lambda i: i.chunk.char_span[0])
        assert [g.chunk_text for g in parsed.groups()] == [i.chunk.text for i in ordered]
        assert [g.box for g in parsed.groups()] == [
            (i.box.x1, i.box.y1, i.box.x2, i.box.y2) for i in ordered
        ]
        assert [g.segment_uri for g in parsed.groups()] == [i.segment_uri for i in ordered]
        assert render(parsed) == out.serialized_text

    @given(st.integers(min_value=0, max_value=10_000), st.floats(min_value=0.0, max_value=1.0))
    @settings(max_examples=40, deadline=None)
    def test_partial_drop_still_parses_and_renders(self, sample_seed, drop_prob):
        sample = random_frame_pair_sample(random.Random(sample_seed))
        out = serialize(sample, DropConfig(drop_prob=drop_prob))
        parsed = parse(out.serialized_text)
        assert parsed.skeleton() == sample.caption
        assert render(parsed) == out.serialized_text

    @given(st.text(max_size=200))
    @settings(max_examples=200, deadline=None)
    def test_parser_is_total(self, text):
        try:
            parsed = parse(text)
        except SequenceParseError as err:
            assert 0 <= err.offset <= len(text.encode("utf-8"))
        else:
            assert render(parsed) == text

    @given(
        st.text(
            alphabet=st.sampled_from(list("<>/pbimg[],0123456789 café")),
            max_size=120,
        )
    )
    @settings(max_examples=300, deadline=None)
    def test_parser_is_total_on_tag_shaped_noise(self, text):
        try:
            parsed = parse(text)
        except SequenceParseError as err:
            assert 0 <= err.offset <= len(text.encode("utf-8"))
        else:
            assert render(parsed) == text
