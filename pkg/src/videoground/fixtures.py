"""Deterministic fixture corpora and a synthetic image generator.

These builders exist so tests and CLI demos can exercise the full
pipeline without any real media: every asset is a pure function of its
identifiers.  The calibrated corpora pin exact aggregate numbers
(retention counts, corpus means) so reports can be asserted to the digit
rather than within sloppy tolerances.
"""

from __future__ import annotations

import random

from . import seeding
from .evalharness import DreamBenchCase, ImageBuffer
from .gateway.stub import LmTable, StubConfig
from .prompt_rewrite import RecaptionRecord
from .sampling import GenerationRequest
from .types import BoundingBox, FramePairSample, FrameRef, GroundedInstance, NounChunk, VideoRecord

__all__ = [
    "synthetic_image",
    "SyntheticGenerator",
    "frame_uri",
    "make_video",
    "calibrated_filter_corpus",
    "annotation_corpus",
    "recaption_corpus",
    "stats_manifest_samples",
    "dreambench_cases",
    "branching_lm_table",
    "peaked_lm_table",
    "random_frame_pair_sample",
]

FRAME_WIDTH = 640
FRAME_HEIGHT = 360


def frame_uri(video_id: str, index: int) -> str:
    return f"{video_id}/frame/{index}.png"


def make_video(video_id: str, frame_count: int, *, fps: float = 24.0) -> VideoRecord:
    frames = tuple(
        FrameRef(index=i, uri=frame_uri(video_id, i), width=FRAME_WIDTH, height=FRAME_HEIGHT)
        for i in range(1, frame_count + 1)
    )
    return VideoRecord(video_id=video_id, frames=frames, fps=fps)


def synthetic_image(width: int, height: int, *parts: object) -> ImageBuffer:
    """Pixels derived from a hash of ``parts``; same parts, same pixels."""
    return ImageBuffer(width=width, height=height, channels=3,
                       data=seeding.hash_bytes(width * height * 3, "image", *parts))


class SyntheticGenerator:
    """Request sink standing in for an image-generation model.

    Pixels (and the URI) are a pure function of the rewritten dense
    caption, so identical rewrites collapse to identical images — which
    is exactly the degenerate behavior diversity metrics must expose for
    greedy decoding.  With ``seed_sensitive=True`` the request seed is
    mixed in as well, making every sample unique regardless of strategy.
    """

    def __init__(self, width: int = 8, height: int = 8, *, seed_sensitive: bool = False):
        self.width = width
        self.height = height
        self.seed_sensitive = seed_sensitive
        self.buffers: dict[str, ImageBuffer] = {}
        self.requests: list[GenerationRequest] = []

    def generate(self, request: GenerationRequest) -> tuple[str, ImageBuffer]:
        self.requests.append(request)
        parts: list[object] = ["gen", request.c_dense]
        if self.seed_sensitive:
            parts.append(request.seed)
        uri = f"gen/{seeding.stable_u64(*parts):016x}.png"
        buffer = self.buffers.get(uri)
        if buffer is None:
            buffer = synthetic_image(self.width, self.height, *parts)
            self.buffers[uri] = buffer
        return uri, buffer

    def __call__(self, request: GenerationRequest) -> str:
        return self.generate(request)[0]


# ---------------------------------------------------------------------------
# Filter-cascade corpus: exactly 70 of 100 pass
# ---------------------------------------------------------------------------


def calibrated_filter_corpus() -> tuple[list[VideoRecord], StubConfig]:
    """100 videos of 40 frames with a 70% retention rate by construction.

    Ten videos fail each stage: a subtitle-heavy first frame, a hard cut
    between the first two sampled frames, and uniformly drab sampled
    frames.  The remaining seventy pass under the default thresholds.
    With 8 frames sampled from 40, the sampled indices are
    (1, 7, 12, 18, 23, 29, 34, 40).
    """
    corpus = [make_video(f"vid{i:03d}", 40) for i in range(1, 101)]
    ocr_ratios: dict[str, float] = {}
    motion_scores: dict[str, dict[str, float]] = {}
    aesthetic_scores: dict[str, float] = {}
    sampled = (1, 7, 12, 18, 23, 29, 34, 40)
    for video in corpus[:10]:  # subtitle rejections
        ocr_ratios[frame_uri(video.video_id, 1)] = 0.5
    for video in corpus[10:20]:  # scene-change rejections
        motion_scores[frame_uri(video.video_id, sampled[0])] = {frame_uri(video.video_id, sampled[1]): 0.95}
    for video in corpus[20:30]:  # aesthetic rejections
        for idx in sampled:
            aesthetic_scores[frame_uri(video.video_id, idx)] = 3.0
    config = StubConfig(
        ocr_ratios=ocr_ratios,
        motion_scores=motion_scores,
        aesthetic_scores=aesthetic_scores,
    )
    return corpus, config


# ---------------------------------------------------------------------------
# Annotation corpus: every outcome label has at least one video
# ---------------------------------------------------------------------------


def annotation_corpus() -> tuple[list[VideoRecord], StubConfig]:
    """Ten videos covering every annotation outcome at t_ref=25.

    Expected per-video outcomes (in order): sample, sample, sample,
    no_surviving_instances, too_short, no_chunks, no_detections,
    error, no_detections (low confidence), sample.  Full-length videos
    run 60 frames so the corpus also supports intervals up to 50.
    """
    specs: list[tuple[str, int, str]] = [
        ("anno01", 60, "A girl in a pink shirt with golden hair lies with her golden retriever on the bed."),
        ("anno02", 60, "a brown dog chases a red ball in the green park"),
        ("anno03", 60, "the white cat sleeps on a blue sofa"),
        ("anno04", 60, "a yellow bird sits on a wooden fence"),
        ("anno05", 20, "a black horse stands in a field"),
        ("anno06", 60, "time and love and freedom"),
        ("anno07", 60, "a small boat on the quiet lake"),
        ("anno08", 60, "a gray rabbit near an old bridge"),
        ("anno09", 60, "a green lamp beside a soft pillow"),
        ("anno10", 60, "the little puppy and the fluffy kitten play with a purple ball near a tiny tree in the garden"),
    ]
    corpus = [make_video(vid, n) for vid, n, _ in specs]
    captions = {frame_uri(vid, 1): caption for vid, _, caption in specs}

    def table(vid: str, entries: dict[str, list[list[float]]]) -> tuple[str, dict]:
        return frame_uri(vid, 1), entries

    detections = dict(
        [
            table("anno01", {
                "girl": [[100, 50, 400, 900, 0.95]],
                "golden retriever": [[450, 300, 850, 950, 0.88]],
                "bed": [[0, 400, 999, 999, 0.72]],
            }),
            table("anno02", {
                "brown dog": [[200, 300, 600, 800, 0.9]],
                "red ball": [[650, 700, 750, 800, 0.61]],
            }),
            table("anno03", {
                "white cat": [[300, 200, 700, 600, 0.93]],
                "blue sofa": [[50, 450, 950, 980, 0.55]],
            }),
            table("anno04", {
                "yellow bird": [[400, 100, 550, 300, 0.8]],
            }),
            table("anno05", {
                "black horse": [[150, 200, 700, 850, 0.9]],
            }),
            table("anno09", {
                "green lamp": [[100, 100, 300, 500, 0.2]],
                "soft pillow": [[500, 600, 800, 800, 0.1]],
            }),
            table("anno10", {
                "little puppy": [[50, 300, 350, 800, 0.9]],
                "fluffy kitten": [[400, 350, 650, 780, 0.85]],
                "purple ball": [[700, 600, 800, 700, 0.7]],
                "tiny tree": [[850, 100, 980, 900, 0.65]],
            }),
        ]
    )
    config = StubConfig(
        canned_captions=captions,
        detections=detections,
        track_lost_from={
            "anno04": {"1": 20},  # bird lost before the reference frame
            "anno10": {"4": 10},  # tree lost early; three instances survive
        },
        error_uris=frozenset({frame_uri("anno08", 1)}),
    )
    return corpus, config


# ---------------------------------------------------------------------------
# Recaption corpus with exact token-count means
# ---------------------------------------------------------------------------

_WORDS = (
    "river morning light drifts over the quiet valley as tall grass bends "
    "under a slow wind and small birds cross between old trees while the "
    "path turns toward a stone bridge near the water where boats rest"
).split()


def _word_run(offset: int, n: int) -> str:
    return " ".join(_WORDS[(offset + j) % len(_WORDS)] for j in range(n))


def recaption_corpus() -> list[RecaptionRecord]:
    """500 (brief, dense) pairs; token-count means are exactly 10.2 and 79.6.

    100 briefs of 11 tokens plus 400 of 10 average 10.2; 200 denses of
    79 tokens plus 300 of 80 average 79.6.
    """
    records = []
    for i in range(500):
        brief_n = 11 if i < 100 else 10
        dense_n = 79 if i < 200 else 80
        records.append(
            RecaptionRecord.from_captions(
                image_uri=f"recap/{i:04d}.png",
                c_brief=_word_run(i, brief_n),
                c_dense=_word_run(i * 3 + 7, dense_n),
            )
        )
    return records


# ---------------------------------------------------------------------------
# Frame-pair manifest with exact corpus means
# ---------------------------------------------------------------------------


def stats_manifest_samples() -> list[FramePairSample]:
    """Ten frame pairs: mean instances exactly 4.9, mean caption tokens 25.4."""
    samples = []
    for i in range(10):
        n_tokens = 25 if i < 6 else 26
        n_instances = 5 if i < 9 else 4
        words = [f"item{i:02d}x{j:02d}" for j in range(n_tokens)]
        caption = " ".join(words)
        instances = []
        offset = 0
        for j in range(n_instances):
            word = words[j]
            chunk = NounChunk(text=word, char_span=(offset, offset + len(word)), chunk_id=j + 1)
            box = BoundingBox(40 * j, 100, 40 * j + 30, 400, 0.9)
            instances.append(GroundedInstance(chunk, box, f"sv{i:02d}/{j + 1}/26.png"))
            offset += len(word) + 1  # past the following space
        samples.append(
            FramePairSample(
                video_id=f"sv{i:02d}",
                target_frame=FrameRef(1, frame_uri(f"sv{i:02d}", 1), FRAME_WIDTH, FRAME_HEIGHT),
                reference_frame_index=26,
                t_ref=25,
                instances=tuple(instances),
                caption=caption,
            )
        )
    return samples


def dreambench_cases(n: int) -> list[DreamBenchCase]:
    """``n`` subject-driven cases with rotating prompts and 3 references each."""
    prompts = (
        "a corgi by a cottage",
        "a vase on a wooden table",
        "a small dog on the beach",
        "a red backpack in the forest",
        "a cat wearing a scarf",
    )
    return [
        DreamBenchCase(
            case_id=f"case{i:04d}",
            prompt=prompts[i % len(prompts)],
            reference_uris=tuple(f"refs/case{i:04d}/{k}.png" for k in range(3)),
        )
        for i in range(n)
    ]


# ---------------------------------------------------------------------------
# Oracle language-model tables
# ---------------------------------------------------------------------------


def branching_lm_table() -> LmTable:
    """A 50/50 first-token split; both branches end immediately."""
    return LmTable(start={"A": 0.5, "B": 0.5}, transitions={"A": {"<eos>": 1.0}, "B": {"<eos>": 1.0}})


def peaked_lm_table() -> LmTable:
    """Four-path model whose exact sequence probabilities fit on one hand.

    P(a)=0.14, P(a c)=0.56 (the mode, and greedy's output), P(b)=0.03,
    P(b c)=0.27.
    """
    return LmTable(
        start={"a": 0.7, "b": 0.3},
        transitions={"a": {"c": 0.8, "<eos>": 0.2}, "b": {"c": 0.9, "<eos>": 0.1}, "c": {"<eos>": 1.0}},
    )


# ---------------------------------------------------------------------------
# Randomized frame pairs for round-trip properties
# ---------------------------------------------------------------------------

_CHUNK_WORDS = (
    "cat", "dog", "naïve", "café", "日本", "tree", "π-shape", "bird", "red", "old",
)
_FILLER_WORDS = ("near", "beside", "under", "over", "with", "and", "résumé", "の上", "by")


def random_frame_pair_sample(rng: random.Random) -> FramePairSample:
    """A structurally valid frame pair with adversarial captions.

    Chunk texts and filler include multi-byte UTF-8 so byte-offset spans
    get exercised; geometry, intervals, and instance counts vary freely
    within the model's invariants.
    """
    video_id = f"rv{rng.randrange(10_000):04d}"
    t_ref = rng.choice((2, 8, 25, 50))
    target_index = rng.randint(1, 5)
    reference_index = target_index + t_ref

    n_instances = rng.randint(1, 5)
    caption_bytes = 0
    pieces: list[str] = []

    def push(word: str) -> None:
        nonlocal caption_bytes
        if pieces:
            pieces.append(" ")
            caption_bytes += 1
        pieces.append(word)
        caption_bytes += len(word.encode("utf-8"))

    for _ in range(rng.randint(0, 2)):
        push(rng.choice(_FILLER_WORDS))
    instances = []
    for j in range(n_instances):
        chunk_text = " ".join(rng.choice(_CHUNK_WORDS) for _ in range(rng.randint(1, 3)))
        if pieces:
            pieces.append(" ")
            caption_bytes += 1
        start = caption_bytes
        pieces.append(chunk_text)
        caption_bytes += len(chunk_text.encode("utf-8"))
        chunk = NounChunk(text=chunk_text, char_span=(start, caption_bytes), chunk_id=j + 1)
        xs = sorted(rng.sample(range(1000), 2))
        ys = sorted(rng.sample(range(1000), 2))
        box = BoundingBox(xs[0], ys[0], xs[1], ys[1], round(rng.random(), 3))
        instances.append(GroundedInstance(chunk, box, f"{video_id}/{j + 1}/{reference_index}.png"))
        for _ in range(rng.randint(0, 2)):
            push(rng.choice(_FILLER_WORDS))

    return FramePairSample(
        video_id=video_id,
        target_frame=FrameRef(target_index, frame_uri(video_id, target_index), FRAME_WIDTH, FRAME_HEIGHT),
        reference_frame_index=reference_index,
        t_ref=t_ref,
        instances=tuple(instances),
        caption="".join(pieces),
    )
