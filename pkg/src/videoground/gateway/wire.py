"""Wire-protocol codecs and schema validation.

One JSON object per request, POSTed to ``{base_url}/{name}``; one JSON
object back.  The schema files in ``schemas/`` are the single source of
truth shared with non-Python adapter services; this module loads them,
validates payloads against them, and converts between wire payloads and
the core domain types.

``dispatch`` is the service side of the protocol expressed over any
:class:`~videoground.gateway.Gateway`: given a service name and a request
payload it produces the response payload.  Tests use it to prove the stub
and the wire format agree; a reference HTTP server is a thin shell around
it.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from typing import Callable, Mapping, Sequence

import jsonschema

from ..types import (
    BoundingBox,
    CategoricalDistribution,
    FrameRef,
    InstanceTrack,
    NounChunk,
    TrackEntry,
    VideoRecord,
)
from . import SERVICE_NAMES, Gateway, ServiceError, TrackInit

__all__ = [
    "load_schema",
    "validate_request",
    "validate_response",
    "dispatch",
]


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    if name not in SERVICE_NAMES:
        raise ValueError(f"unknown service name {name!r}")
    ref = resources.files(__package__).joinpath("schemas", f"{name}.json")
    return json.loads(ref.read_text(encoding="utf-8"))


def validate_request(name: str, payload: Mapping) -> None:
    """Raise jsonschema.ValidationError if the request payload is malformed."""
    jsonschema.validate(payload, load_schema(name)["properties"]["request"])


def validate_response(name: str, payload: Mapping) -> None:
    jsonschema.validate(payload, load_schema(name)["properties"]["response"])


# ---------------------------------------------------------------------------
# Domain <-> wire conversions
# ---------------------------------------------------------------------------


def frame_to_wire(f: FrameRef) -> dict:
    return {"index": f.index, "uri": f.uri, "width": f.width, "height": f.height}


def frame_from_wire(d: Mapping) -> FrameRef:
    return FrameRef(index=d["index"], uri=d["uri"], width=d["width"], height=d["height"])


def box_to_wire(b: BoundingBox) -> dict:
    return {"x1": b.x1, "y1": b.y1, "x2": b.x2, "y2": b.y2, "confidence": b.confidence}


def box_from_wire(d: Mapping) -> BoundingBox:
    return BoundingBox(d["x1"], d["y1"], d["x2"], d["y2"], d["confidence"])


def chunk_to_wire(c: NounChunk) -> dict:
    return {"text": c.text, "start": c.char_span[0], "end": c.char_span[1], "chunk_id": c.chunk_id}


def chunk_from_wire(d: Mapping) -> NounChunk:
    return NounChunk(text=d["text"], char_span=(d["start"], d["end"]), chunk_id=d["chunk_id"])


def video_to_wire(v: VideoRecord) -> dict:
    return {
        "video_id": v.video_id,
        "fps": v.fps,
        "source_tag": v.source_tag,
        "frames": [frame_to_wire(f) for f in v.frames],
    }


def video_from_wire(d: Mapping) -> VideoRecord:
    return VideoRecord(
        video_id=d["video_id"],
        frames=tuple(frame_from_wire(f) for f in d["frames"]),
        fps=d["fps"],
        source_tag=d["source_tag"],
    )


def track_to_wire(t: InstanceTrack) -> dict:
    return {
        "entries": [
            {"frame_index": idx, "box": box_to_wire(e.box), "segment_uri": e.segment_uri}
            for idx, e in sorted(t.per_frame.items())
        ],
        "lost_frames": sorted(t.lost_frames),
    }


def track_from_wire(d: Mapping, chunk: NounChunk) -> InstanceTrack:
    per_frame = {
        e["frame_index"]: TrackEntry(box_from_wire(e["box"]), e["segment_uri"]) for e in d["entries"]
    }
    return InstanceTrack(chunk=chunk, per_frame=per_frame, lost_frames=frozenset(d["lost_frames"]))


def lm_to_wire(dist: CategoricalDistribution, tokens: Sequence[str], eos_id: int) -> dict:
    return {
        "probs": list(dist.probs),
        "vocab_ids": list(dist.vocab_ids),
        "tokens": list(tokens),
        "eos_id": eos_id,
    }


def lm_from_wire(d: Mapping) -> tuple[CategoricalDistribution, tuple[str, ...], int]:
    dist = CategoricalDistribution(tuple(d["probs"]), tuple(d["vocab_ids"]))
    return dist, tuple(d["tokens"]), int(d["eos_id"])


# ---------------------------------------------------------------------------
# Request builders (client side)
# ---------------------------------------------------------------------------

def caption_request(frame: FrameRef) -> dict:
    return {"frame": frame_to_wire(frame)}


def noun_chunks_request(caption: str) -> dict:
    return {"caption": caption}


def detect_request(frame: FrameRef, phrase: str) -> dict:
    return {"frame": frame_to_wire(frame), "phrase": phrase}


def track_request(video: VideoRecord, chunk: NounChunk, init: TrackInit) -> dict:
    return {
        "video": video_to_wire(video),
        "chunk": chunk_to_wire(chunk),
        "init": {
            "frame_index": init.frame_index,
            "box": box_to_wire(init.box),
            "center": [init.center[0], init.center[1]],
        },
    }


def motion_request(a: FrameRef, b: FrameRef) -> dict:
    return {"frame_a": frame_to_wire(a), "frame_b": frame_to_wire(b)}


def embed_request(payload: str, space: str) -> dict:
    return {"payload": payload, "space": space}


def perceptual_request(a_uri: str, b_uri: str) -> dict:
    return {"a_uri": a_uri, "b_uri": b_uri}


def lm_request(prefix: Sequence[int], conditioning: str) -> dict:
    return {"prefix": list(prefix), "conditioning": conditioning}


# ---------------------------------------------------------------------------
# Service-side dispatch
# ---------------------------------------------------------------------------


def dispatch(
    gateway: Gateway,
    name: str,
    payload: Mapping,
    *,
    image_resolver: Callable[[str], object] | None = None,
) -> dict:
    """Answer one wire request using ``gateway``; returns the response payload.

    ``image_resolver`` maps an image URI to a pixel buffer for the
    perceptual endpoint (wire payloads carry URIs, never inline pixels).
    """
    validate_request(name, payload)
    if name == "caption":
        return {"caption": gateway.caption(frame_from_wire(payload["frame"]))}
    if name == "noun_chunks":
        return {"chunks": [chunk_to_wire(c) for c in gateway.noun_chunks(payload["caption"])]}
    if name == "detect":
        boxes = gateway.detect(frame_from_wire(payload["frame"]), payload["phrase"])
        return {"detections": [box_to_wire(b) for b in boxes]}
    if name == "track":
        chunk = chunk_from_wire(payload["chunk"])
        init = TrackInit(
            frame_index=payload["init"]["frame_index"],
            box=box_from_wire(payload["init"]["box"]),
            center=tuple(payload["init"]["center"]),
        )
        return track_to_wire(gateway.track(video_from_wire(payload["video"]), chunk, init))
    if name == "ocr":
        return {"ratio": gateway.ocr_text_ratio(frame_from_wire(payload["frame"]))}
    if name == "motion":
        return {"score": gateway.motion_score(frame_from_wire(payload["frame_a"]), frame_from_wire(payload["frame_b"]))}
    if name == "aesthetic":
        return {"score": gateway.aesthetic_score(frame_from_wire(payload["frame"]))}
    if name == "embed":
        return {"vector": list(gateway.embed(payload["payload"], payload["space"]))}
    if name == "perceptual":
        a, b = payload["a_uri"], payload["b_uri"]
        if image_resolver is not None:
            a, b = image_resolver(a), image_resolver(b)
        return {"distance": gateway.perceptual_distance(a, b)}
    if name == "lm":
        dist = gateway.lm_next_distribution(tuple(payload["prefix"]), payload["conditioning"])
        tokens = [gateway.lm_decode([vid]) for vid in dist.vocab_ids]
        return lm_to_wire(dist, tokens, gateway.lm_eos_id())
    raise ServiceError(f"no such service {name!r}", service=name)
