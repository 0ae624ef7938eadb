"""HTTP gateway client speaking the JSON wire protocol.

Transport failures (timeout, connection refused) are retried up to the
endpoint's ``retry_limit`` with exponential backoff; a non-2xx answer is a
:class:`ServiceError` and is never retried.  Responses are checked against
the shared JSON schemas and the core-model invariants before being handed
to callers.
"""

from __future__ import annotations

import logging
import time
from typing import Mapping, Sequence

import jsonschema
import requests

from ..types import BoundingBox, CategoricalDistribution, FrameRef, InstanceTrack, NounChunk, VideoRecord
from . import (
    SERVICE_NAMES,
    Gateway,
    ServiceEndpoint,
    ServiceError,
    TrackInit,
    TransportError,
    check_caption,
    check_chunks,
    check_detections,
    check_distribution,
    check_scalar,
    check_track,
    check_unit_vector,
)
from . import wire

logger = logging.getLogger(__name__)

__all__ = ["HttpGateway"]


class HttpGateway(Gateway):
    def __init__(
        self,
        endpoints: Mapping[str, ServiceEndpoint],
        *,
        session=None,
        sleep=time.sleep,
        backoff_base_s: float = 0.1,
        validate_schemas: bool = True,
    ):
        missing = set(SERVICE_NAMES) - set(endpoints)
        if missing:
            raise ValueError(f"endpoints missing for services: {sorted(missing)}")
        self._endpoints = dict(endpoints)
        self._session = session or requests.Session()
        self._sleep = sleep
        self._backoff_base_s = backoff_base_s
        self._validate_schemas = validate_schemas
        self._lm_tokens: dict[int, str] = {}
        self._lm_eos_id: int | None = None

    @classmethod
    def from_base_url(cls, base_url: str, *, timeout_ms: int = 10_000, retry_limit: int = 2, **kw) -> "HttpGateway":
        endpoints = {
            name: ServiceEndpoint(name, base_url, timeout_ms=timeout_ms, retry_limit=retry_limit)
            for name in SERVICE_NAMES
        }
        return cls(endpoints, **kw)

    # -- transport ----------------------------------------------------------

    def _call(self, name: str, payload: dict) -> dict:
        ep = self._endpoints[name]
        attempts = ep.retry_limit + 1
        for attempt in range(attempts):
            try:
                resp = self._session.post(ep.url, json=payload, timeout=ep.timeout_ms / 1000.0)
            except (requests.Timeout, requests.ConnectionError) as exc:
                if attempt + 1 < attempts:
                    delay = self._backoff_base_s * (2**attempt)
                    logger.warning("%s transport failure (attempt %d/%d), retrying in %.2fs: %s",
                                   name, attempt + 1, attempts, delay, exc)
                    self._sleep(delay)
                    continue
                raise TransportError(f"transport failure after {attempts} attempts: {exc}", service=name)
            if not 200 <= resp.status_code < 300:
                raise ServiceError(f"HTTP {resp.status_code}: {resp.text[:500]}", service=name)
            try:
                data = resp.json()
            except ValueError:
                raise ServiceError("response body is not JSON", service=name)
            if self._validate_schemas:
                try:
                    wire.validate_response(name, data)
                except jsonschema.ValidationError as exc:
                    raise ServiceError(f"response violates wire schema: {exc.message}", service=name)
            return data
        raise AssertionError("unreachable")  # pragma: no cover

    # -- operations ----------------------------------------------------------

    def caption(self, frame: FrameRef) -> str:
        return check_caption(self._call("caption", wire.caption_request(frame))["caption"])

    def noun_chunks(self, caption: str) -> tuple[NounChunk, ...]:
        data = self._call("noun_chunks", wire.noun_chunks_request(caption))
        return check_chunks(tuple(wire.chunk_from_wire(c) for c in data["chunks"]))

    def detect(self, frame: FrameRef, phrase: str) -> tuple[BoundingBox, ...]:
        data = self._call("detect", wire.detect_request(frame, phrase))
        return check_detections(tuple(wire.box_from_wire(b) for b in data["detections"]))

    def track(self, video: VideoRecord, chunk: NounChunk, init: TrackInit) -> InstanceTrack:
        data = self._call("track", wire.track_request(video, chunk, init))
        return check_track(wire.track_from_wire(data, chunk), video)

    def ocr_text_ratio(self, frame: FrameRef) -> float:
        return check_scalar(self._call("ocr", wire.caption_request(frame))["ratio"], 0.0, 1.0, "ocr")

    def motion_score(self, a: FrameRef, b: FrameRef) -> float:
        return check_scalar(self._call("motion", wire.motion_request(a, b))["score"], 0.0, float("inf"), "motion")

    def aesthetic_score(self, frame: FrameRef) -> float:
        return check_scalar(self._call("aesthetic", wire.caption_request(frame))["score"], 0.0, 10.0, "aesthetic")

    def embed(self, payload: str, space: str) -> tuple[float, ...]:
        return check_unit_vector(self._call("embed", wire.embed_request(payload, space))["vector"])

    def perceptual_distance(self, a, b) -> float:
        # Over the wire, images travel by URI only.
        a_uri = a if isinstance(a, str) else getattr(a, "uri", None)
        b_uri = b if isinstance(b, str) else getattr(b, "uri", None)
        if not a_uri or not b_uri:
            raise ValueError("HttpGateway.perceptual_distance needs image URIs (payloads pass by URI)")
        dist = self._call("perceptual", wire.perceptual_request(a_uri, b_uri))["distance"]
        return check_scalar(dist, 0.0, float("inf"), "perceptual")

    def lm_next_distribution(self, prefix: Sequence[int], conditioning: str) -> CategoricalDistribution:
        data = self._call("lm", wire.lm_request(prefix, conditioning))
        dist, tokens, eos_id = wire.lm_from_wire(data)
        self._lm_tokens.update(zip(dist.vocab_ids, tokens))
        self._lm_eos_id = eos_id
        return check_distribution(dist, eos_id)

    def lm_eos_id(self) -> int:
        if self._lm_eos_id is None:
            self.lm_next_distribution((), "")
        assert self._lm_eos_id is not None
        return self._lm_eos_id

    def lm_decode(self, token_ids: Sequence[int]) -> str:
        if self._lm_eos_id is None:
            self.lm_next_distribution((), "")
        try:
            return " ".join(self._lm_tokens[i] for i in token_ids)
        except KeyError as exc:
            raise ServiceError(f"unknown token id {exc.args[0]} in decode", service="lm")
