"""JSONL manifests: canonical encoding, atomic writes, integrity checks.

A manifest is a UTF-8 JSONL file whose first line is a header record
carrying a schema version and the SHA-256 of the body (every byte after
the header's trailing newline).  Records are canonical JSON — sorted
keys, no spaces — so equal corpora produce byte-identical files and the
digest is meaningful.  Writers stage to a temp file and ``os.replace``
into place under an advisory sidecar lock, so readers never observe a
torn file.
"""

from __future__ import annotations

import fcntl
import hashlib
import json
import os
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .gateway import wire
from .types import (
    FramePairSample,
    GroundedInstance,
    InterleavedSample,
    PsrSample,
    VideoRecord,
    validate,
)
from .prompt_rewrite import RecaptionRecord

SCHEMA_VERSION = 1

RECORD_TYPES = ("video", "frame_pair", "interleaved", "psr", "recaption")

__all__ = [
    "SCHEMA_VERSION",
    "RECORD_TYPES",
    "ManifestError",
    "canonical_json",
    "body_sha256",
    "encode_record",
    "decode_record",
    "write_manifest",
    "read_manifest",
    "manifest_stats",
    "ManifestStats",
    "atomic_write",
]


class ManifestError(ValueError):
    """A manifest failed to parse or verify; ``line`` is 1-based."""

    def __init__(self, message: str, *, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        prefix = ""
        if path is not None:
            prefix += f"{path}: "
        if line is not None:
            prefix += f"line {line}: "
        super().__init__(prefix + message)


def canonical_json(obj) -> str:
    """Deterministic single-line JSON: sorted keys, compact separators."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def body_sha256(body: bytes) -> str:
    return hashlib.sha256(body).hexdigest()


# ---------------------------------------------------------------------------
# Record codecs (manifest `type` tag + wire-format payload)
# ---------------------------------------------------------------------------


def _instance_to_wire(inst: GroundedInstance) -> dict:
    return {
        "chunk": wire.chunk_to_wire(inst.chunk),
        "box": wire.box_to_wire(inst.box),
        "segment_uri": inst.segment_uri,
    }


def _instance_from_wire(d: dict) -> GroundedInstance:
    return GroundedInstance(
        chunk=wire.chunk_from_wire(d["chunk"]),
        box=wire.box_from_wire(d["box"]),
        segment_uri=d["segment_uri"],
    )


def encode_record(record) -> dict:
    """Map a domain object to its tagged manifest dict."""
    if isinstance(record, VideoRecord):
        return {"type": "video", **wire.video_to_wire(record)}
    if isinstance(record, FramePairSample):
        return {
            "type": "frame_pair",
            "video_id": record.video_id,
            "target_frame": wire.frame_to_wire(record.target_frame),
            "reference_frame_index": record.reference_frame_index,
            "t_ref": record.t_ref,
            "instances": [_instance_to_wire(i) for i in record.instances],
            "caption": record.caption,
        }
    if isinstance(record, InterleavedSample):
        return {
            "type": "interleaved",
            "serialized_text": record.serialized_text,
            "target_image_uri": record.target_image_uri,
            "attachments": list(record.attachments),
            "rng_seed": record.rng_seed,
        }
    if isinstance(record, PsrSample):
        return {
            "type": "psr",
            "c_brief": record.c_brief,
            "c_dense": record.c_dense,
            "image_uri": record.image_uri,
            "user_turn": record.user_turn,
            "assistant_turn": record.assistant_turn,
        }
    if isinstance(record, RecaptionRecord):
        return {
            "type": "recaption",
            "image_uri": record.image_uri,
            "c_brief": record.c_brief,
            "c_dense": record.c_dense,
            "brief_token_count": record.brief_token_count,
            "dense_token_count": record.dense_token_count,
        }
    raise TypeError(f"no manifest encoding for {type(record).__name__}")


def decode_record(d: dict):
    """Inverse of :func:`encode_record`; validates the decoded object."""
    kind = d.get("type")
    try:
        if kind == "video":
            body = {k: v for k, v in d.items() if k != "type"}
            obj = wire.video_from_wire(body)
        elif kind == "frame_pair":
            obj = FramePairSample(
                video_id=d["video_id"],
                target_frame=wire.frame_from_wire(d["target_frame"]),
                reference_frame_index=d["reference_frame_index"],
                t_ref=d["t_ref"],
                instances=tuple(_instance_from_wire(i) for i in d["instances"]),
                caption=d["caption"],
            )
        elif kind == "interleaved":
            obj = InterleavedSample(
                serialized_text=d["serialized_text"],
                target_image_uri=d["target_image_uri"],
                attachments=tuple(d["attachments"]),
                rng_seed=d["rng_seed"],
            )
        elif kind == "psr":
            obj = PsrSample(
                c_brief=d["c_brief"],
                c_dense=d["c_dense"],
                image_uri=d["image_uri"],
                user_turn=d["user_turn"],
                assistant_turn=d["assistant_turn"],
            )
        elif kind == "recaption":
            return RecaptionRecord(
                image_uri=d["image_uri"],
                c_brief=d["c_brief"],
                c_dense=d["c_dense"],
                brief_token_count=d["brief_token_count"],
                dense_token_count=d["dense_token_count"],
            )
        else:
            raise ManifestError(f"unknown record type {kind!r}")
    except (KeyError, TypeError) as exc:
        raise ManifestError(f"malformed {kind!r} record: {exc}") from exc
    validate(obj).raise_for_violations()
    return obj


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------


@contextmanager
def _locked(path: Path, mode: int) -> Iterator[None]:
    """Advisory lock on a sidecar so writers never race the rename."""
    lock_path = path.with_name(path.name + ".lock")
    fd = os.open(lock_path, os.O_RDWR | os.O_CREAT, 0o644)
    try:
        fcntl.flock(fd, mode)
        yield
    finally:
        fcntl.flock(fd, fcntl.LOCK_UN)
        os.close(fd)


def atomic_write(path: str | os.PathLike, data: bytes) -> None:
    """Write via a same-directory temp file and ``os.replace``."""
    target = Path(path)
    fd, tmp_name = tempfile.mkstemp(dir=target.parent, prefix=target.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp_name, target)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except FileNotFoundError:
            pass
        raise


def write_manifest(path: str | os.PathLike, records: Iterable) -> int:
    """Serialize domain records to a manifest file; returns record count.

    Accepts domain objects (encoded via :func:`encode_record`) or
    pre-encoded dicts that already carry a ``type`` tag.
    """
    lines = []
    for record in records:
        encoded = record if isinstance(record, dict) else encode_record(record)
        if encoded.get("type") not in RECORD_TYPES:
            raise ManifestError(f"unknown record type {encoded.get('type')!r}")
        lines.append(canonical_json(encoded))
    body = "".join(line + "\n" for line in lines).encode("utf-8")
    header = canonical_json(
        {
            "type": "header",
            "schema_version": SCHEMA_VERSION,
            "record_count": len(lines),
            "body_sha256": body_sha256(body),
        }
    )
    payload = header.encode("utf-8") + b"\n" + body
    target = Path(path)
    with _locked(target, fcntl.LOCK_EX):
        atomic_write(target, payload)
    return len(lines)


def read_manifest(path: str | os.PathLike, *, decode: bool = True) -> list:
    """Read and verify a manifest; errors carry 1-based line numbers."""
    target = Path(path)
    with _locked(target, fcntl.LOCK_SH):
        raw = target.read_bytes()
    newline = raw.find(b"\n")
    if newline < 0:
        raise ManifestError("missing header line", line=1, path=str(target))
    try:
        header = json.loads(raw[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ManifestError(f"header is not valid JSON: {exc}", line=1, path=str(target)) from exc
    if not isinstance(header, dict) or header.get("type") != "header":
        raise ManifestError("first line is not a header record", line=1, path=str(target))
    if header.get("schema_version") != SCHEMA_VERSION:
        raise ManifestError(
            f"unsupported schema_version {header.get('schema_version')!r}", line=1, path=str(target)
        )
    body = raw[newline + 1 :]
    digest = body_sha256(body)
    if digest != header.get("body_sha256"):
        raise ManifestError(
            f"body digest mismatch: header says {header.get('body_sha256')!r}, body is {digest!r}",
            line=1,
            path=str(target),
        )
    records = []
    if body:
        for i, line in enumerate(body.decode("utf-8").splitlines(), start=2):
            try:
                d = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"record is not valid JSON: {exc}", line=i, path=str(target)) from exc
            if not isinstance(d, dict):
                raise ManifestError("record must be a JSON object", line=i, path=str(target))
            if decode:
                try:
                    records.append(decode_record(d))
                except ValueError as exc:
                    raise ManifestError(str(exc), line=i, path=str(target)) from exc
            else:
                records.append(d)
    count = header.get("record_count")
    if count is not None and count != len(records):
        raise ManifestError(
            f"header record_count {count} != actual {len(records)}", line=1, path=str(target)
        )
    return records


# ---------------------------------------------------------------------------
# Corpus statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ManifestStats:
    counts: dict
    mean_instances_per_sample: float | None
    mean_caption_tokens: float | None

    def to_json_dict(self) -> dict:
        return {
            "counts": dict(self.counts),
            "mean_instances_per_sample": self.mean_instances_per_sample,
            "mean_caption_tokens": self.mean_caption_tokens,
        }


def manifest_stats(records: Sequence) -> ManifestStats:
    """Counts by record type plus frame-pair corpus means.

    Instance and caption-token means cover frame_pair records only;
    captions are split on whitespace.  Means are ``None`` when the
    manifest has no frame pairs.
    """
    counts: dict[str, int] = {}
    instances: list[int] = []
    caption_tokens: list[int] = []
    for record in records:
        if isinstance(record, dict):
            kind = record.get("type", "unknown")
        else:
            kind = {
                VideoRecord: "video",
                FramePairSample: "frame_pair",
                InterleavedSample: "interleaved",
                PsrSample: "psr",
                RecaptionRecord: "recaption",
            }.get(type(record), "unknown")
        counts[kind] = counts.get(kind, 0) + 1
        if kind == "frame_pair":
            if isinstance(record, dict):
                instances.append(len(record["instances"]))
                caption_tokens.append(len(record["caption"].split()))
            else:
                instances.append(len(record.instances))
                caption_tokens.append(len(record.caption.split()))
    mean_instances = sum(instances) / len(instances) if instances else None
    mean_tokens = sum(caption_tokens) / len(caption_tokens) if caption_tokens else None
    return ManifestStats(counts=counts, mean_instances_per_sample=mean_instances, mean_caption_tokens=mean_tokens)
