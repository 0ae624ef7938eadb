"""Command-line front door: one subcommand per pipeline stage.

Exit codes: 0 success, 1 validation/usage error, 2 gateway or transport
failure.  Every file output goes through an atomic write.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Sequence

from . import __version__
from .annotate import AnnotationConfig, annotate_corpus
from .evalharness import (
    SCALE_LIMITATION,
    diversity_report,
    fidelity,
    sweep_strategy,
    sweep_t_ref,
)
from .filters import FilterConfig, run_filters
from .fixtures import SyntheticGenerator
from .gateway import GatewayError
from .gateway.http import HttpGateway
from .gateway.stub import StubConfig, StubGateway
from .manifest import (
    ManifestError,
    atomic_write,
    canonical_json,
    manifest_stats,
    read_manifest,
    write_manifest,
)
from .prompt_rewrite import RecaptionRecord, build_psr_sample, corpus_stats
from .sampling import STRATEGY_KINDS, SamplingStrategy, generate_with_rewrite
from .seqformat import DropConfig, SequenceParseError, serialize
from .types import FramePairSample, ValidationError, VideoRecord

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the contract here is usage + exit 1.
    def error(self, message: str):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def _add_gateway_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--stub-config", metavar="PATH", help="JSON stub fixture config (default: empty stub)")
    p.add_argument(
        "--gateway-url",
        metavar="URL",
        help="base URL of a live gateway; GATEWAY_BASE_URL in the environment takes the same role",
    )


def _resolve_gateway(args: argparse.Namespace):
    url = getattr(args, "gateway_url", None) or os.environ.get("GATEWAY_BASE_URL")
    if url:
        return HttpGateway.from_base_url(url)
    path = getattr(args, "stub_config", None)
    if path:
        with open(path, encoding="utf-8") as fh:
            return StubGateway(StubConfig.from_json_dict(json.load(fh)))
    return StubGateway()


def _load_json(path: str):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _write_json(path: str | None, obj) -> None:
    text = canonical_json(obj) + "\n"
    if path:
        atomic_write(path, text.encode("utf-8"))
    else:
        sys.stdout.write(text)


def _videos_from(path: str) -> list[VideoRecord]:
    videos = [r for r in read_manifest(path) if isinstance(r, VideoRecord)]
    if not videos:
        raise ValueError(f"{path}: manifest contains no video records")
    return videos


# ---------------------------------------------------------------------------
# Subcommand implementations
# ---------------------------------------------------------------------------


def _cmd_filter(args) -> int:
    gateway = _resolve_gateway(args)
    config = FilterConfig.from_json_dict(_load_json(args.config)) if args.config else FilterConfig()
    videos = _videos_from(args.corpus)
    retained, report = run_filters(videos, gateway, config, workers=args.workers)
    if args.retained:
        write_manifest(args.retained, retained)
    _write_json(args.out, report.to_json_dict())
    return 0


def _cmd_annotate(args) -> int:
    gateway = _resolve_gateway(args)
    config = AnnotationConfig.from_json_dict(_load_json(args.config)) if args.config else AnnotationConfig()
    videos = _videos_from(args.corpus)
    samples, report = annotate_corpus(videos, gateway, config, workers=args.workers)
    write_manifest(args.out, samples)
    if args.report:
        _write_json(args.report, report.to_json_dict())
    return 0


def _cmd_serialize(args) -> int:
    pairs = [r for r in read_manifest(args.pairs) if isinstance(r, FramePairSample)]
    if not pairs:
        raise ValueError(f"{args.pairs}: manifest contains no frame-pair records")
    drop = DropConfig(drop_prob=args.drop_prob, seed=args.seed, independent=not args.joint)
    write_manifest(args.out, [serialize(p, drop) for p in pairs])
    return 0


def _cmd_psr_build(args) -> int:
    records = [r for r in read_manifest(args.recaptions) if isinstance(r, RecaptionRecord)]
    if not records:
        raise ValueError(f"{args.recaptions}: manifest contains no recaption records")
    write_manifest(args.out, [build_psr_sample(r) for r in records])
    stats = corpus_stats(records)
    _write_json(None, {
        "count": stats.count,
        "mean_brief_tokens": stats.mean_brief_tokens,
        "mean_dense_tokens": stats.mean_dense_tokens,
    })
    return 0


def _cmd_psr_sample(args) -> int:
    gateway = _resolve_gateway(args)
    strategy = SamplingStrategy(args.strategy, p=args.p, t=args.t, max_tokens=args.max_tokens, seed=args.seed)
    c_dense, _ = generate_with_rewrite(args.brief, gateway, strategy)
    sys.stdout.write(c_dense + "\n")
    return 0


def _cmd_eval_diversity(args) -> int:
    from PIL import Image  # deferred: only this subcommand touches pixels on disk
    import numpy as np

    from .evalharness import ImageBuffer

    groups_spec = _load_json(args.images)
    if not isinstance(groups_spec, dict):
        raise ValueError("--images must be a JSON object mapping prompt id to image paths")
    backend = StubGateway()

    def load(path: str) -> ImageBuffer:
        with Image.open(path) as img:
            return ImageBuffer.from_array(np.asarray(img.convert("RGB")))

    groups = [(prompt_id, [load(p) for p in paths]) for prompt_id, paths in groups_spec.items()]
    report = diversity_report(groups, backend.perceptual_distance, psnr_clamp_db=args.psnr_clamp)
    _write_json(args.out, report.to_json_dict())
    return 0


def _cmd_eval_fidelity(args) -> int:
    gateway = _resolve_gateway(args)
    triples = _load_json(args.triples)
    report = fidelity(triples["generated"], triples["reference"], triples["prompts"], gateway)
    _write_json(args.out, report.to_json_dict())
    return 0


def _cmd_sweep(args) -> int:
    gateway = _resolve_gateway(args)
    if args.axis == "t_ref":
        if not args.corpus:
            raise ValueError("--corpus is required for the t_ref sweep")
        config = AnnotationConfig.from_json_dict(_load_json(args.config)) if args.config else AnnotationConfig()
        table = sweep_t_ref(_videos_from(args.corpus), gateway, config)
    else:
        prompts = _load_json(args.prompts) if args.prompts else ["a corgi by a cottage"]
        if not isinstance(prompts, list):
            raise ValueError("--prompts must be a JSON array of brief captions")
        generator = SyntheticGenerator()
        table = sweep_strategy(
            prompts, gateway, generator.generate,
            samples_per_prompt=args.samples_per_prompt, base_seed=args.seed,
        )
    sys.stdout.write(table.render_text() + "\n")
    sys.stdout.write(f"note: {SCALE_LIMITATION}\n")
    if args.json:
        _write_json(args.json, table.to_json_dict())
    return 0


def _cmd_stats(args) -> int:
    records = read_manifest(args.manifest)
    out = manifest_stats(records).to_json_dict()
    recaptions = [r for r in records if isinstance(r, RecaptionRecord)]
    if recaptions:
        stats = corpus_stats(recaptions)
        out["recaption_token_means"] = {"brief": stats.mean_brief_tokens, "dense": stats.mean_dense_tokens}
    _write_json(args.out, out)
    return 0


# ---------------------------------------------------------------------------
# Parser wiring
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="videoground", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--verbose", action="store_true", help="log debug detail to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("filter", help="run the three-stage video filter cascade")
    p.add_argument("--corpus", required=True, help="video manifest (JSONL)")
    p.add_argument("--config", help="FilterConfig JSON")
    p.add_argument("--out", help="report JSON (default: stdout)")
    p.add_argument("--retained", help="write retained videos to this manifest")
    p.add_argument("--workers", type=int, default=1)
    _add_gateway_args(p)
    p.set_defaults(func=_cmd_filter)

    p = sub.add_parser("annotate", help="annotate videos into frame-pair samples")
    p.add_argument("--corpus", required=True, help="video manifest (JSONL)")
    p.add_argument("--config", help="AnnotationConfig JSON")
    p.add_argument("--out", required=True, help="frame-pair manifest (JSONL)")
    p.add_argument("--report", help="report JSON")
    p.add_argument("--workers", type=int, default=1)
    _add_gateway_args(p)
    p.set_defaults(func=_cmd_annotate)

    p = sub.add_parser("serialize", help="serialize frame pairs to interleaved text")
    p.add_argument("--pairs", required=True, help="frame-pair manifest (JSONL)")
    p.add_argument("--out", required=True, help="interleaved manifest (JSONL)")
    p.add_argument("--drop-prob", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--joint", action="store_true", help="drop box and segment together instead of independently")
    p.set_defaults(func=_cmd_serialize)

    p = sub.add_parser("psr-build", help="render rewrite-training conversations from caption pairs")
    p.add_argument("--recaptions", required=True, help="recaption manifest (JSONL)")
    p.add_argument("--out", required=True, help="conversation manifest (JSONL)")
    p.set_defaults(func=_cmd_psr_build)

    p = sub.add_parser("psr-sample", help="rewrite one brief caption with the configured LM")
    p.add_argument("--brief", required=True)
    p.add_argument("--strategy", choices=STRATEGY_KINDS, default="top_p_and_temperature")
    p.add_argument("--p", type=float, default=0.9)
    p.add_argument("--t", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-tokens", type=int, default=64)
    _add_gateway_args(p)
    p.set_defaults(func=_cmd_psr_sample)

    p = sub.add_parser("eval-diversity", help="pairwise diversity over per-prompt image sets")
    p.add_argument("--images", required=True, help='JSON: {"prompt id": ["img1.png", ...], ...}')
    p.add_argument("--out", help="report JSON (default: stdout)")
    p.add_argument("--psnr-clamp", type=float, default=100.0)
    p.set_defaults(func=_cmd_eval_diversity)

    p = sub.add_parser("eval-fidelity", help="embedding-similarity fidelity over aligned triples")
    p.add_argument("--triples", required=True, help='JSON: {"generated": [...], "reference": [...], "prompts": [...]}')
    p.add_argument("--out", help="report JSON (default: stdout)")
    _add_gateway_args(p)
    p.set_defaults(func=_cmd_eval_fidelity)

    p = sub.add_parser("sweep", help="t_ref or sampling-strategy ablation table")
    p.add_argument("--axis", choices=("t_ref", "strategy"), required=True)
    p.add_argument("--corpus", help="video manifest (t_ref axis)")
    p.add_argument("--config", help="AnnotationConfig JSON (t_ref axis)")
    p.add_argument("--prompts", help="JSON array of brief captions (strategy axis)")
    p.add_argument("--samples-per-prompt", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", help="also write the table as JSON to this path")
    _add_gateway_args(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("stats", help="record counts and corpus means for a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", help="stats JSON (default: stdout)")
    p.set_defaults(func=_cmd_stats)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return 1
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args)
    except GatewayError as err:
        sys.stderr.write(f"error: {err}\n")
        return 2
    except (ValidationError, ManifestError, SequenceParseError) as err:
        sys.stderr.write(f"error: {err}\n")
        return 1
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as err:
        sys.stderr.write(f"error: {err}\n")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
