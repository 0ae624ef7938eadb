"""Diversity and fidelity evaluation, benchmark orchestration, sweeps.

Diversity (psnr_d, lpips_d) is defined over the images generated for one
prompt with different seeds: the mean over all unordered pairs of,
respectively, PSNR (infinite values clamped so aggregates stay finite)
and perceptual distance.  Fidelity aggregates cosine similarities of
gateway embeddings (image/image and image/prompt).

Everything here is protocol structure and metric math.  Image synthesis
is an external generator behind a request sink, and the bundled stubs are
deterministic placeholders — see :data:`SCALE_LIMITATION`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from . import seeding
from .gateway import Gateway, GatewayError
from .sampling import GenerationRequest, SamplingStrategy, generate_with_rewrite

logger = logging.getLogger(__name__)

#: Published absolute results for trained generation systems are NOT
#: reproducible with this harness and are NOT acceptance targets for it:
#: the image generator is an external service, and the bundled
#: deterministic stubs verify protocol structure, metric definitions, and
#: report shapes only — their numeric outputs are placeholders, not
#: quality claims.
SCALE_LIMITATION = (
    "Absolute benchmark values published for trained generation models are not "
    "reproducible with this harness and are not acceptance targets: image synthesis "
    "is delegated to an external generator service, and the bundled deterministic "
    "stubs exist to verify protocol structure, metric definitions, and table shapes only."
)

DEFAULT_PSNR_CLAMP_DB = 100.0

__all__ = [
    "SCALE_LIMITATION",
    "DEFAULT_PSNR_CLAMP_DB",
    "ImageBuffer",
    "DiversityReport",
    "PromptDiversity",
    "FidelityReport",
    "DreamBenchCase",
    "DreamBenchConfig",
    "DreamBenchCaseRecord",
    "DreamBenchResult",
    "SweepRow",
    "SweepTable",
    "psnr",
    "pairwise_diversity",
    "diversity_report",
    "fidelity",
    "run_dreambench",
    "sweep_t_ref",
    "sweep_strategy",
    "T_REF_SWEEP_VALUES",
    "STRATEGY_SWEEP_LABELS",
]


# ---------------------------------------------------------------------------
# Pixel carrier
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ImageBuffer:
    """Row-major 8-bit RGB pixels; the only place pixels live in-process."""

    width: int
    height: int
    channels: int
    data: bytes

    def __post_init__(self) -> None:
        if self.channels != 3:
            raise ValueError("ImageBuffer carries 3-channel RGB data")
        if self.width < 1 or self.height < 1:
            raise ValueError("width and height must be >= 1")
        if len(self.data) != self.width * self.height * self.channels:
            raise ValueError(
                f"data length {len(self.data)} != width*height*channels "
                f"({self.width}*{self.height}*{self.channels})"
            )

    def as_array(self) -> np.ndarray:
        return np.frombuffer(self.data, dtype=np.uint8).reshape(self.height, self.width, self.channels)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "ImageBuffer":
        arr = np.ascontiguousarray(arr, dtype=np.uint8)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError("expected an (H, W, 3) uint8 array")
        return cls(width=arr.shape[1], height=arr.shape[0], channels=3, data=arr.tobytes())


def _same_dims(a: ImageBuffer, b: ImageBuffer) -> bool:
    return (a.width, a.height, a.channels) == (b.width, b.height, b.channels)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


def psnr(a: ImageBuffer, b: ImageBuffer) -> float:
    """Peak signal-to-noise ratio in dB; +inf for identical buffers."""
    if not _same_dims(a, b):
        raise ValueError("psnr requires identical image dimensions")
    xa = np.frombuffer(a.data, dtype=np.uint8).astype(np.float64)
    xb = np.frombuffer(b.data, dtype=np.uint8).astype(np.float64)
    mse = float(np.mean((xa - xb) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0**2 / mse)


def pairwise_diversity(
    samples: Sequence[ImageBuffer],
    perceptual: Callable[[ImageBuffer, ImageBuffer], float],
    *,
    psnr_clamp_db: float = DEFAULT_PSNR_CLAMP_DB,
) -> tuple[float, float]:
    """(psnr_d, lpips_d) over all unordered pairs of one prompt's samples.

    Lower psnr_d and higher lpips_d mean more diverse samples.  Infinite
    PSNR (identical pair) is clamped to ``psnr_clamp_db`` before averaging.
    """
    if len(samples) < 2:
        raise ValueError("pairwise diversity needs at least 2 samples")
    for s in samples[1:]:
        if not _same_dims(samples[0], s):
            raise ValueError("all samples must share dimensions")
    psnr_total = 0.0
    lpips_total = 0.0
    n_pairs = 0
    for i in range(len(samples)):
        for j in range(i + 1, len(samples)):
            value = psnr(samples[i], samples[j])
            psnr_total += min(value, psnr_clamp_db)
            lpips_total += perceptual(samples[i], samples[j])
            n_pairs += 1
    return psnr_total / n_pairs, lpips_total / n_pairs


@dataclass(frozen=True)
class PromptDiversity:
    prompt_id: str
    psnr_d: float
    lpips_d: float
    n_samples: int


@dataclass(frozen=True)
class DiversityReport:
    per_prompt: tuple[PromptDiversity, ...]
    aggregate_psnr_d: float
    aggregate_lpips_d: float

    def to_json_dict(self) -> dict:
        return {
            "per_prompt": [
                {"prompt_id": p.prompt_id, "psnr_d": p.psnr_d, "lpips_d": p.lpips_d, "n_samples": p.n_samples}
                for p in self.per_prompt
            ],
            "aggregate_psnr_d": self.aggregate_psnr_d,
            "aggregate_lpips_d": self.aggregate_lpips_d,
        }


def diversity_report(
    groups: Sequence[tuple[str, Sequence[ImageBuffer]]],
    perceptual: Callable[[ImageBuffer, ImageBuffer], float],
    *,
    psnr_clamp_db: float = DEFAULT_PSNR_CLAMP_DB,
) -> DiversityReport:
    """Per-prompt pairwise diversity, then plain means over prompts."""
    if not groups:
        raise ValueError("diversity_report needs at least one prompt group")
    rows = []
    for prompt_id, samples in groups:
        psnr_d, lpips_d = pairwise_diversity(samples, perceptual, psnr_clamp_db=psnr_clamp_db)
        rows.append(PromptDiversity(prompt_id, psnr_d, lpips_d, len(samples)))
    return DiversityReport(
        per_prompt=tuple(rows),
        aggregate_psnr_d=sum(r.psnr_d for r in rows) / len(rows),
        aggregate_lpips_d=sum(r.lpips_d for r in rows) / len(rows),
    )


@dataclass(frozen=True)
class FidelityReport:
    dino: float
    clip_i: float
    clip_t: float

    def to_json_dict(self) -> dict:
        return {"dino": self.dino, "clip_i": self.clip_i, "clip_t": self.clip_t}


def _cosine(u: Sequence[float], v: Sequence[float]) -> float:
    if len(u) != len(v):
        raise ValueError(f"embedding dimensions differ: {len(u)} vs {len(v)}")
    # Gateway embeddings are unit-norm, so cosine is the dot product.
    return float(sum(a * b for a, b in zip(u, v)))


def fidelity(
    generated: Sequence[str],
    reference: Sequence[str],
    prompts: Sequence[str],
    embed: Gateway,
) -> FidelityReport:
    """Mean embedding similarities over aligned (generated, reference, prompt) triples."""
    if not generated:
        raise ValueError("fidelity needs at least one evaluated triple")
    if not (len(generated) == len(reference) == len(prompts)):
        raise ValueError("generated, reference, and prompts must be aligned lists")
    dino, clip_i, clip_t = [], [], []
    for gen_uri, ref_uri, prompt in zip(generated, reference, prompts):
        dino.append(_cosine(embed.embed(gen_uri, "dino"), embed.embed(ref_uri, "dino")))
        clip_i.append(_cosine(embed.embed(gen_uri, "clip_image"), embed.embed(ref_uri, "clip_image")))
        clip_t.append(_cosine(embed.embed(gen_uri, "clip_image"), embed.embed(prompt, "clip_text")))
    n = len(generated)
    return FidelityReport(dino=sum(dino) / n, clip_i=sum(clip_i) / n, clip_t=sum(clip_t) / n)


# ---------------------------------------------------------------------------
# Subject-driven benchmark orchestration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DreamBenchCase:
    case_id: str
    prompt: str
    reference_uris: tuple[str, ...]


@dataclass(frozen=True)
class DreamBenchConfig:
    samples_per_case: int = 4  # the protocol constant: four images per prompt case
    strategy: SamplingStrategy = field(
        default_factory=lambda: SamplingStrategy("top_p_and_temperature", p=0.9, t=0.8)
    )
    base_seed: int = 0

    def __post_init__(self) -> None:
        if self.samples_per_case < 1:
            raise ValueError("samples_per_case must be >= 1")


@dataclass(frozen=True)
class DreamBenchCaseRecord:
    case_id: str
    requests: tuple[GenerationRequest, ...]
    generated_uris: tuple[str, ...]
    error: str | None = None


@dataclass(frozen=True)
class DreamBenchResult:
    report: FidelityReport | None  # None when no image was generated
    cases: tuple[DreamBenchCaseRecord, ...]
    requests_issued: int


def run_dreambench(
    cases: Sequence[DreamBenchCase],
    gateway: Gateway,
    generator: Callable[[GenerationRequest], str],
    config: DreamBenchConfig | None = None,
) -> DreamBenchResult:
    """Issue exactly ``samples_per_case`` generation requests per case.

    ``generator`` is the request sink: it receives each
    :class:`GenerationRequest` and returns the generated image's URI.
    Per-case failures are recorded and the protocol continues.  Reruns
    with the same config produce an identical request stream (per-sample
    seeds derive from (base_seed, case_id, k)).
    """
    cfg = config or DreamBenchConfig()
    if not cases:
        raise ValueError("the case manifest is empty")
    records: list[DreamBenchCaseRecord] = []
    requests_issued = 0
    for case in cases:
        requests: list[GenerationRequest] = []
        uris: list[str] = []
        error: str | None = None
        try:
            for k in range(cfg.samples_per_case):
                strategy = replace(cfg.strategy, seed=seeding.derive_seed(cfg.base_seed, case.case_id, k))
                _, request = generate_with_rewrite(case.prompt, gateway, strategy)
                requests.append(request)
                requests_issued += 1
                uris.append(generator(request))
        except (GatewayError, RuntimeError, ValueError) as exc:
            logger.warning("case %s failed: %s", case.case_id, exc)
            error = str(exc)
            uris = []  # a failed case contributes nothing to the report
        records.append(DreamBenchCaseRecord(case.case_id, tuple(requests), tuple(uris), error))

    dino, clip_i, clip_t = [], [], []
    for case, record in zip(cases, records):
        for gen_uri in record.generated_uris:
            g_dino = gateway.embed(gen_uri, "dino")
            g_clip = gateway.embed(gen_uri, "clip_image")
            # Subject scores average over the case's reference images.
            dino.append(
                sum(_cosine(g_dino, gateway.embed(r, "dino")) for r in case.reference_uris)
                / len(case.reference_uris)
            )
            clip_i.append(
                sum(_cosine(g_clip, gateway.embed(r, "clip_image")) for r in case.reference_uris)
                / len(case.reference_uris)
            )
            clip_t.append(_cosine(g_clip, gateway.embed(case.prompt, "clip_text")))
    report = None
    if dino:
        n = len(dino)
        report = FidelityReport(dino=sum(dino) / n, clip_i=sum(clip_i) / n, clip_t=sum(clip_t) / n)
    return DreamBenchResult(report=report, cases=tuple(records), requests_issued=requests_issued)


# ---------------------------------------------------------------------------
# Ablation sweeps
# ---------------------------------------------------------------------------

T_REF_SWEEP_VALUES = (2, 8, 25, 50)

STRATEGY_SWEEP_LABELS = ("w/o samp.", "Pure samp.", "Top-P", "Temp", "Top-P+Temp")

_STRATEGY_BY_LABEL = {
    "w/o samp.": "greedy",
    "Pure samp.": "pure",
    "Top-P": "top_p",
    "Temp": "temperature",
    "Top-P+Temp": "top_p_and_temperature",
}


@dataclass(frozen=True)
class SweepRow:
    label: str
    metrics: Mapping[str, float] | None  # None when the setting failed
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.metrics is None


@dataclass(frozen=True)
class SweepTable:
    axis: str
    columns: tuple[str, ...]
    rows: tuple[SweepRow, ...]

    def to_json_dict(self) -> dict:
        return {
            "axis": self.axis,
            "columns": list(self.columns),
            "rows": [
                {
                    "label": r.label,
                    "metrics": dict(r.metrics) if r.metrics is not None else None,
                    "error": r.error,
                }
                for r in self.rows
            ],
        }

    def render_text(self) -> str:
        """Aligned-column text table."""
        header = [self.axis, *self.columns]
        body: list[list[str]] = []
        for row in self.rows:
            if row.failed:
                body.append([row.label] + ["FAILED"] * len(self.columns))
            else:
                body.append([row.label] + [f"{row.metrics[c]:.4f}" for c in self.columns])
        widths = [max(len(line[i]) for line in [header, *body]) for i in range(len(header))]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip() for line in [header, *body]]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines)


def _sweep(axis: str, columns: Sequence[str], settings: Sequence[tuple[str, Callable[[], Mapping[str, float]]]]) -> SweepTable:
    if not settings:
        raise ValueError(f"sweep over axis {axis!r} has no settings")
    rows = []
    for label, run in settings:
        try:
            rows.append(SweepRow(label, dict(run())))
        except Exception as exc:  # per-setting isolation is the contract
            logger.warning("sweep setting %r failed: %s", label, exc)
            rows.append(SweepRow(label, None, error=str(exc)))
    return SweepTable(axis=axis, columns=tuple(columns), rows=tuple(rows))


def sweep_t_ref(
    corpus,
    gateway: Gateway,
    base_config,
    *,
    values: Sequence[int] = T_REF_SWEEP_VALUES,
) -> SweepTable:
    """One row per temporal-interval setting with DINO/CLIP-T columns.

    Per setting, the corpus is re-annotated at that interval and scored
    with gateway embeddings: DINO = mean target/segment image similarity,
    CLIP-T = mean target-image/caption similarity.  Numbers are only as
    real as the configured embedding backend (see SCALE_LIMITATION).
    """
    from .annotate import annotate_corpus  # local import: avoids a module cycle

    def run_for(t_ref: int) -> Callable[[], Mapping[str, float]]:
        def run() -> Mapping[str, float]:
            config = replace(base_config, t_ref=t_ref)
            samples, _ = annotate_corpus(corpus, gateway, config)
            if not samples:
                raise RuntimeError(f"no samples produced at t_ref={t_ref}")
            dino_vals, clip_t_vals = [], []
            for s in samples:
                target_vec = gateway.embed(s.target_frame.uri, "dino")
                dino_vals.append(
                    sum(_cosine(target_vec, gateway.embed(i.segment_uri, "dino")) for i in s.instances)
                    / len(s.instances)
                )
                clip_t_vals.append(
                    _cosine(gateway.embed(s.target_frame.uri, "clip_image"), gateway.embed(s.caption, "clip_text"))
                )
            return {"DINO": sum(dino_vals) / len(dino_vals), "CLIP-T": sum(clip_t_vals) / len(clip_t_vals)}

        return run

    return _sweep("t_ref", ("DINO", "CLIP-T"), [(str(v), run_for(v)) for v in values])


def sweep_strategy(
    prompts: Sequence[str],
    gateway: Gateway,
    generator: Callable[[GenerationRequest], tuple[str, ImageBuffer]],
    *,
    labels: Sequence[str] = STRATEGY_SWEEP_LABELS,
    samples_per_prompt: int = 4,
    base_seed: int = 0,
    p: float = 0.9,
    t: float = 0.8,
    psnr_clamp_db: float = DEFAULT_PSNR_CLAMP_DB,
) -> SweepTable:
    """One row per sampling strategy with PSNR_d/CLIP-T columns.

    ``generator`` maps a generation request to (image uri, pixel buffer);
    psnr_d comes from the per-prompt pairwise protocol, CLIP-T from
    gateway embeddings of the generated images against their prompt.
    """

    def run_for(label: str) -> Callable[[], Mapping[str, float]]:
        kind = _STRATEGY_BY_LABEL.get(label)
        if kind is None:
            raise ValueError(f"unknown strategy label {label!r}")

        def run() -> Mapping[str, float]:
            if not prompts:
                raise ValueError("no prompts configured")
            psnr_vals, clip_t_vals = [], []
            for prompt in prompts:
                buffers: list[ImageBuffer] = []
                for k in range(samples_per_prompt):
                    seed = seeding.derive_seed(base_seed, label, prompt, k)
                    strategy = SamplingStrategy(kind, p=p, t=t, seed=seed)
                    _, request = generate_with_rewrite(prompt, gateway, strategy)
                    uri, buffer = generator(request)
                    buffers.append(buffer)
                    clip_t_vals.append(
                        _cosine(gateway.embed(uri, "clip_image"), gateway.embed(prompt, "clip_text"))
                    )
                psnr_d, _ = pairwise_diversity(
                    buffers, lambda a, b: 0.0, psnr_clamp_db=psnr_clamp_db
                )
                psnr_vals.append(psnr_d)
            return {
                "PSNR_d": sum(psnr_vals) / len(psnr_vals),
                "CLIP-T": sum(clip_t_vals) / len(clip_t_vals),
            }

        return run

    return _sweep("strategy", ("PSNR_d", "CLIP-T"), [(label, run_for(label)) for label in labels])
