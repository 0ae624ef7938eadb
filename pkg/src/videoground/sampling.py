"""Autoregressive rewrite sampling: temperature, nucleus, and combinations.

Temperature reshapes the distribution (``probs ** (1/t)``, renormalized,
computed in log space for stability); nucleus/top-p truncates to the
smallest descending-probability prefix with cumulative mass >= p, breaking
exact ties toward lower vocab ids.  The combined strategy applies
temperature first, then top-p — the order is pinned by tests.

All decisions are reproducible: a rewrite is fully determined by
(seed, strategy, LM), with draws made by inverse CDF on the transformed
distribution.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Mapping

from .gateway import Gateway
from .types import CategoricalDistribution

STRATEGY_KINDS = ("greedy", "pure", "top_p", "temperature", "top_p_and_temperature")

__all__ = [
    "STRATEGY_KINDS",
    "SamplingStrategy",
    "RewriteResult",
    "GenerationRequest",
    "apply_temperature",
    "apply_top_p",
    "sample_rewrite",
    "generate_with_rewrite",
]


@dataclass(frozen=True)
class SamplingStrategy:
    kind: str
    p: float = 0.9
    t: float = 0.8
    max_tokens: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}; expected one of {STRATEGY_KINDS}")
        if not 0.0 < self.p <= 1.0:
            raise ValueError("p must be in (0, 1]")
        if not self.t > 0.0:
            raise ValueError("t must be > 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def to_json_dict(self) -> dict:
        return {"kind": self.kind, "p": self.p, "t": self.t, "max_tokens": self.max_tokens, "seed": self.seed}

    @classmethod
    def from_json_dict(cls, d: Mapping) -> "SamplingStrategy":
        return cls(
            kind=d["kind"],
            p=d.get("p", 0.9),
            t=d.get("t", 0.8),
            max_tokens=int(d.get("max_tokens", 64)),
            seed=int(d.get("seed", 0)),
        )


@dataclass(frozen=True)
class RewriteResult:
    """A sampled rewrite: chosen token ids (eos excluded) plus bookkeeping.

    ``log_prob`` sums log P of every draw made under the post-strategy
    distribution, including the terminating end-of-sequence draw when the
    rewrite stopped on eos.
    """

    tokens: tuple[int, ...]
    m: int
    log_prob: float
    terminated_by: str  # "eos" | "max_tokens"


@dataclass(frozen=True)
class GenerationRequest:
    """The image-generation conditioning record: brief plus sampled dense."""

    c_brief: str
    c_dense: str
    strategy: SamplingStrategy
    seed: int

    def to_json_dict(self) -> dict:
        return {
            "c_brief": self.c_brief,
            "c_dense": self.c_dense,
            "strategy": self.strategy.to_json_dict(),
            "seed": self.seed,
        }


def apply_temperature(d: CategoricalDistribution, t: float) -> CategoricalDistribution:
    """probs' ∝ probs ** (1/t); t=1 is exact identity."""
    if t <= 0.0:
        raise ValueError("t must be > 0")
    if t == 1.0:
        return d
    # Work in log space so tiny t (greedy limit) cannot overflow.
    logs = [math.log(p) / t if p > 0.0 else -math.inf for p in d.probs]
    peak = max(logs)
    weights = [math.exp(x - peak) if x > -math.inf else 0.0 for x in logs]
    total = math.fsum(weights)
    return CategoricalDistribution(tuple(w / total for w in weights), d.vocab_ids)


def apply_top_p(d: CategoricalDistribution, p: float) -> CategoricalDistribution:
    """Keep the smallest descending-mass prefix with cumulative mass >= p.

    Exact probability ties order by lower vocab_id, so truncation is
    deterministic.  Zeroed entries stay in place (the vocab axis is
    preserved); survivors are renormalized.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError("p must be in (0, 1]")
    n = len(d.probs)
    order = sorted(range(n), key=lambda i: (-d.probs[i], d.vocab_ids[i]))
    kept: list[int] = []
    cum = 0.0
    for i in order:
        kept.append(i)
        cum += d.probs[i]
        if cum >= p:
            break
    kept_set = set(kept)
    kept_mass = math.fsum(d.probs[i] for i in kept)
    probs = tuple(d.probs[i] / kept_mass if i in kept_set else 0.0 for i in range(n))
    return CategoricalDistribution(probs, d.vocab_ids)


def _transform(d: CategoricalDistribution, strategy: SamplingStrategy) -> CategoricalDistribution:
    if strategy.kind in ("greedy", "pure"):
        return d
    if strategy.kind == "top_p":
        return apply_top_p(d, strategy.p)
    if strategy.kind == "temperature":
        return apply_temperature(d, strategy.t)
    # combined: temperature reshapes mass, nucleus then truncates
    return apply_top_p(apply_temperature(d, strategy.t), strategy.p)


def _argmax_lowest_id(d: CategoricalDistribution) -> int:
    best = 0
    for i in range(1, len(d.probs)):
        if d.probs[i] > d.probs[best] or (
            d.probs[i] == d.probs[best] and d.vocab_ids[i] < d.vocab_ids[best]
        ):
            best = i
    return best


def _inverse_cdf(d: CategoricalDistribution, u: float) -> int:
    running = 0.0
    last_support = 0
    for i, prob in enumerate(d.probs):
        if prob <= 0.0:
            continue
        running += prob
        last_support = i
        if u < running:
            return i
    return last_support  # guards the u ~ 1.0 float-undershoot edge


def sample_rewrite(
    c_brief: str,
    lm: Gateway,
    strategy: SamplingStrategy,
    rng: random.Random | None = None,
) -> RewriteResult:
    """Sample one dense-caption token sequence conditioned on ``c_brief``.

    Stops on the end-of-sequence token (excluded from ``tokens``) or after
    ``max_tokens`` tokens, whichever comes first.
    """
    if rng is None:
        rng = random.Random(strategy.seed)
    eos_id = lm.lm_eos_id()
    tokens: list[int] = []
    log_prob = 0.0
    terminated_by = "max_tokens"
    while True:
        dist = lm.lm_next_distribution(tuple(tokens), c_brief)
        if strategy.kind == "greedy":
            idx = _argmax_lowest_id(dist)
            chosen_prob = dist.probs[idx]
        else:
            transformed = _transform(dist, strategy)
            idx = _inverse_cdf(transformed, rng.random())
            chosen_prob = transformed.probs[idx]
        log_prob += math.log(chosen_prob)
        if dist.vocab_ids[idx] == eos_id:
            terminated_by = "eos"
            break
        tokens.append(dist.vocab_ids[idx])
        if len(tokens) >= strategy.max_tokens:
            terminated_by = "max_tokens"
            break
    return RewriteResult(tokens=tuple(tokens), m=len(tokens), log_prob=log_prob, terminated_by=terminated_by)


def generate_with_rewrite(
    c_brief: str,
    lm: Gateway,
    strategy: SamplingStrategy,
    rng: random.Random | None = None,
) -> tuple[str, GenerationRequest]:
    """Rewrite then package the image-generation conditioning.

    Image synthesis itself is delegated: the returned request carries both
    captions (the generator conditions on the pair) plus the sampling
    provenance, and is what gets POSTed or recorded downstream.
    """
    result = sample_rewrite(c_brief, lm, strategy, rng)
    c_dense = lm.lm_decode(result.tokens)
    request = GenerationRequest(c_brief=c_brief, c_dense=c_dense, strategy=strategy, seed=strategy.seed)
    return c_dense, request
