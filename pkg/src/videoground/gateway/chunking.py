"""Lexicon-driven noun-chunk extraction used by the stub gateway.

A real deployment delegates chunking to an NLP service; the stub needs a
deterministic stand-in that behaves like one on fixture captions.  The
algorithm: find lexicon nouns left-to-right, extend each head leftward
over adjacent determiners/possessives/adjectives, and discard chunks
whose head is on the abstract-noun stop list ("time", "love", ...).

Spans are byte offsets into the UTF-8 caption, matching the core-model
convention.  The lexicons live in ``data/*.json`` next to this module so
non-Python adapter implementations can load the identical lists.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterable

from ..types import NounChunk

_WORD_RE = re.compile(r"\S+")
_CORE_RE = re.compile(r"[0-9A-Za-z][0-9A-Za-z'\-]*")


@dataclass(frozen=True)
class Lexicon:
    nouns: frozenset[str]
    adjectives: frozenset[str]
    determiners: frozenset[str]
    possessives: frozenset[str]
    abstract: frozenset[str]

    @property
    def modifiers(self) -> frozenset[str]:
        return self.adjectives | self.determiners | self.possessives


def _load_json(name: str) -> object:
    ref = resources.files(__package__).joinpath("data", name)
    return json.loads(ref.read_text(encoding="utf-8"))


@lru_cache(maxsize=1)
def default_lexicon() -> Lexicon:
    lex = _load_json("noun_lexicon.json")
    abstract = _load_json("abstract_nouns.json")
    return Lexicon(
        nouns=frozenset(lex["nouns"]),
        adjectives=frozenset(lex["adjectives"]),
        determiners=frozenset(lex["determiners"]),
        possessives=frozenset(lex["possessives"]),
        abstract=frozenset(abstract),
    )


@dataclass(frozen=True)
class _Token:
    raw: str
    start: int  # char offset of the raw token
    core: str  # alphanumeric core, lowercased for lookups
    core_start: int
    core_end: int

    @property
    def clean_tail(self) -> bool:
        """True when nothing (e.g. a comma) trails the core."""
        return self.start + len(self.raw) == self.core_end


def _tokenize(caption: str) -> list[_Token]:
    out = []
    for m in _WORD_RE.finditer(caption):
        core_m = _CORE_RE.search(m.group(0))
        if core_m is None:
            continue  # pure punctuation, never part of a chunk
        out.append(
            _Token(
                raw=m.group(0),
                start=m.start(),
                core=core_m.group(0).lower(),
                core_start=m.start() + core_m.start(),
                core_end=m.start() + core_m.end(),
            )
        )
    return out


def _lemma(word: str, vocab: Iterable[str]) -> str | None:
    """Match ``word`` against a vocab, tolerating plain plural forms."""
    if word in vocab:
        return word
    if word.endswith("es") and word[:-2] in vocab:
        return word[:-2]
    if word.endswith("s") and word[:-1] in vocab:
        return word[:-1]
    return None


def extract_chunks(caption: str, lexicon: Lexicon | None = None) -> tuple[NounChunk, ...]:
    """Extract concrete noun chunks ordered by span start.

    Returns chunks with byte-offset spans and 1-based ``chunk_id`` assigned
    in span order over the kept (non-abstract) chunks.  Pure function:
    identical captions always yield identical chunks.
    """
    lex = lexicon or default_lexicon()
    tokens = _tokenize(caption)
    consumed = [False] * len(tokens)
    found: list[tuple[int, int]] = []  # (char_start, char_end) of kept chunks

    for j, tok in enumerate(tokens):
        if consumed[j]:
            continue
        is_abstract = _lemma(tok.core, lex.abstract) is not None
        if not is_abstract and _lemma(tok.core, lex.nouns) is None:
            continue
        # Extend left over adjacent modifiers (a/the/her/red/golden/...).
        first = j
        while first > 0:
            prev = tokens[first - 1]
            if consumed[first - 1] or prev.core not in lex.modifiers or not prev.clean_tail:
                break
            first -= 1
        for k in range(first, j + 1):
            consumed[k] = True
        if not is_abstract:
            found.append((tokens[first].core_start, tok.core_end))

    chunks = []
    for i, (cstart, cend) in enumerate(found, start=1):
        text = caption[cstart:cend]
        bstart = len(caption[:cstart].encode("utf-8"))
        chunks.append(
            NounChunk(text=text, char_span=(bstart, bstart + len(text.encode("utf-8"))), chunk_id=i)
        )
    return tuple(chunks)


def strip_leading_determiners(phrase: str, lexicon: Lexicon | None = None) -> str:
    """Normalize a phrase for detection-table lookups: "A girl" → "girl"."""
    lex = lexicon or default_lexicon()
    words = phrase.lower().split()
    while words and words[0] in (lex.determiners | lex.possessives):
        words = words[1:]
    return " ".join(words)
