"""Deterministic tokenization and fixed-size chunking of source documents.

Chunks produced here become the text of the memory graph's nodes, so the
split must be reproducible: the same bytes always yield the same chunks,
and chunk boundaries never fall inside a token.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

# A token is a maximal run of alphanumerics (apostrophes allowed inside the
# run, e.g. "don't") or a single non-space punctuation character.
_TOKEN_RE = re.compile(r"[^\W_]+(?:['’][^\W_]+)*|[^\w\s]|_")


@dataclass(frozen=True)
class TokenizedText:
    """Tokens of a source string plus their character spans.

    Offsets are non-overlapping and strictly increasing; the characters
    between consecutive spans are exactly the source's inter-token text,
    so the original string can always be reconstructed.
    """

    tokens: tuple[str, ...]
    offsets: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class Chunk:
    """One fixed-size slice of the tokenized source."""

    ordinal: int
    text: str
    token_count: int
    char_span: tuple[int, int]


def tokenize(text: str) -> TokenizedText:
    """Split ``text`` into tokens with character offsets.

    Deterministic and Unicode-aware; empty input yields an empty token list.
    """
    tokens: list[str] = []
    offsets: list[tuple[int, int]] = []
    for match in _TOKEN_RE.finditer(text):
        tokens.append(match.group(0))
        offsets.append((match.start(), match.end()))
    return TokenizedText(tokens=tuple(tokens), offsets=tuple(offsets))


def token_count(text: str) -> int:
    """Number of tokens in ``text`` under the corpus tokenizer."""
    return len(_TOKEN_RE.findall(text))


def truncate_tokens(text: str, max_tokens: int) -> str:
    """Cut ``text`` after its first ``max_tokens`` tokens.

    Returns the original string when it is already short enough. Trailing
    inter-token characters after the cut are dropped.
    """
    if max_tokens < 0:
        raise ValueError("max_tokens must be >= 0")
    if max_tokens == 0:
        return ""
    tokenized = tokenize(text)
    if len(tokenized) <= max_tokens:
        return text
    end = tokenized.offsets[max_tokens - 1][1]
    return text[:end]


def chunk(text: str, chunk_tokens: int) -> list[Chunk]:
    """Split ``text`` into consecutive chunks of ``chunk_tokens`` tokens.

    All chunks carry exactly ``chunk_tokens`` tokens except possibly the
    last; together they partition the source's tokens in order. A chunk's
    text is the source substring from its first token's start to its last
    token's end, so inter-token characters inside a chunk are preserved.

    Raises:
        ValueError: if ``chunk_tokens`` is smaller than 1.
    """
    if chunk_tokens < 1:
        raise ValueError(f"chunk size must be >= 1, got {chunk_tokens}")
    tokenized = tokenize(text)
    chunks: list[Chunk] = []
    for ordinal, start_idx in enumerate(range(0, len(tokenized), chunk_tokens)):
        span = tokenized.offsets[start_idx : start_idx + chunk_tokens]
        start, end = span[0][0], span[-1][1]
        chunks.append(
            Chunk(
                ordinal=ordinal,
                text=text[start:end],
                token_count=len(span),
                char_span=(start, end),
            )
        )
    return chunks
