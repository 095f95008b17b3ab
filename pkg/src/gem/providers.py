"""Text-embedding and text-generation backends.

Two families are provided behind the same small interface:

* Deterministic offline mocks, so graphs can be built, retrieved from and
  evaluated with no network access and byte-reproducible results.
* HTTP clients speaking the common ``/embeddings`` and ``/chat/completions``
  JSON wire format, covering hosted models and local servers alike.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import Protocol, Sequence

import numpy as np
import requests

from .corpus import tokenize, truncate_tokens

logger = logging.getLogger(__name__)

MOCK = "mock"
HTTP = "http"

DEFAULT_MOCK_DIM = 256

# Function words excluded when the mock generator picks topic tokens.
_STOPWORDS = frozenset(
    """a an and are as at be but by can did do for from had has have he her
    his how i if in into is it its just no not of on or our so than that the
    their then there these they this to too very was we were what when where
    which who will with you your""".split()
)

_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?])\s+")
_NUMBERED_LINE_RE = re.compile(r"^\s*\d+\s*[.):-]\s*(\S.*)$")


class ProviderError(Exception):
    """A backend call failed after exhausting its retries.

    Attributes:
        stage: which operation failed ("embed", "questions", "summarize",
            "answer").
        indices: input batch indices the failure applies to, when known.
        node_id: graph node the call belonged to, attached by the builder.
    """

    def __init__(
        self,
        message: str,
        *,
        stage: str,
        indices: list[int] | None = None,
        node_id: int | None = None,
    ):
        super().__init__(message)
        self.stage = stage
        self.indices = indices
        self.node_id = node_id


@dataclass(frozen=True)
class Embedding:
    """A fixed-length real vector for one text."""

    values: tuple[float, ...]
    provider_id: str

    @property
    def dim(self) -> int:
        return len(self.values)

    @cached_property
    def array(self) -> np.ndarray:
        # Cached read-only view; equality and hashing still use `values`.
        arr = np.asarray(self.values, dtype=np.float64)
        arr.flags.writeable = False
        return arr


@dataclass
class ProviderConfig:
    """Configuration for one backend (an embedder or a generator).

    ``kind`` selects the family; the http fields are ignored for mocks.
    ``dim`` sets the mock embedding dimension.
    """

    kind: str = MOCK
    endpoint: str = ""
    model_name: str = ""
    api_key_env: str = ""
    max_in_flight: int = 4
    timeout: float = 30.0
    retry_count: int = 2
    dim: int = DEFAULT_MOCK_DIM

    def __post_init__(self) -> None:
        if self.kind not in (MOCK, HTTP):
            raise ValueError(f"unknown provider kind {self.kind!r}")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        if self.retry_count < 0:
            raise ValueError("retry_count must be >= 0")
        if self.kind == HTTP and not self.endpoint:
            raise ValueError("http provider requires an endpoint")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "endpoint": self.endpoint,
            "model_name": self.model_name,
            "api_key_env": self.api_key_env,
            "max_in_flight": self.max_in_flight,
            "timeout": self.timeout,
            "retry_count": self.retry_count,
            "dim": self.dim,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProviderConfig":
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})


class Embedder(Protocol):
    provider_id: str

    def embed(self, texts: Sequence[str]) -> list[Embedding]: ...


class Generator(Protocol):
    provider_id: str

    def generate_questions(self, chunk_text: str, m: int) -> list[str]: ...

    def summarize(self, texts: Sequence[str], max_tokens: int) -> str: ...

    def answer(
        self,
        question: str,
        context: Sequence[str],
        options: Sequence[str] | None = None,
    ) -> str: ...


def _check_embed_inputs(texts: Sequence[str]) -> None:
    if not texts:
        raise ValueError("embed requires at least one text")
    for i, text in enumerate(texts):
        if not text.strip():
            raise ValueError(f"embed input {i} is empty after trimming")


def split_sentences(text: str) -> list[str]:
    """Split on sentence-ending punctuation; never returns empty strings."""
    parts = [p.strip() for p in _SENTENCE_SPLIT_RE.split(text)]
    return [p for p in parts if p]


def _first_sentence(text: str) -> str:
    sentences = split_sentences(text)
    return sentences[0] if sentences else text.strip()


def _lower_tokens(text: str) -> list[str]:
    return [t.lower() for t in tokenize(text).tokens]


class MockEmbedder:
    """Bag-of-words hash embedder.

    Each lowercased token is hashed to one of ``dim`` buckets, counts are
    accumulated and the vector is L2-normalized, so cosine similarity
    reflects lexical overlap. Pure function of the input text.
    """

    def __init__(self, dim: int = DEFAULT_MOCK_DIM):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim
        self.provider_id = f"mock-embed-{dim}"

    def embed(self, texts: Sequence[str]) -> list[Embedding]:
        _check_embed_inputs(texts)
        return [self._embed_one(t) for t in texts]

    def _bucket(self, token: str) -> int:
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "big") % self.dim

    def _embed_one(self, text: str) -> Embedding:
        counts = [0.0] * self.dim
        for token in _lower_tokens(text):
            counts[self._bucket(token)] += 1.0
        norm = sum(c * c for c in counts) ** 0.5
        if norm == 0.0:
            raise ValueError(f"text {text!r} produced no tokens to embed")
        return Embedding(
            values=tuple(c / norm for c in counts), provider_id=self.provider_id
        )


def _ranked_content_tokens(chunk_text: str) -> list[str]:
    """Distinct content tokens by descending frequency, ties by first appearance."""
    tokens = [t for t in _lower_tokens(chunk_text) if t.isalnum()]
    content = [t for t in tokens if t not in _STOPWORDS]
    if not content:
        content = tokens
    counts = Counter(content)
    first_seen: dict[str, int] = {}
    for i, t in enumerate(content):
        first_seen.setdefault(t, i)
    return sorted(counts, key=lambda t: (-counts[t], first_seen[t]))


class MockGenerator:
    """Deterministic template-based generation.

    * questions: one per top-frequency content token of the chunk
    * summarize: first sentence of each input, joined, truncated
    * answer: token-overlap vote against the context
    """

    provider_id = "mock-gen"

    def generate_questions(self, chunk_text: str, m: int) -> list[str]:
        if m < 0:
            raise ValueError("m must be >= 0")
        if m == 0:
            return []
        ranked = _ranked_content_tokens(chunk_text) or ["passage"]
        questions = []
        for i in range(m):
            token = ranked[i % len(ranked)]
            cycle = i // len(ranked)
            if cycle == 0:
                questions.append(f"What does the passage say about {token}?")
            else:
                questions.append(
                    f"What more does the passage say about {token} ({cycle})?"
                )
        return questions

    def summarize(self, texts: Sequence[str], max_tokens: int) -> str:
        if not texts:
            raise ValueError("summarize requires at least one text")
        joined = " ".join(_first_sentence(t) for t in texts)
        return truncate_tokens(joined, max_tokens)

    def answer(
        self,
        question: str,
        context: Sequence[str],
        options: Sequence[str] | None = None,
    ) -> str:
        if not context:
            raise ValueError("answer requires non-empty context")
        context_tokens = set()
        for text in context:
            context_tokens.update(_lower_tokens(text))
        if options is not None:
            if not options:
                raise ValueError("options must be non-empty when given")
            overlaps = [
                len(set(_lower_tokens(opt)) & context_tokens) for opt in options
            ]
            best = max(range(len(options)), key=lambda i: (overlaps[i], -i))
            return options[best]
        question_tokens = {
            t for t in _lower_tokens(question) if t not in _STOPWORDS and t.isalnum()
        }
        if not question_tokens:
            question_tokens = set(_lower_tokens(question))
        sentences: list[str] = []
        for text in context:
            sentences.extend(split_sentences(text))
        if not sentences:
            return ""
        scores = [len(set(_lower_tokens(s)) & question_tokens) for s in sentences]
        best = max(range(len(sentences)), key=lambda i: (scores[i], -i))
        return sentences[best]


class _HttpClient:
    """Shared POST-with-retries plumbing for the http providers."""

    def __init__(self, config: ProviderConfig, session: requests.Session | None = None):
        self.config = config
        self.session = session or requests.Session()
        self._slots = threading.BoundedSemaphore(config.max_in_flight)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.config.api_key_env, "") if self.config.api_key_env else ""
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def post_json(self, path: str, body: dict, *, stage: str, indices: list[int] | None) -> dict:
        url = self.config.endpoint.rstrip("/") + path
        attempts = self.config.retry_count + 1
        last_error: Exception | None = None
        for attempt in range(attempts):
            if attempt:
                time.sleep(min(0.5 * 2 ** (attempt - 1), 8.0))
            try:
                with self._slots:
                    response = self.session.post(
                        url,
                        data=json.dumps(body),
                        headers=self._headers(),
                        timeout=self.config.timeout,
                    )
                if response.status_code == 200:
                    return response.json()
                last_error = RuntimeError(
                    f"HTTP {response.status_code}: {response.text[:200]}"
                )
            except (requests.RequestException, ValueError) as exc:
                last_error = exc
            logger.warning("%s call to %s failed (attempt %d/%d): %s",
                           stage, url, attempt + 1, attempts, last_error)
        raise ProviderError(
            f"{stage} request to {url} failed after {attempts} attempts: {last_error}",
            stage=stage,
            indices=indices,
        )


class HttpEmbedder:
    """Client for ``POST {endpoint}/embeddings`` (``model`` + ``input`` body)."""

    def __init__(self, config: ProviderConfig, session: requests.Session | None = None):
        self.config = config
        self.provider_id = f"http:{config.model_name or config.endpoint}"
        self._client = _HttpClient(config, session)

    def embed(self, texts: Sequence[str]) -> list[Embedding]:
        _check_embed_inputs(texts)
        indices = list(range(len(texts)))
        payload = {"model": self.config.model_name, "input": list(texts)}
        data = self._client.post_json("/embeddings", payload, stage="embed", indices=indices)
        try:
            rows = sorted(data["data"], key=lambda row: row["index"])
            vectors = [tuple(float(x) for x in row["embedding"]) for row in rows]
        except (KeyError, TypeError) as exc:
            raise ProviderError(
                f"malformed embeddings response: {exc}", stage="embed", indices=indices
            ) from exc
        if len(vectors) != len(texts):
            raise ProviderError(
                f"expected {len(texts)} embeddings, got {len(vectors)}",
                stage="embed",
                indices=indices,
            )
        dims = {len(v) for v in vectors}
        if len(dims) != 1:
            raise ProviderError(
                f"mixed embedding dimensions {sorted(dims)}", stage="embed", indices=indices
            )
        return [Embedding(values=v, provider_id=self.provider_id) for v in vectors]


_QUESTION_PROMPT = (
    "Write exactly {m} distinct questions that can be answered solely from the "
    "passage below. Number them 1. to {m}., one per line, nothing else.\n\n"
    "Passage:\n{passage}"
)

_SUMMARY_PROMPT = (
    "Summarize the following passages in at most {max_tokens} tokens, keeping "
    "the high-level information. Reply with the summary only.\n\n{passages}"
)

_ANSWER_WITH_OPTIONS_PROMPT = (
    "Context:\n{context}\n\nQuestion: {question}\n\nOptions:\n{options}\n\n"
    "Reply with exactly one option, verbatim, and nothing else."
)

_ANSWER_FREE_PROMPT = (
    "Context:\n{context}\n\nQuestion: {question}\n\n"
    "Answer concisely using only the context."
)


class HttpGenerator:
    """Client for ``POST {endpoint}/chat/completions``."""

    def __init__(self, config: ProviderConfig, session: requests.Session | None = None):
        self.config = config
        self.provider_id = f"http:{config.model_name or config.endpoint}"
        self._client = _HttpClient(config, session)

    def _chat(self, prompt: str, *, stage: str) -> str:
        payload = {
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        }
        data = self._client.post_json("/chat/completions", payload, stage=stage, indices=None)
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(
                f"malformed chat response: {exc}", stage=stage
            ) from exc

    @staticmethod
    def _parse_numbered(text: str) -> list[str]:
        out = []
        for line in text.splitlines():
            match = _NUMBERED_LINE_RE.match(line)
            if match:
                out.append(match.group(1).strip())
        return out

    def generate_questions(self, chunk_text: str, m: int) -> list[str]:
        if m < 0:
            raise ValueError("m must be >= 0")
        if m == 0:
            return []
        prompt = _QUESTION_PROMPT.format(m=m, passage=chunk_text)
        parsed = self._parse_numbered(self._chat(prompt, stage="questions"))
        if len(parsed) < m:
            # One retry, then pad: the pipeline requires exactly m questions.
            parsed = self._parse_numbered(self._chat(prompt, stage="questions"))
        if not parsed:
            raise ProviderError(
                "generator returned no parseable questions", stage="questions"
            )
        while len(parsed) < m:
            parsed.append(f"{parsed[-1]} ({len(parsed) + 1})")
        return parsed[:m]

    def summarize(self, texts: Sequence[str], max_tokens: int) -> str:
        if not texts:
            raise ValueError("summarize requires at least one text")
        prompt = _SUMMARY_PROMPT.format(
            max_tokens=max_tokens, passages="\n\n".join(texts)
        )
        return truncate_tokens(self._chat(prompt, stage="summarize").strip(), max_tokens)

    def answer(
        self,
        question: str,
        context: Sequence[str],
        options: Sequence[str] | None = None,
    ) -> str:
        if not context:
            raise ValueError("answer requires non-empty context")
        joined = "\n\n".join(context)
        if options is not None:
            if not options:
                raise ValueError("options must be non-empty when given")
            prompt = _ANSWER_WITH_OPTIONS_PROMPT.format(
                context=joined,
                question=question,
                options="\n".join(f"- {o}" for o in options),
            )
            reply = self._chat(prompt, stage="answer").strip().lower()
            for opt in options:
                if opt.strip().lower() == reply:
                    return opt
            for opt in options:
                if opt.strip().lower() in reply:
                    return opt
            return options[0]
        prompt = _ANSWER_FREE_PROMPT.format(context=joined, question=question)
        return self._chat(prompt, stage="answer").strip()


def build_embedder(config: ProviderConfig) -> Embedder:
    if config.kind == MOCK:
        return MockEmbedder(dim=config.dim)
    return HttpEmbedder(config)


def build_generator(config: ProviderConfig) -> Generator:
    if config.kind == MOCK:
        return MockGenerator()
    return HttpGenerator(config)
