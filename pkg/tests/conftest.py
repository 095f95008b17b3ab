"""Shared fixtures: mock providers, corpus builders, planted matrices."""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np
import pytest

from gem.engine import EngineConfig
from gem.providers import MockEmbedder, MockGenerator, ProviderConfig

# Deterministic pool of pseudo-words; none collide with the mock
# generator's stopword list or the question template tokens.
_SYLLABLES = ["ba", "de", "fi", "go", "hu", "ka", "lo", "mi",
              "nu", "po", "ra", "se", "ti", "vo", "wa", "ze"]
WORD_POOL = [a + b for a in _SYLLABLES for b in _SYLLABLES]

# Sprinkled into every chunk so random corpora build connected graphs.
COMMON_WORDS = ["zone", "facet", "motif"]


@pytest.fixture(scope="session")
def embedder() -> MockEmbedder:
    return MockEmbedder()


@pytest.fixture(scope="session")
def generator() -> MockGenerator:
    return MockGenerator()


def random_chunk_text(rng: random.Random, tokens: int, topic_words=None) -> str:
    """One chunk: mostly topic words plus shared connective words.

    Position 3 always carries the same connective token, so any two chunks
    of >= 4 tokens overlap lexically and the similarity graph is connected.
    """
    if topic_words is None:
        topic_words = rng.sample(WORD_POOL, 8)
    words = []
    for t in range(tokens):
        if t == 3:
            words.append(COMMON_WORDS[0])
        elif t % 7 == 3:
            words.append(rng.choice(COMMON_WORDS))
        else:
            words.append(rng.choice(topic_words))
    return " ".join(words)


def random_corpus(seed: int, n_chunks: int, chunk_tokens: int) -> str:
    """n_chunks of exactly chunk_tokens tokens with overlapping vocabulary."""
    rng = random.Random(seed)
    return " ".join(
        random_chunk_text(rng, chunk_tokens) for _ in range(n_chunks)
    )


def planted_matrix(
    rng: np.random.Generator,
    sizes: list[int],
    within: float = 0.95,
    cross: float = 0.02,
    noise: float = 0.0,
) -> np.ndarray:
    """Block-structured similarity matrix with unit diagonal.

    Off-diagonal entries are `within` inside a block and `cross` between
    blocks, plus symmetric uniform noise, clamped to [0, 1].
    """
    n = sum(sizes)
    S = np.full((n, n), cross)
    start = 0
    for size in sizes:
        S[start:start + size, start:start + size] = within
        start += size
    if noise:
        jitter = rng.uniform(-noise, noise, size=(n, n))
        S = S + (jitter + jitter.T) / 2.0
    S = np.clip((S + S.T) / 2.0, 0.0, 1.0)
    np.fill_diagonal(S, 1.0)
    return S


@dataclass(frozen=True)
class PlantedCorpus:
    """Three disjoint-vocabulary topic blocks of five chunks each.

    One block is a hub sharing connective tokens with both others; the
    couplings are asymmetric so the leading eigenvalues separate cleanly.
    """

    text: str
    chunk_tokens: int
    blocks: tuple[frozenset, ...]
    config: EngineConfig


_BLOCK_VOCAB = {
    0: ["stellar", "fusion", "plasma", "photon", "hydrogen", "helium"],
    1: ["harvest", "grain", "plough", "furrow", "seedling", "irrigation",
        "orchard", "pasture", "sickle", "granary"],
    2: ["ledger", "audit", "invoice", "debit", "treasury", "tariff",
        "currency", "deposit", "escrow", "dividend"],
}
_BLOCK_SHARED = {
    0: ["alpha", "gamma", "gamma"],
    1: ["alpha"],
    2: ["gamma", "gamma"],
}
PLANTED_T = 28
PLANTED_BLOCK_SIZE = 5


def make_planted_corpus(
    num_components: int = 3, questions: int = 3, dim: int = 4096
) -> PlantedCorpus:
    chunks = []
    blocks = []
    ordinal = 0
    for b in range(3):
        vocab = _BLOCK_VOCAB[b]
        ids = []
        for i in range(PLANTED_BLOCK_SIZE):
            fill = PLANTED_T - len(_BLOCK_SHARED[b])
            words = [vocab[(i + j) % len(vocab)] for j in range(fill)]
            words += _BLOCK_SHARED[b]
            chunks.append(" ".join(words))
            ids.append(ordinal)
            ordinal += 1
        blocks.append(frozenset(ids))
    config = EngineConfig(
        chunk_tokens=PLANTED_T,
        questions_per_node=questions,
        num_components=num_components,
        top_members=PLANTED_BLOCK_SIZE,
        embedder=ProviderConfig(dim=dim),
    )
    return PlantedCorpus(
        text=" ".join(chunks),
        chunk_tokens=PLANTED_T,
        blocks=tuple(blocks),
        config=config,
    )


@pytest.fixture(scope="session")
def planted_corpus() -> PlantedCorpus:
    return make_planted_corpus()
