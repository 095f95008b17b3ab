"""Graphical eigen memory.

Chunked documents become nodes of a complete weighted graph whose edges
measure how well each node answers its neighbors' utility questions. The
normalized Laplacian spectrum of that graph drives both theme-count
estimation and the synthesis of eigentheme summary nodes, and retrieval
walks the utility questions under a node budget.
"""

from .corpus import Chunk, chunk, token_count, tokenize, truncate_tokens
from .engine import EngineConfig, GraphStore, build_graph_for_corpus
from .graph import GemGraph, MemoryNode, UtilityQuestion, build_graph, cosine
from .providers import (
    Embedding,
    MockEmbedder,
    MockGenerator,
    ProviderConfig,
    ProviderError,
    build_embedder,
    build_generator,
)
from .retrieval import RetrievalConfig, RetrievalResult, assemble_context, retrieve
from .spectral import (
    DecompositionError,
    IsolatedNodeError,
    SpectralReport,
    decompose,
    distinctness,
    estimate_themes,
    laplacian,
    top_components,
)
from .synthesis import ThemeSpec, attach_summaries, build_summary_nodes, eigen_themes

__version__ = "0.1.0"

__all__ = [
    "Chunk",
    "DecompositionError",
    "Embedding",
    "EngineConfig",
    "GemGraph",
    "GraphStore",
    "IsolatedNodeError",
    "MemoryNode",
    "MockEmbedder",
    "MockGenerator",
    "ProviderConfig",
    "ProviderError",
    "RetrievalConfig",
    "RetrievalResult",
    "SpectralReport",
    "ThemeSpec",
    "UtilityQuestion",
    "assemble_context",
    "attach_summaries",
    "build_embedder",
    "build_generator",
    "build_graph",
    "build_graph_for_corpus",
    "build_summary_nodes",
    "chunk",
    "cosine",
    "decompose",
    "distinctness",
    "eigen_themes",
    "estimate_themes",
    "laplacian",
    "retrieve",
    "token_count",
    "tokenize",
    "truncate_tokens",
]
