"""Pipeline orchestration: configuration, the build flow, and persistence.

A build runs chunking, node tagging, graph assembly, spectral analysis
and summary synthesis in one pass, then persists the result under a
content-addressed id so identical corpus + config pairs share a graph.
"""

from __future__ import annotations

import datetime
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .corpus import chunk
from .graph import CHUNK, GemGraph, build_graph, build_node, graph_from_dict, graph_to_dict
from .providers import (
    Embedder,
    Generator,
    ProviderConfig,
    build_embedder,
    build_generator,
)
from .spectral import SpectralReport, decompose, laplacian
from .synthesis import EIGEN, KMEANS, attach_summaries, eigen_themes, kmeans_groups

GRAPH_ID_LENGTH = 16


@dataclass(frozen=True)
class EngineConfig:
    """All build and retrieval knobs with their standard defaults."""

    chunk_tokens: int = 100
    questions_per_node: int = 5
    num_components: int = 2
    top_members: int = 5
    budget_nodes: int = 4
    gap_cutoff: float = 0.5
    beta_close: float = 0.7
    skip_top: bool = False
    synthesis_strategy: str = EIGEN
    seed: int = 0
    embedder: ProviderConfig = field(default_factory=ProviderConfig)
    generator: ProviderConfig = field(default_factory=ProviderConfig)

    def __post_init__(self) -> None:
        if self.chunk_tokens < 1:
            raise ValueError("chunk_tokens must be >= 1")
        if self.budget_nodes < 1:
            raise ValueError("budget_nodes must be >= 1")
        for name in ("questions_per_node", "num_components", "top_members", "seed"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.top_members < 1:
            raise ValueError("top_members must be >= 1")
        if self.synthesis_strategy not in (EIGEN, KMEANS):
            raise ValueError(
                f"unknown synthesis strategy {self.synthesis_strategy!r}"
            )

    def to_dict(self) -> dict:
        out = {
            "chunk_tokens": self.chunk_tokens,
            "questions_per_node": self.questions_per_node,
            "num_components": self.num_components,
            "top_members": self.top_members,
            "budget_nodes": self.budget_nodes,
            "gap_cutoff": self.gap_cutoff,
            "beta_close": self.beta_close,
            "skip_top": self.skip_top,
            "synthesis_strategy": self.synthesis_strategy,
            "seed": self.seed,
            "embedder": self.embedder.to_dict(),
            "generator": self.generator.to_dict(),
        }
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "EngineConfig":
        data = dict(data)
        for key in ("embedder", "generator"):
            if key in data and isinstance(data[key], dict):
                data[key] = ProviderConfig.from_dict(data[key])
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        unknown = set(data) - set(known)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**known)

    @classmethod
    def from_file(cls, path) -> "EngineConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def merged(self, **overrides) -> "EngineConfig":
        """New config with every non-None override applied."""
        clean = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **clean) if clean else self


def canonical_config_json(config: EngineConfig) -> str:
    return json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))


def compute_graph_id(corpus_text: str, config: EngineConfig) -> str:
    digest = hashlib.sha256()
    digest.update(corpus_text.encode("utf-8"))
    digest.update(b"\x00")
    digest.update(canonical_config_json(config).encode("utf-8"))
    return digest.hexdigest()[:GRAPH_ID_LENGTH]


def build_graph_for_corpus(
    corpus_text: str,
    config: EngineConfig,
    embedder: Embedder | None = None,
    generator: Generator | None = None,
) -> tuple[GemGraph, SpectralReport]:
    """Run the full build pipeline over one document.

    Returns the final graph (chunks plus any summary nodes) together with
    the spectral report of the chunk-only graph; summaries are inserted
    once and never re-decomposed.
    """
    embedder = embedder or build_embedder(config.embedder)
    generator = generator or build_generator(config.generator)
    chunks = chunk(corpus_text, config.chunk_tokens)
    if not chunks:
        raise ValueError("no chunks: corpus is empty")

    m = config.questions_per_node
    workers = max(
        1, min(config.embedder.max_in_flight, config.generator.max_in_flight)
    )

    def make_node(c):
        return build_node(
            c.text,
            id=c.ordinal,
            kind=CHUNK,
            m=m,
            embedder=embedder,
            generator=generator,
            source=c.ordinal,
        )

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            nodes = list(pool.map(make_node, chunks))
    else:
        nodes = [make_node(c) for c in chunks]

    meta = {
        "graph_id": compute_graph_id(corpus_text, config),
        "embedder": getattr(embedder, "provider_id", "unknown"),
        "generator": getattr(generator, "provider_id", "unknown"),
        "chunk_tokens": config.chunk_tokens,
        "built_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "config": config.to_dict(),
    }
    graph = build_graph(nodes, build_meta=meta)
    report = decompose(
        laplacian(graph.S), c=config.gap_cutoff, beta_close=config.beta_close
    )
    graph.build_meta["theme_count"] = report.theme_count
    graph.build_meta["distinctness"] = report.distinctness

    if config.num_components > 0:
        # Small corpora: cap theme count and members at what exists.
        num_components = min(config.num_components, graph.n)
        e = min(config.top_members, graph.n)
        if config.synthesis_strategy == EIGEN:
            themes = eigen_themes(
                graph, report, num_components, e, skip_top=config.skip_top
            )
        else:
            themes = kmeans_groups(graph, k=num_components, seed=config.seed)
        graph = attach_summaries(
            graph, themes, m, embedder, generator,
            summary_tokens=config.chunk_tokens,
        )
    return graph, report


class GraphStore:
    """Directory of graph JSON files keyed by content-addressed id."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def path(self, graph_id: str) -> Path:
        if not graph_id.replace("-", "").isalnum():
            raise KeyError(f"invalid graph id {graph_id!r}")
        return self.directory / f"{graph_id}.json"

    def exists(self, graph_id: str) -> bool:
        try:
            return self.path(graph_id).exists()
        except KeyError:
            return False

    def save(self, graph: GemGraph) -> str:
        graph_id = graph.build_meta.get("graph_id")
        if not graph_id:
            payload = json.dumps(graph_to_dict(graph), sort_keys=True)
            graph_id = hashlib.sha256(payload.encode("utf-8")).hexdigest()[
                :GRAPH_ID_LENGTH
            ]
            graph.build_meta["graph_id"] = graph_id
        self.path(graph_id).write_text(
            json.dumps(graph_to_dict(graph, include_vectors=True)),
            encoding="utf-8",
        )
        return graph_id

    def load(self, graph_id: str) -> GemGraph:
        path = self.path(graph_id)
        if not path.exists():
            raise KeyError(f"unknown graph id {graph_id!r}")
        return graph_from_dict(json.loads(path.read_text(encoding="utf-8")))

    def list_graphs(self) -> list[dict]:
        out = []
        for path in sorted(self.directory.glob("*.json")):
            try:
                meta = json.loads(path.read_text(encoding="utf-8")).get("meta", {})
            except (OSError, json.JSONDecodeError):
                continue
            out.append(
                {
                    "graph_id": path.stem,
                    "n": meta.get("n"),
                    "m": meta.get("m"),
                    "theme_count": meta.get("theme_count"),
                    "distinctness": meta.get("distinctness"),
                    "built_at": meta.get("built_at"),
                }
            )
        return out


def build_and_store(
    corpus_text: str, config: EngineConfig, store: GraphStore
) -> tuple[str, GemGraph, SpectralReport]:
    """Build (or reuse) the graph for this corpus + config pair."""
    graph_id = compute_graph_id(corpus_text, config)
    if store.exists(graph_id):
        graph = store.load(graph_id)
        report = decompose(
            laplacian(graph.S[: _chunk_count(graph), : _chunk_count(graph)]),
            c=config.gap_cutoff,
            beta_close=config.beta_close,
        )
        return graph_id, graph, report
    graph, report = build_graph_for_corpus(corpus_text, config)
    store.save(graph)
    return graph_id, graph, report


def _chunk_count(graph: GemGraph) -> int:
    return sum(1 for node in graph.nodes if node.kind == CHUNK)
