"""Memory nodes and the complete weighted similarity graph over them.

Every node carries its own embedding plus a fixed number of utility
questions whose embeddings are averaged with the node's. The edge weight
between two nodes measures, symmetrically, how well each node's base text
matches the other's questions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .providers import Embedder, Embedding, Generator, ProviderError

CHUNK = "chunk"
SUMMARY = "summary"

KINDS = (CHUNK, SUMMARY)

# Tightest float tolerance used for structural matrix checks.
SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class UtilityQuestion:
    """One generated question tagging a node.

    The embedding is the componentwise mean of the question text's own
    embedding and the parent node's base embedding.
    """

    text: str
    embedding: Embedding
    parent_node: int


@dataclass(frozen=True)
class MemoryNode:
    """One graph node: a source chunk or a synthesized summary.

    ``source`` is the chunk ordinal for kind=chunk and the theme index
    for kind=summary.
    """

    id: int
    kind: str
    text: str
    base_embedding: Embedding
    questions: tuple[UtilityQuestion, ...]
    source: int

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown node kind {self.kind!r}")
        for q in self.questions:
            if q.parent_node != self.id:
                raise ValueError(
                    f"question parent {q.parent_node} does not match node {self.id}"
                )


@dataclass
class GemGraph:
    """Immutable-by-convention complete weighted graph.

    ``S`` is symmetric with a unit diagonal and off-diagonal weights in
    [0, 1]; ``m`` is the graph-wide question count per node.
    """

    nodes: list[MemoryNode]
    S: np.ndarray
    m: int
    build_meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.nodes)

    def node_by_id(self, node_id: int) -> MemoryNode:
        for node in self.nodes:
            if node.id == node_id:
                return node
        raise KeyError(f"no node with id {node_id}")

    def questions(self) -> Iterator[tuple[int, int, UtilityQuestion]]:
        """Yield (node index, question position, question) in global order."""
        for i, node in enumerate(self.nodes):
            for j, q in enumerate(node.questions):
                yield i, j, q

    def validate(self) -> None:
        """Raise ValueError on any structural invariant violation."""
        n = self.n
        if self.S.shape != (n, n):
            raise ValueError(f"S shape {self.S.shape} does not match {n} nodes")
        if np.max(np.abs(self.S - self.S.T), initial=0.0) > SYMMETRY_TOL:
            raise ValueError("S is not symmetric")
        diag = np.diag(self.S)
        if not np.all(diag == 1.0):
            raise ValueError("S diagonal must be exactly 1")
        off = self.S[~np.eye(n, dtype=bool)]
        if off.size and (off.min() < 0.0 or off.max() > 1.0):
            raise ValueError("off-diagonal weights must lie in [0, 1]")
        for node in self.nodes:
            if len(node.questions) != self.m:
                raise ValueError(
                    f"node {node.id} has {len(node.questions)} questions, expected {self.m}"
                )


def cosine(a, b) -> float:
    """Cosine similarity of two vectors (Embedding or plain sequence)."""
    av = a.array if isinstance(a, Embedding) else np.asarray(a, dtype=np.float64)
    bv = b.array if isinstance(b, Embedding) else np.asarray(b, dtype=np.float64)
    if av.shape != bv.shape:
        raise ValueError(f"dimension mismatch: {av.shape[0]} vs {bv.shape[0]}")
    na = float(np.linalg.norm(av))
    nb = float(np.linalg.norm(bv))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity is undefined for a zero vector")
    return float(np.dot(av, bv) / (na * nb))


def build_node(
    chunk_text: str,
    id: int,
    kind: str = CHUNK,
    m: int = 5,
    embedder: Embedder = None,
    generator: Generator = None,
    source: int | None = None,
) -> MemoryNode:
    """Embed a text and tag it with m utility questions.

    Each question embedding is averaged with the node's base embedding.
    Provider failures are re-raised with the node id attached.
    """
    if m < 0:
        raise ValueError("m must be >= 0")
    try:
        question_texts = generator.generate_questions(chunk_text, m) if m else []
        base = embedder.embed([chunk_text])[0]
        q_embs = embedder.embed(question_texts) if question_texts else []
    except ProviderError as exc:
        exc.node_id = id
        raise
    questions = tuple(
        UtilityQuestion(
            text=text,
            embedding=Embedding(
                values=tuple(
                    (qv + bv) / 2.0 for qv, bv in zip(emb.values, base.values)
                ),
                provider_id=emb.provider_id,
            ),
            parent_node=id,
        )
        for text, emb in zip(question_texts, q_embs)
    )
    return MemoryNode(
        id=id,
        kind=kind,
        text=chunk_text,
        base_embedding=base,
        questions=questions,
        source=id if source is None else source,
    )


def raw_weight(t: MemoryNode, v: MemoryNode) -> float:
    """Directed affinity: sum of t's question embeddings against v's base.

    Falls back to plain base-to-base cosine when t carries no questions.
    """
    if not t.questions:
        return cosine(t.base_embedding, v.base_embedding)
    return sum(cosine(q.embedding, v.base_embedding) for q in t.questions)


def _normalized_rows(vectors: np.ndarray, what: str) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=-1, keepdims=True)
    if np.any(norms == 0.0):
        raise ValueError(f"zero-norm {what} embedding encountered")
    return vectors / norms


def build_graph(nodes: Sequence[MemoryNode], build_meta: dict | None = None) -> GemGraph:
    """Assemble the complete similarity graph over the given nodes.

    Off-diagonal weights average the two directed affinities, scaled to
    [0, 1] by the question count and clamped; the diagonal is exactly 1.
    """
    n = len(nodes)
    if n < 2:
        raise ValueError("graph needs at least 2 nodes")
    ms = {len(node.questions) for node in nodes}
    if len(ms) != 1:
        raise ValueError(f"nodes have mixed question counts {sorted(ms)}")
    m = ms.pop()
    dims = {node.base_embedding.dim for node in nodes}
    for node in nodes:
        dims.update(q.embedding.dim for q in node.questions)
    if len(dims) != 1:
        raise ValueError(f"mixed embedding dimensions {sorted(dims)}")

    base = np.array([node.base_embedding.values for node in nodes], dtype=np.float64)
    base_n = _normalized_rows(base, "base")
    if m == 0:
        sim = base_n @ base_n.T
    else:
        q = np.array(
            [[qq.embedding.values for qq in node.questions] for node in nodes],
            dtype=np.float64,
        )
        q_n = _normalized_rows(q, "question")
        # raw[t, v] = sum over t's questions of cosine(question, base of v)
        raw = q_n.reshape(n * m, -1) @ base_n.T
        sim = raw.reshape(n, m, n).sum(axis=1) / (2.0 * m)
        sim = sim + sim.T
    # Force exact symmetry before clamping; matmul output may be off by 1 ulp.
    sim = (sim + sim.T) / 2.0
    S = np.clip(sim, 0.0, 1.0)
    np.fill_diagonal(S, 1.0)
    graph = GemGraph(nodes=list(nodes), S=S, m=m, build_meta=dict(build_meta or {}))
    graph.validate()
    return graph


def _embedding_to_list(emb: Embedding) -> list[float]:
    return list(emb.values)


def graph_to_dict(graph: GemGraph, include_vectors: bool = True) -> dict:
    """Serialize to the exchange schema {meta, nodes, S}.

    With include_vectors=False all embedding fields are null; such a file
    can feed the explorer UI but cannot be loaded back for retrieval.
    """
    meta = dict(graph.build_meta)
    meta["m"] = graph.m
    meta["n"] = graph.n
    nodes = []
    for node in graph.nodes:
        nodes.append(
            {
                "id": node.id,
                "kind": node.kind,
                "text": node.text,
                "source": node.source,
                "base_embedding": _embedding_to_list(node.base_embedding)
                if include_vectors
                else None,
                "questions": [
                    {
                        "text": q.text,
                        "embedding": _embedding_to_list(q.embedding)
                        if include_vectors
                        else None,
                    }
                    for q in node.questions
                ],
            }
        )
    return {"meta": meta, "nodes": nodes, "S": graph.S.tolist()}


def graph_from_dict(data: dict) -> GemGraph:
    """Rebuild a graph from its exchange-schema dict.

    Requires embedding vectors to be present; vectorless exports are for
    display only.
    """
    try:
        meta = dict(data["meta"])
        node_dicts = data["nodes"]
        S = np.array(data["S"], dtype=np.float64)
        m = int(meta["m"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed graph JSON: missing {exc}") from exc
    provider_id = str(meta.get("embedder", "unknown"))
    nodes = []
    for nd in node_dicts:
        if nd.get("base_embedding") is None:
            raise ValueError(
                f"node {nd.get('id')} lacks embedding vectors; "
                "re-export with vectors included"
            )
        node_id = int(nd["id"])
        questions = tuple(
            UtilityQuestion(
                text=qd["text"],
                embedding=Embedding(
                    values=tuple(float(x) for x in qd["embedding"]),
                    provider_id=provider_id,
                ),
                parent_node=node_id,
            )
            for qd in nd["questions"]
        )
        nodes.append(
            MemoryNode(
                id=node_id,
                kind=nd["kind"],
                text=nd["text"],
                base_embedding=Embedding(
                    values=tuple(float(x) for x in nd["base_embedding"]),
                    provider_id=provider_id,
                ),
                questions=questions,
                source=int(nd.get("source", node_id)),
            )
        )
    meta.pop("m", None)
    meta.pop("n", None)
    graph = GemGraph(nodes=nodes, S=S, m=m, build_meta=meta)
    graph.validate()
    return graph
