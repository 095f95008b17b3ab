"""Budgeted context selection over the memory graph.

The canonical strategy ranks every utility question in the graph against
the prompt embedding and walks the ranking, collecting distinct parent
nodes until the node budget is spent. A best-first variant can blend in
graph edge weights, and a plain embedding baseline models standard RAG.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import token_count, truncate_tokens
from .graph import CHUNK, SUMMARY, GemGraph, cosine
from .providers import Embedder

GEM_GREEDY = "gem_greedy"
GEM_BEST_FIRST = "gem_best_first"
EMBED_BASELINE = "embed_baseline"

STRATEGIES = (GEM_GREEDY, GEM_BEST_FIRST, EMBED_BASELINE)

ACCEPTED = "accepted"
SKIPPED_DUPLICATE = "skipped-duplicate"


@dataclass(frozen=True)
class RetrievalConfig:
    budget_nodes: int = 4
    strategy: str = GEM_GREEDY
    edge_bias: float = 0.0

    def __post_init__(self) -> None:
        if self.budget_nodes < 1:
            raise ValueError("budget_nodes must be >= 1")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if not 0.0 <= self.edge_bias <= 1.0:
            raise ValueError("edge_bias must lie in [0, 1]")


@dataclass
class RetrievalResult:
    """Selected nodes in selection order plus the full decision log.

    ``matched_questions[k]`` records which question (text may be None for
    the baseline) pulled node_ids[k] in and at what similarity; ``trace``
    logs every candidate the walk looked at.
    """

    node_ids: list[int]
    matched_questions: list[dict]
    scores: list[float]
    trace: list[dict] = field(default_factory=list)
    truncated: bool = False
    strategy: str = GEM_GREEDY

    def to_dict(self) -> dict:
        return {
            "node_ids": self.node_ids,
            "matched_questions": self.matched_questions,
            "scores": self.scores,
            "trace": self.trace,
            "truncated": self.truncated,
            "strategy": self.strategy,
        }


def _ranked_questions(graph: GemGraph, prompt_emb) -> list[tuple[float, int, int, str]]:
    """All (score, node index, question position, text), best first.

    Ties break toward the lexicographically lowest (node, position) id so
    the walk is fully deterministic.
    """
    scored = []
    for i, j, question in graph.questions():
        scored.append((cosine(prompt_emb, question.embedding), i, j, question.text))
    scored.sort(key=lambda item: (-item[0], item[1], item[2]))
    return scored


def _base_ranking(graph: GemGraph, prompt_emb, kinds) -> list[tuple[float, int]]:
    scored = [
        (cosine(prompt_emb, node.base_embedding), i)
        for i, node in enumerate(graph.nodes)
        if node.kind in kinds
    ]
    scored.sort(key=lambda item: (-item[0], item[1]))
    return scored


def _greedy(graph: GemGraph, prompt_emb, budget: int) -> RetrievalResult:
    result = RetrievalResult(
        node_ids=[], matched_questions=[], scores=[], strategy=GEM_GREEDY
    )
    if graph.m == 0:
        return _baseline(graph, prompt_emb, budget, kinds=(CHUNK, SUMMARY),
                         strategy=GEM_GREEDY)
    chosen: set[int] = set()
    for score, i, j, text in _ranked_questions(graph, prompt_emb):
        if len(result.node_ids) >= budget:
            break
        node_id = graph.nodes[i].id
        if i in chosen:
            result.trace.append(
                {"node_id": node_id, "question": text, "score": score,
                 "action": SKIPPED_DUPLICATE}
            )
            continue
        chosen.add(i)
        result.node_ids.append(node_id)
        result.scores.append(score)
        result.matched_questions.append(
            {"node_id": node_id, "question": text, "score": score}
        )
        result.trace.append(
            {"node_id": node_id, "question": text, "score": score, "action": ACCEPTED}
        )
    result.truncated = len(result.node_ids) < budget
    return result


def _best_questions(graph: GemGraph, prompt_emb) -> list[tuple[float, int, str]]:
    """Per node index: (best question score, position, text)."""
    best: dict[int, tuple[float, int, str]] = {}
    for i, j, question in graph.questions():
        score = cosine(prompt_emb, question.embedding)
        current = best.get(i)
        if current is None or score > current[0]:
            best[i] = (score, j, question.text)
    return [best[i] for i in range(graph.n)]


def _best_first(
    graph: GemGraph, prompt_emb, budget: int, alpha: float
) -> RetrievalResult:
    result = RetrievalResult(
        node_ids=[], matched_questions=[], scores=[], strategy=GEM_BEST_FIRST
    )
    if graph.m == 0:
        return _baseline(graph, prompt_emb, budget, kinds=(CHUNK, SUMMARY),
                         strategy=GEM_BEST_FIRST)
    best = _best_questions(graph, prompt_emb)

    def admit(i: int, priority: float) -> None:
        node = graph.nodes[i]
        score, _, text = best[i]
        result.node_ids.append(node.id)
        result.scores.append(priority)
        result.matched_questions.append(
            {"node_id": node.id, "question": text, "score": score}
        )
        result.trace.append(
            {"node_id": node.id, "question": text, "score": priority,
             "action": ACCEPTED}
        )

    seed = min(range(graph.n), key=lambda i: (-best[i][0], i, best[i][1]))
    admit(seed, best[seed][0])
    chosen = {seed}
    frontier = [i for i in range(graph.n) if i != seed]
    while frontier and len(result.node_ids) < budget:
        # max edge weight into the selected set, blended with question score
        def priority(i: int) -> float:
            edge = max(graph.S[i][c] for c in chosen)
            return alpha * edge + (1.0 - alpha) * best[i][0]

        pick = min(frontier, key=lambda i: (-priority(i), i))
        admit(pick, priority(pick))
        chosen.add(pick)
        frontier.remove(pick)
    result.truncated = len(result.node_ids) < budget
    return result


def _baseline(
    graph: GemGraph,
    prompt_emb,
    budget: int,
    kinds=(CHUNK,),
    strategy: str = EMBED_BASELINE,
) -> RetrievalResult:
    result = RetrievalResult(
        node_ids=[], matched_questions=[], scores=[], strategy=strategy
    )
    for score, i in _base_ranking(graph, prompt_emb, kinds):
        if len(result.node_ids) >= budget:
            break
        node_id = graph.nodes[i].id
        result.node_ids.append(node_id)
        result.scores.append(score)
        result.matched_questions.append(
            {"node_id": node_id, "question": None, "score": score}
        )
        result.trace.append(
            {"node_id": node_id, "question": None, "score": score, "action": ACCEPTED}
        )
    result.truncated = len(result.node_ids) < budget
    return result


def retrieve(
    graph: GemGraph,
    prompt: str,
    config: RetrievalConfig,
    embedder: Embedder,
) -> RetrievalResult:
    """Select up to budget_nodes context nodes for the prompt.

    The result is deterministic for a fixed graph, prompt and config;
    when the budget exceeds the eligible node count the result carries
    every eligible node and the truncated flag.
    """
    prompt_emb = embedder.embed([prompt])[0]
    if config.strategy == GEM_GREEDY:
        return _greedy(graph, prompt_emb, config.budget_nodes)
    if config.strategy == GEM_BEST_FIRST:
        return _best_first(graph, prompt_emb, config.budget_nodes, config.edge_bias)
    return _baseline(graph, prompt_emb, config.budget_nodes)


def source_marker(rank: int, kind: str, source: int) -> str:
    label = "chunk" if kind == CHUNK else "summary"
    return f"[source {rank}: {label} {source}]"


def assemble_context(
    graph: GemGraph, result: RetrievalResult, max_tokens: int | None = None
) -> str:
    """Concatenate selected node texts with per-node citation markers.

    Node order is selection order; each block is prefixed with
    ``[source k: chunk i]`` or ``[source k: summary j]`` (k 1-based).
    ``max_tokens`` caps the total content tokens (markers excluded) by
    truncating the overflowing node and dropping the rest.
    """
    by_id = {node.id: node for node in graph.nodes}
    blocks = []
    used = 0
    for rank, node_id in enumerate(result.node_ids, start=1):
        node = by_id.get(node_id)
        if node is None:
            raise ValueError(f"retrieval result references unknown node {node_id}")
        text = node.text
        if max_tokens is not None:
            remaining = max_tokens - used
            if remaining <= 0:
                break
            if token_count(text) > remaining:
                text = truncate_tokens(text, remaining)
            if not text:
                break
        used += token_count(text)
        blocks.append(f"{source_marker(rank, node.kind, node.source)}\n{text}")
    return "\n\n".join(blocks)
