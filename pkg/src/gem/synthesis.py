"""Eigentheme summary nodes and the k-means grouping alternative.

Each leading eigenvector of the graph Laplacian names a theme; the
largest-magnitude components of that vector pick the member chunks, a
generator condenses them into a summary text, and the summary joins the
graph as a first-class node with its own utility questions.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .graph import CHUNK, SUMMARY, GemGraph, MemoryNode, build_graph, build_node
from .providers import Embedder, Generator
from .spectral import SpectralReport, top_components

EIGEN = "eigen"
KMEANS = "kmeans"

KMEANS_MAX_ITER = 200
KMEANS_MOVE_TOL = 1e-6


@dataclass(frozen=True)
class ThemeSpec:
    """One theme: which chunk nodes belong to it and how it was derived."""

    theme_index: int
    member_ids: tuple[int, ...]
    strategy: str

    def __post_init__(self) -> None:
        if not self.member_ids:
            raise ValueError("theme must have at least one member")
        if self.strategy not in (EIGEN, KMEANS):
            raise ValueError(f"unknown theme strategy {self.strategy!r}")

    def to_dict(self) -> dict:
        return {
            "theme_index": self.theme_index,
            "member_ids": list(self.member_ids),
            "strategy": self.strategy,
        }


def eigen_themes(
    graph: GemGraph,
    report: SpectralReport,
    num_components: int,
    e: int,
    skip_top: bool = False,
) -> list[ThemeSpec]:
    """Pick top-e member nodes for each of the leading eigenvectors.

    With skip_top the all-positive leading eigenvector is passed over and
    the next num_components eigenvectors are used instead.
    """
    n = graph.n
    if not 0 <= num_components <= n:
        raise ValueError(f"num_components must be in [0, {n}], got {num_components}")
    offset = 1 if skip_top else 0
    if num_components and num_components + offset > report.eigenvectors.shape[1]:
        raise ValueError("not enough eigenvectors for the requested themes")
    themes = []
    for k in range(num_components):
        vector = report.eigenvectors[:, k + offset]
        members = tuple(graph.nodes[i].id for i in top_components(vector, e))
        themes.append(ThemeSpec(theme_index=k, member_ids=members, strategy=EIGEN))
    return themes


def kmeans_groups(graph: GemGraph, k: int, seed: int = 0) -> list[ThemeSpec]:
    """Partition chunk nodes by Lloyd's iteration over base embeddings.

    Centers start at k distinct nodes drawn by a seeded uniform sample, so
    the partition is reproducible for a fixed seed. Ties in assignment go
    to the lowest center index.
    """
    chunk_nodes = [node for node in graph.nodes if node.kind == CHUNK]
    n = len(chunk_nodes)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    points = np.array([node.base_embedding.values for node in chunk_nodes])
    rng = random.Random(seed)
    centers = points[rng.sample(range(n), k)].copy()

    assignment = np.zeros(n, dtype=int)
    for _ in range(KMEANS_MAX_ITER):
        # argmin returns the lowest index on ties
        distances = np.linalg.norm(points[:, None, :] - centers[None, :, :], axis=2)
        assignment = np.argmin(distances, axis=1)
        new_centers = centers.copy()
        for j in range(k):
            members = points[assignment == j]
            if len(members):
                new_centers[j] = members.mean(axis=0)
        movement = float(np.linalg.norm(new_centers - centers))
        centers = new_centers
        if movement < KMEANS_MOVE_TOL:
            break

    groups: list[list[int]] = [
        [i for i in range(n) if assignment[i] == j] for j in range(k)
    ]
    # Repopulate any emptied cluster (possible with duplicate points) by
    # stealing the farthest member of the largest group; keeps exactly k
    # disjoint non-empty groups covering every chunk node.
    for j in range(k):
        while not groups[j]:
            donor = max(range(k), key=lambda g: (len(groups[g]), -g))
            center = points[groups[donor]].mean(axis=0)
            steal = max(
                groups[donor],
                key=lambda i: (float(np.linalg.norm(points[i] - center)), -i),
            )
            groups[donor].remove(steal)
            groups[j].append(steal)

    return [
        ThemeSpec(
            theme_index=j,
            member_ids=tuple(chunk_nodes[i].id for i in groups[j]),
            strategy=KMEANS,
        )
        for j in range(k)
    ]


def attach_summaries(
    graph: GemGraph,
    themes: list[ThemeSpec],
    m: int,
    embedder: Embedder,
    generator: Generator,
    summary_tokens: int,
) -> GemGraph:
    """Summarize each theme into a new node and rebuild the full graph.

    The input graph is never mutated; provider failures propagate before
    any new value is produced. Member texts feed the summarizer in chunk
    order regardless of how the theme ranked them.
    """
    if not themes:
        return graph
    by_id = {node.id: node for node in graph.nodes}
    next_id = max(by_id) + 1
    new_nodes = list(graph.nodes)
    for theme in themes:
        members = [by_id[i] for i in theme.member_ids]
        for member in members:
            if member.kind != CHUNK:
                raise ValueError(
                    f"theme {theme.theme_index} includes non-chunk node {member.id}"
                )
        members.sort(key=lambda node: node.source)
        summary_text = generator.summarize(
            [node.text for node in members], max_tokens=summary_tokens
        )
        new_nodes.append(
            build_node(
                summary_text,
                id=next_id,
                kind=SUMMARY,
                m=m,
                embedder=embedder,
                generator=generator,
                source=theme.theme_index,
            )
        )
        next_id += 1
    meta = dict(graph.build_meta)
    meta["themes"] = [theme.to_dict() for theme in themes]
    return build_graph(new_nodes, build_meta=meta)


def build_summary_nodes(
    graph: GemGraph,
    report: SpectralReport,
    num_components: int,
    e: int,
    m: int,
    embedder: Embedder,
    generator: Generator,
    summary_tokens: int,
    skip_top: bool = False,
) -> GemGraph:
    """Eigen path: derive themes from the report and attach their summaries."""
    if num_components == 0:
        return graph
    themes = eigen_themes(graph, report, num_components, e, skip_top=skip_top)
    return attach_summaries(graph, themes, m, embedder, generator, summary_tokens)
