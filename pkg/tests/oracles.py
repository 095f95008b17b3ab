"""Independent reference implementations used only by the test suite.

The eigensolver is a hand-rolled cyclic Jacobi rotation method so the
production decomposition is checked against arithmetic that shares no
code with it. The retrieval oracle implements the selection rule as a
literal repeated argmax scan (no sorting, no early dedup); it shares only
the scalar cosine primitive with the production code, on purpose, so both
sides score candidates with bit-identical numbers.
"""

from __future__ import annotations

import math

import numpy as np

from gem.graph import GemGraph, cosine


def jacobi_eigh(matrix, tol: float = 1e-14, max_sweeps: int = 200):
    """Eigenvalues and eigenvectors of a symmetric matrix by Jacobi rotations.

    Returns (values ascending, vectors with column k matching values[k]).
    """
    A = np.array(matrix, dtype=np.float64, copy=True)
    n = A.shape[0]
    V = np.eye(n)
    for _ in range(max_sweeps):
        off = math.sqrt(sum(A[p, q] ** 2 for p in range(n) for q in range(n) if p != q))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(A[p, q]) < tol / max(n, 1):
                    continue
                # rotation angle zeroing A[p, q]
                theta = (A[q, q] - A[p, p]) / (2.0 * A[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot_p = A[:, p] * c - A[:, q] * s
                rot_q = A[:, p] * s + A[:, q] * c
                A[:, p], A[:, q] = rot_p, rot_q
                rot_p = A[p, :] * c - A[q, :] * s
                rot_q = A[p, :] * s + A[q, :] * c
                A[p, :], A[q, :] = rot_p, rot_q
                rot_p = V[:, p] * c - V[:, q] * s
                rot_q = V[:, p] * s + V[:, q] * c
                V[:, p], V[:, q] = rot_p, rot_q
    values = np.diag(A).copy()
    order = np.argsort(values)
    return values[order], V[:, order]


def literal_greedy(graph: GemGraph, prompt_embedding, budget: int) -> list[int]:
    """Selection by repeated argmax over the not-yet-consumed questions.

    Questions whose parent is already selected are consumed without
    effect; ties prefer the lexicographically lowest (node, position).
    """
    remaining = {
        (i, j): cosine(prompt_embedding, q.embedding)
        for i, j, q in graph.questions()
    }
    selected: list[int] = []
    selected_indices: set[int] = set()
    while len(selected) < budget and remaining:
        best_key = None
        best_score = -math.inf
        for key in remaining:
            score = remaining[key]
            if score > best_score or (score == best_score and key < best_key):
                best_key, best_score = key, score
        del remaining[best_key]
        node_index = best_key[0]
        if node_index not in selected_indices:
            selected_indices.add(node_index)
            selected.append(graph.nodes[node_index].id)
    return selected


def literal_base_ranking(graph: GemGraph, prompt_embedding, budget: int,
                         kinds) -> list[int]:
    """Repeated argmax over base embeddings, restricted to the given kinds."""
    remaining = {
        i: cosine(prompt_embedding, node.base_embedding)
        for i, node in enumerate(graph.nodes)
        if node.kind in kinds
    }
    out: list[int] = []
    while len(out) < budget and remaining:
        best = None
        for i, score in remaining.items():
            if best is None or score > remaining[best] or (
                score == remaining[best] and i < best
            ):
                best = i
        del remaining[best]
        out.append(graph.nodes[best].id)
    return out
