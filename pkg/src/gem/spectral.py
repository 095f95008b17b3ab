"""Normalized Laplacian spectrum of the similarity graph.

The Laplacian variant is L = D^{-1/2} (S - I) D^{-1/2} where D holds the
off-diagonal row sums of S. Its eigenvalues live in [-1, 1], sum to zero,
and the count of near-1 eigenvalues tracks the number of strong themes;
those facts drive theme estimation and summary-node synthesis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEGREE_EPS = 1e-12
DEFAULT_CUTOFF = 0.5
DEFAULT_BETA_CLOSE = 0.7

# Residual bound per eigenpair, scaled by n at the call site.
RESIDUAL_TOL = 1e-8


class IsolatedNodeError(ValueError):
    """A node has (near-)zero total edge weight, so D^{-1/2} blows up."""

    def __init__(self, node_index: int, degree: float):
        super().__init__(
            f"node {node_index} is isolated (off-diagonal weight sum {degree:.3e})"
        )
        self.node_index = node_index
        self.degree = degree


class DecompositionError(RuntimeError):
    """The eigensolver failed to produce a valid eigensystem."""

    def __init__(self, message: str, residual: float | None = None):
        if residual is not None:
            message = f"{message} (residual norm {residual:.3e})"
        super().__init__(message)
        self.residual = residual


@dataclass
class SpectralReport:
    """Full eigensystem plus the spectrum diagnostics.

    Eigenvalues are sorted by non-increasing magnitude (ties: larger
    signed value first, then original solver index); eigenvector column k
    pairs with eigenvalue k. ``ratios`` holds beta_i = lambda_i / lambda_1
    for i >= 2.
    """

    eigenvalues: list[float]
    eigenvectors: np.ndarray
    ratios: list[float]
    theme_count: int
    distinctness: float
    cutoff: float
    beta_close: float = DEFAULT_BETA_CLOSE
    signed_eigenvalues: list[float] = field(default_factory=list)

    def to_dict(self, include_vectors: bool = False) -> dict:
        out = {
            "eigenvalues": self.eigenvalues,
            "ratios": self.ratios,
            "theme_count": self.theme_count,
            "distinctness": self.distinctness,
            "cutoff": self.cutoff,
            "beta_close": self.beta_close,
            "signed_eigenvalues": self.signed_eigenvalues,
        }
        if include_vectors:
            out["eigenvectors"] = self.eigenvectors.tolist()
        return out


def laplacian(S: np.ndarray) -> np.ndarray:
    """Degree-normalized similarity Laplacian of a unit-diagonal S."""
    S = np.asarray(S, dtype=np.float64)
    n = S.shape[0]
    if S.ndim != 2 or S.shape[1] != n:
        raise ValueError(f"S must be square, got shape {S.shape}")
    if np.max(np.abs(S - S.T), initial=0.0) > 1e-9:
        raise ValueError("S must be symmetric")
    A = S - np.eye(n)
    degrees = A.sum(axis=1)
    for i, d in enumerate(degrees):
        if d <= DEGREE_EPS:
            raise IsolatedNodeError(i, float(d))
    inv_sqrt = 1.0 / np.sqrt(degrees)
    L = inv_sqrt[:, None] * A * inv_sqrt[None, :]
    return (L + L.T) / 2.0


def _magnitude_order(eigenvalues: np.ndarray) -> list[int]:
    return sorted(
        range(len(eigenvalues)),
        key=lambda i: (-abs(eigenvalues[i]), -eigenvalues[i], i),
    )


def decompose(
    L: np.ndarray,
    c: float = DEFAULT_CUTOFF,
    beta_close: float = DEFAULT_BETA_CLOSE,
) -> SpectralReport:
    """Full symmetric eigendecomposition, magnitude-sorted, with diagnostics."""
    L = np.asarray(L, dtype=np.float64)
    n = L.shape[0]
    if L.ndim != 2 or L.shape[1] != n:
        raise ValueError(f"L must be square, got shape {L.shape}")
    if np.max(np.abs(L - L.T), initial=0.0) > 1e-9:
        raise ValueError("L must be symmetric")
    try:
        values, vectors = np.linalg.eigh(L)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(f"eigensolver did not converge: {exc}") from exc

    residual = float(np.linalg.norm(L @ vectors - vectors * values, ord=2))
    if residual > RESIDUAL_TOL * max(n, 1):
        raise DecompositionError("eigenpairs fail the residual check", residual)

    order = _magnitude_order(values)
    values_sorted = [float(values[i]) for i in order]
    vectors_sorted = vectors[:, order]
    lam1 = values_sorted[0]
    ratios = [v / lam1 for v in values_sorted[1:]] if lam1 != 0.0 else []
    return SpectralReport(
        eigenvalues=values_sorted,
        eigenvectors=vectors_sorted,
        ratios=ratios,
        theme_count=estimate_themes(values_sorted, c, beta_close),
        distinctness=distinctness(values_sorted),
        cutoff=c,
        beta_close=beta_close,
        signed_eigenvalues=sorted((float(v) for v in values), reverse=True),
    )


def estimate_themes(
    eigenvalues: list[float],
    c: float = DEFAULT_CUTOFF,
    beta_close: float = DEFAULT_BETA_CLOSE,
) -> int:
    """Count essential themes via the first significant ratio gap.

    Returns the smallest d >= 2 whose ratio is at least beta_close and
    drops by more than c to the next ratio; 1 when no such gap exists.
    """
    n = len(eigenvalues)
    if n == 0:
        raise ValueError("eigenvalues must be non-empty")
    lam1 = eigenvalues[0]
    if lam1 <= 0.0:
        raise ValueError(f"leading eigenvalue must be positive, got {lam1}")
    for d in range(2, n):
        beta_d = eigenvalues[d - 1] / lam1
        beta_next = eigenvalues[d] / lam1
        if beta_d >= beta_close and beta_d - beta_next > c:
            return d
    return 1


def distinctness(eigenvalues: list[float]) -> float:
    """Sum of squared eigenvalues; higher means sharper theme structure."""
    return float(sum(v * v for v in eigenvalues))


def top_components(eigenvector: np.ndarray, e: int) -> list[int]:
    """Indices of the e largest-magnitude entries, descending, ties by index."""
    x = np.asarray(eigenvector, dtype=np.float64).ravel()
    n = x.shape[0]
    if not 1 <= e <= n:
        raise ValueError(f"e must be in [1, {n}], got {e}")
    order = sorted(range(n), key=lambda i: (-abs(x[i]), i))
    return order[:e]
