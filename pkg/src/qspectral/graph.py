"""Similarity graph, signed incidence matrix and the normalized Laplacian.

The incidence matrix ``B`` has one row per node and one column per unordered
pair ``(p, q)``, ``p < q``, in lexicographic order.  Entry ``B[i, (p, q)]`` is
``+a_pq`` when ``i == p``, ``-a_pq`` when ``i == q`` and 0 otherwise; with
``eps_B > 0`` every zero entry is replaced by ``+eps_B``.  The normalized
Laplacian is the Gram matrix of the unit-normalized rows of ``B``.  It is
computed in closed form from degrees and signed degree counts, since ``B``
becomes fully dense once its zeros are replaced.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from qspectral.datasets import DataMatrix
from qspectral.noise import NoiseProfile, bounded_uniform, keyed_rng

MATERIALIZE_LIMIT = 10**7


@dataclass(frozen=True)
class SimilarityGraph:
    """Threshold graph on ``n`` nodes; ``edges`` lists pairs ``p < q`` lexicographically."""

    adjacency: np.ndarray
    d_min: float

    def __post_init__(self):
        A = np.array(self.adjacency, dtype=np.int8)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("adjacency must be square")
        if np.any((A != 0) & (A != 1)):
            raise ValueError("adjacency must be 0/1")
        if np.any(A != A.T) or np.any(np.diag(A)):
            raise ValueError("adjacency must be symmetric with zero diagonal")
        A.setflags(write=False)
        object.__setattr__(self, "adjacency", A)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1, dtype=np.int64)

    @property
    def edges(self) -> np.ndarray:
        p, q = np.nonzero(np.triu(self.adjacency, 1))
        return np.column_stack([p, q]).astype(np.int64)

    @property
    def m(self) -> int:
        return int(self.degrees.sum() // 2)

    @property
    def signed_degrees(self) -> np.ndarray:
        """Row sums of ``B`` without the eps_B substitute: (#neighbours above i) - (#neighbours below i)."""
        upper = np.triu(self.adjacency, 1).sum(axis=1, dtype=np.int64)
        lower = np.tril(self.adjacency, -1).sum(axis=1, dtype=np.int64)
        return upper - lower

    def n_components(self) -> int:
        from scipy.sparse.csgraph import connected_components

        return int(connected_components(self.adjacency, directed=False)[0])

    def write_edge_list(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w") as fh:
            for p, q in self.edges:
                fh.write(f"{p} {q}\n")
        return path


@dataclass(frozen=True)
class IncidenceView:
    """Implicit incidence matrix of ``graph`` with zeros replaced by ``eps_B``."""

    graph: SimilarityGraph
    eps_B: float = 0.0

    def __post_init__(self):
        if self.eps_B < 0:
            raise ValueError("eps_B must be >= 0")

    @property
    def n_columns(self) -> int:
        n = self.graph.n
        return n * (n - 1) // 2

    @property
    def column_order(self) -> np.ndarray:
        """All pairs ``(p, q)``, ``p < q``, in the column order of ``B``."""
        p, q = np.triu_indices(self.graph.n, 1)
        return np.column_stack([p, q])

    def row_sq_norms(self) -> np.ndarray:
        deg = self.graph.degrees.astype(float)
        return deg + (self.n_columns - deg) * self.eps_B**2


def pairwise_sq_distances(points: np.ndarray) -> np.ndarray:
    # coordinate-wise accumulation keeps the result bit-identical regardless of BLAS threading
    n = points.shape[0]
    out = np.zeros((n, n))
    for j in range(points.shape[1]):
        col = points[:, j]
        out += (col[:, None] - col[None, :]) ** 2
    return out


def estimate_sq_distance(s_p, s_q, eps_dist: float, rng: np.random.Generator) -> float:
    """Squared Euclidean distance with additive error drawn uniformly from ``[-eps_dist, eps_dist]``."""
    diff = np.asarray(s_p, dtype=float) - np.asarray(s_q, dtype=float)
    return float(diff @ diff) + bounded_uniform(rng, eps_dist)


def _pair_noise_row(seed: int, n: int, p: int, eps: float) -> np.ndarray:
    # one stream per row p; entry q-p-1 is the draw for pair (p, q)
    return bounded_uniform(keyed_rng(seed, "dist", (p,)), eps, n - p - 1)


def distance_noise(n: int, eps_dist: float, seed: int, workers: int = 1) -> np.ndarray:
    """Symmetric matrix of per-pair distance errors; zero diagonal."""
    noise = np.zeros((n, n))
    if eps_dist == 0:
        return noise

    def fill(p):
        noise[p, p + 1 :] = _pair_noise_row(seed, n, p, eps_dist)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(fill, range(n - 1)))
    else:
        for p in range(n - 1):
            fill(p)
    return noise + noise.T


def build_adjacency(
    S: DataMatrix,
    d_min: float,
    noise: Optional[NoiseProfile] = None,
    workers: int = 1,
) -> SimilarityGraph:
    """Connect ``p`` and ``q`` when the (possibly noisy) squared distance is at most ``d_min**2``.

    In quantum mode each unordered pair gets a single error draw keyed by
    ``(seed, p)`` and the position of ``q``, so the result does not depend on
    ``workers``.
    """
    if d_min <= 0:
        raise ValueError("d_min must be > 0")
    d2 = pairwise_sq_distances(S.points)
    if noise is not None and noise.eps_dist > 0:
        d2 = d2 + distance_noise(S.n, noise.eps_dist, noise.seed, workers)
    A = (d2 <= d_min**2).astype(np.int8)
    np.fill_diagonal(A, 0)
    return SimilarityGraph(A, float(d_min))


def incidence_row(view: IncidenceView, i: int) -> np.ndarray:
    """Materialize row ``i`` of ``B`` (test oracles and small graphs only)."""
    n = view.graph.n
    if not 0 <= i < n:
        raise IndexError(f"node {i} out of range for n={n}")
    if view.n_columns > MATERIALIZE_LIMIT:
        raise ValueError(f"refusing to materialize {view.n_columns} columns (limit {MATERIALIZE_LIMIT})")
    p, q = np.triu_indices(n, 1)
    a = view.graph.adjacency[p, q].astype(float)
    row = np.where(p == i, a, 0.0) - np.where(q == i, a, 0.0)
    if view.eps_B > 0:
        row[row == 0] = view.eps_B
    return row


def materialize_incidence(view: IncidenceView, normalized: bool = False) -> np.ndarray:
    B = np.vstack([incidence_row(view, i) for i in range(view.graph.n)])
    if normalized:
        norms = np.linalg.norm(B, axis=1, keepdims=True)
        if np.any(norms == 0):
            raise ValueError("cannot normalize zero rows")
        B = B / norms
    return B


def incidence_gram(view: IncidenceView) -> np.ndarray:
    """``B @ B.T`` without forming ``B``.

    For ``i != j`` the columns split into the pair ``(i, j)`` itself, the
    ``n - 2`` columns touching only ``i``, the ``n - 2`` touching only ``j``
    and the ``(n-2)(n-3)/2`` touching neither.  The sign terms of the column
    ``(i, j)`` cancel between the two single-node groups, which leaves

        -a_ij + (1 - a_ij) e^2 + e (t_i + t_j)
        + e^2 (2(n-2) - deg_i - deg_j + 2 a_ij + (n-2)(n-3)/2)

    where ``t`` is the signed degree and ``e = eps_B``.
    """
    g = view.graph
    n = g.n
    e = float(view.eps_B)
    A = g.adjacency.astype(float)
    deg = g.degrees.astype(float)
    t = g.signed_degrees.astype(float)
    G = -A
    if e > 0:
        G = G + (1.0 - A) * e**2
        G = G + e * (t[:, None] + t[None, :])
        G = G + e**2 * (2 * (n - 2) - (deg[:, None] + deg[None, :]) + 2 * A + (n - 2) * (n - 3) / 2)
    np.fill_diagonal(G, view.row_sq_norms())
    return G


def normalized_laplacian(view: IncidenceView) -> np.ndarray:
    """Gram matrix of the unit-normalized incidence rows (unit diagonal, PSD)."""
    sq = view.row_sq_norms()
    if np.any(sq <= 0):
        isolated = np.flatnonzero(sq <= 0).tolist()
        raise ValueError(f"isolated nodes {isolated} have zero incidence rows; use eps_B > 0")
    inv = 1.0 / np.sqrt(sq)
    L = incidence_gram(view) * np.outer(inv, inv)
    np.fill_diagonal(L, 1.0)
    return L
