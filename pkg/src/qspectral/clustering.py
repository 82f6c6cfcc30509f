"""Lloyd's k-means, its delta-noisy q-means emulation, and clustering diagnostics."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from qspectral.noise import bounded_uniform, keyed_rng, uniform_in_ball


@dataclass(frozen=True)
class ClusteringConfig:
    k: int
    delta: float = 0.0
    max_iters: int = 100
    tol: float = 1e-4
    init: str = "kmeans++"
    seed: int = 0
    initial_centroids: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.init not in ("kmeans++", "provided"):
            raise ValueError("init must be 'kmeans++' or 'provided'")
        if self.init == "provided" and self.initial_centroids is None:
            raise ValueError("init='provided' needs initial_centroids")


@dataclass
class ClusteringResult:
    centroids: np.ndarray
    labels: np.ndarray
    iterations_used: int
    converged: bool
    inertia: float
    inertia_history: list = field(default_factory=list)
    max_centroid_error: float = 0.0

    def to_dict(self) -> dict:
        return {
            "centroids": self.centroids.tolist(),
            "labels": self.labels.tolist(),
            "iterations": self.iterations_used,
            "converged": self.converged,
            "inertia": self.inertia,
        }


def sq_distances(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    # explicit differences rather than the |x|^2 - 2x.c + |c|^2 expansion: exact zeros, no BLAS
    out = np.zeros((X.shape[0], C.shape[0]))
    for j in range(X.shape[1]):
        out += (X[:, j, None] - C[None, :, j]) ** 2
    return out


def kmeanspp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """D^2-sampling seeding.  Falls back to uniform picks among unchosen points when all D^2 vanish."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if n < k:
        raise ValueError(f"need n >= k, got n={n}, k={k}")
    chosen = [int(rng.integers(n))]
    d2 = sq_distances(X, X[chosen])[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            rest = np.setdiff1d(np.arange(n), chosen)
            nxt = int(rng.choice(rest))
        chosen.append(nxt)
        d2 = np.minimum(d2, sq_distances(X, X[[nxt]])[:, 0])
    return X[chosen].copy()


def _initial_centroids(X: np.ndarray, cfg: ClusteringConfig) -> np.ndarray:
    if cfg.init == "provided":
        C = np.array(cfg.initial_centroids, dtype=float)
        if C.shape != (cfg.k, X.shape[1]):
            raise ValueError(f"initial_centroids must have shape {(cfg.k, X.shape[1])}")
        return C
    return kmeanspp_init(X, cfg.k, keyed_rng(cfg.seed, "kmeans++"))


def _means(X, labels, centroids, k):
    new = np.empty_like(centroids)
    empty = []
    for j in range(k):
        members = labels == j
        if members.any():
            new[j] = X[members].mean(axis=0)
        else:
            empty.append(j)
    if empty:
        # reseed each empty cluster at the point farthest from its own centroid
        own = sq_distances(X, centroids)[np.arange(X.shape[0]), labels]
        taken = set()
        for j in empty:
            for idx in np.argsort(-own, kind="stable"):
                if idx not in taken:
                    taken.add(int(idx))
                    new[j] = X[idx]
                    break
    return new


def _inertia(X, centroids):
    return float(sq_distances(X, centroids).min(axis=1).sum())


def _lloyd(X: np.ndarray, cfg: ClusteringConfig, noisy: bool) -> ClusteringResult:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    n, dim = X.shape
    if n < cfg.k:
        raise ValueError(f"need n >= k, got n={n}, k={cfg.k}")
    centroids = _initial_centroids(X, cfg)
    means = centroids
    history = []
    converged = False
    worst = 0.0
    it = 0
    for it in range(1, cfg.max_iters + 1):
        d2 = sq_distances(X, centroids)
        if noisy:
            d2 = d2 + bounded_uniform(keyed_rng(cfg.seed, "qmeans-dist", (it,)), cfg.delta, d2.shape)
        labels = np.argmin(d2, axis=1)
        new_means = _means(X, labels, centroids, cfg.k)
        movement = float(np.max(np.linalg.norm(new_means - means, axis=1)))
        if noisy:
            err = uniform_in_ball(keyed_rng(cfg.seed, "qmeans-centroid", (it,)), cfg.delta, cfg.k, dim)
            worst = max(worst, float(np.max(np.linalg.norm(err, axis=1))))
            assert worst <= cfg.delta
            new_centroids = new_means + err
        else:
            new_centroids = new_means
        means = new_means
        centroids = new_centroids
        history.append(_inertia(X, centroids))
        if movement < cfg.tol:
            converged = True
            break
    labels = np.argmin(sq_distances(X, centroids), axis=1)
    return ClusteringResult(
        centroids=centroids,
        labels=labels,
        iterations_used=it,
        converged=converged,
        inertia=_inertia(X, centroids),
        inertia_history=history,
        max_centroid_error=worst,
    )


def kmeans(X: np.ndarray, cfg: ClusteringConfig) -> ClusteringResult:
    """Lloyd iterations with exact distances; ``cfg.delta`` is ignored.

    Stops when no centroid moves by ``tol`` or more, or after ``max_iters``.
    """
    return _lloyd(X, cfg, noisy=False)


def qmeans(X: np.ndarray, cfg: ClusteringConfig) -> ClusteringResult:
    """Noisy Lloyd iterations emulating q-means at precision ``cfg.delta``.

    Each iteration assigns points using squared distances perturbed by
    independent errors in ``[-delta, delta]`` per (point, centroid), then
    moves every updated centroid by a point drawn uniformly from the
    ``delta``-ball.  Convergence is judged on the unperturbed cluster means.
    The final labels use exact distances to the final centroids.  With
    ``delta == 0`` the result equals :func:`kmeans` for the same seed.
    """
    return _lloyd(X, cfg, noisy=cfg.delta > 0)


@dataclass
class WellClusterabilityReport:
    separation_ok: bool
    proximity_ok: bool
    intra_inter_ok: bool
    min_separation: float
    points_within_beta: int
    required_points: float
    lhs: float
    rhs: float

    @property
    def well_clusterable(self) -> bool:
        return self.separation_ok and self.proximity_ok and self.intra_inter_ok

    def to_dict(self) -> dict:
        return {**self.__dict__, "well_clusterable": self.well_clusterable}


def check_well_clusterable(
    X: np.ndarray,
    centroids: np.ndarray,
    xi: float,
    beta: float,
    lambda_frac: float,
    eta_bound: float,
) -> WellClusterabilityReport:
    """Evaluate the three well-clusterability conditions for given constants.

    1. every pair of centroids is at least ``xi`` apart;
    2. at least ``lambda_frac * n`` points lie within ``beta`` of their nearest centroid;
    3. ``4 sqrt(eta) sqrt(lambda beta^2 + (1 - lambda) 4 eta) <= xi^2 - 2 sqrt(eta) beta``.
    """
    X = np.asarray(X, dtype=float)
    C = np.asarray(centroids, dtype=float)
    k = C.shape[0]
    if k > 1:
        sep = np.sqrt(sq_distances(C, C))[np.triu_indices(k, 1)]
        min_sep = float(sep.min())
    else:
        min_sep = float("inf")
    nearest = np.sqrt(sq_distances(X, C).min(axis=1))
    within = int(np.sum(nearest <= beta))
    required = lambda_frac * X.shape[0]
    se = np.sqrt(eta_bound)
    lhs = float(4 * se * np.sqrt(lambda_frac * beta**2 + (1 - lambda_frac) * 4 * eta_bound))
    rhs = float(xi**2 - 2 * se * beta)
    return WellClusterabilityReport(
        separation_ok=min_sep >= xi,
        proximity_ok=within >= required,
        intra_inter_ok=lhs <= rhs,
        min_separation=min_sep,
        points_within_beta=within,
        required_points=required,
        lhs=lhs,
        rhs=rhs,
    )


def clustering_accuracy(labels, ground_truth) -> float:
    """Best agreement between predicted and true labels over renamings of the predicted labels."""
    labels = np.asarray(labels)
    truth = np.asarray(ground_truth)
    if labels.shape != truth.shape:
        raise ValueError(f"length mismatch: {labels.shape} vs {truth.shape}")
    n = labels.size
    if n == 0:
        raise ValueError("empty labelling")
    pred_ids, pred = np.unique(labels, return_inverse=True)
    true_ids, true = np.unique(truth, return_inverse=True)
    size = max(pred_ids.size, true_ids.size)
    counts = np.zeros((size, size), dtype=np.int64)
    np.add.at(counts, (pred, true), 1)
    if size <= 8:
        best = max(counts[np.arange(size), list(perm)].sum() for perm in itertools.permutations(range(size)))
    else:
        r, c = linear_sum_assignment(-counts)
        best = counts[r, c].sum()
    return float(best) / n
