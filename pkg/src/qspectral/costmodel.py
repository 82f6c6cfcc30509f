"""Data parameters (mu, eta, kappa) and the classical/quantum step-count models.

Costs are dimensionless step counts with unit constants unless overridden.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from qspectral.graph import IncidenceView

CSV_FIELDS = (
    "n", "d", "k", "m", "mu", "eta_S", "eta_Lk", "kappa_Lk",
    "classical_cost", "quantum_cost", "accuracy", "seed",
)


def _pow(x: np.ndarray, r: float) -> np.ndarray:
    # |x|^r with 0^0 = 0, so that r = 0 counts nonzero entries
    ax = np.abs(np.asarray(x, dtype=float))
    out = np.zeros_like(ax)
    nz = ax > 0
    out[nz] = ax[nz] ** r
    return out


def _s(M: np.ndarray, r: float) -> float:
    """max_i ||M_i||_r^r over rows."""
    return float(_pow(M, r).sum(axis=1).max())


def _minimize_on_unit_interval(f, step: float = 0.05, tol: float = 1e-6) -> tuple[float, float]:
    """Grid search on [0, 1], refined around the best point until the value moves less than ``tol``."""
    grid = np.linspace(0.0, 1.0, int(round(1 / step)) + 1)
    vals = np.array([f(p) for p in grid])
    best = int(np.argmin(vals))
    p_best, v_best = grid[best], vals[best]
    while step > 1e-9:
        lo, hi = max(0.0, p_best - step), min(1.0, p_best + step)
        step /= 10
        grid = np.linspace(lo, hi, 21)
        vals = np.array([f(p) for p in grid])
        i = int(np.argmin(vals))
        improvement = v_best - vals[i]
        if vals[i] < v_best:
            p_best, v_best = grid[i], vals[i]
        if improvement < tol:
            break
    return float(p_best), float(v_best)


def mu(M: np.ndarray) -> float:
    """``min(||M||_F, min_p sqrt(s_2p(M) * s_2(1-p)(M^T)))`` with ``s_r(M) = max_i ||M_i||_r^r``."""
    M = np.asarray(M, dtype=float)
    if not np.any(M):
        raise ValueError("mu is undefined for the zero matrix")
    fro = float(np.linalg.norm(M))
    _, best = _minimize_on_unit_interval(lambda p: math.sqrt(_s(M, 2 * p) * _s(M.T, 2 * (1 - p))))
    return min(fro, best)


def mu_normalized_incidence(view: IncidenceView) -> float:
    """``mu`` of the unit-row incidence matrix, evaluated from degrees without materializing it.

    Row ``i`` holds ``deg_i`` entries of magnitude 1 and ``N - deg_i`` entries
    equal to ``eps_B`` (N = n(n-1)/2), all divided by ``||B_i||``.  An edge
    column has entries of magnitude 1 at its two endpoints and ``eps_B``
    elsewhere; a non-edge column is ``eps_B`` everywhere.
    """
    g = view.graph
    n = g.n
    e = view.eps_B
    N = view.n_columns
    deg = g.degrees.astype(float)
    norms = np.sqrt(view.row_sq_norms())
    if np.any(norms == 0):
        raise ValueError("isolated nodes make the normalized incidence undefined")
    edges = g.edges
    has_non_edge = g.m < N

    def pw(x, r):
        return 0.0 if x == 0 else x**r

    def rows_term(r):
        return float(np.max((deg + (N - deg) * pw(e, r)) / norms**r))

    def cols_term(r):
        w = 1.0 / norms**r
        total = w.sum()
        best = pw(e, r) * total if has_non_edge else 0.0
        if edges.size:
            ends = w[edges[:, 0]] + w[edges[:, 1]]
            best = max(best, float(np.max((1 - pw(e, r)) * ends + pw(e, r) * total)))
        return best

    fro = math.sqrt(n)  # unit rows
    _, best = _minimize_on_unit_interval(lambda p: math.sqrt(rows_term(2 * p) * cols_term(2 * (1 - p))))
    return min(fro, best)


def eta(M: np.ndarray) -> float:
    """``max_i ||M_i||^2 / min_i ||M_i||^2``."""
    sq = np.sum(np.asarray(M, dtype=float) ** 2, axis=1)
    if np.any(sq <= 0):
        raise ValueError("eta is undefined with zero rows")
    return float(sq.max() / sq.min())


def kappa(M_or_spectrum: np.ndarray, rel_tol: float = 1e-10) -> float:
    """Largest over smallest nonzero singular value.

    A 1-D argument is taken as the list of singular values (or eigenvalues)
    themselves.  Values at or below ``rel_tol * max`` count as zero.
    """
    a = np.asarray(M_or_spectrum, dtype=float)
    s = np.abs(a) if a.ndim == 1 else np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s.max() <= 0:
        raise ValueError("kappa is undefined for an all-zero spectrum")
    nonzero = s[s > rel_tol * s.max()]
    return float(nonzero.max() / nonzero.min())


def qram_time(n: int, d: int, c_qram: float = 1.0) -> float:
    return c_qram * math.log2(n * d)


def _check_positive(**params):
    for name, value in params.items():
        if not value > 0:
            raise ValueError(f"{name} must be > 0, got {value}")


def quantum_cost(
    T_S: float,
    eta_S: float,
    eps_dist: float,
    eps_B: float,
    mu_B: float,
    kappa_Lk: float,
    eps_lambda: float,
    k: int,
    eta_Lk: float,
    delta: float,
) -> float:
    """Well-clusterable running time ``T_S eta_S/(eps_dist eps_B) mu_B kappa/eps_lambda k^3 eta_Lk^2.5/delta^3``."""
    _check_positive(T_S=T_S, eta_S=eta_S, eps_dist=eps_dist, eps_B=eps_B, mu_B=mu_B,
                    kappa_Lk=kappa_Lk, eps_lambda=eps_lambda, k=k, eta_Lk=eta_Lk, delta=delta)
    access = T_S * eta_S / (eps_dist * eps_B) * mu_B * kappa_Lk / eps_lambda
    return access * k**3 * eta_Lk**2.5 / delta**3


def qmeans_general_factor(k: int, dim: int, eta_V: float, kappa_V: float, mu_V: float, delta: float) -> float:
    """Per-iteration q-means factor without the well-clusterability assumption."""
    _check_positive(k=k, dim=dim, eta_V=eta_V, kappa_V=kappa_V, mu_V=mu_V, delta=delta)
    return (k * dim * eta_V / delta**2 * kappa_V * (mu_V + k * eta_V / delta)
            + k**2 * eta_V**1.5 / delta**2 * kappa_V * mu_V)


def quantum_cost_general(
    T_S: float, eta_S: float, eps_dist: float, eps_B: float, mu_B: float,
    kappa_Lk: float, eps_lambda: float, k: int, eta_Lk: float, delta: float, mu_Lk: float,
) -> float:
    """Same access cost, general q-means factor with the input dimension set to ``k``."""
    _check_positive(T_S=T_S, eta_S=eta_S, eps_dist=eps_dist, eps_B=eps_B, mu_B=mu_B,
                    kappa_Lk=kappa_Lk, eps_lambda=eps_lambda)
    access = T_S * eta_S / (eps_dist * eps_B) * mu_B * kappa_Lk / eps_lambda
    return access * qmeans_general_factor(k, k, eta_Lk, kappa_Lk, mu_Lk, delta)


def classical_cost(n, d, m, k, iters, c=(1.0, 1.0, 1.0, 1.0)) -> float:
    """``c1 d n^2 + c2 n m + c3 n^3 + c4 n k^2 iters``."""
    c1, c2, c3, c4 = c
    return c1 * d * n**2 + c2 * n * m + c3 * n**3 + c4 * n * k**2 * iters


@dataclass
class CostReport:
    n: int
    d: int
    k: int
    m: int
    mu_B: float
    eta_S: float
    eta_Lk: float
    kappa_Lk: float
    T_S: float
    eps_dist: float
    eps_B: float
    eps_lambda: float
    delta: float
    iterations: int
    classical_cost: float
    quantum_cost: float
    quantum_cost_total: float
    quantum_cost_general: float

    def to_dict(self) -> dict:
        return asdict(self)


def _nan_on_error(fn, *args, **kwargs) -> float:
    try:
        return float(fn(*args, **kwargs))
    except ValueError:
        return float("nan")


def build_report(
    *,
    n: int,
    d: int,
    k: int,
    m: int,
    iterations: int,
    points: np.ndarray,
    view: IncidenceView,
    lk_rows: Optional[np.ndarray],
    lk_spectrum: Optional[np.ndarray],
    eps_dist: float,
    eps_B: float,
    eps_lambda: float,
    delta: float,
    c_qram: float = 1.0,
    classical_constants=(1.0, 1.0, 1.0, 1.0),
) -> CostReport:
    """Evaluate every data parameter and both cost models; undefined quantities become NaN."""
    T_S = qram_time(n, d, c_qram)
    eta_S = _nan_on_error(eta, points)
    mu_B = _nan_on_error(mu_normalized_incidence, view)
    if lk_rows is not None:
        nonzero = lk_rows[np.linalg.norm(lk_rows, axis=1) > 0]
        eta_Lk = _nan_on_error(eta, nonzero) if nonzero.size else float("nan")
        mu_Lk = _nan_on_error(mu, lk_rows)
    else:
        eta_Lk = mu_Lk = float("nan")
    kappa_Lk = _nan_on_error(kappa, lk_spectrum) if lk_spectrum is not None else float("nan")
    args = dict(T_S=T_S, eta_S=eta_S, eps_dist=eps_dist, eps_B=eps_B, mu_B=mu_B,
                kappa_Lk=kappa_Lk, eps_lambda=eps_lambda, k=k, eta_Lk=eta_Lk, delta=delta)
    if all(np.isfinite(v) for v in args.values()):
        q = _nan_on_error(quantum_cost, **args)
        q_gen = _nan_on_error(quantum_cost_general, **args, mu_Lk=mu_Lk)
    else:
        q = q_gen = float("nan")
    return CostReport(
        n=n, d=d, k=k, m=m, mu_B=mu_B, eta_S=eta_S, eta_Lk=eta_Lk, kappa_Lk=kappa_Lk, T_S=T_S,
        eps_dist=eps_dist, eps_B=eps_B, eps_lambda=eps_lambda, delta=delta, iterations=iterations,
        classical_cost=classical_cost(n, d, m, k, iterations, classical_constants),
        quantum_cost=q,
        quantum_cost_total=q * iterations,
        quantum_cost_general=q_gen,
    )


def loglog_slope(x, y) -> tuple[float, float]:
    """Ordinary least squares of ``log y`` on ``log x``; returns ``(slope, intercept)``.

    Non-finite or non-positive points are dropped.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = np.isfinite(x) & np.isfinite(y) & (x > 0) & (y > 0)
    if keep.sum() < 2 or np.unique(x[keep]).size < 2:
        return float("nan"), float("nan")
    slope, intercept = np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)
    return float(slope), float(intercept)


def crossover_n(classical_fit: tuple[float, float], quantum_fit: tuple[float, float]) -> float:
    """``n`` where the two fitted power laws meet; inf when they never cross for n > 0."""
    bc, ac = classical_fit
    bq, aq = quantum_fit
    if not all(np.isfinite([bc, ac, bq, aq])) or bc == bq:
        return float("inf")
    return float(math.exp((aq - ac) / (bc - bq)))
