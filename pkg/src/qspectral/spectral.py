"""Eigendecomposition of the normalized Laplacian and the two spectral embeddings.

The classical embedding takes the ``k`` lowest eigenvectors as columns.  The
quantum embedding keeps the eigenvectors whose *estimated* eigenvalue falls
below a threshold ``nu`` and scales each by that estimate, i.e. row ``i`` is
``(u_j[i] * lam_j)`` over the kept ``j``.  Its row norms equal
``nu * sqrt(P_i(00))`` where ``P_i(00)`` is the post-selection probability
that governs the amplification cost.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import scipy.linalg
from threadpoolctl import threadpool_limits

from qspectral.noise import bounded_uniform

DEFAULT_GAMMA = 1.1
P00_FLOOR = 1e-12


@dataclass(frozen=True)
class SpectralModel:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    gamma: float = DEFAULT_GAMMA
    noisy_eigenvalues: Optional[np.ndarray] = None
    noisy_singular_values: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.gamma <= 1:
            raise ValueError("gamma must be > 1")

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def estimates(self) -> np.ndarray:
        """Eigenvalue estimates if present, otherwise the exact eigenvalues."""
        return self.eigenvalues if self.noisy_eigenvalues is None else self.noisy_eigenvalues


@dataclass(frozen=True)
class Embedding:
    """Spectral coordinates of the ``n`` input points.

    ``rows`` holds the exact coordinates.  ``row_norms`` holds the norms the
    clustering stage is told about, which in quantum mode carry the
    amplitude-estimation error.
    """

    rows: np.ndarray
    row_norms: np.ndarray
    kind: str
    indices: np.ndarray
    nu: Optional[float] = None
    p00: Optional[np.ndarray] = None
    flagged: Optional[np.ndarray] = None

    @property
    def k(self) -> int:
        return self.rows.shape[1]

    def vectors(self) -> np.ndarray:
        """Rows rescaled to their reported norms (state direction times estimated norm)."""
        exact = np.linalg.norm(self.rows, axis=1)
        scale = np.divide(self.row_norms, exact, out=np.zeros_like(exact), where=exact > 0)
        return self.rows * scale[:, None]


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # make the first clearly nonzero entry of each column positive
    tol = 1e-12 * np.max(np.abs(vectors), axis=0)
    out = vectors.copy()
    for j in range(out.shape[1]):
        nz = np.flatnonzero(np.abs(out[:, j]) > tol[j])
        if nz.size and out[nz[0], j] < 0:
            out[:, j] = -out[:, j]
    return out


def eigendecompose(L: np.ndarray, gamma: float = DEFAULT_GAMMA) -> SpectralModel:
    """Full ascending spectrum of a symmetric matrix with a deterministic sign convention.

    Eigenvalues within ``64 n eps_machine max(1, |lambda|_max)`` of zero are set to
    exactly zero, so that a kernel eigenvalue never turns into a roundoff-sized
    scale factor in the eigenvalue-scaled embedding.
    """
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ValueError("L must be square")
    asym = np.max(np.abs(L - L.T)) if L.size else 0.0
    if asym > 1e-10 * max(1.0, np.max(np.abs(L))):
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    sym = (L + L.T) / 2
    # a single BLAS thread keeps the result bit-identical across machines' thread settings
    with threadpool_limits(limits=1):
        try:
            w, U = scipy.linalg.eigh(sym, driver="evd")
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(f"eigensolver did not converge: {exc}") from exc
    U = _fix_signs(U)
    tol = 64 * L.shape[0] * np.finfo(float).eps * max(1.0, float(np.max(np.abs(w))) if w.size else 1.0)
    w[np.abs(w) <= tol] = 0.0
    w.setflags(write=False)
    U.setflags(write=False)
    return SpectralModel(w, U, gamma=gamma)


def estimate_singular_values(
    model: SpectralModel,
    eps_lambda: float,
    rng: np.random.Generator,
    relative: bool = False,
) -> SpectralModel:
    """Emulate singular value estimation on the normalized incidence matrix.

    The singular values are ``sqrt(lam_j)``.  Each gets an independent error
    uniform on ``[-eps_lambda, eps_lambda]`` (scaled by the singular value when
    ``relative``), is clamped at 0 and squared back into an eigenvalue
    estimate.
    """
    if eps_lambda < 0:
        raise ValueError("eps_lambda must be >= 0")
    sv = np.sqrt(np.clip(model.eigenvalues, 0.0, None))
    err = bounded_uniform(rng, eps_lambda, sv.shape)
    noisy_sv = np.clip(sv + (err * sv if relative else err), 0.0, None)
    if eps_lambda == 0:
        noisy_sv = sv
        lam = np.array(model.eigenvalues, dtype=float)
    else:
        lam = noisy_sv**2
    return replace(model, noisy_eigenvalues=lam, noisy_singular_values=noisy_sv)


def select_k_lowest(model: SpectralModel, k: int) -> tuple[np.ndarray, float]:
    """Indices of the ``k`` smallest eigenvalue estimates and the threshold ``nu``.

    Ties are broken by index.  ``nu`` is the smaller of ``gamma * lam_(k)``
    and the midpoint between the ``k``-th and ``(k+1)``-th smallest
    estimates, so when those two differ exactly the selected indices fall
    at or below ``nu``.
    """
    n = model.n
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < n, got k={k}, n={n}")
    lam = model.estimates
    order = np.argsort(lam, kind="stable")
    chosen = order[:k]
    kth, nxt = lam[order[k - 1]], lam[order[k]]
    nu = float(min(model.gamma * kth, (kth + nxt) / 2))
    return chosen, nu


def project_classical(model: SpectralModel, k: int) -> Embedding:
    """Rows of the matrix whose columns are the ``k`` lowest eigenvectors."""
    if not 1 <= k <= model.n:
        raise ValueError(f"need 1 <= k <= n, got k={k}")
    idx = np.arange(k)
    rows = np.array(model.eigenvectors[:, :k])
    return Embedding(rows, np.linalg.norm(rows, axis=1), "classical-columns", idx)


def p00(model: SpectralModel, indices: np.ndarray, nu: float) -> np.ndarray:
    """``(1/nu^2) * sum_j sigma_ij^2 lam_j^2`` over the selected ``j``; zero when ``nu == 0``."""
    lam = model.estimates[indices]
    mass = (model.eigenvectors[:, indices] ** 2) @ (lam**2)
    if nu <= 0:
        return np.zeros(model.n)
    return mass / nu**2


def project_quantum(
    model: SpectralModel,
    k: int,
    norm_rel_err: float,
    rng: np.random.Generator,
) -> Embedding:
    """Eigenvalue-scaled embedding with amplitude-estimated row norms.

    Rows with ``P_i(00) < 1e-12`` cannot be amplified at bounded cost; they
    are flagged, not rejected.
    """
    if norm_rel_err < 0:
        raise ValueError("norm_rel_err must be >= 0")
    idx, nu = select_k_lowest(model, k)
    lam = model.estimates[idx]
    rows = model.eigenvectors[:, idx] * lam[None, :]
    prob = p00(model, idx, nu)
    exact = nu * np.sqrt(prob)
    noisy = exact * (1.0 + bounded_uniform(rng, norm_rel_err, exact.shape))
    return Embedding(
        rows=rows,
        row_norms=noisy,
        kind="quantum-lambda-scaled",
        indices=idx,
        nu=nu,
        p00=prob,
        flagged=prob < P00_FLOOR,
    )
