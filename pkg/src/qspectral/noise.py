"""Noise profile and the seeded random-number fabric.

Every random draw in the pipeline comes from a stream obtained with
:func:`keyed_rng`.  A stream is identified by ``(seed, tag, indices)`` and is
backed by a counter-based Philox generator, so the value drawn for a given
key never depends on the order in which other keys were consumed.  That is
what makes graph construction and q-means assignment reproducible under any
thread count.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields, replace
from typing import Iterable, Mapping

import numpy as np

MODES = ("classical", "quantum")
LAMBDA_MODES = ("absolute", "relative")

# precision parameters used for the two-circles experiments
QUANTUM_DEFAULTS = {
    "eps_dist": 0.1,
    "eps_B": 0.1,
    "eps_lambda": 0.9,
    "delta": 0.9,
}
DEFAULT_NORM_REL_ERR = 0.1


@dataclass(frozen=True)
class NoiseProfile:
    """Precision parameters of the emulated quantum subroutines.

    ``eps_dist`` bounds the additive error on squared distances used to build
    the graph, ``eps_B`` replaces the zero entries of the incidence matrix,
    ``eps_lambda`` bounds the error on singular values of the normalized
    incidence matrix, ``norm_rel_err`` is the relative error of amplitude
    estimation on row norms and ``delta`` is the q-means precision.

    In classical mode every noise field is forced to zero.
    """

    eps_dist: float = QUANTUM_DEFAULTS["eps_dist"]
    eps_B: float = QUANTUM_DEFAULTS["eps_B"]
    eps_lambda: float = QUANTUM_DEFAULTS["eps_lambda"]
    norm_rel_err: float = DEFAULT_NORM_REL_ERR
    delta: float = QUANTUM_DEFAULTS["delta"]
    seed: int = 0
    mode: str = "quantum"
    eps_lambda_mode: str = "absolute"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.eps_lambda_mode not in LAMBDA_MODES:
            raise ValueError(
                f"eps_lambda_mode must be one of {LAMBDA_MODES}, got {self.eps_lambda_mode!r}"
            )
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        object.__setattr__(self, "seed", int(self.seed))
        for name in ("eps_dist", "eps_B", "eps_lambda", "norm_rel_err", "delta"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be a finite value >= 0, got {value}")
            object.__setattr__(self, name, 0.0 if self.mode == "classical" else value)

    @classmethod
    def classical(cls, seed: int = 0) -> "NoiseProfile":
        return cls(seed=seed, mode="classical")

    @classmethod
    def noiseless_quantum(cls, seed: int = 0) -> "NoiseProfile":
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, seed=seed, mode="quantum")

    @property
    def is_quantum(self) -> bool:
        return self.mode == "quantum"

    def with_mode(self, mode: str) -> "NoiseProfile":
        """Switch mode; going back to quantum restores the default precisions for zeroed fields."""
        if mode == self.mode:
            return self
        if mode == "quantum":
            return NoiseProfile(seed=self.seed, mode="quantum", eps_lambda_mode=self.eps_lambda_mode)
        return replace(self, mode=mode)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: Mapping) -> "NoiseProfile":
        known = {f.name: f.type for f in fields(cls)}
        unknown = set(data) - set(known)
        if unknown:
            raise ValueError(f"unknown noise keys: {sorted(unknown)}")
        kwargs = {}
        for key, value in data.items():
            if key in ("mode", "eps_lambda_mode"):
                kwargs[key] = str(value)
            elif key == "seed":
                kwargs[key] = int(value)
            else:
                kwargs[key] = float(value)
        return cls(**kwargs)


def _tag_key(tag: str) -> int:
    # stable across interpreter runs, unlike hash()
    return int.from_bytes(hashlib.blake2b(tag.encode("utf-8"), digest_size=8).digest(), "little")


def keyed_rng(seed: int, domain_tag: str, indices: Iterable[int] = ()) -> np.random.Generator:
    """Return an independent, reproducible stream for ``(seed, domain_tag, indices)``.

    The key is fed to :class:`numpy.random.SeedSequence` as spawn key, so
    streams with different tags or indices are statistically independent.
    """
    spawn_key = (_tag_key(domain_tag),) + tuple(int(i) for i in indices)
    if any(i < 0 for i in spawn_key):
        raise ValueError("indices must be non-negative")
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=spawn_key)
    return np.random.Generator(np.random.Philox(seq))


def bounded_uniform(rng: np.random.Generator, bound: float, size=None):
    """Draw uniformly from ``[-bound, bound]``; exactly 0 when ``bound == 0``."""
    if bound < 0:
        raise ValueError("bound must be >= 0")
    if bound == 0:
        return 0.0 if size is None else np.zeros(size)
    draw = rng.uniform(-bound, bound, size)
    assert np.all(np.abs(draw) <= bound)
    return draw


def uniform_in_ball(rng: np.random.Generator, radius: float, count: int, dim: int) -> np.ndarray:
    """``count`` points drawn uniformly from the l2 ball of ``radius`` in ``dim`` dimensions."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius == 0:
        return np.zeros((count, dim))
    direction = rng.standard_normal((count, dim))
    norms = np.linalg.norm(direction, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    direction /= norms
    r = radius * rng.uniform(0.0, 1.0, (count, 1)) ** (1.0 / dim)
    out = direction * r
    # guard against rounding pushing a point past the radius
    lengths = np.linalg.norm(out, axis=1, keepdims=True)
    over = lengths > radius
    if np.any(over):
        out = np.where(over, out * (radius / lengths), out)
    return out
