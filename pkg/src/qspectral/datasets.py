"""Labeled point sets: the two-circles benchmark and CSV I/O."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from qspectral.noise import keyed_rng


@dataclass(frozen=True)
class DataMatrix:
    """Input points, one per row, with optional ground-truth labels."""

    points: np.ndarray
    ground_truth: Optional[np.ndarray] = None
    row_norms: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        points = np.array(self.points, dtype=float)
        if points.ndim != 2:
            raise ValueError("points must be a 2-D array")
        n, d = points.shape
        if n < 2 or d < 1:
            raise ValueError(f"need n >= 2 and d >= 1, got shape {points.shape}")
        norms = np.linalg.norm(points, axis=1)
        if not np.all(np.isfinite(norms)):
            raise ValueError("points contain non-finite values")
        if np.any(norms <= 0):
            raise ValueError(f"zero-norm rows at indices {np.flatnonzero(norms <= 0).tolist()}")
        points.setflags(write=False)
        norms.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "row_norms", norms)
        if self.ground_truth is not None:
            labels = np.asarray(self.ground_truth)
            if labels.shape != (n,):
                raise ValueError("ground_truth must have one label per row")
            if not np.all(labels == np.round(labels)) or labels.min() < 0:
                raise ValueError("ground_truth must hold non-negative integers")
            labels = labels.astype(np.int64)
            labels.setflags(write=False)
            object.__setattr__(self, "ground_truth", labels)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def n_classes(self) -> Optional[int]:
        if self.ground_truth is None:
            return None
        return int(np.unique(self.ground_truth).size)


def make_circles(
    n: int,
    radius_inner: float = 1.0,
    radius_outer: float = 2.0,
    noise_sd: float = 0.05,
    seed: int = 0,
) -> DataMatrix:
    """Two concentric circles of ``n/2`` points each, labels 0 (inner) and 1 (outer).

    Angles are evenly spaced on each circle and isotropic Gaussian noise of
    standard deviation ``noise_sd`` is added to every coordinate.
    """
    if n < 4:
        raise ValueError("need n >= 4 to form two clusters")
    if n % 2:
        raise ValueError("n must be even")
    if not 0 < radius_inner < radius_outer:
        raise ValueError("need 0 < radius_inner < radius_outer")
    if noise_sd < 0:
        raise ValueError("noise_sd must be >= 0")
    half = n // 2
    theta = 2 * np.pi * np.arange(half) / half
    ring = np.column_stack([np.cos(theta), np.sin(theta)])
    points = np.vstack([radius_inner * ring, radius_outer * ring])
    if noise_sd > 0:
        points = points + keyed_rng(seed, "circles").normal(0.0, noise_sd, points.shape)
    labels = np.repeat([0, 1], half)
    return DataMatrix(points, labels)


def rescale_min_norm(S: DataMatrix) -> DataMatrix:
    """Divide every row by the smallest row norm so that ``min ||s_i|| == 1``."""
    scale = S.row_norms.min()
    if scale == 1.0:
        return S
    return replace(S, points=S.points / scale)


def load_csv(path, has_labels: Optional[bool] = None) -> DataMatrix:
    """Read points from CSV, one point per row.

    A non-numeric first row is treated as a header.  When ``has_labels`` is
    None the last column is read as labels if the header names it ``label``,
    or, without a header, if every value in it is an integer.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = None
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        header, rows = rows[0], rows[1:]
    try:
        data = np.array([[float(c) for c in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric value ({exc})") from None
    if data.ndim != 2 or data.shape[0] < 2:
        raise ValueError(f"{path}: need at least two rows of data")
    if has_labels is None:
        if header is not None:
            has_labels = header[-1].strip().lower() in ("label", "labels", "y")
        else:
            has_labels = data.shape[1] >= 2 and bool(np.all(data[:, -1] == np.round(data[:, -1])))
    if has_labels:
        if data.shape[1] < 2:
            raise ValueError(f"{path}: label column requested but only one column present")
        return DataMatrix(data[:, :-1], data[:, -1])
    return DataMatrix(data)


def save_csv(S: DataMatrix, path, labels: Optional[np.ndarray] = None) -> Path:
    """Write points (and labels, if any) in the format read by :func:`load_csv`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    labels = S.ground_truth if labels is None else np.asarray(labels)
    header = [f"x{j}" for j in range(S.d)] + (["label"] if labels is not None else [])
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(S.n):
            row = [repr(float(v)) for v in S.points[i]]
            if labels is not None:
                row.append(str(int(labels[i])))
            writer.writerow(row)
    return path
