"""Kernels, distance matrices, and bandwidth selection.

Two kernel families are supported:

* Gaussian:  ``k(x, y) = exp(-||x - y||_2^2 / (2 * gamma^2))``
* Laplace:   ``k(x, y) = exp(-||x - y||_1 / gamma)``

Both are characteristic, translation invariant, and bounded in (0, 1].
The Gaussian bandwidth enters through ``2 * gamma^2`` so that the sample
statistics agree exactly with the closed-form population values in
:mod:`hdtest.analytic` (see ``notes`` in that module).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DataShapeError, DegenerateDataError

GAUSSIAN = "gaussian"
LAPLACE = "laplace"
_FAMILIES = (GAUSSIAN, LAPLACE)

L2 = "l2"
L1 = "l1"
_METRICS = (L2, L1)


def as_data_matrix(values) -> np.ndarray:
    """Validate and return an (n, d) float array of sample points.

    Raises
    ------
    DataShapeError
        If the array is not 2-d, is empty, or contains NaN/Inf.
    """
    X = np.asarray(values, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise DataShapeError(f"expected an (n, d) matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DataShapeError("data matrix contains NaN or Inf entries")
    return X


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family plus a fixed positive bandwidth."""

    family: str
    gamma: float

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise DataShapeError(f"unknown kernel family {self.family!r}")
        if not (self.gamma > 0 and np.isfinite(self.gamma)):
            raise DataShapeError(f"bandwidth must be positive, got {self.gamma}")


@dataclass(frozen=True)
class BandwidthRule:
    """How to turn data of dimension d into a bandwidth gamma.

    Variants: ``fixed`` (a constant), ``median`` (median of pairwise L2
    distances of the pooled sample), and ``power`` (gamma = c * d**alpha).
    """

    kind: str
    gamma: float = 0.0
    c: float = 1.0
    alpha: float = 0.0

    @staticmethod
    def fixed(gamma: float) -> "BandwidthRule":
        if not gamma > 0:
            raise DataShapeError("fixed bandwidth must be positive")
        return BandwidthRule("fixed", gamma=gamma)

    @staticmethod
    def median() -> "BandwidthRule":
        return BandwidthRule("median")

    @staticmethod
    def power_of_dimension(c: float, alpha: float) -> "BandwidthRule":
        if not c > 0:
            raise DataShapeError("power rule prefactor must be positive")
        return BandwidthRule("power", c=c, alpha=alpha)

    def label(self) -> str:
        if self.kind == "fixed":
            return f"fixed:{self.gamma:g}"
        if self.kind == "median":
            return "median"
        if self.c == 1.0:
            return f"d^{self.alpha:g}"
        return f"{self.c:g}*d^{self.alpha:g}"


def squared_distances(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Pairwise squared L2 distances, clipped at zero against round-off."""
    X = as_data_matrix(X)
    Y = as_data_matrix(Y)
    if X.shape[1] != Y.shape[1]:
        raise DataShapeError(
            f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]} columns"
        )
    D = (X * X).sum(axis=1)[:, None] + (Y * Y).sum(axis=1)[None, :] - 2.0 * (X @ Y.T)
    np.maximum(D, 0.0, out=D)
    return D


def distance_matrix(X: np.ndarray, Y: np.ndarray, metric: str = L2) -> np.ndarray:
    """Pairwise distance matrix under the L2 or L1 metric."""
    if metric not in _METRICS:
        raise DataShapeError(f"unknown metric {metric!r}")
    X = as_data_matrix(X)
    Y = as_data_matrix(Y)
    if X.shape[1] != Y.shape[1]:
        raise DataShapeError(
            f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]} columns"
        )
    if metric == L2:
        return np.sqrt(squared_distances(X, Y))
    return np.abs(X[:, None, :] - Y[None, :, :]).sum(axis=2)


def kernel_eval(x, y, spec: KernelSpec) -> float:
    """Evaluate the kernel on a single pair of points."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise DataShapeError(f"point dimensions differ: {x.shape} vs {y.shape}")
    if spec.family == GAUSSIAN:
        d2 = float(((x - y) ** 2).sum())
        return float(np.exp(-d2 / (2.0 * spec.gamma**2)))
    d1 = float(np.abs(x - y).sum())
    return float(np.exp(-d1 / spec.gamma))


def gram_matrix(X: np.ndarray, Y: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """Pairwise kernel matrix k(x_i, y_j)."""
    if spec.family == GAUSSIAN:
        return np.exp(-squared_distances(X, Y) / (2.0 * spec.gamma**2))
    return np.exp(-distance_matrix(X, Y, L1) / spec.gamma)


def induced_kernel_matrix(X: np.ndarray, Y: np.ndarray, metric: str = L2) -> np.ndarray:
    """Gram matrix of the distance-induced kernel.

    ``k(x, y) = (||x|| + ||y|| - ||x - y||) / 2`` turns the chosen metric
    into a positive-definite kernel; HSIC computed with it recovers the
    distance covariance (up to a factor of 4).
    """
    X = as_data_matrix(X)
    Y = as_data_matrix(Y)
    origin = np.zeros((1, X.shape[1]))
    nx = distance_matrix(X, origin, metric)[:, 0]
    ny = distance_matrix(Y, origin, metric)[:, 0]
    return 0.5 * (nx[:, None] + ny[None, :] - distance_matrix(X, Y, metric))


def median_heuristic(P: np.ndarray) -> float:
    """Median of the pairwise L2 distances over distinct unordered pairs.

    Self-pairs are excluded; for an even pair count the median averages the
    two middle order statistics.

    Raises
    ------
    DegenerateDataError
        If fewer than two points are given or all points coincide (the
        median would be zero, which is not a valid bandwidth).
    """
    P = as_data_matrix(P)
    if P.shape[0] < 2:
        raise DegenerateDataError("median heuristic needs at least two points")
    D = np.sqrt(squared_distances(P, P))
    iu = np.triu_indices(P.shape[0], k=1)
    gamma = float(np.median(D[iu]))
    if gamma <= 0.0:
        raise DegenerateDataError("all points identical: median distance is zero")
    return gamma


def resolve_bandwidth(rule: BandwidthRule, pooled: np.ndarray) -> float:
    """Resolve a bandwidth rule against the (pooled) data it applies to."""
    if rule.kind == "fixed":
        return rule.gamma
    if rule.kind == "median":
        return median_heuristic(pooled)
    if rule.kind == "power":
        pooled = as_data_matrix(pooled)
        return rule.c * float(pooled.shape[1]) ** rule.alpha
    raise DataShapeError(f"unknown bandwidth rule {rule.kind!r}")
