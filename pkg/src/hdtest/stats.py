"""Empirical test statistics.

Two-sample: biased/unbiased squared MMD and the distance (energy) statistic.
Independence: distance covariance/correlation, their unbiased (U-centered)
versions, and HSIC.

All functions accept (n, d) arrays and are pure; Gram and distance matrices
are materialized densely, so sample sizes up to roughly 10^4 are the target.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    DataShapeError,
    DegenerateDataError,
    InsufficientSamplesError,
    PairingError,
)
from .kernels import (
    L2,
    BandwidthRule,
    KernelSpec,
    as_data_matrix,
    distance_matrix,
    gram_matrix,
)

TWO_SAMPLE_KINDS = ("mmd2_biased", "mmd2_unbiased", "energy")
INDEPENDENCE_KINDS = ("dcov2", "dcor2", "udcor2", "hsic")
KERNEL_KINDS = ("mmd2_biased", "mmd2_unbiased", "hsic")


@dataclass(frozen=True)
class StatisticSpec:
    """A statistic kind plus the kernel/metric configuration it needs.

    ``kernel_family`` and ``bandwidth`` apply to the kernel statistics
    (MMD variants and HSIC); ``metric`` applies to the distance statistics.
    HSIC resolves one bandwidth per side from the same rule.
    """

    kind: str
    kernel_family: str = "gaussian"
    bandwidth: BandwidthRule = field(default_factory=BandwidthRule.median)
    metric: str = L2

    def __post_init__(self):
        if self.kind not in TWO_SAMPLE_KINDS + INDEPENDENCE_KINDS:
            raise DataShapeError(f"unknown statistic kind {self.kind!r}")

    @property
    def mode(self) -> str:
        return "two_sample" if self.kind in TWO_SAMPLE_KINDS else "independence"

    @property
    def uses_kernel(self) -> bool:
        return self.kind in KERNEL_KINDS


@dataclass(frozen=True)
class StatisticValue:
    value: float
    kind: str
    n: int
    m: int


def _pair_check(X: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = as_data_matrix(X)
    Y = as_data_matrix(Y)
    if X.shape[0] != Y.shape[0]:
        raise PairingError(
            f"paired samples need equal row counts, got {X.shape[0]} and {Y.shape[0]}"
        )
    return X, Y


# ---------------------------------------------------------------------------
# two-sample statistics


def mmd2_biased_from_grams(Kxx, Kyy, Kxy) -> float:
    n, m = Kxx.shape[0], Kyy.shape[0]
    return float(Kxx.sum() / n**2 + Kyy.sum() / m**2 - 2.0 * Kxy.sum() / (n * m))


def mmd2_unbiased_from_grams(Kxx, Kyy, Kxy) -> float:
    n, m = Kxx.shape[0], Kyy.shape[0]
    if n < 2 or m < 2:
        raise InsufficientSamplesError("unbiased MMD^2 needs at least 2 points per group")
    sx = Kxx.sum() - np.trace(Kxx)
    sy = Kyy.sum() - np.trace(Kyy)
    return float(sx / (n * (n - 1)) + sy / (m * (m - 1)) - 2.0 * Kxy.sum() / (n * m))


def mmd2_biased(X, Y, spec: KernelSpec) -> float:
    """Biased squared MMD; always >= 0 (a squared RKHS norm)."""
    return mmd2_biased_from_grams(
        gram_matrix(X, X, spec), gram_matrix(Y, Y, spec), gram_matrix(X, Y, spec)
    )


def mmd2_unbiased(X, Y, spec: KernelSpec) -> float:
    """Unbiased squared MMD: within-group sums exclude the diagonal.

    May be negative; its expectation over fresh draws is the population
    squared MMD.
    """
    return mmd2_unbiased_from_grams(
        gram_matrix(X, X, spec), gram_matrix(Y, Y, spec), gram_matrix(X, Y, spec)
    )


def energy_two_sample(X, Y, metric: str = L2) -> float:
    """Distance-based two-sample statistic (energy form).

    Equals ``mmd2_biased`` computed with the induced kernel
    ``||x|| + ||y|| - ||x - y||`` as an exact matrix identity.
    """
    X = as_data_matrix(X)
    Y = as_data_matrix(Y)
    n, m = X.shape[0], Y.shape[0]
    Dxy = distance_matrix(X, Y, metric)
    Dxx = distance_matrix(X, X, metric)
    Dyy = distance_matrix(Y, Y, metric)
    return float(2.0 * Dxy.sum() / (n * m) - Dxx.sum() / n**2 - Dyy.sum() / m**2)


def mmd_estimation_bound(K: float, n: int, m: int, delta: float) -> float:
    """High-probability deviation bound for the biased MMD^2 estimator.

    For a kernel bounded by K, with probability at least 1 - delta the
    estimation error is at most ``2 (sqrt(K/n) + sqrt(K/m)) (1 + log(2/delta))``.
    The bound does not involve the data dimension.
    """
    if not 0.0 < delta < 1.0:
        raise DataShapeError(f"delta must lie in (0, 1), got {delta}")
    if K < 0 or n < 1 or m < 1:
        raise DataShapeError("need K >= 0 and n, m >= 1")
    return float(2.0 * (np.sqrt(K / n) + np.sqrt(K / m)) * (1.0 + np.log(2.0 / delta)))


# ---------------------------------------------------------------------------
# centering and independence statistics


def double_center(A: np.ndarray) -> np.ndarray:
    """H A H with H = I - 11^T/n: row and column means removed."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DataShapeError(f"double_center needs a square matrix, got {A.shape}")
    return A - A.mean(axis=0)[None, :] - A.mean(axis=1)[:, None] + A.mean()


def u_center(A: np.ndarray) -> np.ndarray:
    """U-centering: the debiased analogue of double centering.

    Off-diagonal entries become
    ``A_ij - r_i/(n-2) - c_j/(n-2) + s/((n-1)(n-2))`` with r, c, s the row,
    column, and grand sums; the diagonal is set to zero. Needs n >= 4.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DataShapeError(f"u_center needs a square matrix, got {A.shape}")
    n = A.shape[0]
    if n < 4:
        raise InsufficientSamplesError("U-centering needs at least 4 points")
    r = A.sum(axis=1)
    c = A.sum(axis=0)
    out = A - r[:, None] / (n - 2) - c[None, :] / (n - 2) + A.sum() / ((n - 1) * (n - 2))
    np.fill_diagonal(out, 0.0)
    return out


def dcov2(X, Y) -> float:
    """Squared distance covariance (1/n^2) tr(A~ B~) on paired rows."""
    X, Y = _pair_check(X, Y)
    A = double_center(distance_matrix(X, X, L2))
    B = double_center(distance_matrix(Y, Y, L2))
    return float((A * B).mean())


def dcor2(X, Y) -> float:
    """Squared distance correlation in [0, 1]."""
    X, Y = _pair_check(X, Y)
    A = double_center(distance_matrix(X, X, L2))
    B = double_center(distance_matrix(Y, Y, L2))
    vx = (A * A).mean()
    vy = (B * B).mean()
    if vx <= 0.0 or vy <= 0.0:
        raise DegenerateDataError("constant sample: distance variance is zero")
    return float((A * B).mean() / np.sqrt(vx * vy))


def udcov2(X, Y) -> float:
    """Unbiased squared distance covariance (U-centered; may be negative)."""
    X, Y = _pair_check(X, Y)
    n = X.shape[0]
    if n < 4:
        raise InsufficientSamplesError("unbiased distance covariance needs n >= 4")
    A = u_center(distance_matrix(X, X, L2))
    B = u_center(distance_matrix(Y, Y, L2))
    return float((A * B).sum() / (n * (n - 3)))


def udcor2(X, Y) -> float:
    """Unbiased squared distance correlation; converges to 0 under
    independence even when d greatly exceeds n."""
    vx = udcov2(X, X)
    vy = udcov2(Y, Y)
    if vx <= 0.0 or vy <= 0.0:
        raise DegenerateDataError("constant sample: unbiased distance variance <= 0")
    return float(udcov2(X, Y) / np.sqrt(vx * vy))


def hsic(X, Y, spec_x: KernelSpec, spec_y: KernelSpec) -> float:
    """Hilbert-Schmidt independence criterion (1/n^2) tr(K~ L~)."""
    X, Y = _pair_check(X, Y)
    K = double_center(gram_matrix(X, X, spec_x))
    L = double_center(gram_matrix(Y, Y, spec_y))
    return float((K * L).mean())
