"""Permutation-null calibration and decision rule.

Two modes:

* ``two_sample``: the pooled m + n observations are randomly relabeled and
  the statistic recomputed; each relabeling is one draw from the null.
* ``independence``: the X rows stay fixed and the Y rows are permuted,
  destroying any dependence while preserving both marginals.

The threshold is the conservative empirical (1 - alpha) quantile of the
null sample pooled with the observed statistic, and the p-value carries the
"+1" correction, so the test is exactly valid at any permutation count B.

Bandwidths are resolved once from the original (unpermuted) data and reused
for every permutation: pooled pairwise distances are permutation invariant
in two-sample mode, and fixing them saves O(B n^2) work in independence
mode. Permutation evaluations are vectorized over B; results depend only on
(seed, inputs), never on execution parallelism.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DataShapeError
from .kernels import (
    KernelSpec,
    as_data_matrix,
    distance_matrix,
    gram_matrix,
    resolve_bandwidth,
)
from .stats import StatisticSpec, double_center, u_center

MODES = ("two_sample", "independence")


@dataclass(frozen=True)
class PermutationConfig:
    B: int = 200
    alpha: float = 0.05
    seed: int = 0
    mode: str = "two_sample"

    def __post_init__(self):
        if self.B < 1:
            raise DataShapeError("permutation count B must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise DataShapeError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.mode not in MODES:
            raise DataShapeError(f"unknown mode {self.mode!r}")


@dataclass(frozen=True)
class PermutationResult:
    observed: float
    null_sample: np.ndarray
    threshold: float
    p_value: float
    reject: bool
    gamma: float | None = None  # resolved bandwidth, when a kernel was used


def null_quantile(null_sample, observed: float, alpha: float) -> float:
    """Conservative empirical (1 - alpha) quantile of {null_sample, observed}.

    Returns the ceil((1 - alpha) (B + 1))-th order statistic of the pooled
    B + 1 values; monotone nonincreasing in alpha.
    """
    if not 0.0 < alpha < 1.0:
        raise DataShapeError(f"alpha must lie in (0, 1), got {alpha}")
    null_sample = np.asarray(null_sample, dtype=float)
    if null_sample.size == 0:
        raise DataShapeError("null sample is empty")
    pooled = np.sort(np.append(null_sample, observed))
    k = math.ceil((1.0 - alpha) * pooled.size)
    return float(pooled[k - 1])


def _two_sample_null(P: np.ndarray, n: int, m: int, kind: str, cfg: PermutationConfig):
    """Observed statistic and B null draws from one pooled pairwise matrix.

    Every relabeling only needs the within-group-A block sum and the row
    sums of the pooled matrix, so all B draws reduce to one (B, N) x (N, N)
    matmul.
    """
    N = n + m
    diag = np.diag(P).copy()
    total = P.sum()
    rowsum = P.sum(axis=1)

    def stat(s_xx, d_xx, t):
        # t = sum of pooled rows over group A = s_xx + s_xy
        s_xy = t - s_xx
        s_yy = total - 2.0 * t + s_xx
        if kind == "mmd2_biased":
            return s_xx / n**2 + s_yy / m**2 - 2.0 * s_xy / (n * m)
        if kind == "mmd2_unbiased":
            d_yy = diag.sum() - d_xx
            return (
                (s_xx - d_xx) / (n * (n - 1))
                + (s_yy - d_yy) / (m * (m - 1))
                - 2.0 * s_xy / (n * m)
            )
        # energy
        return 2.0 * s_xy / (n * m) - s_xx / n**2 - s_yy / m**2

    obs_mask = np.zeros(N)
    obs_mask[:n] = 1.0
    observed = stat(obs_mask @ P @ obs_mask, diag[:n].sum(), obs_mask @ rowsum)

    rng = np.random.default_rng(cfg.seed)
    order = np.argsort(rng.random((cfg.B, N)), axis=1)
    M = np.zeros((cfg.B, N))
    np.put_along_axis(M, order[:, :n], 1.0, axis=1)
    MP = M @ P
    s_xx = np.einsum("bi,bi->b", MP, M)
    null = stat(s_xx, M @ diag, M @ rowsum)
    return float(observed), np.asarray(null, dtype=float)


def _independence_null(A: np.ndarray, Bmat: np.ndarray, scale: float, cfg: PermutationConfig):
    """Observed tr(A B_pi)-type statistic and its permutation nulls.

    A and Bmat are already centered; centering commutes with applying the
    same permutation to rows and columns, so each draw is a plain gather.
    """
    n = A.shape[0]
    observed = float((A * Bmat).sum() * scale)
    rng = np.random.default_rng(cfg.seed)
    null = np.empty(cfg.B)
    for b in range(cfg.B):
        perm = rng.permutation(n)
        null[b] = (A * Bmat[np.ix_(perm, perm)]).sum() * scale
    return observed, null


def permutation_test(
    X, Y, statistic: StatisticSpec, cfg: PermutationConfig
) -> PermutationResult:
    """Calibrate a statistic by permutation and decide at level alpha.

    ``X, Y`` are the two groups (two-sample mode) or the paired samples
    (independence mode); the mode of ``cfg`` must match the statistic.
    """
    X = as_data_matrix(X)
    Y = as_data_matrix(Y)
    if cfg.mode != statistic.mode:
        raise DataShapeError(
            f"config mode {cfg.mode!r} does not match statistic mode {statistic.mode!r}"
        )
    gamma: float | None = None

    if cfg.mode == "two_sample":
        if X.shape[1] != Y.shape[1]:
            raise DataShapeError("two-sample groups must share a dimension")
        n, m = X.shape[0], Y.shape[0]
        pooled = np.vstack([X, Y])
        if statistic.uses_kernel:
            gamma = resolve_bandwidth(statistic.bandwidth, pooled)
            P = gram_matrix(pooled, pooled, KernelSpec(statistic.kernel_family, gamma))
        else:
            P = distance_matrix(pooled, pooled, statistic.metric)
        observed, null = _two_sample_null(P, n, m, statistic.kind, cfg)
    else:
        if X.shape[0] != Y.shape[0]:
            raise DataShapeError("independence mode needs paired rows")
        n = X.shape[0]
        if statistic.kind == "hsic":
            gx = resolve_bandwidth(statistic.bandwidth, X)
            gy = resolve_bandwidth(statistic.bandwidth, Y)
            gamma = gx
            A = double_center(gram_matrix(X, X, KernelSpec(statistic.kernel_family, gx)))
            Bmat = double_center(gram_matrix(Y, Y, KernelSpec(statistic.kernel_family, gy)))
            observed, null = _independence_null(A, Bmat, 1.0 / n**2, cfg)
        elif statistic.kind in ("dcov2", "dcor2"):
            A = double_center(distance_matrix(X, X, statistic.metric))
            Bmat = double_center(distance_matrix(Y, Y, statistic.metric))
            scale = 1.0 / n**2
            if statistic.kind == "dcor2":
                denom = np.sqrt((A * A).mean() * (Bmat * Bmat).mean())
                if denom <= 0.0:
                    raise DataShapeError("constant sample: dcor2 undefined")
                scale /= denom
            observed, null = _independence_null(A, Bmat, scale, cfg)
        else:  # udcor2
            A = u_center(distance_matrix(X, X, statistic.metric))
            Bmat = u_center(distance_matrix(Y, Y, statistic.metric))
            denom = np.sqrt((A * A).sum() * (Bmat * Bmat).sum())
            if denom <= 0.0:
                raise DataShapeError("constant sample: udcor2 undefined")
            observed, null = _independence_null(A, Bmat, 1.0 / denom, cfg)

    threshold = null_quantile(null, observed, cfg.alpha)
    p_value = float((1 + (null >= observed).sum()) / (cfg.B + 1))
    return PermutationResult(
        observed=observed,
        null_sample=null,
        threshold=threshold,
        p_value=p_value,
        reject=bool(observed > threshold),
        gamma=gamma,
    )
