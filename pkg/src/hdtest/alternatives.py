"""Scenario generators with exact KL divergence or mutual information.

Four families, each parameterized so the information-theoretic difficulty
can be held constant while the dimension grows ("fair" alternatives):

* ``GaussianMeanShift`` — spherical Gaussians, mean shift on the first
  coordinate (fair) or on every coordinate (unfair: KL grows linearly in d).
* ``LaplaceMeanShift`` — products of univariate Laplace distributions,
  mean shift on the first coordinate.
* ``GaussianVarianceShift`` — equal means; one distribution inflates the
  variance of its last coordinate.
* ``DependentGaussianPairs`` — paired (X, Y), standard normal marginals,
  correlation rho on the first k coordinate pairs; the number of nonzero
  cross-covariances stays fixed as d grows, keeping the mutual information
  constant.

The Laplace(mu, sigma) convention is density ``exp(-|x - mu|/sigma)/(2 sigma)``
(variance ``2 sigma^2``).
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from .exceptions import DataShapeError

__all__ = [
    "GaussianMeanShift",
    "LaplaceMeanShift",
    "GaussianVarianceShift",
    "DependentGaussianPairs",
    "AlternativeSpec",
    "Divergence",
    "divergence",
    "sample_two_sample",
    "sample_joint",
    "is_null",
    "with_dimension",
]

FIRST_COORDINATE = "first"
ALL_COORDINATES = "all"


@dataclass(frozen=True)
class GaussianMeanShift:
    d: int
    sigma: float = 1.0
    delta: float = 1.0
    shift: str = FIRST_COORDINATE

    def __post_init__(self):
        _check_dim(self.d)
        if self.sigma <= 0:
            raise DataShapeError("sigma must be positive")
        if self.shift not in (FIRST_COORDINATE, ALL_COORDINATES):
            raise DataShapeError(f"unknown shift mode {self.shift!r}")
        if not np.isfinite(self.delta):
            raise DataShapeError("delta must be finite")


@dataclass(frozen=True)
class LaplaceMeanShift:
    d: int
    sigma: float = 1.0
    delta: float = 1.0

    def __post_init__(self):
        _check_dim(self.d)
        if self.sigma <= 0:
            raise DataShapeError("sigma must be positive")
        if not np.isfinite(self.delta):
            raise DataShapeError("delta must be finite")


@dataclass(frozen=True)
class GaussianVarianceShift:
    """P: last coordinate has variance tau^2; Q = N(0, sigma^2 I)."""

    d: int
    sigma: float = 1.0
    tau: float = 2.0

    def __post_init__(self):
        _check_dim(self.d)
        if self.sigma <= 0 or self.tau <= 0:
            raise DataShapeError("sigma and tau must be positive")


@dataclass(frozen=True)
class DependentGaussianPairs:
    """(X_i, Y_i) correlated with coefficient rho for i < k, independent after."""

    d: int
    k: int = 4
    rho: float = 0.5

    def __post_init__(self):
        _check_dim(self.d)
        if not 1 <= self.k <= self.d:
            raise DataShapeError(f"need 1 <= k <= d, got k={self.k}, d={self.d}")
        if not abs(self.rho) < 1.0:
            raise DataShapeError("need |rho| < 1 for a positive definite covariance")


AlternativeSpec = Union[
    GaussianMeanShift, LaplaceMeanShift, GaussianVarianceShift, DependentGaussianPairs
]

TWO_SAMPLE_FAMILIES = (GaussianMeanShift, LaplaceMeanShift, GaussianVarianceShift)


def _check_dim(d: int) -> None:
    if d < 1:
        raise DataShapeError(f"dimension must be >= 1, got {d}")


@dataclass(frozen=True)
class Divergence:
    kind: str  # "kl" or "mi"
    value: float


def divergence(spec: AlternativeSpec) -> Divergence:
    """Exact KL divergence (two-sample) or mutual information (dependence).

    Closed forms:

    * Gaussian mean shift: ``||mu_1 - mu_2||^2 / (2 sigma^2)`` — constant in
      d for the first-coordinate shift, ``d delta^2 / (2 sigma^2)`` for the
      all-coordinates shift.
    * Laplace mean shift: ``exp(-D/sigma) - 1 + D/sigma`` with D = |delta|.
    * Variance shift: ``(tau^2/sigma^2 - 1 - log(tau^2/sigma^2)) / 2``.
    * Dependent pairs: ``-(k/2) log(1 - rho^2)``.
    """
    if isinstance(spec, GaussianMeanShift):
        per_coord = spec.delta**2 / (2.0 * spec.sigma**2)
        value = per_coord * (spec.d if spec.shift == ALL_COORDINATES else 1.0)
        return Divergence("kl", float(value))
    if isinstance(spec, LaplaceMeanShift):
        r = abs(spec.delta) / spec.sigma
        return Divergence("kl", float(np.exp(-r) - 1.0 + r))
    if isinstance(spec, GaussianVarianceShift):
        r = spec.tau**2 / spec.sigma**2
        return Divergence("kl", float(0.5 * (r - 1.0 - np.log(r))))
    if isinstance(spec, DependentGaussianPairs):
        return Divergence("mi", float(-0.5 * spec.k * np.log(1.0 - spec.rho**2)))
    raise DataShapeError(f"unknown alternative spec {spec!r}")


def sample_two_sample(spec: AlternativeSpec, n: int, m: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """Draw X ~ P^n and Y ~ Q^m for a two-sample scenario."""
    if not isinstance(spec, TWO_SAMPLE_FAMILIES):
        raise DataShapeError(f"{type(spec).__name__} is not a two-sample scenario")
    if n < 1 or m < 1:
        raise DataShapeError("need n, m >= 1")
    rng = np.random.default_rng(seed)
    d = spec.d
    if isinstance(spec, GaussianMeanShift):
        X = spec.sigma * rng.standard_normal((n, d))
        Y = spec.sigma * rng.standard_normal((m, d))
        if spec.shift == ALL_COORDINATES:
            Y += spec.delta
        else:
            Y[:, 0] += spec.delta
        return X, Y
    if isinstance(spec, LaplaceMeanShift):
        X = rng.laplace(0.0, spec.sigma, size=(n, d))
        Y = rng.laplace(0.0, spec.sigma, size=(m, d))
        Y[:, 0] += spec.delta
        return X, Y
    # variance shift
    X = spec.sigma * rng.standard_normal((n, d))
    X[:, -1] *= spec.tau / spec.sigma
    Y = spec.sigma * rng.standard_normal((m, d))
    return X, Y


def sample_joint(spec: DependentGaussianPairs, n: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """Draw n paired rows (X, Y) from the dependent-Gaussian scenario.

    Correlated coordinates use the triangular factor of the 2x2 block
    [[1, rho], [rho, 1]], which is positive definite for all |rho| < 1.
    """
    if not isinstance(spec, DependentGaussianPairs):
        raise DataShapeError("sample_joint needs a DependentGaussianPairs spec")
    if n < 1:
        raise DataShapeError("need n >= 1")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, spec.d))
    Z = rng.standard_normal((n, spec.d))
    Y = Z.copy()
    k = spec.k
    Y[:, :k] = spec.rho * X[:, :k] + np.sqrt(1.0 - spec.rho**2) * Z[:, :k]
    return X, Y


def is_null(spec: AlternativeSpec) -> bool:
    """Whether the scenario satisfies its null hypothesis exactly."""
    if isinstance(spec, (GaussianMeanShift, LaplaceMeanShift)):
        return spec.delta == 0.0
    if isinstance(spec, GaussianVarianceShift):
        return spec.tau == spec.sigma
    return spec.rho == 0.0


def with_dimension(spec: AlternativeSpec, d: int) -> AlternativeSpec:
    """The same scenario at a different dimension (all other fields kept)."""
    return replace(spec, d=d)
