"""Monte Carlo power experiments over dimension grids and bandwidth rules.

A power experiment is a grid of cells, one per (dimension, bandwidth rule)
pair. Each cell runs independent trials: sample fresh data from the
scenario, calibrate the statistic by permutation, record the rejection.
Power is the success fraction with a Wilson 95% interval.

Determinism contract: every trial derives its random streams from
``(master_seed, d_index, rule_index, trial_index, stream)``, so results are
bit-identical for any execution order or worker count.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .alternatives import (
    AlternativeSpec,
    DependentGaussianPairs,
    divergence,
    is_null,
    sample_joint,
    sample_two_sample,
    with_dimension,
)
from .analytic import exact_mmd2_for_scenario, mmd2_montecarlo
from .exceptions import ConfigError, DegenerateDataError, NumericalError
from .kernels import BandwidthRule, KernelSpec
from .permutation import PermutationConfig, permutation_test
from .stats import StatisticSpec

_SAMPLE_STREAM = 0
_PERM_STREAM = 1


@dataclass(frozen=True)
class ExperimentConfig:
    """A full power-experiment grid.

    ``scenario`` is a template whose dimension is replaced by each entry of
    ``dims``; ``bandwidth_rules`` only matter for kernel statistics but a
    nonempty list is always required (use a single median rule otherwise, it
    is ignored and labeled "-" in the output).
    """

    scenario: AlternativeSpec
    dims: tuple
    statistic: str
    bandwidth_rules: tuple
    kernel_family: str = "gaussian"
    metric: str = "l2"
    n: int = 100
    m: int = 100
    trials: int = 500
    B: int = 200
    alpha: float = 0.05
    master_seed: int = 0
    scenario_id: str = "scenario"

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        dims = tuple(int(d) for d in self.dims)
        if len(dims) == 0 or any(b <= a for a, b in zip(dims, dims[1:])):
            raise ConfigError("dimension grid must be nonempty and strictly increasing")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "bandwidth_rules", tuple(self.bandwidth_rules))
        if len(self.bandwidth_rules) == 0:
            raise ConfigError("need at least one bandwidth rule")
        if self.n < 2 or self.m < 2:
            raise ConfigError("need n, m >= 2")
        # fail fast on bad statistic kinds / kernel families
        probe = self.statistic_spec(self.bandwidth_rules[0])
        if isinstance(self.scenario, DependentGaussianPairs) != (
            probe.mode == "independence"
        ):
            raise ConfigError(
                f"statistic {self.statistic!r} does not match the scenario's mode"
            )
        if min(self.dims) < getattr(self.scenario, "k", 1):
            raise ConfigError("dimension grid starts below the scenario's k")

    def statistic_spec(self, rule: BandwidthRule) -> StatisticSpec:
        return StatisticSpec(
            kind=self.statistic,
            kernel_family=self.kernel_family,
            bandwidth=rule,
            metric=self.metric,
        )


@dataclass(frozen=True)
class PowerCell:
    scenario: str
    d: int
    rule: str
    gamma_median: Optional[float]  # median resolved bandwidth over trials
    statistic: str
    n: int
    m: int
    trials: int
    successes: int
    power: float
    ci_lo: float
    ci_hi: float
    seed: int
    failures: int = 0


@dataclass(frozen=True)
class PowerCurve:
    cells: tuple

    def subset(self, **fixed) -> "PowerCurve":
        keep = [
            c
            for c in self.cells
            if all(getattr(c, k) == v for k, v in fixed.items())
        ]
        return PowerCurve(tuple(keep))

    def powers_by_dimension(self, rule: str) -> tuple[np.ndarray, np.ndarray]:
        cells = sorted(
            (c for c in self.cells if c.rule == rule), key=lambda c: c.d
        )
        return (
            np.array([c.d for c in cells]),
            np.array([c.power for c in cells]),
        )


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054):
    """Wilson score 95% interval for a binomial proportion."""
    if not 0 <= successes <= trials or trials < 1:
        raise ConfigError("need 0 <= successes <= trials, trials >= 1")
    p = successes / trials
    denom = 1.0 + z**2 / trials
    center = (p + z**2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z**2 / (4 * trials**2)) / denom
    return max(center - half, 0.0), min(center + half, 1.0)


def _run_trial(
    scenario: AlternativeSpec,
    statistic: StatisticSpec,
    n: int,
    m: int,
    B: int,
    alpha: float,
    trial_seed: list,
):
    """One trial: fresh data, one permutation test. Returns (reject, gamma)."""
    if statistic.mode == "two_sample":
        X, Y = sample_two_sample(scenario, n, m, trial_seed + [_SAMPLE_STREAM])
        mode = "two_sample"
    else:
        X, Y = sample_joint(scenario, n, trial_seed + [_SAMPLE_STREAM])
        mode = "independence"
    cfg = PermutationConfig(
        B=B, alpha=alpha, seed=trial_seed + [_PERM_STREAM], mode=mode
    )
    result = permutation_test(X, Y, statistic, cfg)
    return result.reject, result.gamma


def _run_cell(cfg: ExperimentConfig, d_index: int, rule_index: int) -> PowerCell:
    d = cfg.dims[d_index]
    rule = cfg.bandwidth_rules[rule_index]
    scenario = with_dimension(cfg.scenario, d)
    statistic = cfg.statistic_spec(rule)
    successes = 0
    failures = 0
    gammas = []
    for t in range(cfg.trials):
        seed = [cfg.master_seed, d_index, rule_index, t]
        try:
            reject, gamma = _run_trial(
                scenario, statistic, cfg.n, cfg.m, cfg.B, cfg.alpha, seed
            )
        except DegenerateDataError:
            failures += 1
            if failures > max(1, math.ceil(0.01 * cfg.trials)):
                raise NumericalError(
                    f"cell (d={d}, rule={rule.label()}) aborted: "
                    f"{failures} degenerate trials out of {t + 1}"
                )
            continue
        successes += int(reject)
        if gamma is not None:
            gammas.append(gamma)
    completed = cfg.trials - failures
    if completed == 0:
        raise NumericalError(f"cell (d={d}, rule={rule.label()}): no trial completed")
    lo, hi = wilson_interval(successes, completed)
    return PowerCell(
        scenario=cfg.scenario_id,
        d=d,
        rule=rule.label() if statistic.uses_kernel else "-",
        gamma_median=float(np.median(gammas)) if gammas else None,
        statistic=cfg.statistic,
        n=cfg.n,
        # independence mode has one paired sample of size n
        m=cfg.n if statistic.mode == "independence" else cfg.m,
        trials=completed,
        successes=successes,
        power=successes / completed,
        ci_lo=lo,
        ci_hi=hi,
        seed=cfg.master_seed,
        failures=failures,
    )


def run_power_experiment(cfg: ExperimentConfig, workers: int = 1) -> PowerCurve:
    """Run every (dimension, rule) cell; deterministic for any worker count.

    Cells are independent, so they may execute in parallel processes; the
    result tuple is always assembled in grid order.
    """
    # kernel statistics sweep the rules; distance statistics have one cell per d
    n_rules = len(cfg.bandwidth_rules) if cfg.statistic_spec(
        cfg.bandwidth_rules[0]
    ).uses_kernel else 1
    keys = [(i, j) for i in range(len(cfg.dims)) for j in range(n_rules)]
    if workers <= 1 or len(keys) == 1:
        cells = [_run_cell(cfg, i, j) for i, j in keys]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_cell, cfg, i, j) for i, j in keys]
            cells = [f.result() for f in futures]
    return PowerCurve(tuple(cells))


def run_calibration(cfg: ExperimentConfig, workers: int = 1):
    """Rejection rate under an exact null, with its Wilson interval.

    Raises
    ------
    ConfigError
        If the scenario does not satisfy its null hypothesis exactly.
    """
    if not is_null(cfg.scenario):
        raise ConfigError(
            "calibration needs an exact null scenario (delta = 0, tau = sigma, or rho = 0)"
        )
    curve = run_power_experiment(cfg, workers=workers)
    successes = sum(c.successes for c in curve.cells)
    trials = sum(c.trials for c in curve.cells)
    rate = successes / trials
    return rate, wilson_interval(successes, trials), curve


@dataclass(frozen=True)
class ApproximationRow:
    scenario: str
    d: int
    gamma: float
    analytic: float
    mc_estimate: float
    mc_stderr: float
    rel_gap: float
    flag: bool


def run_approximation_check(
    scenario: AlternativeSpec,
    kernel_family: str,
    dims,
    rule: BandwidthRule,
    N: int = 20000,
    replicates: int = 10,
    tolerance: float = 0.1,
    master_seed: int = 0,
    scenario_id: str = "scenario",
) -> tuple:
    """Analytic population MMD^2 vs the Monte Carlo oracle over a dim grid.

    The bandwidth rule must be resolvable from the dimension alone (fixed or
    power of dimension); rows with |relative gap| above ``tolerance`` are
    flagged.
    """
    if rule.kind == "median":
        raise ConfigError(
            "approximation checks need a fixed or power-of-dimension bandwidth"
        )
    rows = []
    for i, d in enumerate(dims):
        spec_d = with_dimension(scenario, int(d))
        gamma = rule.gamma if rule.kind == "fixed" else rule.c * float(d) ** rule.alpha
        kernel = KernelSpec(kernel_family, gamma)
        analytic, _method = exact_mmd2_for_scenario(spec_d, kernel)
        est, se = mmd2_montecarlo(
            spec_d, kernel, N, [master_seed, i], replicates=replicates
        )
        rel_gap = (est - analytic) / analytic if analytic != 0.0 else math.inf
        rows.append(
            ApproximationRow(
                scenario=scenario_id,
                d=int(d),
                gamma=gamma,
                analytic=analytic,
                mc_estimate=est,
                mc_stderr=se,
                rel_gap=rel_gap,
                flag=abs(rel_gap) > tolerance,
            )
        )
    return tuple(rows)
