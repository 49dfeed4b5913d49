"""Experiment config files: flat key-value text with section headers.

The format is INI as understood by :mod:`configparser`, restricted to two
sections. ``[experiment]`` mirrors the ExperimentConfig fields plus the run
kind and output name; ``[scenario]`` holds the scenario family's parameters.
Unknown keys (and unknown sections) are errors: every violation found is
reported in a single ConfigError so a bad file can be fixed in one pass.

Example::

    [experiment]
    kind = power
    scenario = gaussian_mean_shift
    dims = 1, 4, 16, 64, 256
    statistic = mmd2_biased
    kernel = gaussian
    rules = d^0, d^0.5, d^1, median
    trials = 500
    seed = 11
    output = figA_power.csv

    [scenario]
    delta = 1.0
    sigma = 1.0

Bandwidth rule syntax: ``median``, ``fixed:GAMMA``, or ``[C*]d^ALPHA``.
"""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass

from .alternatives import (
    AlternativeSpec,
    DependentGaussianPairs,
    GaussianMeanShift,
    GaussianVarianceShift,
    LaplaceMeanShift,
)
from .exceptions import ConfigError
from .kernels import BandwidthRule
from .powerlab import ExperimentConfig
from .stats import INDEPENDENCE_KINDS, TWO_SAMPLE_KINDS

RUN_KINDS = ("power", "calibration", "approximation")

SCENARIO_NAMES = {
    "gaussian_mean_shift": GaussianMeanShift,
    "laplace_mean_shift": LaplaceMeanShift,
    "gaussian_variance_shift": GaussianVarianceShift,
    "dependent_gaussian_pairs": DependentGaussianPairs,
}

_EXPERIMENT_KEYS = {
    "kind",
    "scenario",
    "dims",
    "statistic",
    "kernel",
    "metric",
    "rules",
    "n",
    "m",
    "trials",
    "b",
    "alpha",
    "seed",
    "output",
    # approximation-only
    "mc_samples",
    "replicates",
    "tolerance",
}

_SCENARIO_KEYS = {
    "gaussian_mean_shift": {"delta", "sigma", "shift"},
    "laplace_mean_shift": {"delta", "sigma"},
    "gaussian_variance_shift": {"sigma", "tau"},
    "dependent_gaussian_pairs": {"k", "rho"},
}


@dataclass(frozen=True)
class RunSpec:
    """A parsed config file: what to run and where to write it."""

    kind: str
    experiment: ExperimentConfig
    output: str
    statistics: tuple  # one or more statistic kinds sharing the grid
    k_values: tuple = ()  # extra k settings for dependent-pairs scenarios
    mc_samples: int = 20000
    replicates: int = 10
    tolerance: float = 0.1


def parse_rule(text: str) -> BandwidthRule:
    """Parse ``median``, ``fixed:G``, ``d^A``, or ``C*d^A``."""
    text = text.strip()
    if text == "median":
        return BandwidthRule.median()
    if text.startswith("fixed:"):
        try:
            return BandwidthRule.fixed(float(text[len("fixed:"):]))
        except ValueError as exc:
            raise ConfigError(f"bad fixed bandwidth {text!r}") from exc
    c = 1.0
    body = text
    if "*" in body:
        head, body = body.split("*", 1)
        try:
            c = float(head)
        except ValueError as exc:
            raise ConfigError(f"bad rule prefactor in {text!r}") from exc
    if not body.startswith("d^"):
        raise ConfigError(f"unrecognized bandwidth rule {text!r}")
    try:
        alpha = float(body[2:])
    except ValueError as exc:
        raise ConfigError(f"bad rule exponent in {text!r}") from exc
    return BandwidthRule.power_of_dimension(c, alpha)


def _collect(errors: list, fn, *args):
    try:
        return fn(*args)
    except (ConfigError, ValueError) as exc:
        errors.append(str(exc))
        return None


def parse_config(text: str, name: str = "<config>") -> RunSpec:
    """Parse and validate a config; raises ConfigError listing every problem."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=name)
    except configparser.Error as exc:
        raise ConfigError(f"{name}: {exc}") from None

    errors: list[str] = []
    for section in parser.sections():
        if section not in ("experiment", "scenario"):
            errors.append(f"unknown section [{section}]")
    if not parser.has_section("experiment"):
        raise ConfigError(f"{name}: missing [experiment] section")
    exp = dict(parser.items("experiment"))
    scen = dict(parser.items("scenario")) if parser.has_section("scenario") else {}

    for key in sorted(set(exp) - _EXPERIMENT_KEYS):
        errors.append(f"unknown key {key!r} in [experiment]")

    kind = exp.get("kind", "power")
    if kind not in RUN_KINDS:
        errors.append(f"kind must be one of {RUN_KINDS}, got {kind!r}")

    scenario_name = exp.get("scenario")
    scenario = None
    k_values: tuple = ()
    if scenario_name not in SCENARIO_NAMES:
        errors.append(
            f"scenario must be one of {sorted(SCENARIO_NAMES)}, got {scenario_name!r}"
        )
    else:
        allowed = _SCENARIO_KEYS[scenario_name]
        for key in sorted(set(scen) - allowed):
            errors.append(f"unknown key {key!r} in [scenario] for {scenario_name}")
        kwargs = {}
        for key, value in scen.items():
            if key not in allowed:
                continue
            if key == "shift":
                kwargs[key] = value
            elif key == "k":
                # k may be a comma-separated list: one experiment per value
                parsed = _collect(
                    errors,
                    lambda v=value: tuple(int(p) for p in v.split(",") if p.strip()),
                )
                if parsed:
                    k_values = parsed
                    kwargs[key] = parsed[0]
            else:
                kwargs[key] = _collect(errors, float, value)
        if not errors:
            dims_probe = _collect(errors, _parse_dims, exp.get("dims", "1"))
            d0 = dims_probe[0] if dims_probe else 1
            scenario = _collect(
                errors, lambda: SCENARIO_NAMES[scenario_name](d=d0, **kwargs)
            )

    dims = _collect(errors, _parse_dims, exp.get("dims", "1"))
    statistics = tuple(s.strip() for s in exp.get("statistic", "").split(",") if s.strip())
    if not statistics:
        errors.append("statistic is required")
    for s in statistics:
        if s not in TWO_SAMPLE_KINDS + INDEPENDENCE_KINDS:
            errors.append(f"unknown statistic {s!r}")
    rules_text = exp.get("rules", "median")
    rules = tuple(
        r
        for r in (
            _collect(errors, parse_rule, part)
            for part in rules_text.split(",")
            if part.strip()
        )
        if r is not None
    )
    n = _collect(errors, int, exp.get("n", "100"))
    m = _collect(errors, int, exp.get("m", "100"))
    trials = _collect(errors, int, exp.get("trials", "500"))
    B = _collect(errors, int, exp.get("b", "200"))
    alpha = _collect(errors, float, exp.get("alpha", "0.05"))
    seed = _collect(errors, int, exp.get("seed", "0"))
    mc_samples = _collect(errors, int, exp.get("mc_samples", "20000"))
    replicates = _collect(errors, int, exp.get("replicates", "10"))
    tolerance = _collect(errors, float, exp.get("tolerance", "0.1"))
    output = exp.get("output", "results.csv")

    if errors:
        raise ConfigError(f"{name}: " + "; ".join(errors))

    try:
        experiment = ExperimentConfig(
            scenario=scenario,
            dims=dims,
            statistic=statistics[0],
            bandwidth_rules=rules,
            kernel_family=exp.get("kernel", "gaussian"),
            metric=exp.get("metric", "l2"),
            n=n,
            m=m,
            trials=trials,
            B=B,
            alpha=alpha,
            master_seed=seed,
            scenario_id=scenario_name,
        )
        # validate the remaining statistics against the same grid
        for s in statistics[1:]:
            ExperimentConfig(
                scenario=scenario,
                dims=dims,
                statistic=s,
                bandwidth_rules=rules,
                kernel_family=exp.get("kernel", "gaussian"),
                metric=exp.get("metric", "l2"),
                n=n,
                m=m,
                trials=trials,
                B=B,
                alpha=alpha,
                master_seed=seed,
                scenario_id=scenario_name,
            )
    except Exception as exc:
        raise ConfigError(f"{name}: {exc}") from None

    return RunSpec(
        kind=kind,
        experiment=experiment,
        output=output,
        statistics=statistics,
        k_values=k_values,
        mc_samples=mc_samples,
        replicates=replicates,
        tolerance=tolerance,
    )


def _parse_dims(text: str) -> tuple:
    try:
        dims = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise ConfigError(f"bad dims list {text!r}") from exc
    if not dims:
        raise ConfigError("dims must be a nonempty comma-separated list")
    return dims


def load_config(path: str) -> RunSpec:
    with io.open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), name=path)
