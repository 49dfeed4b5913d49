"""Command-line interface.

Subcommands:

* ``stat``        compute one statistic on CSV data
* ``test``        permutation test on CSV data
* ``experiment``  run a power / calibration / approximation config
* ``analytic``    evaluate closed-form population quantities

Data CSVs have no header by default (``--header`` skips one line), one
sample per row. Independence files carry X and Y side by side with
``--xdim`` giving the number of X columns.

Exit codes: 0 success, 2 usage/config/data error, 3 numerical failure.
Output CSVs are built in memory and written whole, so a nonzero exit never
leaves a partial file.
"""
from __future__ import annotations

import argparse
import datetime
import importlib.resources
import json
import os
import sys

import numpy as np

from . import __version__
from .alternatives import (
    DependentGaussianPairs,
    GaussianMeanShift,
    GaussianVarianceShift,
    LaplaceMeanShift,
    divergence,
)
from .analytic import (
    Marginal,
    laplace_mmd2_exact_1d,
    mmd2_diffvar_taylor,
    mmd2_gaussian_exact,
    mmd2_gaussian_taylor,
    mmd2_laplace_taylor,
    mmd2_spectral_1d,
    regime_prediction,
    REGIME_FAMILIES,
)
from .config import RunSpec, load_config, parse_rule
from .exceptions import ConfigError, HDTestError, NumericalError
from .kernels import GAUSSIAN, KernelSpec, LAPLACE, resolve_bandwidth
from .permutation import PermutationConfig, permutation_test
from .powerlab import (
    run_approximation_check,
    run_calibration,
    run_power_experiment,
)
from .stats import (
    INDEPENDENCE_KINDS,
    StatisticSpec,
    TWO_SAMPLE_KINDS,
    dcor2,
    dcov2,
    energy_two_sample,
    hsic,
    mmd2_biased,
    mmd2_unbiased,
    udcor2,
)

POWER_HEADER = "scenario,d,rule,gamma_median,statistic,n,m,trials,successes,power,ci_lo,ci_hi,seed"
APPROX_HEADER = "scenario,d,gamma,analytic,mc_estimate,mc_stderr,rel_gap,flag"

_STAT_ALIASES = {
    "mmd2b": "mmd2_biased",
    "mmd2u": "mmd2_unbiased",
}


def _statistic_kind(name: str) -> str:
    kind = _STAT_ALIASES.get(name, name)
    if kind not in TWO_SAMPLE_KINDS + INDEPENDENCE_KINDS:
        raise ConfigError(f"unknown statistic {name!r}")
    return kind


def _load_csv(path: str, header: bool) -> np.ndarray:
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1 if header else 0, ndmin=2)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{path}: CSV parse failure: {exc}") from None
    if data.size == 0:
        raise ConfigError(f"{path}: no data rows")
    return data


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _load_inputs(args):
    """Shared data loading for stat/test: returns (X, Y, mode)."""
    if args.two_sample:
        if len(args.files) != 2:
            raise ConfigError("--two-sample needs exactly two CSV files")
        X = _load_csv(args.files[0], args.header)
        Y = _load_csv(args.files[1], args.header)
        return X, Y, "two_sample"
    if len(args.files) != 1:
        raise ConfigError("--independence needs exactly one CSV file")
    XY = _load_csv(args.files[0], args.header)
    if args.xdim is None:
        raise ConfigError("--independence needs --xdim")
    if not 1 <= args.xdim < XY.shape[1]:
        raise ConfigError(
            f"--xdim must be in [1, {XY.shape[1] - 1}] for {XY.shape[1]} columns"
        )
    return XY[:, : args.xdim], XY[:, args.xdim :], "independence"


def _statistic_spec(args) -> StatisticSpec:
    return StatisticSpec(
        kind=_statistic_kind(args.statistic),
        kernel_family=args.kernel,
        bandwidth=parse_rule(args.bandwidth),
        metric=args.metric,
    )


def cmd_stat(args) -> int:
    X, Y, mode = _load_inputs(args)
    spec = _statistic_spec(args)
    if spec.mode != mode:
        raise ConfigError(f"statistic {spec.kind!r} needs --{spec.mode.replace('_', '-')}")
    gamma = None
    if spec.kind in ("mmd2_biased", "mmd2_unbiased"):
        gamma = resolve_bandwidth(spec.bandwidth, np.vstack([X, Y]))
        kern = KernelSpec(spec.kernel_family, gamma)
        value = {"mmd2_biased": mmd2_biased, "mmd2_unbiased": mmd2_unbiased}[spec.kind](
            X, Y, kern
        )
    elif spec.kind == "energy":
        value = energy_two_sample(X, Y, spec.metric)
    elif spec.kind == "hsic":
        gx = resolve_bandwidth(spec.bandwidth, X)
        gy = resolve_bandwidth(spec.bandwidth, Y)
        gamma = gx
        value = hsic(X, Y, KernelSpec(spec.kernel_family, gx), KernelSpec(spec.kernel_family, gy))
    else:
        value = {"dcov2": dcov2, "dcor2": dcor2, "udcor2": udcor2}[spec.kind](X, Y)
    print(f"statistic={spec.kind}")
    if gamma is not None:
        print(f"gamma={_fmt(float(gamma))}")
    print(f"n={X.shape[0]} m={Y.shape[0]} d={X.shape[1]}")
    print(f"value={_fmt(float(value))}")
    return 0


def cmd_test(args) -> int:
    X, Y, mode = _load_inputs(args)
    spec = _statistic_spec(args)
    if spec.mode != mode:
        raise ConfigError(f"statistic {spec.kind!r} needs --{spec.mode.replace('_', '-')}")
    cfg = PermutationConfig(B=args.permutations, alpha=args.alpha, seed=args.seed, mode=mode)
    result = permutation_test(X, Y, spec, cfg)
    print(f"statistic={spec.kind}")
    if result.gamma is not None:
        print(f"gamma={_fmt(float(result.gamma))}")
    print(f"observed={_fmt(result.observed)}")
    print(f"threshold={_fmt(result.threshold)}")
    print(f"p_value={_fmt(result.p_value)}")
    print(f"reject={str(result.reject).lower()}")
    if args.null_out:
        lines = ["null_statistic"] + [_fmt(float(v)) for v in result.null_sample]
        with open(args.null_out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    return 0


def _resolve_config_path(name: str) -> str:
    if os.path.exists(name):
        return name
    bundled = importlib.resources.files("hdtest") / "configs" / f"{name}.cfg"
    if bundled.is_file():
        return str(bundled)
    raise ConfigError(f"config {name!r}: no such file and no bundled config of that name")


def _power_csv(cells) -> str:
    lines = [POWER_HEADER]
    for c in cells:
        lines.append(
            ",".join(
                _fmt(v)
                for v in (
                    c.scenario,
                    c.d,
                    c.rule,
                    c.gamma_median,
                    c.statistic,
                    c.n,
                    c.m,
                    c.trials,
                    c.successes,
                    float(c.power),
                    float(c.ci_lo),
                    float(c.ci_hi),
                    c.seed,
                )
            )
        )
    return "\n".join(lines) + "\n"


def _approx_csv(rows) -> str:
    lines = [APPROX_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                _fmt(v)
                for v in (
                    r.scenario,
                    r.d,
                    float(r.gamma),
                    float(r.analytic),
                    float(r.mc_estimate),
                    float(r.mc_stderr),
                    float(r.rel_gap),
                    r.flag,
                )
            )
        )
    return "\n".join(lines) + "\n"


def run_spec_outputs(spec: RunSpec, workers: int) -> tuple[str, dict]:
    """Execute a parsed RunSpec; returns (csv text, extra manifest fields)."""
    import dataclasses

    extra: dict = {}
    if spec.kind == "power":
        cells = []
        base = spec.experiment
        variants = [(base.scenario, base.scenario_id)]
        if len(spec.k_values) > 1:
            variants = [
                (
                    dataclasses.replace(base.scenario, k=k),
                    f"{base.scenario_id}:k={k}",
                )
                for k in spec.k_values
            ]
        for kind in spec.statistics:
            for scenario, scenario_id in variants:
                cfg = dataclasses.replace(
                    base, statistic=kind, scenario=scenario, scenario_id=scenario_id
                )
                cells.extend(run_power_experiment(cfg, workers=workers).cells)
        return _power_csv(cells), extra
    if spec.kind == "calibration":
        rate, (lo, hi), curve = run_calibration(spec.experiment, workers=workers)
        extra["rejection_rate"] = rate
        extra["rate_ci"] = [lo, hi]
        return _power_csv(curve.cells), extra
    # approximation
    rule = spec.experiment.bandwidth_rules[0]
    rows = run_approximation_check(
        spec.experiment.scenario,
        spec.experiment.kernel_family,
        spec.experiment.dims,
        rule,
        N=spec.mc_samples,
        replicates=spec.replicates,
        tolerance=spec.tolerance,
        master_seed=spec.experiment.master_seed,
        scenario_id=spec.experiment.scenario_id,
    )
    extra["flagged_rows"] = sum(1 for r in rows if r.flag)
    return _approx_csv(rows), extra


def cmd_experiment(args) -> int:
    path = _resolve_config_path(args.config)
    spec = load_config(path)
    started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    csv_text, extra = run_spec_outputs(spec, workers=args.threads)
    out_dir = args.output_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    out_path = os.path.join(out_dir, spec.output)
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text)
    manifest = {
        "tool": "hdtest",
        "version": __version__,
        "config_file": path,
        "config": {
            "kind": spec.kind,
            "scenario": spec.experiment.scenario_id,
            "scenario_params": _scenario_params(spec),
            "dims": list(spec.experiment.dims),
            "statistics": list(spec.statistics),
            "kernel": spec.experiment.kernel_family,
            "metric": spec.experiment.metric,
            "rules": [r.label() for r in spec.experiment.bandwidth_rules],
            "n": spec.experiment.n,
            "m": spec.experiment.m,
            "trials": spec.experiment.trials,
            "B": spec.experiment.B,
            "alpha": spec.experiment.alpha,
        },
        "master_seed": spec.experiment.master_seed,
        "started": started,
        "finished": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "outputs": [spec.output],
    }
    manifest.update(extra)
    manifest_path = out_path + ".manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {out_path}")
    print(f"wrote {manifest_path}")
    for key, value in extra.items():
        print(f"{key}={value}")
    return 0


def _scenario_params(spec: RunSpec) -> dict:
    import dataclasses

    return {
        k: v for k, v in dataclasses.asdict(spec.experiment.scenario).items() if k != "d"
    }


_KL_SCENARIOS = ("gaussian-mean", "gaussian-mean-all", "laplace-mean", "variance", "dependent")


def cmd_analytic(args) -> int:
    f = args.formula
    if f == "gaussian-exact":
        mu2 = np.zeros(args.d)
        mu2[0] = args.mu
        value = mmd2_gaussian_exact(np.zeros(args.d), mu2, args.sigma**2, args.gamma)
        method = "exact"
    elif f == "gaussian-taylor":
        value = mmd2_gaussian_taylor(args.mu, args.sigma, args.gamma, args.d)
        method = "taylor"
    elif f == "laplace-taylor":
        value = mmd2_laplace_taylor(args.mu, args.sigma, args.gamma, args.d)
        method = "taylor"
    elif f == "laplace-exact-1d":
        value = laplace_mmd2_exact_1d(args.mu, args.sigma, args.gamma)
        method = "exact"
    elif f == "diffvar-taylor":
        value = mmd2_diffvar_taylor(args.sigma, args.tau, args.gamma, args.d)
        method = "taylor"
    elif f == "regime":
        value = regime_prediction(args.family, args.mu, args.sigma, args.d, args.eps)
        method = "regime"
    elif f == "spectral":
        fam = args.pq_family
        p = Marginal(fam, 0.0, args.sigma)
        q = Marginal(fam, args.mu, args.sigma)
        value = mmd2_spectral_1d(p, q, KernelSpec(args.kernel, args.gamma))
        method = "quadrature"
    else:  # kl
        if args.scenario == "gaussian-mean":
            spec = GaussianMeanShift(d=args.d, sigma=args.sigma, delta=args.delta)
        elif args.scenario == "gaussian-mean-all":
            spec = GaussianMeanShift(d=args.d, sigma=args.sigma, delta=args.delta, shift="all")
        elif args.scenario == "laplace-mean":
            spec = LaplaceMeanShift(d=args.d, sigma=args.sigma, delta=args.delta)
        elif args.scenario == "variance":
            spec = GaussianVarianceShift(d=args.d, sigma=args.sigma, tau=args.tau)
        else:
            spec = DependentGaussianPairs(d=max(args.d, args.k), k=args.k, rho=args.rho)
        div = divergence(spec)
        print(f"formula=kl scenario={args.scenario}")
        print(f"kind={div.kind}")
        print(f"value={_fmt(div.value)}")
        return 0
    print(f"formula={f}")
    print(f"method={method}")
    print(f"value={_fmt(float(value))}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdtest",
        description="Kernel and distance based two-sample / independence testing lab.",
    )
    parser.add_argument("--version", action="version", version=f"hdtest {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_data_flags(p):
        group = p.add_mutually_exclusive_group(required=True)
        group.add_argument("--two-sample", action="store_true")
        group.add_argument("--independence", action="store_true")
        p.add_argument("files", nargs="+", help="input CSV file(s)")
        p.add_argument("--header", action="store_true", help="skip one header line")
        p.add_argument("--xdim", type=int, help="number of X columns (independence)")
        p.add_argument("--statistic", required=True)
        p.add_argument("--kernel", choices=[GAUSSIAN, LAPLACE], default=GAUSSIAN)
        p.add_argument("--bandwidth", default="median", help="median | fixed:G | [C*]d^A")
        p.add_argument("--metric", choices=["l2", "l1"], default="l2")

    p_stat = sub.add_parser("stat", help="compute a statistic")
    add_data_flags(p_stat)
    p_stat.set_defaults(func=cmd_stat)

    p_test = sub.add_parser("test", help="permutation test")
    add_data_flags(p_test)
    p_test.add_argument("-B", "--permutations", type=int, default=200)
    p_test.add_argument("--alpha", type=float, default=0.05)
    p_test.add_argument("--seed", type=int, default=0)
    p_test.add_argument("--null-out", help="write the permutation null sample as CSV")
    p_test.set_defaults(func=cmd_test)

    p_exp = sub.add_parser("experiment", help="run a config file")
    p_exp.add_argument("config", help="config path or bundled config name (figA...)")
    p_exp.add_argument("--output-dir", default=None)
    p_exp.add_argument(
        "--threads",
        type=int,
        default=int(os.environ.get("HDTEST_THREADS", "1")),
        help="worker cap; never affects results",
    )
    p_exp.set_defaults(func=cmd_experiment)

    p_an = sub.add_parser("analytic", help="evaluate population formulas")
    p_an.add_argument(
        "formula",
        choices=[
            "gaussian-exact",
            "gaussian-taylor",
            "laplace-taylor",
            "laplace-exact-1d",
            "diffvar-taylor",
            "regime",
            "spectral",
            "kl",
        ],
    )
    p_an.add_argument("--d", type=int, default=1)
    p_an.add_argument("--mu", type=float, default=1.0, help="mean shift / ||Delta||")
    p_an.add_argument("--sigma", type=float, default=1.0)
    p_an.add_argument("--tau", type=float, default=2.0)
    p_an.add_argument("--gamma", type=float, default=1.0)
    p_an.add_argument("--eps", type=float, default=None)
    p_an.add_argument("--family", choices=list(REGIME_FAMILIES))
    p_an.add_argument("--kernel", choices=[GAUSSIAN, LAPLACE], default=GAUSSIAN)
    p_an.add_argument("--pq-family", choices=[GAUSSIAN, LAPLACE], default=GAUSSIAN)
    p_an.add_argument("--scenario", choices=list(_KL_SCENARIOS))
    p_an.add_argument("--delta", type=float, default=1.0)
    p_an.add_argument("--k", type=int, default=4)
    p_an.add_argument("--rho", type=float, default=0.5)
    p_an.set_defaults(func=cmd_analytic)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except HDTestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
