import pytest

from hdtest.alternatives import DependentGaussianPairs, GaussianMeanShift
from hdtest.config import load_config, parse_config, parse_rule
from hdtest.exceptions import ConfigError

GOOD = """\
[experiment]
kind = power
scenario = gaussian_mean_shift
dims = 1, 4, 16
statistic = mmd2_biased
rules = d^0, d^0.5, median
n = 40
m = 40
trials = 50
b = 99
alpha = 0.05
seed = 11
output = out.csv

[scenario]
delta = 1.0
sigma = 1.0
"""


def test_good_config_round_trip():
    spec = parse_config(GOOD)
    assert spec.kind == "power"
    assert spec.output == "out.csv"
    assert spec.statistics == ("mmd2_biased",)
    cfg = spec.experiment
    assert isinstance(cfg.scenario, GaussianMeanShift)
    assert cfg.scenario.delta == 1.0
    assert cfg.dims == (1, 4, 16)
    assert cfg.n == 40 and cfg.m == 40 and cfg.trials == 50
    assert cfg.B == 99 and cfg.alpha == 0.05 and cfg.master_seed == 11
    assert [r.label() for r in cfg.bandwidth_rules] == ["d^0", "d^0.5", "median"]
    assert cfg.scenario_id == "gaussian_mean_shift"


def test_parse_rule_variants():
    assert parse_rule("median").kind == "median"
    r = parse_rule("fixed:1.5")
    assert r.kind == "fixed" and r.gamma == 1.5
    r = parse_rule("d^0.5")
    assert r.kind == "power" and r.c == 1.0 and r.alpha == 0.5
    r = parse_rule("2*d^0.5")
    assert r.c == 2.0 and r.alpha == 0.5
    for bad in ("median2", "d^x", "q*d^1", "fixed:abc", "gamma=3"):
        with pytest.raises(ConfigError):
            parse_rule(bad)


def test_missing_experiment_section():
    with pytest.raises(ConfigError, match="missing \\[experiment\\]"):
        parse_config("[scenario]\ndelta = 1\n")


def test_all_violations_reported_at_once():
    text = """\
[experiment]
kind = powerful
scenario = gaussian_blur
dims = 1, two
statistic = tstat
rules = d^x
n = forty

[typo_section]
x = 1
"""
    with pytest.raises(ConfigError) as err:
        parse_config(text, name="bad.cfg")
    msg = str(err.value)
    assert msg.startswith("bad.cfg: ")
    for fragment in ("kind", "scenario", "tstat", "d^x", "typo_section"):
        assert fragment in msg


def test_unknown_keys_rejected():
    text = GOOD + "oops = 1\n"
    with pytest.raises(ConfigError, match="unknown key 'oops'"):
        parse_config(text)
    text = GOOD.replace("sigma = 1.0", "sigma = 1.0\nrho = 0.5")
    with pytest.raises(ConfigError, match="'rho'"):
        parse_config(text)


def test_statistic_list_and_defaults():
    text = GOOD.replace("statistic = mmd2_biased", "statistic = mmd2_biased, mmd2_unbiased")
    spec = parse_config(text)
    assert spec.statistics == ("mmd2_biased", "mmd2_unbiased")
    assert spec.mc_samples == 20000 and spec.replicates == 10 and spec.tolerance == 0.1


def test_dependent_pairs_k_list():
    text = """\
[experiment]
kind = power
scenario = dependent_gaussian_pairs
dims = 8, 16
statistic = dcor2
trials = 10
n = 20

[scenario]
k = 4, 8
rho = 0.5
"""
    spec = parse_config(text)
    assert spec.k_values == (4, 8)
    assert isinstance(spec.experiment.scenario, DependentGaussianPairs)
    assert spec.experiment.scenario.k == 4


def test_scenario_statistic_mode_mismatch():
    text = GOOD.replace("statistic = mmd2_biased", "statistic = dcor2")
    with pytest.raises(ConfigError):
        parse_config(text)


def test_load_config_from_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(GOOD)
    spec = load_config(str(path))
    assert spec.experiment.dims == (1, 4, 16)
    with pytest.raises(ConfigError) as err:
        bad = tmp_path / "bad.cfg"
        bad.write_text(GOOD.replace("kind = power", "kind = nope"))
        load_config(str(bad))
    assert str(bad) in str(err.value)
