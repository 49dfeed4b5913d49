import json
import os

import numpy as np
import pytest

import hdtest.cli as cli
from hdtest.cli import main
from hdtest.exceptions import NumericalError


def _write(path, rows):
    path.write_text("\n".join(",".join(repr(float(v)) for v in r) for r in rows) + "\n")


@pytest.fixture()
def sample_files(tmp_path):
    rng = np.random.default_rng(5)
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    _write(a, rng.standard_normal((20, 2)))
    _write(b, rng.standard_normal((20, 2)) + 5.0)
    return str(a), str(b)


def test_stat_biased_mmd_identical_files(sample_files, capsys):
    a, _ = sample_files
    rc = main(["stat", "--two-sample", a, a, "--statistic", "mmd2b"])
    out = capsys.readouterr().out
    assert rc == 0
    value = float(out.split("value=")[1])
    assert value == pytest.approx(0.0, abs=1e-12)
    assert "statistic=mmd2_biased" in out
    assert "gamma=" in out


def test_stat_unbiased_mmd_identical_files_is_negative(sample_files, capsys):
    """mmd2u drops the diagonal, so identical samples give a strictly
    negative value, not zero."""
    a, _ = sample_files
    rc = main(["stat", "--two-sample", a, a, "--statistic", "mmd2u"])
    assert rc == 0
    value = float(capsys.readouterr().out.split("value=")[1])
    assert value < 0.0


def test_stat_dcor2_perfect_dependence(tmp_path, capsys):
    # X = (0, 1), Y = 2X: rows are (x_i, y_i)
    f = tmp_path / "xy.csv"
    f.write_text("0.0,0.0\n1.0,2.0\n")
    rc = main(["stat", "--independence", str(f), "--xdim", "1", "--statistic", "dcor2"])
    assert rc == 0
    value = float(capsys.readouterr().out.split("value=")[1])
    assert value == pytest.approx(1.0, abs=1e-12)


def test_stat_energy_and_header_flag(tmp_path, capsys):
    f1 = tmp_path / "h1.csv"
    f2 = tmp_path / "h2.csv"
    f1.write_text("x,y\n0.0,0.0\n1.0,1.0\n")
    f2.write_text("x,y\n3.0,3.0\n4.0,4.0\n")
    rc = main(["stat", "--two-sample", str(f1), str(f2), "--statistic", "energy", "--header"])
    assert rc == 0
    assert float(capsys.readouterr().out.split("value=")[1]) > 0


def test_malformed_csv_exits_2(tmp_path, capsys):
    f = tmp_path / "bad.csv"
    f.write_text("1.0,2.0\n3.0,oops\n")
    rc = main(["stat", "--two-sample", str(f), str(f), "--statistic", "mmd2b"])
    assert rc == 2
    assert "CSV parse failure" in capsys.readouterr().err


def test_missing_file_exits_2(capsys):
    rc = main(["stat", "--two-sample", "/nonexistent.csv", "/nonexistent.csv", "--statistic", "mmd2b"])
    assert rc == 2


def test_statistic_mode_mismatch_exits_2(sample_files, capsys):
    a, b = sample_files
    rc = main(["stat", "--two-sample", a, b, "--statistic", "dcor2"])
    assert rc == 2


def test_test_subcommand_separated_samples(sample_files, capsys, tmp_path):
    a, b = sample_files
    null_out = tmp_path / "null.csv"
    rc = main([
        "test", "--two-sample", a, b, "--statistic", "mmd2b",
        "-B", "200", "--seed", "7", "--null-out", str(null_out),
    ])
    out = capsys.readouterr().out
    assert rc == 0
    assert "reject=true" in out
    assert float(out.split("p_value=")[1].splitlines()[0]) == pytest.approx(1 / 201)
    lines = null_out.read_text().splitlines()
    assert lines[0] == "null_statistic" and len(lines) == 201


def test_test_subcommand_deterministic(sample_files, capsys):
    a, b = sample_files
    main(["test", "--two-sample", a, b, "--statistic", "mmd2u", "--seed", "3"])
    first = capsys.readouterr().out
    main(["test", "--two-sample", a, b, "--statistic", "mmd2u", "--seed", "3"])
    assert capsys.readouterr().out == first


def test_analytic_gaussian_exact_value(capsys):
    rc = main([
        "analytic", "gaussian-exact",
        "--d", "1", "--mu", "1", "--sigma", "1", "--gamma", "1.4142135623730951",
    ])
    assert rc == 0
    value = float(capsys.readouterr().out.split("value=")[1])
    assert value == pytest.approx(np.sqrt(2) * (1 - np.exp(-0.125)), abs=1e-12)


def test_analytic_kl_constant_in_d(capsys):
    vals = []
    for d in ("1", "50"):
        main(["analytic", "kl", "--scenario", "gaussian-mean", "--d", d, "--delta", "1"])
        vals.append(float(capsys.readouterr().out.split("value=")[1]))
    assert vals[0] == vals[1] == pytest.approx(0.5)


def test_analytic_regime_requires_family(capsys):
    rc = main(["analytic", "regime", "--mu", "1", "--sigma", "1", "--d", "10", "--eps", "0.2"])
    assert rc == 2  # no --family given


def test_experiment_roundtrip_and_rerun_identical(tmp_path, capsys):
    cfg = tmp_path / "mini.cfg"
    cfg.write_text(
        """\
[experiment]
kind = power
scenario = gaussian_mean_shift
dims = 1, 2
statistic = mmd2_biased
rules = median, d^0.5
n = 10
m = 10
trials = 6
b = 29
seed = 9
output = mini.csv

[scenario]
delta = 2.0
"""
    )
    out1 = tmp_path / "run1"
    out2 = tmp_path / "run2"
    assert main(["experiment", str(cfg), "--output-dir", str(out1)]) == 0
    assert main(["experiment", str(cfg), "--output-dir", str(out2), "--threads", "2"]) == 0
    csv1 = (out1 / "mini.csv").read_bytes()
    csv2 = (out2 / "mini.csv").read_bytes()
    assert csv1 == csv2
    lines = csv1.decode().splitlines()
    assert lines[0] == cli.POWER_HEADER
    assert len(lines) == 1 + 2 * 2  # 2 dims x 2 rules
    manifest = json.loads((out1 / "mini.csv.manifest.json").read_text())
    assert manifest["version"] and manifest["master_seed"] == 9
    assert manifest["config"]["dims"] == [1, 2]
    assert manifest["outputs"] == ["mini.csv"]


def test_experiment_calibration_manifest_extra(tmp_path):
    cfg = tmp_path / "null.cfg"
    cfg.write_text(
        """\
[experiment]
kind = calibration
scenario = gaussian_mean_shift
dims = 2
statistic = mmd2_biased
rules = median
n = 10
m = 10
trials = 20
b = 19
alpha = 0.2
seed = 1
output = null.csv

[scenario]
delta = 0.0
"""
    )
    assert main(["experiment", str(cfg), "--output-dir", str(tmp_path)]) == 0
    manifest = json.loads((tmp_path / "null.csv.manifest.json").read_text())
    assert 0.0 <= manifest["rejection_rate"] <= 1.0
    lo, hi = manifest["rate_ci"]
    assert lo <= manifest["rejection_rate"] <= hi


def test_experiment_bundled_config_name_resolves():
    path = cli._resolve_config_path("figA")
    assert path.endswith("figA.cfg") and os.path.exists(path)
    with pytest.raises(Exception):
        cli._resolve_config_path("figZZZ")


def test_experiment_bad_config_exits_2_without_output(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[experiment]\nkind = nope\nstatistic = mmd2_biased\nscenario = gaussian_mean_shift\noutput = x.csv\n")
    rc = main(["experiment", str(cfg), "--output-dir", str(tmp_path)])
    assert rc == 2
    assert not (tmp_path / "x.csv").exists()


def test_numerical_failure_exits_3(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "mini.cfg"
    cfg.write_text(
        """\
[experiment]
scenario = gaussian_mean_shift
dims = 1
statistic = mmd2_biased
trials = 2
n = 5
m = 5
b = 9
output = x.csv

[scenario]
delta = 1.0
"""
    )

    def boom(spec, workers):
        raise NumericalError("injected")

    monkeypatch.setattr(cli, "run_spec_outputs", boom)
    rc = main(["experiment", str(cfg), "--output-dir", str(tmp_path)])
    assert rc == 3
    assert not (tmp_path / "x.csv").exists()
    assert "injected" in capsys.readouterr().err
