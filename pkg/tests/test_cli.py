import csv
import io

import pytest

from distbeam.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_bounds_equal_gains(capsys):
    code, out, _ = run_cli(capsys, "bounds", "--ets", "5", "--equal-gains", "--eta-target", "0.99")
    assert code == 0
    assert "9.61888" in out.splitlines()[0]


def test_bounds_reports_lower_bound(capsys):
    code, out, _ = run_cli(capsys, "bounds", "--equal-gains", "--slots", "10", "--algorithm", "a1")
    assert code == 0 and "lower bound at N_t=10" in out


def test_sequential_two_ets(capsys):
    code, out, _ = run_cli(capsys, "sequential", "--ets", "2", "--slots", "64", "--bits", "1",
                           "--algorithm", "a2", "--seed", "7")
    assert code == 0
    fields = dict(kv.split("=") for kv in out.split())
    assert float(fields["eta"]) >= 0.9999
    assert fields["slots"] == "64"


def test_experiment_coin_csv(capsys):
    code, out, err = run_cli(capsys, "experiment", "--figure", "coin", "--trials", "10")
    assert code == 0
    rows = list(csv.DictReader(line for line in io.StringIO(out) if not line.startswith("#")))
    assert {float(r["p"]) for r in rows} == {0.1, 0.3, 0.5, 0.7, 0.9}
    assert "coin" in err


def test_same_arguments_same_bytes(capsys):
    argv = ("experiment", "--figure", "f8", "--trials", "5", "--seed", "4")
    _, first, _ = run_cli(capsys, *argv)
    _, second, _ = run_cli(capsys, *argv)
    assert first == second


@pytest.mark.parametrize("cmd", ["adapt", "sequential", "parallel", "rpp"])
def test_simulations_write_trajectory(capsys, tmp_path, cmd):
    out_path = tmp_path / "traj.csv"
    code, out, _ = run_cli(capsys, cmd, "--ets", "4", "--out", str(out_path))
    assert code == 0 and out.strip()
    lines = out_path.read_text().splitlines()
    assert lines[0] == "slot,time_s,power_w" and len(lines) > 1


def test_usage_errors(capsys):
    assert run_cli(capsys, "sequential", "--bogus")[0] == 1
    assert run_cli(capsys)[0] == 1
    assert run_cli(capsys, "sequential", "--algorithm", "a9")[0] == 1
    assert run_cli(capsys, "experiment")[0] == 1


@pytest.mark.parametrize("argv,needle", [
    (("sequential", "--ets", "1"), "num_ets must be >= 2"),
    (("sequential", "--slots", "7"), "multiple of 2^B"),
    (("parallel", "--p", "1.5"), "adapt_prob"),
    (("bounds", "--equal-gains", "--eta-target", "0.1"), "unreachable"),
    (("experiment", "--figure", "nope"), "unknown figure"),
    (("adapt", "--adapting", "0,9"), "adapting indices"),
])
def test_domain_errors(capsys, argv, needle):
    code, _, err = run_cli(capsys, *argv)
    assert code == 2
    assert needle in err


def test_config_precedence(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("ets = 3\nslots = 4\n")
    _, out, _ = run_cli(capsys, "sequential", "--config", str(cfg))
    assert "slots=8" in out
    _, out, _ = run_cli(capsys, "sequential", "--config", str(cfg), "--slots", "6")
    assert "slots=12" in out


def test_experiment_config_overrides(capsys, tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("figure = coin\ntrials = 2\nintervals = 2\n")
    code, out, _ = run_cli(capsys, "experiment", "--config", str(cfg), "--set", "p_values=0.5")
    assert code == 0
    body = [line for line in out.splitlines() if not line.startswith("#")]
    assert len(body) == 1 + 2


def test_help_mentions_precedence(capsys):
    with pytest.raises(SystemExit):
        main(["sequential", "--help"])
    assert "Precedence" in capsys.readouterr().out


def test_missing_config_file(capsys, tmp_path):
    code, _, err = run_cli(capsys, "bounds", "--config", str(tmp_path / "none.cfg"))
    assert code == 1 and "cannot read config file" in err
