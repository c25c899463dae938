import csv

import numpy as np
import pytest

from nldsid.bench import read_rows
from nldsid.cli import main
from nldsid.sim import read_trajectory


def test_simulate_then_fit_from_file(tmp_path, capsys):
    traj = tmp_path / "traj.csv"
    truth = tmp_path / "a.csv"
    assert main(["simulate", "--d", "3", "--rho", "0.9", "--horizon", "2000", "--seed", "4",
                 "--out", str(traj), "--matrix-out", str(truth)]) == 0
    header, states = read_trajectory(traj)
    assert states.shape == (2001, 3) and header.seed == 4
    out = tmp_path / "fit.csv"
    est = tmp_path / "ahat.csv"
    assert main(["fit", "--algo", "quasi-newton", "--input", str(traj), "--truth", str(truth),
                 "--iters", "40", "--out", str(out), "--matrix-out", str(est)]) == 0
    rows = read_rows(out)
    assert [r.updates for r in rows] == list(range(41))
    a_hat, a_star = np.loadtxt(est, delimiter=","), np.loadtxt(truth, delimiter=",")
    assert rows[-1].frob_sq_err == pytest.approx(np.sum((a_hat - a_star) ** 2))
    assert "status: ok" in capsys.readouterr().err


@pytest.mark.parametrize("algo", ["glmtron", "mom", "sgd-rer", "sgd", "sgd-er", "sgd-dd"])
def test_fit_inline_algorithms(algo, capsys):
    assert main(["fit", "--algo", algo, "--d", "2", "--rho", "0.8", "--horizon", "3000",
                 "--buffer", "40", "--gap", "4", "--iters", "50"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "algo,seed,t,updates,wall_ns,frob_sq_err"
    last = next(csv.reader([out[-1]]))
    assert last[0] == algo and np.isfinite(float(last[5]))


def test_fit_without_truth_has_nan_errors(tmp_path, capsys):
    traj = tmp_path / "traj.csv"
    main(["simulate", "--d", "2", "--horizon", "500", "--out", str(traj)])
    assert main(["fit", "--algo", "sgd-rer", "--input", str(traj), "--buffer", "20",
                 "--gap", "2"]) == 0
    last = capsys.readouterr().out.splitlines()[-1].split(",")
    assert last[5] == "nan"


def test_bernoulli_fit(capsys):
    assert main(["fit", "--algo", "glm-proj", "--system", "bernoulli", "--d", "3",
                 "--horizon", "4000", "--radius", "1"]) == 0
    rows = capsys.readouterr().out.splitlines()
    last = rows[-1].split(",")
    assert last[2] == "4000" and last[3] == "2000" and float(last[5]) < 1.0


def test_errors_exit_code_two(tmp_path, capsys):
    assert main(["fit", "--algo", "quasi-newton", "--gamma", "0.9", "--d", "2",
                 "--horizon", "200"]) == 2
    assert "error:" in capsys.readouterr().err
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("horizon = 1000\nseeds = 1\n")
    assert main(["bench", "--config", str(cfg)]) == 2


def write_cfg(tmp_path, extra=""):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"""system.d = 2
system.rho = 0.8
horizon = 2000
seeds = 1, 2
algo.quasi-newton.iters = 20
algo.sgd-rer.buffer = 40
algo.sgd-rer.gap = 4
{extra}""")
    return cfg


def test_bench_writes_csv_and_summary(tmp_path, capsys):
    out = tmp_path / "res.csv"
    assert main(["bench", "--config", str(write_cfg(tmp_path)), "--output", str(out),
                 "--workers", "2"]) == 0
    rows = read_rows(out)
    assert {r.algo for r in rows} == {"quasi-newton", "sgd-rer"}
    summary = (tmp_path / "res.csv.summary.txt").read_text()
    assert "quasi-newton" in summary and "median" in summary


def test_bench_exit_code_one_on_failed_cell(tmp_path):
    cfg = write_cfg(tmp_path, "system.kind = explicit\nsystem.d = 1\nsystem.matrix = 1e200\n"
                              "system.burn_in = 0\nalgorithms = sgd\n")
    cfg.write_text(cfg.read_text().replace("system.d = 2\n", ""))
    assert main(["bench", "--config", str(cfg), "--output", str(tmp_path / "x.csv")]) == 1


def test_sweep_cli(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--config", str(write_cfg(tmp_path)), "--axis", "algo.sgd-rer.buffer",
                 "--values", "20,40", "--output", str(out)]) == 0
    header = out.read_text().splitlines()[0]
    assert header == "algo,seed,t,updates,wall_ns,frob_sq_err,axis,axis_value"
    assert {r.axis_value for r in read_rows(out)} == {"20", "40"}


def test_lb_demo(tmp_path):
    out = tmp_path / "lb.csv"
    assert main(["lb-demo", "--ds", "4,8", "--seeds", "0,1", "--horizon", "500",
                 "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["d", "epsilon", "fraction", "seed"]
    assert len(rows) == 5 and all(0.0 <= float(r[2]) <= 1.0 for r in rows[1:])
