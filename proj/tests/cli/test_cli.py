import csv
import json
import signal
import subprocess
import time

from conftest import CLI, run, write_config


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def test_help_and_bad_usage(tmp_path):
    assert run(["--help"], tmp_path).returncode == 0
    assert run([], tmp_path).returncode == 2
    assert run(["frobnicate"], tmp_path).returncode == 2
    assert run(["solve", "--knots", "many"], tmp_path).returncode == 2


def test_simulate_writes_panel(tmp_path, small_config):
    run(["--config", small_config, "--out", "o", "simulate"], tmp_path, check=0)
    rows = read_csv(tmp_path / "o" / "panel.csv")
    assert len(rows) == 400
    assert rows[0]["t"] == "1"
    meta = json.loads((tmp_path / "o" / "panel.meta.json").read_text())
    assert meta["T"] == 400
    assert abs(sum(meta["choice_frequencies"]) - 1.0) < 1e-12
    assert (tmp_path / "o" / "config.json").exists()


def test_output_directory_is_created(tmp_path, small_config):
    run(["--config", small_config, "--out", "deep/er/dir", "simulate"], tmp_path, check=0)
    assert (tmp_path / "deep" / "er" / "dir" / "panel.csv").exists()


def test_same_seed_same_bytes(tmp_path, small_config):
    run(["--config", small_config, "--out", "a", "--seed", "3", "simulate"], tmp_path, check=0)
    run(["--config", small_config, "--out", "b", "--seed", "3", "simulate"], tmp_path, check=0)
    run(["--config", small_config, "--out", "c", "--seed", "4", "simulate"], tmp_path, check=0)
    a = (tmp_path / "a" / "panel.csv").read_bytes()
    assert a == (tmp_path / "b" / "panel.csv").read_bytes()
    assert a != (tmp_path / "c" / "panel.csv").read_bytes()


def test_solve_log_contracts(tmp_path, small_config):
    run(["--config", small_config, "--out", "o", "solve"], tmp_path, check=0)
    log = read_csv(tmp_path / "o" / "convergence.csv")
    assert float(log[-1]["delta"]) < 1e-9
    for row in log[1:]:
        assert float(row["ratio"]) <= 0.8 + 1e-6
    meta = json.loads((tmp_path / "o" / "solve.json").read_text())
    assert meta["iterations"] == len(log)
    table = read_csv(tmp_path / "o" / "value_table.csv")
    assert len(table) == 2 * 101


def test_solve_beta_zero_is_immediate(tmp_path):
    cfg = write_config(tmp_path / "b0.json", {"model": {"beta": 0.0}})
    run(["--config", cfg, "--out", "o", "solve"], tmp_path, check=0)
    assert len(read_csv(tmp_path / "o" / "convergence.csv")) <= 2


def test_solve_nonconvergence_exits_3(tmp_path):
    cfg = write_config(tmp_path / "short.json", {"dp": {"max_iter": 5}})
    proc = run(["--config", cfg, "--out", "o", "solve"], tmp_path, check=3)
    assert "converge" in proc.stderr


def test_config_errors_exit_2(tmp_path):
    for i, bad in enumerate([{"model": {"beta": 1.0}}, {"sim": {"horizn": 3}}, {"bounds": {"tau": -1}}]):
        cfg = write_config(tmp_path / f"bad{i}.json", bad)
        assert run(["--config", cfg, "--out", "o", "simulate"], tmp_path).returncode == 2
    (tmp_path / "broken.json").write_text("{ not json")
    assert run(["--config", "broken.json", "simulate"], tmp_path).returncode == 2


def test_missing_input_exits_4(tmp_path, small_config):
    assert run(["--config", small_config, "--out", "o", "bound", "--table", "nope.csv"], tmp_path).returncode == 4
    assert run(["--config", "missing.json", "simulate"], tmp_path).returncode == 4


def test_bound_rerun_is_bitwise_identical(tmp_path, small_config):
    cfg = write_config(tmp_path / "k10.json", {"dp": {"knots": 10, "layout": "common"}})
    run(["--config", cfg, "--out", "s", "solve"], tmp_path, check=0)
    for out in ("b1", "b2"):
        run(["--config", cfg, "--out", out, "bound", "--table", "s/value_table.csv"], tmp_path, check=0)
    one = (tmp_path / "b1" / "certificate.json").read_bytes()
    assert one == (tmp_path / "b2" / "certificate.json").read_bytes()
    cert = json.loads(one)
    assert cert["B_upper"] - cert["B_lower"] <= cert["tau"]
    assert cert["method"] == "refinement"
    uppers = [r["B_upper"] for r in cert["rounds"]]
    assert uppers == sorted(uppers, reverse=True)


def test_bound_dense_grid(tmp_path):
    cfg = write_config(tmp_path / "dg.json", {"dp": {"knots": 10}, "bounds": {"method": "dense_grid"}})
    run(["--config", cfg, "--out", "s", "solve"], tmp_path, check=0)
    run(["--config", cfg, "--out", "b", "bound", "--table", "s/value_table.csv"], tmp_path, check=0)
    cert = json.loads((tmp_path / "b" / "certificate.json").read_text())
    assert cert["B_upper"] == cert["B_lower"] > 0


def test_estimate_on_simulated_and_given_panel(tmp_path, small_config):
    run(["--config", small_config, "--out", "sim", "simulate"], tmp_path, check=0)
    run(["--config", small_config, "--out", "e", "estimate", "--panel", "sim/panel.csv"], tmp_path, check=0)
    est = json.loads((tmp_path / "e" / "estimate.json").read_text())
    assert len(est["theta_hat"]) == 2
    env = est["envelope"]
    assert env["ll_lower"] <= env["ll_point"] <= env["ll_upper"]
    assert est["T"] == 400
    run(["--config", small_config, "--out", "e2", "estimate"], tmp_path, check=0)
    assert json.loads((tmp_path / "e2" / "estimate.json").read_text())["panel"] == "simulated"


def test_empty_panel_exits_2(tmp_path, small_config):
    (tmp_path / "empty.csv").write_text("t,state,choice\n")
    assert run(["--config", small_config, "--out", "o", "estimate", "--panel", "empty.csv"], tmp_path).returncode == 2


def test_separated_panel_reports_boundary(tmp_path, small_config):
    lines = ["t,state,choice"]
    for t in range(200):
        s = 0.1 * t
        lines.append(f"{t + 1},{s},{1 if s > 10 else 0}")
    (tmp_path / "sep.csv").write_text("\n".join(lines) + "\n")
    common = write_config(tmp_path / "common.json", {"inference": {"layout": "common"}})
    proc = run(["--config", common, "--out", "o", "estimate", "--panel", "sep.csv"], tmp_path, check=0)
    est = json.loads((tmp_path / "o" / "estimate.json").read_text())
    assert est["boundary"] is True
    assert "boundary" in proc.stdout


def test_setgrid_rows_and_nesting(tmp_path, small_config):
    run(["--config", small_config, "--out", "g", "setgrid"], tmp_path, check=0)
    rows = read_csv(tmp_path / "g" / "membership.csv")
    assert len(rows) == 25
    for r in rows:
        if r["in_set_estimate"] == "1" or r["in_standard_ci"] == "1":
            assert r["in_robust_ci"] == "1"
        assert float(r["ll_lower"]) <= float(r["ll_point"]) <= float(r["ll_upper"])
    meta = json.loads((tmp_path / "g" / "membership.meta.json").read_text())
    assert meta["rows"] == 25
    run(["--config", small_config, "--out", "g2", "setgrid", "--grid", "-1:0:2,-5:-3:3"], tmp_path, check=0)
    assert len(read_csv(tmp_path / "g2" / "membership.csv")) == 6
    assert run(["--config", small_config, "--out", "g3", "setgrid", "--grid", "-1:0:0,-5:-3:3"], tmp_path).returncode == 2


def test_coverage_single_replication(tmp_path, small_config):
    run(["--config", small_config, "--out", "c", "coverage", "--reps", "1"], tmp_path, check=0)
    rows = read_csv(tmp_path / "c" / "coverage.csv")
    assert [r["knots"] for r in rows] == ["5"]
    for key in ("set_cov", "robust_cov", "std_cov"):
        assert rows[0][key] in ("0", "1")
    manifest = json.loads((tmp_path / "c" / "replications" / "manifest.json").read_text())
    assert manifest["complete"] is True


def test_coverage_kill_and_resume(tmp_path):
    cfg = write_config(tmp_path / "cov.json", {"experiments": {"replications": 4}, "sim": {"truth_knots": 1001, "truth_draws": 100}})
    run(["--config", cfg, "--out", "full", "coverage"], tmp_path, check=0)

    proc = subprocess.Popen([CLI, "--config", str(cfg), "--out", "part", "coverage"], cwd=tmp_path,
                            stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
    first = tmp_path / "part" / "replications" / "rep_000000.json"
    deadline = time.time() + 300
    while not first.exists() and proc.poll() is None and time.time() < deadline:
        time.sleep(0.02)
    interrupted = proc.poll() is None
    proc.send_signal(signal.SIGKILL)
    proc.wait()
    assert interrupted, "coverage finished before it could be interrupted"
    manifest = json.loads((tmp_path / "part" / "replications" / "manifest.json").read_text())
    assert manifest["complete"] is False
    assert not (tmp_path / "part" / "coverage.csv").exists()

    resumed = run(["--config", cfg, "--out", "part", "coverage"], tmp_path, check=0)
    assert "resumed" in resumed.stderr
    assert (tmp_path / "part" / "coverage.csv").read_bytes() == (tmp_path / "full" / "coverage.csv").read_bytes()
    for i in range(4):
        name = f"rep_{i:06d}.json"
        assert (tmp_path / "part" / "replications" / name).read_bytes() == \
            (tmp_path / "full" / "replications" / name).read_bytes()


def test_coverage_refuses_foreign_checkpoints(tmp_path, small_config):
    run(["--config", small_config, "--out", "c", "coverage", "--reps", "1"], tmp_path, check=0)
    other = write_config(tmp_path / "other.json", {"sim": {"burn_in": 5}})
    assert run(["--config", other, "--out", "c", "coverage", "--reps", "1"], tmp_path).returncode == 2


def test_setgrid_rerun_is_bitwise_identical(tmp_path, small_config):
    for out in ("g1", "g2"):
        run(["--config", small_config, "--out", out, "setgrid"], tmp_path, check=0)
    for name in ("membership.csv", "membership.meta.json"):
        assert (tmp_path / "g1" / name).read_bytes() == (tmp_path / "g2" / name).read_bytes()


def test_echoed_config_reproduces_the_run(tmp_path, small_config):
    run(["--config", small_config, "--out", "a", "--seed", "9", "simulate"], tmp_path, check=0)
    echoed = json.loads((tmp_path / "a" / "config.json").read_text())
    assert echoed["seed"] == 9
    assert echoed["inference"]["alpha"] == 0.05
    run(["--config", "a/config.json", "--out", "b", "simulate"], tmp_path, check=0)
    assert (tmp_path / "a" / "panel.csv").read_bytes() == (tmp_path / "b" / "panel.csv").read_bytes()


def test_solve_default_grid_ratios(tmp_path):
    cfg = write_config(tmp_path / "dense.json", {"dp": {"knots": 1001, "n_draws": 100}})
    run(["--config", cfg, "--out", "o", "solve"], tmp_path, check=0)
    log = read_csv(tmp_path / "o" / "convergence.csv")
    assert len(read_csv(tmp_path / "o" / "value_table.csv")) == 2 * 1001
    assert max(float(r["ratio"]) for r in log[1:]) <= 0.8 + 1e-6


def test_bound_on_surrogate_fixed_point(tmp_path):
    cfg = write_config(tmp_path / "sur.json", {"model": {"kind": "finite_surrogate"}, "dp": {"tol": 1e-12}})
    run(["--config", cfg, "--out", "s", "solve"], tmp_path, check=0)
    tau = 1e-6
    run(["--config", cfg, "--out", "b", "bound", "--table", "s/value_table.csv", "--tau", tau], tmp_path, check=0)
    cert = json.loads((tmp_path / "b" / "certificate.json").read_text())
    assert cert["B_upper"] <= tau + 1e-9
    for bad in ("0", "-1"):
        proc = run(["--config", cfg, "--out", "b2", "bound", "--table", "s/value_table.csv", "--tau", bad], tmp_path)
        assert proc.returncode == 2, proc.stderr
