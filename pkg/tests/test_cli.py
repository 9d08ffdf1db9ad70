import json
import os

import pytest

from swapsched.cli import main


def run_cli(*args):
    return main([str(a) for a in args])


@pytest.fixture
def estimated(tmp_path, sessions_csv, prices_csv):
    out = tmp_path / "est"
    assert run_cli("estimate", "--sessions", sessions_csv, "--prices", prices_csv,
                   "--theta", "0.08,0.08,-0.8", "--swap-time", "5", "--out", out) == 0
    return out


def test_estimate_outputs(estimated):
    lines = (estimated / "demand.csv").read_text().splitlines()
    assert lines[0] == "hour,expected,demand_a,demand_b,price"
    assert len(lines) - 1 >= 24
    man = json.loads((estimated / "manifest.json").read_text())
    assert man["command"] == "estimate"
    assert man["params"]["theta"] == [0.08, 0.08, -0.8]
    assert man["params"]["swap_time"] == 5.0
    assert all(len(d) == 64 for d in man["inputs"].values())


def test_estimate_missing_file(tmp_path):
    out = tmp_path / "x"
    assert run_cli("estimate", "--sessions", tmp_path / "nope.csv", "--out", out) == 2
    assert not out.exists()


def test_estimate_malformed_file(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("start,duration_min,energy_kwh\n2022-01-01T00:00,1,1\nx,y,z\n")
    assert run_cli("estimate", "--sessions", bad, "--out", tmp_path / "o") == 2


def test_usage_error():
    with pytest.raises(SystemExit) as info:
        run_cli("optimize")
    assert info.value.code == 1


def test_metrics_command(estimated, tmp_path, capsys):
    assert run_cli("metrics", "--demand", estimated / "demand.csv", "--out", tmp_path / "m") == 0
    rec = json.loads((tmp_path / "m" / "metrics.json").read_text())
    assert set(rec) == {"s_m", "p_m", "o_m", "window", "periods"}
    assert rec["periods"] == [24.0, 168.0]
    assert '"p_m"' in capsys.readouterr().out


def test_metrics_short_series(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("hour,expected\n" + "".join(f"{h},1.0\n" for h in range(30)))
    assert run_cli("metrics", "--demand", path, "--out", tmp_path / "m") == 2


def test_optimize_and_replay(estimated, tmp_path):
    out = tmp_path / "opt"
    args = ["optimize", "--demand", estimated / "demand.csv", "--start", "24",
            "--max-iterations", "40", "--seed", "9", "--out", out]
    assert run_cli(*args) == 0
    plan = json.loads((out / "plan.json").read_text())
    for key in ("c_is", "c_ours", "r_opt", "gamma", "fitness", "cost"):
        assert key in plan
    for t in ("A", "B"):
        assert all(len(plan[t][k]) == 24 for k in ("demand", "supplied", "charge", "full", "empty"))
    assert (out / "convergence.csv").read_text().startswith("generation,lru\n")
    assert "per_iteration_seconds" in json.loads((out / "timing.json").read_text())

    again = tmp_path / "again"
    assert run_cli(*args[:-1], again) == 0
    replayed = tmp_path / "replayed"
    assert run_cli("replay", out / "manifest.json", "--out", replayed) == 0
    for name in ("plan.json", "convergence.csv", "manifest.json"):
        assert (out / name).read_bytes() == (again / name).read_bytes()
        assert (out / name).read_bytes() == (replayed / name).read_bytes()


def test_optimize_zero_demand(tmp_path):
    path = tmp_path / "zero.csv"
    path.write_text("hour,expected,demand_a,demand_b,price\n"
                    + "".join(f"{h},0.0,0,0,1.0\n" for h in range(24)))
    out = tmp_path / "o"
    assert run_cli("optimize", "--demand", path, "--max-iterations", "5", "--out", out) == 0
    plan = json.loads((out / "plan.json").read_text())
    assert plan["r_opt"] == 0 and plan["gamma"] == 1


def test_optimize_rejects_bad_station(estimated, tmp_path):
    assert run_cli("optimize", "--demand", estimated / "demand.csv", "--tau-s", "1.5",
                   "--out", tmp_path / "o") == 2


def test_baseline(estimated, tmp_path):
    out = tmp_path / "b"
    assert run_cli("baseline", "--demand", estimated / "demand.csv", "--out", out) == 0
    plan = json.loads((out / "plan.json").read_text())
    assert plan["strategy"] == "immediate" and plan["r_opt"] == 0.0


def test_compare_matrix(estimated, tmp_path):
    out = tmp_path / "cmp"
    assert run_cli("compare", "--demand", estimated / "demand.csv", "--synthetic-seeds", "1001",
                   "--seeds", "0,1,2", "--max-iterations", "5", "--out", out) == 0
    doc = json.loads((out / "comparison.json").read_text())
    assert set(doc["regions"]) == {"demand", "synthetic-1001"}
    n_runs = sum(len(r["results"][s]["runs"]) for r in doc["regions"].values()
                 for s in r["results"])
    assert n_runs == 2 * 2 * 3
    rows = (out / "convergence.csv").read_text().splitlines()
    assert rows[0] == "region,seed,generation,uniform,lru"
    assert len(rows) - 1 == 2 * 3 * 5


def test_compare_identical_strategies(tmp_path):
    out = tmp_path / "cmp"
    assert run_cli("compare", "--synthetic-seeds", "1001", "--strategies", "lru,lru",
                   "--seeds", "0,1", "--max-iterations", "5", "--out", out) == 0
    doc = json.loads((out / "comparison.json").read_text())
    assert doc["summary"]["median_wins"] == {"lru": 0, "ties": 1}
    assert doc["regions"]["synthetic-1001"]["wins"] == {"ties": 2, "lru": 0}


def test_compare_needs_regions(tmp_path):
    assert run_cli("compare", "--out", tmp_path / "c") == 1


def test_config_env_defaults(estimated, tmp_path, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"max_iterations": 3, "seed": 42, "m_a": 6}))
    monkeypatch.setenv("SWAPSCHED_CONFIG", str(cfg))
    out = tmp_path / "o"
    assert run_cli("optimize", "--demand", estimated / "demand.csv", "--out", out) == 0
    params = json.loads((out / "manifest.json").read_text())["params"]
    assert (params["max_iterations"], params["seed"], params["m_a"]) == (3, 42, 6)


def test_replay_detects_changed_input(estimated, tmp_path, sessions_csv):
    copy = tmp_path / "s.csv"
    copy.write_bytes(sessions_csv.read_bytes())
    out = tmp_path / "e"
    assert run_cli("estimate", "--sessions", copy, "--out", out) == 0
    with open(copy, "a") as fh:
        fh.write("2022-07-10T01:00,10,1,r1\n")
    assert run_cli("replay", out / "manifest.json", "--out", tmp_path / "r") == 2


def test_inputs_not_mutated(estimated, tmp_path):
    before = (estimated / "demand.csv").read_bytes()
    run_cli("baseline", "--demand", estimated / "demand.csv", "--out", tmp_path / "b")
    assert (estimated / "demand.csv").read_bytes() == before
