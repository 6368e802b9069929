import json

import pytest

from agentsim.agent import load_trace
from agentsim.algolib import random_table, save_table
from agentsim.cli import main
from agentsim.port_graph import bowtie_with_bridge, generate_cycle, generate_random_2ec, petersen_graph, write_graph
from agentsim.simulator import SIM_CODEC, is_legal
from agentsim.verify import verify_instance


@pytest.fixture
def files(tmp_path):
    paths = {}
    for name, g in {"c3": generate_cycle(3), "bow": bowtie_with_bridge(), "pet": petersen_graph(),
                    "ear": generate_random_2ec(9, 2, 1)}.items():
        paths[name] = str(tmp_path / f"{name}.txt")
        write_graph(g, paths[name])
    paths["dir"] = tmp_path
    return paths


def test_run_simulator_writes_legal_records(files, capsys):
    out = files["dir"] / "t.txt"
    assert main(["run", "--graph", files["c3"], "--engine", "simulator", "--rounds", "5", "--trace-out", str(out)]) == 0
    tr = load_trace(out.read_text(), SIM_CODEC)
    assert sum(is_legal(c) for c in tr.configs) >= 5


def test_run_simulator_refuses_bridged_graph(files, capsys):
    assert main(["run", "--graph", files["bow"], "--engine", "simulator"]) == 2
    assert "(2, 3)" in capsys.readouterr().err
    assert main(["run", "--graph", files["bow"], "--engine", "oracle", "--rounds", "10"]) == 0


def test_run_io_and_usage_errors(files, capsys):
    assert main(["run", "--graph", str(files["dir"] / "missing.txt")]) == 1
    assert main(["run", "--graph", files["c3"], "--start", "9"]) == 1
    assert main(["run", "--graph", files["c3"], "--algo", "random:x"]) == 1
    assert main(["frobnicate"]) == 1


def test_table_degree_gate(files, capsys):
    assert main(["run", "--graph", files["c3"], "--algo", "explorer", "--engine", "simulator", "--start", "1",
                 "--rounds", "1"]) == 0
    bad = files["dir"] / "bad.tbl"
    bad.write_text("agentsim-table v1 width=1 max_degree=2 default=stay\n2 -1 0 0 -> 1 0 0\n")
    assert main(["run", "--graph", files["c3"], "--algo", str(bad)]) == 0
    wide = files["dir"] / "wide.tbl"
    save_table(random_table(0, 1, 2), wide)
    assert main(["run", "--graph", files["pet"], "--algo", str(wide)]) == 2
    assert "max degree 3" in capsys.readouterr().err


def test_verify_triangle_ok_with_json_records(files, capsys):
    assert main(["verify", "--graph", files["c3"], "--rounds", "100"]) == 0
    out, err = capsys.readouterr()
    records = [json.loads(line) for line in out.splitlines()]
    kinds = {r["check"] for r in records}
    assert kinds == {"simulation", "phase", "overhead"}
    assert all(r["ok"] for r in records)
    over = next(r for r in records if r["check"] == "overhead")
    assert over["max"] <= over["bound"] == 32
    assert "OK" in err


def test_verify_mutation_exits_3(files, capsys):
    assert main(["verify", "--graph", files["pet"], "--mutation", "transmem-invert"]) == 3
    assert "divergence at simulated round" in capsys.readouterr().err


def _terminating_seed(g):
    for seed in range(200):
        res = verify_instance(g, random_table(seed, 2, g.max_degree), 0, 100)
        if res.terminated_at is not None and res.terminated_at > 1:
            return seed, res.terminated_at
    raise AssertionError("no terminating seed found")


def test_verify_terminating_table(files, capsys):
    seed, k = _terminating_seed(generate_random_2ec(9, 2, 1))
    code = main(["verify", "--graph", files["ear"], "--algo", f"random:{seed}:2"])
    assert code == 0
    assert f"terminated at simulated round {k}" in capsys.readouterr().err


def test_seed_env_overrides_flag(files, capsys, monkeypatch):
    out1, out2 = files["dir"] / "a.txt", files["dir"] / "b.txt"
    monkeypatch.setenv("AGENTSIM_SEED", "5")
    main(["run", "--graph", files["pet"], "--algo", "random", "--seed", "1", "--trace-out", str(out1)])
    monkeypatch.delenv("AGENTSIM_SEED")
    main(["run", "--graph", files["pet"], "--algo", "random", "--seed", "5", "--trace-out", str(out2)])
    assert out1.read_text() == out2.read_text()
    monkeypatch.setenv("AGENTSIM_SEED", "oops")
    assert main(["run", "--graph", files["pet"], "--algo", "random"]) == 1


def test_fuzz_summary_and_mutant(capsys):
    assert main(["fuzz", "--seeds", "0:20", "--n", "3:8"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["cases"] == 20 and summary["failures"] == 0
    assert main(["fuzz", "--seeds", "0:20", "--n", "3:8", "--mutation", "dfs-no-parent-skip"]) == 3
    bad = json.loads(capsys.readouterr().out)
    assert bad["failures"] >= 1 and bad["failed_seeds"]
    assert main(["fuzz", "--seeds", "a:b"]) == 1


def test_bench_reports_phases_and_storage(files, capsys):
    assert main(["bench", "--graph", files["c3"]]) == 0
    out = capsys.readouterr().out
    assert "max overhead: 13  bound 8|E|+2n+2: 32" in out
    for phase in ("LocalComp+DFS", "DFS", "CleanUp", "TransMem", "MoveReset"):
        assert phase in out
    assert "storage bits: 25 = lambda* 1 + fixed 24  cap: 37" in out
    assert main(["bench", "--graph", files["bow"]]) == 2


def test_dot_highlights_itc_at_cleanup_boundary(files, capsys):
    trace = files["dir"] / "t.txt"
    main(["run", "--graph", files["c3"], "--engine", "simulator", "--rounds", "1", "--trace-out", str(trace)])
    tr = load_trace(trace.read_text(), SIM_CODEC)
    k = next(k for k, c in enumerate(tr.configs)
             if k > 0 and c.location == 0 and (c.storages[0].dfsstat, c.storages[0].sim) == (0, 1))
    capsys.readouterr()
    assert main(["dot", "--graph", files["c3"], "--trace", str(trace), "--round", str(tr.rounds[k])]) == 0
    assert capsys.readouterr().out.count("color=red") == 3


def test_dot_plain_and_bad_round(files, capsys):
    assert main(["dot", "--graph", files["c3"]]) == 0
    out = capsys.readouterr().out
    assert out.startswith("graph G {") and "color=red" not in out
    trace = files["dir"] / "t.txt"
    main(["run", "--graph", files["c3"], "--engine", "simulator", "--rounds", "1", "--trace-out", str(trace)])
    assert main(["dot", "--graph", files["c3"], "--trace", str(trace), "--round", "999"]) == 1
    assert main(["dot", "--graph", files["c3"], "--round", "3"]) == 1


def test_gen_writes_parseable_graphs(files, capsys):
    out = files["dir"] / "g.txt"
    assert main(["gen", "ear", "--n", "10", "--ears", "2", "--seed", "3", "--out", str(out)]) == 0
    assert main(["verify", "--graph", str(out), "--rounds", "10"]) == 0
    assert main(["gen", "cycle", "--n", "2"]) == 1
