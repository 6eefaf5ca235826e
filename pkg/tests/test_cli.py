import csv
import json

import pytest

from fishsched.cli import main
from fishsched.graph import load_program, save_program
from fishsched.simulator import (
    CampaignConfig,
    SyntheticProgramSpec,
    generate_program,
    run_campaign,
)


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def small_graph_file(tmp_path):
    g = generate_program(
        SyntheticProgramSpec(n_functions=25, targets_per_function=(0, 2), rng_seed=6)
    )
    path = tmp_path / "small.graph"
    save_program(g, str(path))
    return str(path)


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------


def test_analyze_fig2_summary(tmp_path, capsys, fig2_paths):
    out = tmp_path / "fig2.map"
    code, stdout, stderr = run_cli(
        capsys, "analyze", "--graph", fig2_paths["graph"], "--out", str(out)
    )
    assert code == 0 and stderr == ""
    assert "targets=3" in stdout
    assert "functions=7" in stdout
    assert out.exists()


def test_analyze_rerun_is_byte_identical(tmp_path, capsys, fig2_paths):
    outs = [tmp_path / "a.map", tmp_path / "b.map"]
    for out in outs:
        code, _, _ = run_cli(
            capsys, "analyze", "--graph", fig2_paths["graph"], "--out", str(out)
        )
        assert code == 0
    assert outs[0].read_bytes() == outs[1].read_bytes()


def test_analyze_missing_file(tmp_path, capsys):
    code, stdout, stderr = run_cli(
        capsys, "analyze", "--graph", str(tmp_path / "nope.graph"),
        "--out", str(tmp_path / "x.map"),
    )
    assert code == 2
    assert "no such file" in stderr
    assert stdout == ""


def test_analyze_unwritable_output(tmp_path, capsys, fig2_paths):
    out = tmp_path / "missing_dir" / "x.map"
    code, _stdout, stderr = run_cli(
        capsys, "analyze", "--graph", fig2_paths["graph"], "--out", str(out)
    )
    assert code == 3
    assert stderr != ""


def test_analyze_invalid_graph(tmp_path, capsys):
    bad = tmp_path / "bad.graph"
    bad.write_text('{"functions": [{"id": 0}]}')
    code, _stdout, stderr = run_cli(
        capsys, "analyze", "--graph", str(bad), "--out", str(tmp_path / "x.map")
    )
    assert code == 2
    assert stderr != ""


# ---------------------------------------------------------------------------
# distance
# ---------------------------------------------------------------------------


@pytest.fixture
def fig2_map(tmp_path, capsys, fig2_paths):
    out = tmp_path / "fig2.map"
    code, _, _ = run_cli(
        capsys, "analyze", "--graph", fig2_paths["graph"], "--out", str(out)
    )
    assert code == 0
    return str(out)


def test_distance_dff_self_is_zero(capsys, fig2_paths, fig2_map):
    code, stdout, stderr = run_cli(
        capsys, "distance", "--graph", fig2_paths["graph"], "--map", fig2_map,
        "--dff", "3", "3",
    )
    assert code == 0 and stderr == ""
    assert stdout.strip() == "0"


def test_distance_harmonic_s1(capsys, fig2_paths, fig2_map):
    code, stdout, _ = run_cli(
        capsys, "distance", "--graph", fig2_paths["graph"], "--map", fig2_map,
        "--harmonic", fig2_paths["s1"],
    )
    assert code == 0
    assert stdout.strip() == "1.8"


def test_distance_harmonic_s2(capsys, fig2_paths, fig2_map):
    code, stdout, _ = run_cli(
        capsys, "distance", "--graph", fig2_paths["graph"], "--map", fig2_map,
        "--harmonic", fig2_paths["s2"],
    )
    assert code == 0
    assert stdout.strip() == "2.25"


def test_distance_dsf_and_multi(capsys, tmp_path, chain_graph):
    # weighted 3-function chain: dff(0,1)=1, dff(0,2)=3
    graph_path = tmp_path / "chain.graph"
    save_program(chain_graph, str(graph_path))
    map_path = tmp_path / "chain.map"
    code, _, _ = run_cli(
        capsys, "analyze", "--graph", str(graph_path), "--out", str(map_path)
    )
    assert code == 0
    trace_path = tmp_path / "s.trace"
    trace_path.write_text("1; 50; 8; functions=0; reached=; triggered=\n")

    code, stdout, _ = run_cli(
        capsys, "distance", "--graph", str(graph_path), "--map", str(map_path),
        "--dsf", str(trace_path), "2",
    )
    assert code == 0
    assert stdout.strip() == "3"

    code, stdout, _ = run_cli(
        capsys, "distance", "--graph", str(graph_path), "--map", str(map_path),
        "--multi", str(trace_path), "0,1",
    )
    assert code == 0
    assert stdout.splitlines() == ["0 1", "1 3"]


def test_distance_hash_mismatch(capsys, tmp_path, fig2_map, small_graph_file):
    code, _stdout, stderr = run_cli(
        capsys, "distance", "--graph", small_graph_file, "--map", fig2_map,
        "--dff", "0", "0",
    )
    assert code == 2
    assert "does not match" in stderr


def test_distance_unknown_id(capsys, fig2_paths, fig2_map):
    code, _stdout, stderr = run_cli(
        capsys, "distance", "--graph", fig2_paths["graph"], "--map", fig2_map,
        "--dff", "0", "99",
    )
    assert code == 2
    assert stderr != ""


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def test_simulate_zero_duration(tmp_path, capsys, small_graph_file):
    out = tmp_path / "out"
    code, _stdout, stderr = run_cli(
        capsys, "simulate", "--graph", small_graph_file,
        "--scheduler", "fishfuzz", "--duration", "0", "--out", str(out),
    )
    assert code == 0 and stderr == ""
    (result_file,) = sorted(out.glob("result_*.json"))
    data = json.loads(result_file.read_text())
    assert data["series"] == []


def test_simulate_compare_writes_all_campaigns(tmp_path, capsys, small_graph_file):
    out = tmp_path / "cmp"
    code, stdout, stderr = run_cli(
        capsys, "simulate", "--graph", small_graph_file,
        "--compare", "fishfuzz,round_robin", "--seeds", "2",
        "--duration", "60", "--out", str(out),
    )
    assert code == 0 and stderr == ""
    results = sorted(out.glob("result_*.json"))
    assert len(results) == 4  # 2 schedulers x 2 seeds
    assert (out / "comparison.csv").exists()
    assert "fishfuzz" in stdout


def test_simulate_rerun_is_byte_identical(tmp_path, capsys, small_graph_file):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        code, _, _ = run_cli(
            capsys, "simulate", "--graph", small_graph_file,
            "--scheduler", "afl_favor", "--duration", "80",
            "--seeds", "1", "--out", str(out),
        )
        assert code == 0
    f1 = sorted(out1.glob("*.json"))[0].read_bytes()
    f2 = sorted(out2.glob("*.json"))[0].read_bytes()
    assert f1 == f2


def test_simulate_env_seed_override(tmp_path, capsys, small_graph_file, monkeypatch):
    out = tmp_path / "env"
    monkeypatch.setenv("FISHSCHED_SEED", "33")
    code, _stdout, _ = run_cli(
        capsys, "simulate", "--graph", small_graph_file,
        "--scheduler", "round_robin", "--duration", "20", "--out", str(out),
    )
    assert code == 0
    assert (out / "result_round_robin_33.json").exists()


def test_simulate_requires_spec_or_graph(tmp_path, capsys):
    code, _stdout, stderr = run_cli(
        capsys, "simulate", "--scheduler", "fishfuzz", "--out", str(tmp_path / "x")
    )
    assert code == 2
    assert "exactly one of" in stderr


def test_simulate_spec_file(tmp_path, capsys):
    spec = {"n_functions": 15, "rng_seed": 4, "targets_per_function": [0, 2]}
    spec_path = tmp_path / "world.spec"
    spec_path.write_text(json.dumps(spec))
    out = tmp_path / "spec_out"
    code, _stdout, stderr = run_cli(
        capsys, "simulate", "--spec", str(spec_path),
        "--scheduler", "fishfuzz", "--duration", "30", "--out", str(out),
    )
    assert code == 0 and stderr == ""
    assert len(list(out.glob("result_*.json"))) == 1


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


@pytest.fixture
def result_file(tmp_path, small_graph_file):
    g = load_program(small_graph_file)
    r = run_campaign(g, CampaignConfig(scheduler="fishfuzz", duration=150, rng_seed=2))
    path = tmp_path / "r.json"
    path.write_bytes(r.to_json_bytes())
    return str(path), r


def test_report_energy(tmp_path, capsys, result_file):
    path, r = result_file
    out = tmp_path / "energy.csv"
    code, _stdout, stderr = run_cli(
        capsys, "report", "--kind", "energy", "--out", str(out), path
    )
    assert code == 0 and stderr == ""
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["rank", "hits"]
    assert len(rows) - 1 == len(r.target_hits)
    hits = [int(row[1]) for row in rows[1:]]
    assert hits == sorted(hits, reverse=True)
    assert [int(row[0]) for row in rows[1:]] == list(range(1, len(hits) + 1))


def test_report_phases_partitions_time(tmp_path, capsys, result_file):
    path, r = result_file
    out = tmp_path / "phases.csv"
    code, _stdout, _ = run_cli(
        capsys, "report", "--kind", "phases", "--out", str(out), path
    )
    assert code == 0
    rows = list(csv.reader(out.open()))[1:]
    times = [int(t) for t, _ in rows]
    assert times[0] == 0
    assert times == sorted(times)
    assert all(t < r.duration for t in times[1:])
    assert all(phase in ("inter_explore", "intra_explore", "exploit")
               for _, phase in rows)


def test_report_growth_merges_results(tmp_path, capsys, small_graph_file):
    g = load_program(small_graph_file)
    paths = []
    for sched in ("fishfuzz", "round_robin"):
        r = run_campaign(g, CampaignConfig(scheduler=sched, duration=40, rng_seed=1))
        p = tmp_path / f"{sched}.json"
        p.write_bytes(r.to_json_bytes())
        paths.append(str(p))
    out = tmp_path / "growth.csv"
    code, _stdout, _ = run_cli(
        capsys, "report", "--kind", "growth", "--out", str(out), *paths
    )
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["scheduler", "seed", "time", "cov", "reach", "trig"]
    schedulers = {row[0] for row in rows[1:]}
    assert schedulers == {"fishfuzz", "round_robin"}
    assert len(rows) - 1 == 80


def test_report_unknown_kind_rejected(tmp_path, capsys, result_file):
    path, _ = result_file
    with pytest.raises(SystemExit) as exc:
        main(["report", "--kind", "pie", "--out", str(tmp_path / "x.csv"), path])
    assert exc.value.code == 2


def test_report_missing_result(tmp_path, capsys):
    code, _stdout, stderr = run_cli(
        capsys, "report", "--kind", "energy", "--out", str(tmp_path / "x.csv"),
        str(tmp_path / "nope.json"),
    )
    assert code == 2
    assert "no such file" in stderr
