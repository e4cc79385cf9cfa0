import csv
import io
import json

import pytest

from dqc_sched.cli import main
from dqc_sched.solvers import VARIANT_NAMES

FAST = ["--sa-tau0", "10", "--sa-taumin", "1/10", "--sa-cooling", "1/2", "--sa-iters", "40"]


@pytest.fixture
def tiny_cfg(tmp_path):
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps({"preset": "tiny"}))
    return str(path)


def generate(tmp_path, name="inst.json", *extra):
    out = tmp_path / name
    assert main(["generate", "--out", str(out), *extra]) == 0
    return str(out)


def solve(inst, out, variant="proposed", *extra):
    return main(["solve", "--instance", inst, "--variant", variant, "--out", str(out), *FAST, *extra])


@pytest.mark.parametrize("variant", [v for v in VARIANT_NAMES if v != "exhaustive"])
def test_generate_solve_validate_round_trip(tmp_path, variant):
    for run in range(3):
        inst = generate(tmp_path, f"i{run}.json", "--run", str(run), "--requests", "3")
        sched = tmp_path / f"s{run}.json"
        assert solve(inst, sched, variant) == 0
        assert json.loads(sched.read_text())["variant"] == variant
        assert main(["validate", "--instance", inst, "--schedule", str(sched), "--out", str(tmp_path / "v")]) == 0
        assert json.loads((tmp_path / "v").read_text())["feasible"] is True


def test_exhaustive_round_trip_on_the_tiny_class(tmp_path, tiny_cfg):
    inst = generate(tmp_path, "i.json", "--config", tiny_cfg, "--run", "1")
    sched = tmp_path / "s.json"
    assert solve(inst, sched, "exhaustive", "--config", tiny_cfg) == 0
    assert main(["validate", "--instance", inst, "--schedule", str(sched), "--out", str(tmp_path / "v")]) == 0


def test_solve_is_byte_identical_per_seed(tmp_path):
    inst = generate(tmp_path)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert solve(inst, a, "proposed", "--seed", "7") == 0
    assert solve(inst, b, "proposed", "--seed", "7") == 0
    assert a.read_bytes() == b.read_bytes()


def test_injected_overlap_exits_three(tmp_path, capsys):
    inst = generate(tmp_path, "i.json", "--requests", "2")
    sched = tmp_path / "s.json"
    assert solve(inst, sched, "greedy") == 0
    doc = json.loads(sched.read_text())
    # peel one shot off the first fragment into a copy running at the same time on the same QPU
    first = doc["fragments"][0]
    doc["fragments"][0] = dict(first, shots=first["shots"] - 1)
    doc["fragments"].append(dict(first, shots=1))
    sched.write_text(json.dumps(doc))
    capsys.readouterr()
    out = tmp_path / "v.json"
    assert main(["validate", "--instance", inst, "--schedule", str(sched), "--out", str(out)]) == 3
    kinds = [v["kind"] for v in json.loads(out.read_text())["violations"]]
    assert kinds == ["QpuOverlap"]
    assert "QpuOverlap" in capsys.readouterr().err


def test_guard_exceeded_exits_four(tmp_path, capsys):
    inst = generate(tmp_path)
    assert solve(inst, tmp_path / "s.json", "exhaustive") == 4
    assert "exceed" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["solve"],
    ["solve", "--instance", "/nonexistent.json"],
    ["bogus"],
    ["solve", "--instance", "X", "--variant", "fastest"],
    ["sweep", "--workers", "0"],
])
def test_usage_errors_exit_two(argv, tmp_path):
    argv = [str(tmp_path / "bad.json") if a == "X" else a for a in argv]
    assert main(argv) == 2


def test_malformed_instance_exits_two(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"format_version": 1}')
    assert main(["solve", "--instance", str(bad)]) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_bad_log_level_exits_two(tmp_path, monkeypatch):
    monkeypatch.setenv("DQC_SCHED_LOG", "chatty")
    assert main(["generate", "--out", str(tmp_path / "i.json")]) == 2


def test_compare_prints_eight_rows_and_writes_csv(tmp_path, capsys):
    out = tmp_path / "table.csv"
    assert main(["compare", "--out", str(out)]) == 0
    text = capsys.readouterr().out.splitlines()
    assert text[0].split()[:3] == ["method", "T1", "T2"]
    assert [line.split()[0] for line in text[1:]] == [
        "exhaustive", "proposed", "shot-agnostic", "dependency-agnostic", "dependency-and-shot-agnostic",
        "greedy", "list", "random"]
    rows = {r["method"]: r for r in csv.DictReader(io.StringIO(out.read_text()))}
    assert rows["exhaustive"]["served"] == rows["proposed"]["served"] == "2"


def test_render_svg_and_csv(tmp_path):
    inst = generate(tmp_path, "i.json", "--requests", "2")
    sched = tmp_path / "s.json"
    assert solve(inst, sched, "dependency-agnostic") == 0
    svg, table = tmp_path / "g.svg", tmp_path / "g.csv"
    assert main(["render", "--instance", inst, "--schedule", str(sched), "--out", str(svg)]) == 0
    assert main(["render", "--instance", inst, "--schedule", str(sched), "--out", str(table)]) == 0
    assert svg.read_text().startswith("<svg")
    assert table.read_text().startswith("qpu,circuit,sub,shots,start,end")


def test_sweep_writes_both_tables(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"request_counts": [2], "monte_carlo_runs": 2}))
    out = tmp_path / "out"
    argv = ["sweep", "--config", str(cfg), "--variant", "greedy", "--variant", "list", "--out", str(out)]
    assert main(argv) == 0
    raw = list(csv.DictReader(io.StringIO((out / "raw.csv").read_text())))
    assert len(raw) == 4 and {r["status"] for r in raw} == {"ok"}
    assert len((out / "agg.csv").read_text().splitlines()) == 3
