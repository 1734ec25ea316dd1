import csv
import io
import json
import subprocess
import sys

import pytest
import yaml

from corruptnet.cli import main
from corruptnet.detection import detect
from corruptnet.errors import UsageError
from corruptnet.experiment import CSV_COLUMNS, ExperimentConfig, records_to_csv, run_experiment, trial_seed
from corruptnet.graph import Graph
from corruptnet.reporting import ReportSet

RR = {"family": "random-regular", "params": {"n": 40, "d": 6}, "seed": 1}


def _cfg(**kw):
    base = dict(graph=RR, truthful=0.7, adversary="random", mode="general", delta=0.1, trials=12, seed=5)
    base.update(kw)
    return ExperimentConfig.from_dict(base)


# ------------------------------------------------------------ experiment


def test_csv_deterministic_and_columns():
    a, _ = run_experiment(_cfg())
    b, _ = run_experiment(_cfg())
    text = records_to_csv(a)
    assert text == records_to_csv(b)
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == CSV_COLUMNS and len(rows) == 13
    assert all(r[CSV_COLUMNS.index("runtime_ms")] == "" for r in rows[1:])


def test_workers_do_not_change_output():
    a, _ = run_experiment(_cfg(trials=6))
    b, _ = run_experiment(_cfg(trials=6, workers=2))
    assert records_to_csv(a) == records_to_csv(b)


def test_sound_flag_recomputed_from_outcome():
    outcomes, summary = run_experiment(_cfg(adversary="collude-praise"), keep_results=True)
    for o in outcomes:
        if o.result is not None:
            wrong = ((o.result.labels == 1) & ~o.world.truthful) | ((o.result.labels == 0) & o.world.truthful)
            assert o.record.sound == (not wrong.any())
            assert o.record.coverage == pytest.approx(1 - o.result.unknown_count / o.record.n)
        assert o.record.T_size == o.world.t_size == 28
    assert summary["trials"] == 12 and 0 <= summary["soundness_rate"] <= 1


def test_trial_seeds_distinct_and_stable():
    seeds = [trial_seed(5, i) for i in range(100)]
    assert len(set(seeds)) == 100 and seeds == [trial_seed(5, i) for i in range(100)]


def test_timing_column_populated():
    recs, summary = run_experiment(_cfg(trials=2, timing=True))
    assert all(float(r.runtime_ms) >= 0 for r in recs) and "runtime_ms" in summary


def test_experiment_errors_recorded_not_raised():
    recs, summary = run_experiment(_cfg(truthful=0.5, adversary="mirror-confusion", trials=3))
    assert all(r.error for r in recs) and sum(summary["errors"].values()) == 3


def test_config_validation():
    for bad in (dict(trials=0), dict(adversary="nope"), dict(mode="x"), dict(delta=0.2), dict(truthful=0)):
        with pytest.raises(UsageError):
            _cfg(**bad).validate()
    with pytest.raises(UsageError):
        ExperimentConfig.from_dict({"bogus": 1})
    with pytest.raises(UsageError):
        ExperimentConfig(graph=None).validate()
    with pytest.raises(UsageError):
        _cfg(orient="lemma14", delta=0.07).validate()


def test_directed_experiment():
    recs, summary = run_experiment(_cfg(orient="lemma14", orient_k=2, mode="fast", delta=0.05, trials=4))
    assert summary["soundness_rate"] == 1.0


# ------------------------------------------------------------ CLI


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_cli_pipeline(tmp_path, capsys):
    g = tmp_path / "g.graph"
    r = tmp_path / "r.reports"
    w = tmp_path / "w.world"
    code, _, _ = run(["generate", "--family", "random-regular", "--param", "n=30", "--param", "d=6",
                      "--seed", "2", "--out", str(g)], capsys)
    assert code == 0
    code, _, _ = run(["simulate", "--graph", str(g), "--truthful", "20", "--adversary", "collude-praise",
                      "--seed", "3", "--reports-out", str(r), "--world-out", str(w)], capsys)
    assert code == 0
    code, out, _ = run(["detect", "--graph", str(g), "--reports", str(r), "--delta", "0.1", "--format", "json"], capsys)
    assert code == 0
    graph = Graph.read(g)
    expect = detect(graph, ReportSet.read(graph, r), "general", 0.1)
    assert json.loads(out)["labels"] == expect.to_dict()["labels"]


def test_cli_exit_codes(tmp_path, capsys):
    assert run(["generate"], capsys)[0] == 1
    assert run(["generate", "--family", "grid", "--param", "rows=2"], capsys)[0] == 1
    assert run(["nonsense"], capsys)[0] == 1
    assert run(["detect", "--graph", str(tmp_path / "missing"), "--reports", "x"], capsys)[0] == 1
    assert run(["puzzle", "--n", "100", "--t", "50"], capsys)[0] == 2
    g = tmp_path / "k4.graph"
    run(["generate", "--family", "complete", "--param", "n=4", "--out", str(g)], capsys)
    r = tmp_path / "k4.reports"
    run(["simulate", "--graph", str(g), "--truthful", "2", "--adversary", "mirror-confusion",
         "--reports-out", str(r)], capsys)
    code, _, err = run(["detect", "--graph", str(g), "--reports", str(r), "--delta", "0.1"], capsys)
    assert code == 2 and "AmbiguousInstance" in err
    big = tmp_path / "rr.graph"
    run(["generate", "--family", "random-regular", "--param", "n=60", "--param", "d=8", "--out", str(big)], capsys)
    code, out, _ = run(["certify", "--graph", str(big), "--delta", "0.1", "--method", "exhaustive",
                        "--budget", "10"], capsys)
    assert code == 3 and "verdict not-attempted" in out


@pytest.mark.parametrize("suffix", [".json", ".yaml"])
def test_cli_config_file_and_override(tmp_path, capsys, suffix):
    cfg = {"family": "random-regular", "param": ["n=24", "d=4"], "truthful": 0.75, "trials": 3,
           "seed": 9, "delta": 0.1, "adversary": "all-accuse"}
    path = tmp_path / f"exp{suffix}"
    path.write_text(json.dumps(cfg) if suffix == ".json" else yaml.safe_dump(cfg))
    code, out, _ = run(["experiment", "--config", str(path)], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 3 and {r["adversary"] for r in rows} == {"all-accuse"}
    code, out2, _ = run(["experiment", "--config", str(path), "--trials", "2", "--adversary", "random"], capsys)
    rows2 = list(csv.DictReader(io.StringIO(out2)))
    assert len(rows2) == 2 and {r["adversary"] for r in rows2} == {"random"}


def test_cli_puzzle_and_constructions(tmp_path, capsys):
    code, out, _ = run(["puzzle", "--n", "5", "--t", "3", "--verify", "--format", "json"], capsys)
    assert code == 0 and json.loads(out)["verified"] is True
    code, out, _ = run(["puzzle", "--n", "3", "--t", "2", "--minimal"], capsys)
    assert "minimal_tests 2" in out
    code, out, _ = run(["scenarios", "--grid", "5x5", "--format", "json"], capsys)
    info = json.loads(out)
    assert info["indistinguishable"] and info["common_truthful"] == []
    code, out, _ = run(["gadget", "--fixture", "0", "--out-dir", str(tmp_path / "gad")], capsys)
    assert code == 0 and (tmp_path / "gad" / "gadget0.graph").exists()


def test_console_script_entry():
    proc = subprocess.run([sys.executable, "-m", "corruptnet.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "corruptnet" in proc.stdout
