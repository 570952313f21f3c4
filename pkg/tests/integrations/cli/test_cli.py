import csv
import json

import pytest

from hapsim.cli import EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, main
from hapsim.simlog import COLUMNS, read_log
from ..common import TINY_DOCUMENT, TINY_TICKS, write_scenario


def test_run(scenario_file, out_dir):
    assert main(["run", str(scenario_file), "--out", str(out_dir)]) == EXIT_OK
    assert sorted(p.name for p in out_dir.iterdir()) == [
        "tiny.csv", "tiny.json", "tiny.metrics.json",
    ]
    lines = (out_dir / "tiny.csv").read_text().splitlines()
    assert lines[0] == ",".join(COLUMNS)
    assert len(lines) == TINY_TICKS + 1

    document = json.loads((out_dir / "tiny.json").read_text())
    assert document["meta"]["scenario"] == "tiny"
    assert document["meta"]["overrides"] == {}
    assert len(document["meta"]["config_hash"]) == 64

    metrics = json.loads((out_dir / "tiny.metrics.json").read_text())
    assert metrics["steady_state_tau_diff"] == pytest.approx(0.9)


def test_run_builtin(out_dir):
    code = main([
        "run", "fig6_adaptive_vs_fixed", "--out", str(out_dir), "--quiet",
    ])
    assert code == EXIT_OK
    assert len(read_log(out_dir / "fig6_adaptive_vs_fixed.csv")) == 301


def test_overrides_are_recorded(scenario_file, out_dir):
    code = main([
        "run", str(scenario_file), "--out", str(out_dir),
        "--set", "controller.epsilon=0.2",
        "--set", "name=renamed",
    ])
    assert code == EXIT_OK
    document = json.loads((out_dir / "renamed.json").read_text())
    assert document["meta"]["overrides"] == {
        "controller.epsilon": 0.2, "name": "renamed",
    }
    assert document["meta"]["config"]["controller"]["epsilon"] == 0.2
    log = read_log(out_dir / "renamed.json")
    assert (log.column("epsilon") == 0.2).all()


def test_missing_scenario(tmp_path, out_dir, capsys):
    code = main(["run", str(tmp_path / "nowhere.toml"), "--out", str(out_dir)])
    assert code == EXIT_PARSE
    assert "nowhere.toml" in capsys.readouterr().err


def test_scenario_not_utf8(tmp_path, out_dir, capsys):
    path = tmp_path / "latin.toml"
    path.write_bytes(b'name = "caf\xe9"\n')
    code = main(["run", str(path), "--out", str(out_dir)])
    assert code == EXIT_PARSE
    assert "latin.toml" in capsys.readouterr().err


def test_malformed_override(scenario_file, out_dir):
    code = main([
        "run", str(scenario_file), "--out", str(out_dir),
        "--set", "controller.epsilon",
    ])
    assert code == EXIT_PARSE


@pytest.mark.parametrize(
    "override",
    ["controller.np=0", "controller.epsilon=-0.1", "dt=0.03"],
)
def test_invalid_scenario(scenario_file, out_dir, override, capsys):
    code = main([
        "run", str(scenario_file), "--out", str(out_dir), "--set", override,
    ])
    assert code == EXIT_VALIDATION
    assert "Scenario violates invariant" in capsys.readouterr().err
    assert not out_dir.exists()


def test_sweep(scenario_file, out_dir):
    code = main([
        "sweep", str(scenario_file), "--out", str(out_dir),
        "--values", "0.4", "0.05", "0.2", "0.1",
    ])
    assert code == EXIT_OK
    with open(out_dir / "tiny.sweep.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert list(rows[0]) == [
        "value", "steady_state_tau_diff", "max_abs_theta_s",
    ]
    assert [float(r["value"]) for r in rows] == [0.05, 0.1, 0.2, 0.4]
    tau_diff = [float(r["steady_state_tau_diff"]) for r in rows]
    assert tau_diff == sorted(tau_diff, reverse=True)
    assert (out_dir / "tiny_epsilon_0.05.csv").exists()
    assert (out_dir / "tiny_epsilon_0.4.metrics.json").exists()


def test_sweep_default_values(tmp_path, out_dir):
    document = {
        **TINY_DOCUMENT,
        "sweep": {"key": "controller.epsilon", "values": [0.3, 0.1]},
    }
    path = write_scenario(tmp_path / "swept.toml", document)
    code = main(["sweep", str(path), "--out", str(out_dir)])
    assert code == EXIT_OK
    rows = (out_dir / "swept.sweep.csv").read_text().splitlines()
    assert [r.split(",")[0] for r in rows[1:]] == ["0.1", "0.3"]


def test_sweep_without_values(scenario_file, out_dir):
    code = main([
        "sweep", str(scenario_file), "--out", str(out_dir), "--values",
    ])
    assert code == EXIT_VALIDATION


def test_compare(scenario_file, out_dir):
    code = main(["compare", str(scenario_file), "--out", str(out_dir)])
    assert code == EXIT_OK
    report = json.loads((out_dir / "comparison.json").read_text())
    assert report["scenario"] == "tiny"
    assert report["disagreement_ratio"] < 1
    assert report["findings"]["adaptive_lower_disagreement"]
    assert not report["same_mode"]
    for variant in ("adaptive", "fixed"):
        assert (out_dir / f"tiny_{variant}.csv").exists()
    fixed = read_log(out_dir / "tiny_fixed.json")
    assert not fixed.adaptive


def test_list(capsys):
    assert main(["list"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert [line.split()[0] for line in lines] == [
        "fig3_cooperative",
        "fig4_noncooperative",
        "fig5_epsilon_sweep",
        "fig6_adaptive_vs_fixed",
    ]
    assert "non-cooperative" in lines[1]


def test_unknown_command():
    with pytest.raises(SystemExit) as e:
        main(["explode"])
    assert e.value.code == 2
