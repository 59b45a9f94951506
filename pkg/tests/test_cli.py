import csv
import json
from pathlib import Path

import pytest

from mixchart.cli import EXIT_CONFIG, EXIT_OK, EXIT_TOLERANCE, main
from mixchart.config import CONFIG_SCHEMA, load_config, parse_config
from mixchart.errors import ConfigError
from mixchart.moments import IntervalCostInput, c2_series_oracle

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

MINIMAL = {
    "process": {"s": 0.5},
    "shift": {"kind": "mixture", "zeta": 0.5, "xi": 0.4, "delta": 1.0},
    "interval": {"h": 1.0, "j": 0.5},
}


def write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc, indent=2))
    return path


def test_defaults_are_resolved():
    cfg = parse_config(MINIMAL)
    assert cfg.process.sigma == 1.0 and cfg.process.mu0 == 0.0
    assert cfg.shift.jump_scale == 1.0
    assert cfg.raw["numerics"]["seed"] == 0
    assert cfg.raw["costs"]["c_s"] == 0.0
    assert cfg.interval_h == 1.0 and cfg.interval_j == 0.5


def test_unknown_key_rejected_with_line(tmp_path):
    doc = json.loads(json.dumps(MINIMAL))
    doc["process"]["speed"] = 3
    path = write(tmp_path, doc)
    with pytest.raises(ConfigError) as info:
        load_config(path)
    msg = str(info.value)
    assert "unknown key 'speed'" in msg
    line = next(i for i, text in enumerate(path.read_text().splitlines(), 1) if '"speed"' in text)
    assert f"line {line}:" in msg


def test_out_of_range_value_reports_path(tmp_path):
    doc = json.loads(json.dumps(MINIMAL))
    doc["shift"]["zeta"] = 1.5
    with pytest.raises(ConfigError) as info:
        load_config(write(tmp_path, doc))
    assert "shift" in str(info.value) and "line" in str(info.value)


def test_json_syntax_error_has_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "process": {"s": 0.5},\n  "shift": {,}\n}')
    with pytest.raises(ConfigError, match="line 3"):
        load_config(path)


def test_generic_shift_and_search_space():
    doc = {
        "process": {"s": 0.5},
        "shift": {"kind": "generic", "m_x": 1, "v_x": 1, "m_y": 2, "v_y": 0.5, "zeta": 0.3},
        "chart": {"h": {"min": 0.5, "max": 1.5, "count": 3}, "K": 2.0},
    }
    cfg = parse_config(doc)
    assert cfg.chart.h_values == (0.5, 1.0, 1.5) and cfg.chart.K_values == (2.0,)
    assert cfg.interval_h is None


def test_schema_forbids_extra_top_level_keys():
    assert CONFIG_SCHEMA["additionalProperties"] is False
    with pytest.raises(ConfigError, match="unknown key 'extra'"):
        parse_config({**MINIMAL, "extra": 1})


@pytest.mark.parametrize("name", ["moments_zeta0", "moments_zeta05", "moments_zeta1"])
def test_demo_moment_configs(name, tmp_path, capsys):
    code = main(["moments", "--config", str(CONFIGS / f"{name}.json"), "--out", str(tmp_path)])
    assert code == EXIT_OK
    report = json.loads((tmp_path / "moments.json").read_text())
    cfg = load_config(CONFIGS / f"{name}.json")
    oracle = c2_series_oracle(IntervalCostInput(cfg.interval_h, cfg.interval_j, cfg.process.s, cfg.shift))
    assert report["series_oracle"] == oracle
    assert report["relative_difference"] < 1e-8
    assert report["per_unit_time"] == pytest.approx(report["integral"] / cfg.interval_h, rel=1e-15)
    assert json.loads(capsys.readouterr().out)["pass"] is True


def test_moments_tolerance_failure_exit_code(tmp_path):
    doc = {**MINIMAL, "process": {"s": 3.0}, "interval": {"h": 4.0, "j": 0.0}, "numerics": {"k_max": 12}}
    code = main(["moments", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path / "o")])
    assert code == EXIT_TOLERANCE


def test_config_error_exit_code(tmp_path, capsys):
    code = main(["moments", "--config", str(write(tmp_path, {"process": {}})), "--out", str(tmp_path / "o")])
    assert code == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err
    assert main(["chart", "--config", str(write(tmp_path, MINIMAL)), "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_chart_command_outputs(tmp_path):
    assert main(["chart", "--config", str(CONFIGS / "reference_chart.json"), "--out", str(tmp_path)]) == EXIT_OK
    summary = json.loads((tmp_path / "summary.json").read_text())
    with (tmp_path / "states.csv").open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == summary["n_states"]
    total = sum(float(r["probability"]) for r in rows)
    assert total == pytest.approx(1.0, abs=1e-12)
    cost = sum(float(r["probability"]) * float(r["cost"]) for r in rows)
    assert cost == pytest.approx(summary["expected_cost"], rel=1e-12)
    assert (tmp_path / "states.csv").read_bytes().count(b"\r\n") == len(rows) + 1


def test_chart_command_json_format(tmp_path):
    assert main(["chart", "--config", str(CONFIGS / "reference_chart.json"), "--out", str(tmp_path),
                 "--format", "json"]) == EXIT_OK
    states = json.loads((tmp_path / "states.json").read_text())
    assert set(states[0]) == {"state", "level", "alarm", "probability", "cost"}


def test_optimize_command(tmp_path):
    assert main(["optimize", "--config", str(CONFIGS / "optimize_demo.json"), "--out", str(tmp_path),
                 "--threads", "2"]) == EXIT_OK
    optimum = json.loads((tmp_path / "optimum.json").read_text())
    with (tmp_path / "surface.csv").open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == optimum["n_points"] == 30
    best = min(rows, key=lambda r: float(r["expected_cost"]))
    assert float(best["h"]) == optimum["best_h"] and float(best["K"]) == optimum["best_K"]


def test_simulate_command(tmp_path):
    doc = {**MINIMAL, "numerics": {"n_paths": 5000, "batch_size": 1000, "seed": 3}}
    assert main(["simulate", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path / "o"),
                 "--per-path"]) == EXIT_OK
    report = json.loads((tmp_path / "o" / "simulate.json").read_text())
    assert report["c2"]["n_paths"] == 5000 and abs(report["c2"]["z_score"]) < 4
    with (tmp_path / "o" / "per_path.csv").open(newline="") as fh:
        assert sum(1 for _ in fh) == 5001


def test_seed_override_is_recorded(tmp_path):
    doc = {**MINIMAL, "numerics": {"n_paths": 2000}}
    main(["simulate", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path / "o"), "--seed", "77"])
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["seed"] == 77 and manifest["config"]["numerics"]["seed"] == 77
    assert set(manifest["versions"]) == {"mixchart", "python", "numpy", "scipy"}


def test_manifest_replays_bit_exactly(tmp_path):
    doc = {**MINIMAL, "numerics": {"n_paths": 3000, "batch_size": 1000, "seed": 12}}
    first, second = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", str(write(tmp_path, doc)), "--out", str(first), "--per-path"]) == 0
    assert main(["simulate", "--config", str(first / "manifest.json"), "--out", str(second), "--per-path",
                 "--threads", "3"]) == 0
    for name in ("simulate.json", "per_path.csv", "manifest.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_shipped_schema_file_is_current():
    assert json.loads((CONFIGS / "schema.json").read_text()) == CONFIG_SCHEMA


@pytest.mark.parametrize("name", ["moments_zeta0", "moments_zeta05", "moments_zeta1", "reference_chart",
                                  "optimize_demo"])
def test_shipped_configs_validate(name):
    load_config(CONFIGS / f"{name}.json")
