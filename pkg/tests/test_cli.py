"""CLI exit codes, artifact layout, determinism, config round trips."""

import json
import os
from pathlib import Path

import numpy as np
import pytest

from barrier_lab import (
    InvalidParameterError,
    builtin_scenario,
    comparison_config,
    main,
    parse_config_text,
)
from barrier_lab.artifacts import json_dumps
from barrier_lab.parallel import chunked_map, worker_count


def write_config(path: Path, data: dict) -> str:
    path.write_text(json_dumps(data))
    return str(path)


class TestExitCodes:
    def test_unknown_scenario(self, capsys):
        assert main(["scenario", "nope"]) == 2
        assert "config error:" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        assert main(["run", "--config", str(tmp_path / "absent.json")]) == 2
        assert "config error:" in capsys.readouterr().err

    def test_invalid_json_names_the_line(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text('{\n  "name": "x",\n  oops\n}\n')
        assert main(["run", "--config", str(path)]) == 2
        err = capsys.readouterr().err
        assert "line 3" in err

    def test_invalid_value_names_the_field(self, tmp_path, capsys):
        data = builtin_scenario("fig3").to_json_dict()
        data["cbfs"][0]["radius"] = -1.0
        assert main(["run", "--config", write_config(tmp_path / "bad.json", data)]) == 2
        assert "radius" in capsys.readouterr().err

    def test_unknown_flag_is_a_usage_error(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["scenario", "fig3", "--out", "somewhere"])
        assert excinfo.value.code == 2


class TestScenarioRun:
    def test_builtin_run_writes_artifacts(self, tmp_path, monkeypatch, capsys):
        monkeypatch.chdir(tmp_path)
        assert main(["scenario", "fig3"]) == 0
        out = tmp_path / "fig3-artifacts"
        assert sorted(p.name for p in out.iterdir()) == [
            "equilibria.json", "spectra.json", "summary.txt"]
        data = json.loads((out / "equilibria.json").read_text())
        assert data["scenario"] == "fig3"
        assert data["controller"] == "safety-filter"
        reports = data["reports"]
        assert len(reports) == 4
        assert [r["kind"] for r in reports] == ["interior", "boundary", "boundary", "boundary"]
        assert sum(r["desirability"] == "undesirable" for r in reports) == 3
        spectra = json.loads((out / "spectra.json").read_text())["spectra"]
        for entry in spectra:
            if entry["desirability"] == "undesirable":
                assert entry["known_factor_root"] == -1.0
                assert abs(entry["division_remainder"]) < 1e-6
                assert len(entry["reduced_poly"]) == 2
        text = (out / "summary.txt").read_text()
        assert "equilibria (4)" in text
        assert "task log" in text
        summary_stdout = capsys.readouterr().out
        assert "equilibria (4)" in summary_stdout

    def test_task_error_keeps_partial_artifacts(self, tmp_path, monkeypatch, capsys):
        monkeypatch.chdir(tmp_path)
        data = builtin_scenario("fig3").to_json_dict()
        data["tasks"] = [{"kind": "equilibria"},
                         {"kind": "simulate", "x0": [2.0, 0.0], "t_final": 0.01}]
        data["output_dir"] = "out"
        assert main(["run", "--config", write_config(tmp_path / "cfg.json", data)]) == 1
        names = sorted(p.name for p in (tmp_path / "out").iterdir())
        assert names == ["equilibria.json", "summary.txt"]
        assert "failed" in capsys.readouterr().err
        assert "error" in (tmp_path / "out" / "summary.txt").read_text()

    def test_out_flag_overrides_config(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        data = builtin_scenario("fig3").to_json_dict()
        data["tasks"] = [{"kind": "field", "bounds": [[2.5, 4.0], [-1.0, 1.0]],
                          "resolution": [2, 3]}]
        path = write_config(tmp_path / "cfg.json", data)
        assert main(["run", "--config", path, "--out", "custom"]) == 0
        assert (tmp_path / "custom" / "field.csv").exists()
        assert not (tmp_path / "fig3-artifacts").exists()
        rows = (tmp_path / "custom" / "field.csv").read_text().strip().splitlines()
        assert rows[0] == "x1,x2,v1,v2,h,active_code,masked"
        assert len(rows) == 7

    def test_reruns_are_byte_identical(self, tmp_path, monkeypatch):
        outputs = []
        for sub in ("a", "b"):
            workdir = tmp_path / sub
            workdir.mkdir()
            monkeypatch.chdir(workdir)
            assert main(["scenario", "fig3"]) == 0
            outputs.append({p.name: p.read_bytes()
                            for p in (workdir / "fig3-artifacts").iterdir()})
        assert outputs[0] == outputs[1]


class TestEmitConfig:
    def test_round_trip(self, tmp_path, monkeypatch, capsys):
        monkeypatch.chdir(tmp_path)
        assert main(["scenario", "fig2", "--emit-config"]) == 0
        emitted = capsys.readouterr().out
        parsed = parse_config_text(emitted)
        assert parsed.to_json_dict() == builtin_scenario("fig2").to_json_dict()
        assert list(tmp_path.iterdir()) == []


class TestComparison:
    def test_two_barrier_invariance(self, tmp_path, monkeypatch, capsys):
        monkeypatch.chdir(tmp_path)
        monkeypatch.setenv("BARRIER_LAB_THREADS", "2")
        data = comparison_config("fig2").to_json_dict()
        assert main(["compare", "--config", write_config(tmp_path / "cmp.json", data)]) == 0
        report = json.loads(
            (tmp_path / "fig2-compare-artifacts" / "invariance_report.json").read_text())
        assert report["passed"] is True
        for check in report["checks"].values():
            assert check["passed"] is True
        assert [p["alpha_slope"] for p in report["pairs"]] == [1.0, 10.0]
        assert all(len(p["equilibria"]) == 3 for p in report["pairs"])
        out = capsys.readouterr().out
        assert "overall         pass" in out

    def test_single_barrier_config_is_rejected(self, tmp_path, capsys):
        data = builtin_scenario("fig3").to_json_dict()
        assert main(["compare", "--config", write_config(tmp_path / "one.json", data)]) == 2
        assert "config error:" in capsys.readouterr().err

    def test_mismatched_zero_sets_fail_as_task_error(self, tmp_path, monkeypatch, capsys):
        monkeypatch.chdir(tmp_path)
        data = comparison_config("fig2").to_json_dict()
        data["cbfs"][1] = {"kind": "ball", "center": [0.0, 3.0], "radius": 1.6,
                          "form": "half", "alpha": {"kind": "linear", "slope": 1.0}}
        assert main(["compare", "--config", write_config(tmp_path / "mm.json", data)]) == 1
        assert "error:" in capsys.readouterr().err


class TestWorkerSelection:
    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("BARRIER_LAB_THREADS", "3")
        assert worker_count() == 3

    def test_default_is_positive(self, monkeypatch):
        monkeypatch.delenv("BARRIER_LAB_THREADS", raising=False)
        assert worker_count() >= 1

    def test_invalid_values_are_rejected(self, monkeypatch):
        for bad in ("0", "-2", "many"):
            monkeypatch.setenv("BARRIER_LAB_THREADS", bad)
            with pytest.raises(InvalidParameterError):
                worker_count()

    def test_chunked_map_keeps_order(self):
        items = list(range(57))
        assert chunked_map(lambda i: i * i, items, workers=4) == [i * i for i in items]
        assert chunked_map(lambda i: i * i, items, workers=1) == [i * i for i in items]
