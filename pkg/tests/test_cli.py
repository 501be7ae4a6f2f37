"""Tests for the command-line front end: parsing, precedence, artifacts."""

import filecmp
import json
import subprocess
import sys

import pytest

from lrchain.cli import (
    Invocation,
    UsageError,
    dispatch,
    main,
    parse_invocation,
    resolve_config,
)


def invoke(command="constants", config=None, sets=(), out=None,
           shorthands=()):
    return Invocation(command=command, config_path=config,
                      overrides=tuple(sets), out_dir=out,
                      shorthands=tuple(shorthands))


class TestParsing:
    def test_shorthands_and_overrides_are_captured(self):
        inv = parse_invocation(["converge", "--theta", "2.5", "--sites",
                                "1024,2048", "--seed", "7",
                                "--set", "k_window=20"])
        assert inv.command == "converge"
        assert inv.overrides == ("k_window=20",)
        assert dict(inv.shorthands) == {"theta": "2.5",
                                        "sites": "1024,2048", "seed": "7"}

    def test_missing_command_is_a_usage_error(self):
        with pytest.raises(SystemExit) as excinfo:
            parse_invocation([])
        assert excinfo.value.code == 2

    def test_unknown_flag_is_a_usage_error(self):
        with pytest.raises(SystemExit) as excinfo:
            parse_invocation(["constants", "--bogus"])
        assert excinfo.value.code == 2


class TestResolution:
    def test_precedence_defaults_file_set_shorthand(self, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"theta": 3.0, "gamma": 0.5}))
        resolved, warnings = resolve_config(invoke(
            config=str(config),
            sets=("gamma=1.0", "replicas=4"),
            shorthands=(("replicas", "2"),)))
        assert resolved["theta"] == 3.0
        assert resolved["gamma"] == 1.0
        assert resolved["replicas"] == 2
        assert resolved["seed"] == 20260816
        assert warnings == []

    def test_repeated_set_warns_and_last_wins(self):
        resolved, warnings = resolve_config(invoke(
            sets=("theta=3", "theta=4")))
        assert resolved["theta"] == 4.0
        assert len(warnings) == 1 and "theta" in warnings[0]

    def test_unknown_keys_rejected_from_both_layers(self, tmp_path):
        with pytest.raises(UsageError, match="bogus"):
            resolve_config(invoke(sets=("bogus=1",)))
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"bogus": 1}))
        with pytest.raises(UsageError, match="bogus"):
            resolve_config(invoke(config=str(config)))

    def test_malformed_tokens_and_values(self):
        with pytest.raises(UsageError, match="KEY=VALUE"):
            resolve_config(invoke(sets=("theta",)))
        with pytest.raises(UsageError, match="theta"):
            resolve_config(invoke(sets=("theta=abc",)))
        with pytest.raises(UsageError, match="seed"):
            resolve_config(invoke(sets=("seed=-1",)))
        with pytest.raises(UsageError, match="sites"):
            resolve_config(invoke(sets=("sites=[]",)))

    def test_comma_lists_match_json_arrays(self):
        by_comma, _ = resolve_config(invoke(sets=("sites=128,256",)))
        by_array, _ = resolve_config(invoke(sets=("sites=[128,256]",)))
        assert by_comma["sites"] == by_array["sites"] == [128, 256]

    def test_tolerance_concretizes_by_theta(self):
        low, _ = resolve_config(invoke(sets=("theta=1.5",)))
        high, _ = resolve_config(invoke(sets=("theta=3.5",)))
        assert low["dispersion.tolerance"] == 1e-6
        assert high["dispersion.tolerance"] == 1e-12

    def test_missing_config_file_is_a_usage_error(self):
        with pytest.raises(UsageError, match="cannot read"):
            resolve_config(invoke(config="/nonexistent/cfg.json"))


class TestConstantsCommand:
    def test_lemma_row_prints_exactly(self, tmp_path, capsys):
        assert main(["constants", "--theta", "3",
                     "--out", str(tmp_path)]) == 0
        assert capsys.readouterr().out == "theta,c1,c2\n3,1,1.5\n"

    def test_second_constant_blank_below_two(self, tmp_path, capsys):
        assert main(["constants", "--theta", "1.5",
                     "--out", str(tmp_path)]) == 0
        row = capsys.readouterr().out.splitlines()[1]
        assert row.endswith(",") and row.startswith("1.5,")


class TestDispersionCommand:
    def test_csv_rows_track_the_prediction(self, tmp_path, capsys):
        assert main(["dispersion", "--theta", "3.5",
                     "--out", str(tmp_path)]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "theta,k,alpha_hat,prediction,remainder_ratio"
        assert len(lines) == 6
        for line in lines[1:4]:
            cells = line.split(",")
            assert float(cells[1]) >= 2.0 ** -10
            assert abs(float(cells[4])) < 0.01


class TestSimulateCommand:
    def test_reruns_write_identical_snapshots(self, tmp_path):
        args = ["simulate", "--theta", "2.5", "--gamma", "1",
                "--sites", "128", "--set", "sim.steps=50"]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b")]) == 0
        assert filecmp.cmp(tmp_path / "a" / "snapshot_N128.csv",
                           tmp_path / "b" / "snapshot_N128.csv",
                           shallow=False)
        drift = json.loads((tmp_path / "a" / "conservation.json")
                           .read_text())
        assert drift[0]["energy_drift"] < 1e-9
        assert drift[0]["momentum_drift"] < 1e-12


class TestConvergeCommand:
    def test_passing_run_and_byte_identical_replay(self, tmp_path):
        first = tmp_path / "first"
        again = tmp_path / "again"
        assert main(["converge", "--theta", "2.5", "--sites", "128,256",
                     "--out", str(first)]) == 0
        assert main(["converge", "--config",
                     str(first / "resolved_config.json"),
                     "--out", str(again)]) == 0
        for name in ("resolved_config.json", "report.json", "metrics.csv"):
            assert filecmp.cmp(first / name, again / name, shallow=False)

    def test_numeric_failure_leaves_an_error_record(self, tmp_path):
        assert main(["converge", "--set", "experiment=lln",
                     "--out", str(tmp_path)]) == 3
        record = json.loads((tmp_path / "run.json").read_text())
        assert record["status"] == 3
        assert record["error"]["type"] == "ValueError"
        assert (tmp_path / "resolved_config.json").exists()


class TestReportCommand:
    def test_summary_over_emitted_artifacts(self, tmp_path):
        assert main(["converge", "--theta", "2.5", "--sites", "128,256",
                     "--out", str(tmp_path)]) == 0
        assert main(["report", "--out", str(tmp_path)]) == 0
        lines = (tmp_path / "summary.csv").read_text().splitlines()
        assert lines[0] == "path,experiment,theta,gamma,all_passed"
        assert lines[1] == "report.json,wave_limit,2.5,0,true"

    def test_empty_directory_passes_vacuously(self, tmp_path):
        assert main(["report", "--out", str(tmp_path)]) == 0
        assert (tmp_path / "summary.csv").read_text() == (
            "path,experiment,theta,gamma,all_passed\n")


class TestExitStatuses:
    def test_usage_paths_return_two(self, tmp_path):
        assert main([]) == 2
        assert main(["constants", "--set", "bogus=1",
                     "--out", str(tmp_path)]) == 2

    def test_help_returns_zero(self, capsys):
        assert main(["--help"]) == 0
        assert "constants" in capsys.readouterr().out

    def test_output_dir_falls_back_to_environment(self, tmp_path,
                                                  monkeypatch, capsys):
        monkeypatch.setenv("OUTPUT_DIR", str(tmp_path / "env"))
        assert main(["constants", "--theta", "3"]) == 0
        capsys.readouterr()
        assert (tmp_path / "env" / "resolved_config.json").exists()

    def test_flag_outranks_environment(self, tmp_path, monkeypatch,
                                       capsys):
        monkeypatch.setenv("OUTPUT_DIR", str(tmp_path / "env"))
        assert main(["constants", "--theta", "3",
                     "--out", str(tmp_path / "flag")]) == 0
        capsys.readouterr()
        assert (tmp_path / "flag" / "resolved_config.json").exists()
        assert not (tmp_path / "env").exists()


class TestModuleEntry:
    def test_python_dash_m_route(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "lrchain", "constants", "--theta", "3",
             "--out", str(tmp_path)],
            capture_output=True, text=True, timeout=120)
        assert proc.returncode == 0
        assert proc.stdout == "theta,c1,c2\n3,1,1.5\n"
