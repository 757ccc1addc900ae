"""Unit tests for sde_envelope.cli."""

import json

import pytest

from sde_envelope._errors import EXIT_BLOWUP, EXIT_INVALID, EXIT_OK
from sde_envelope.cli import WORKERS_ENV, _default_workers, build_parser, main


class TestParser:
    def test_run_arguments(self):
        args = build_parser().parse_args(["run", "--config", "c.json", "--out", "o", "--workers", "3"])
        assert (args.verb, args.config, args.out, args.workers) == ("run", "c.json", "o", 3)
        assert args.master_seed is None

    def test_verb_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_compare_needs_out(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["compare"])


class TestDefaultWorkers:
    def test_unset(self, monkeypatch):
        monkeypatch.delenv(WORKERS_ENV, raising=False)
        assert _default_workers() == 1

    def test_from_env(self, monkeypatch):
        monkeypatch.setenv(WORKERS_ENV, "4")
        assert _default_workers() == 4

    def test_invalid(self, monkeypatch, caplog):
        monkeypatch.setenv(WORKERS_ENV, "many")
        assert _default_workers() == 1
        assert "not an integer" in caplog.text


class TestRunVerb:
    def test_success(self, write_config, small_config, tmp_path, capsys):
        code = main(["run", "--config", str(write_config(small_config)), "--out", str(tmp_path / "out")])
        assert code == EXIT_OK
        printed = json.loads(capsys.readouterr().out)
        assert sorted(printed["files"]) == ["birkhoff.csv", "envelope.csv", "martingale.csv"]
        assert printed["blowups"] == 0

    def test_master_seed_override(self, write_config, small_config, tmp_path):
        main(["run", "--config", str(write_config(small_config)), "--out", str(tmp_path / "a")])
        main(["run", "--config", str(write_config(small_config)), "--out", str(tmp_path / "b"), "--master-seed", "12"])
        manifest = json.loads((tmp_path / "b" / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["config"]["ensemble"]["master_seed"] == 12
        assert (tmp_path / "a" / "envelope.csv").read_bytes() != (tmp_path / "b" / "envelope.csv").read_bytes()

    def test_invalid_config(self, write_config, small_config, tmp_path, capsys):
        small_config["schedule"]["dt"] = -1.0
        code = main(["run", "--config", str(write_config(small_config)), "--out", str(tmp_path)])
        assert code == EXIT_INVALID
        assert "field=<schedule.dt>" in capsys.readouterr().err

    def test_missing_config(self, tmp_path, capsys):
        code = main(["run", "--config", str(tmp_path / "absent.json"), "--out", str(tmp_path)])
        assert code == EXIT_INVALID
        assert "file not found" in capsys.readouterr().err

    def test_missing_output_dir(self, write_config, small_config):
        assert main(["run", "--config", str(write_config(small_config))]) == EXIT_INVALID

    def test_blowup(self, write_config, tmp_path, capsys):
        document = {
            "model": {"kind": "langevin", "coefficients": [0, 0, 0, 0, 0.25]},
            "schedule": {"t0": 1.0, "ratio": 2.0, "count": 2, "dt": 0.1},
            "x0": 10.0,
            "estimators": [{"kind": "envelope"}],
            "ensemble": {"seeds": 2},
        }
        assert main(["run", "--config", str(write_config(document)), "--out", str(tmp_path)]) == EXIT_BLOWUP
        assert "most of the ensemble exploded" in capsys.readouterr().err


class TestCompareVerb:
    def test_success(self, write_config, small_config, tmp_path, capsys):
        config_path = str(write_config(small_config))
        main(["run", "--config", config_path, "--out", str(tmp_path)])
        capsys.readouterr()
        assert main(["compare", "--out", str(tmp_path), "--config", config_path]) == EXIT_OK
        out = capsys.readouterr().out
        assert "birkhoff:x2" in out
        assert "martingale:QV_over_t" in out
        assert (tmp_path / "comparison.csv").is_file()

    def test_mismatched_model(self, write_config, small_config, tmp_path, capsys):
        main(["run", "--config", str(write_config(small_config)), "--out", str(tmp_path)])
        other = {**small_config, "model": {"kind": "ou", "lam": 5.0}}
        code = main(["compare", "--out", str(tmp_path), "--config", str(write_config(other, "other.json"))])
        assert code == EXIT_INVALID
        assert "does not match" in capsys.readouterr().err

    def test_missing_run(self, tmp_path):
        assert main(["compare", "--out", str(tmp_path)]) == EXIT_INVALID


class TestValidateVerb:
    def test_schema(self, capsys):
        assert main(["validate", "--schema"]) == EXIT_OK
        schema = json.loads(capsys.readouterr().out)
        assert "estimators" in schema["properties"]

    def test_config_echo(self, write_config, small_config, capsys):
        assert main(["validate", "--config", str(write_config(small_config))]) == EXIT_OK
        echoed = json.loads(capsys.readouterr().out)
        assert echoed["schedule"]["dt"] == 0.05
        assert echoed["invariant"]["points"] == 48001

    def test_unknown_key(self, write_config, small_config, capsys):
        small_config["estimators"][0]["gauge"] = "loglog"
        assert main(["validate", "--config", str(write_config(small_config))]) == EXIT_INVALID
        assert "field=<estimators.0.envelope.gauge>" in capsys.readouterr().err
