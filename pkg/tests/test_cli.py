import json
from pathlib import Path

import pytest

from fraclobc.cli import main, parse_config
from fraclobc.errors import ConfigError


class TestParseConfig:
    def test_flags_only(self):
        cfg = parse_config(
            ["lobc_sweep", "--s", "0.75", "--p", "2.0", "--n", "1024",
             "--T", "2.0"]
        )
        assert cfg.experiment == "lobc_sweep"
        assert (cfg.s, cfg.p, cfg.n, cfg.T) == (0.75, 2.0, 1024, 2.0)
        assert cfg.window.zone == "inside"

    def test_bad_s_rejected(self):
        with pytest.raises(ConfigError, match="s must be in"):
            parse_config(["lobc_sweep", "--s", "1.2"])

    def test_flag_overrides_file(self, tmp_path):
        f = tmp_path / "cfg.json"
        f.write_text(json.dumps(
            {"experiment": "eigen_stability", "n": 512, "s": 0.8}
        ))
        cfg = parse_config(["--config", str(f), "--n", "1024"])
        assert cfg.n == 1024      # flag wins
        assert cfg.s == 0.8       # file value survives
        assert cfg.experiment == "eigen_stability"

    def test_set_overrides(self):
        cfg = parse_config(
            ["eigen_stability", "--set", "etas=[0.1,0.05,0.0]",
             "--set", "note=hello"]
        )
        assert cfg.overrides["etas"] == [0.1, 0.05, 0.0]
        assert cfg.overrides["note"] == "hello"

    def test_unknown_field_in_file(self, tmp_path):
        f = tmp_path / "cfg.json"
        f.write_text(json.dumps({"experiment": "eigen_stability",
                                 "bogus": 1}))
        with pytest.raises(ConfigError, match="unknown config field"):
            parse_config(["--config", str(f)])

    def test_missing_experiment(self):
        with pytest.raises(ConfigError, match="no experiment"):
            parse_config(["--s", "0.7"])


class TestMainExitCodes:
    def test_bad_config_is_operational(self, capsys):
        assert main(["run", "lobc_sweep", "--s", "1.2"]) == 1
        assert "error:" in capsys.readouterr().err

    def test_unknown_command(self):
        assert main(["frobnicate"]) == 1

    def test_validate_ok(self, tmp_path, capsys):
        f = tmp_path / "cfg.json"
        f.write_text(json.dumps({"experiment": "eigen_stability", "s": 0.75}))
        assert main(["validate", str(f)]) == 0
        assert "valid" in capsys.readouterr().out

    def test_validate_missing_file(self):
        assert main(["validate", "/nonexistent/cfg.json"]) == 1

    def test_help(self):
        assert main([]) == 0


class TestEndToEnd:
    def test_eigen_stability_artifacts(self, tmp_path):
        out = tmp_path / "eig"
        code = main([
            "run", "eigen_stability", "--s", "0.75", "--n", "96",
            "--out", str(out),
            "--set", "etas=[0.2,0.1,0.0]",
        ])
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["experiment"] == "eigen_stability"
        names = {f["path"] for f in manifest["files"]}
        assert "eigen_stability.csv" in names
        # hash recorded for every emitted file matches the file content
        import hashlib

        for entry in manifest["files"]:
            digest = hashlib.sha256(
                (out / entry["path"]).read_bytes()
            ).hexdigest()
            assert digest == entry["sha256"]

    def test_deterministic_csv_bytes(self, tmp_path):
        args = ["run", "eigen_stability", "--s", "0.75", "--n", "96",
                "--seed", "3", "--set", "etas=[0.1,0.0]"]
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        b1 = (out1 / "eigen_stability.csv").read_bytes()
        b2 = (out2 / "eigen_stability.csv").read_bytes()
        assert b1 == b2

    def test_local_existence_writes_snapshots(self, tmp_path):
        out = tmp_path / "loc"
        code = main([
            "run", "local_existence", "--s", "0.75", "--p", "2.0",
            "--n", "96", "--T", "0.02", "--out", str(out),
        ])
        assert code == 0
        assert (out / "monitors.csv").exists()
        assert sorted(Path(out).glob("snapshot_*.csv"))

    def test_lf_line_endings(self, tmp_path):
        out = tmp_path / "eig"
        main(["run", "eigen_stability", "--n", "96", "--out", str(out),
              "--set", "etas=[0.1,0.0]"])
        raw = (out / "eigen_stability.csv").read_bytes()
        assert b"\r" not in raw


class TestInvariantExitCode:
    def test_refuted_attachment_exits_2(self, tmp_path, capsys):
        # huge initial data detaches immediately: the short-time
        # attachment experiment must report the refutation as exit 2
        out = tmp_path / "loc"
        code = main([
            "run", "local_existence", "--s", "0.75", "--p", "2.0",
            "--n", "96", "--T", "0.05", "--out", str(out),
            "--set", "amplitude=50.0",
        ])
        assert code == 2
        assert "invariant refuted" in capsys.readouterr().err
        # the manifest is still written for post-mortem inspection
        assert (out / "manifest.json").exists()
