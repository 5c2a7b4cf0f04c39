"""End-to-end command-line behavior on a small synthetic dataset."""

import json

import numpy as np
import pytest

from freqcycle.cli import DEFAULTS, effective_config, main, read_config_file

from conftest import write_toy_csv

FAST = ["--lookback", "48", "--horizon", "12", "--cycle-len", "24",
        "--ffn-hidden", "16", "--epochs", "2", "--batch", "64"]


@pytest.fixture
def toy(tmp_path):
    path = tmp_path / "toy.csv"
    write_toy_csv(path)
    return path


class TestConfig:
    def test_precedence_defaults_file_flags(self, tmp_path):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text("lookback=336\nlr=0.005\n")

        class Args:
            config = str(cfgfile)
            lookback = None
            lr = 0.001

        args = Args()
        for key in DEFAULTS:
            if not hasattr(args, key):
                setattr(args, key, None)
        cfg = effective_config(args)
        assert cfg["lookback"] == 336       # file beats default
        assert cfg["lr"] == 0.001           # flag beats file
        assert cfg["horizon"] == 96         # default survives

    def test_unknown_key_rejected(self, tmp_path):
        f = tmp_path / "bad.cfg"
        f.write_text("lookbak=96\n")
        with pytest.raises(ValueError, match="lookbak"):
            read_config_file(f)

    def test_malformed_line_rejected(self, tmp_path):
        f = tmp_path / "bad.cfg"
        f.write_text("lookback 96\n")
        with pytest.raises(ValueError, match="key=value"):
            read_config_file(f)

    def test_comments_and_types(self, tmp_path):
        f = tmp_path / "ok.cfg"
        f.write_text("# comment\n\nseed=5\nlr=0.02\ninst_norm=false\nvariant=lpf\n")
        cfg = read_config_file(f)
        assert cfg == {"seed": 5, "lr": 0.02, "inst_norm": False, "variant": "lpf"}


class TestTrain:
    def test_smoke_writes_artifacts(self, toy, tmp_path, capsys):
        out = tmp_path / "run"
        rc = main(["train", "--data", str(toy), *FAST, "--out", str(out)])
        assert rc == 0
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["dataset"] == "toy"
        assert metrics["L"] == 48 and metrics["H"] == 12
        assert np.isfinite(metrics["mse"]) and np.isfinite(metrics["mae"])
        assert (out / "model.ckpt").exists()
        history = (out / "history.csv").read_text().splitlines()
        assert history[0] == "epoch,train_mse,val_mse"
        assert len(history) == 3  # header + 2 epochs

    def test_variant_recorded(self, toy, tmp_path):
        out = tmp_path / "run"
        rc = main(["train", "--data", str(toy), *FAST,
                   "--variant", "two_mlp", "--out", str(out)])
        assert rc == 0
        assert json.loads((out / "metrics.json").read_text())["variant"] == "two_mlp"

    def test_missing_dataset_exit_2_names_path(self, tmp_path, capsys):
        rc = main(["train", "--data", str(tmp_path / "absent.csv")])
        assert rc == 2
        assert "absent.csv" in capsys.readouterr().err

    def test_config_round_trip(self, toy, tmp_path):
        # Re-running from the dumped effective config reproduces the
        # metrics bit for bit.
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["train", "--data", str(toy), *FAST, "--out", str(out1)])
        rc = main(["train", "--config", str(out1 / "config.txt"),
                   "--out", str(out2)])
        assert rc == 0
        assert (out1 / "metrics.json").read_bytes() == (out2 / "metrics.json").read_bytes()

    def test_multiscale_flag(self, toy, tmp_path):
        out = tmp_path / "run"
        rc = main(["train", "--data", str(toy), "--multiscale",
                   "--weekly-lookback", "96", "--pool-kernel", "24",
                   "--lookback", "48", "--horizon", "12", "--cycle-len", "24",
                   "--ffn-hidden", "16", "--epochs", "2", "--batch", "64",
                   "--out", str(out)])
        assert rc == 0
        assert json.loads((out / "metrics.json").read_text())["variant"] == "multiscale"


class TestEval:
    def test_matches_training_metrics(self, toy, tmp_path):
        out = tmp_path / "run"
        main(["train", "--data", str(toy), *FAST, "--out", str(out)])
        trained = json.loads((out / "metrics.json").read_text())
        rc = main(["eval", "--ckpt", str(out / "model.ckpt"),
                   "--data", str(toy)])
        assert rc == 0

    def test_metrics_identical(self, toy, tmp_path, capsys):
        out = tmp_path / "run"
        main(["train", "--data", str(toy), *FAST, "--out", str(out)])
        trained = json.loads((out / "metrics.json").read_text())
        capsys.readouterr()
        main(["eval", "--ckpt", str(out / "model.ckpt"), "--data", str(toy)])
        evaled = json.loads(capsys.readouterr().out.strip())
        assert evaled["mse"] == trained["mse"]
        assert evaled["mae"] == trained["mae"]

    def test_horizon_mismatch_lists_both(self, toy, tmp_path, capsys):
        out = tmp_path / "run"
        main(["train", "--data", str(toy), *FAST, "--out", str(out)])
        rc = main(["eval", "--ckpt", str(out / "model.ckpt"),
                   "--data", str(toy), "--horizon", "24"])
        assert rc != 0
        err = capsys.readouterr().err
        assert "12" in err and "24" in err

    def test_corrupted_checkpoint(self, toy, tmp_path, capsys):
        bad = tmp_path / "bad.ckpt"
        bad.write_bytes(b"garbage data, not a checkpoint")
        rc = main(["eval", "--ckpt", str(bad), "--data", str(toy)])
        assert rc != 0


class TestReproduce:
    def test_no_datasets_all_na_exit_0(self, tmp_path, monkeypatch, capsys):
        monkeypatch.chdir(tmp_path)  # no ./data here
        monkeypatch.delenv("FREQCYCLE_DATA", raising=False)
        for table in ("table1", "table2", "table3", "table4", "windows"):
            rc = main(["reproduce", table, "--out", str(tmp_path / "rep")])
            assert rc == 0
            report = (tmp_path / "rep" / f"report_{table}.md").read_text()
            assert "N/A" in report


class TestOther:
    def test_spectrum_csv(self, toy, tmp_path):
        out = tmp_path / "run"
        main(["train", "--data", str(toy), *FAST, "--out", str(out)])
        rc = main(["spectrum", "--data", str(toy),
                   "--ckpt", str(out / "model.ckpt"), "--out", str(out)])
        assert rc == 0
        lines = (out / "spectrum.csv").read_text().splitlines()
        assert lines[0] == "bin,mean_amp_before,mean_amp_after,ratio"
        assert len(lines) == 1 + 48 // 2 + 1

    def test_bench_json(self, toy, capsys):
        rc = main(["bench", "--data", str(toy), *FAST])
        assert rc == 0
        report = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert report["params_count"] > 0

    def test_threads_env_validated(self, toy, monkeypatch, capsys):
        monkeypatch.setenv("FREQCYCLE_THREADS", "0")
        rc = main(["bench", "--data", str(toy), *FAST])
        assert rc != 0

    def test_selfcheck_passes(self, capsys):
        rc = main(["selfcheck"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "rfft adjoint" in out and "PASS" in out
