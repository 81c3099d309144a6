import hashlib
import json
import subprocess
import sys

import pytest

from scvad.cli import EXIT_DATA, EXIT_USAGE, main

GOLDEN_AUC = 0.8907103825136612  # frozen from the first verified pipeline run

SYNTH = ["synth", "--dim", "8", "--length", "100", "--anomaly-spans", "60-68",
         "--anomaly-magnitude", "1.5", "--seed", "13"]
TRAIN = ["train", "--seed", "13", "--n-shots", "30", "--window", "5",
         "--epochs", "40", "--lr", "0.001", "--model-dim", "16"]
DETECT = ["detect", "--consistency-k", "3", "--consistency-q", "4"]


def run_pipeline(workdir, env=None):
    def run(args):
        proc = subprocess.run(
            [sys.executable, "-m", "scvad.cli", *args],
            cwd=workdir, env=env, capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        return proc

    run(SYNTH + ["--output", "s.scvf"])
    run(TRAIN + ["--input", "s.scvf", "--output", "m.scvm"])
    run(DETECT + ["--input", "s.scvf", "--checkpoint", "m.scvm", "--output", "v.csv"])
    run(["eval", "--input", "s.scvf", "--verdicts", "v.csv", "--output", "eval"])
    digests = {
        name: hashlib.sha256((workdir / name).read_bytes()).hexdigest()
        for name in ("s.scvf", "s.scvf.meta.json", "m.scvm", "v.csv",
                     "eval/auc.json", "eval/roc.csv", "eval/scores.csv")
    }
    auc = json.loads((workdir / "eval" / "auc.json").read_text())["frame_auc"]
    return digests, auc


def test_pipeline_reproduces_golden_auc(tmp_path):
    _, auc = run_pipeline(tmp_path)
    assert auc == GOLDEN_AUC


def test_pipeline_byte_identical_across_runs_and_threads(tmp_path, monkeypatch):
    import os

    env1 = {**os.environ, "SCVAD_THREADS": "1"}
    env4 = {**os.environ, "SCVAD_THREADS": "4"}
    d1 = tmp_path / "a"
    d2 = tmp_path / "b"
    d1.mkdir()
    d2.mkdir()
    digests1, _ = run_pipeline(d1, env1)
    digests2, _ = run_pipeline(d2, env4)
    assert digests1 == digests2


def test_missing_input_is_data_error(tmp_path, capsys):
    code = main(["train", "--input", str(tmp_path / "nope.scvf"),
                 "--output", str(tmp_path / "m.scvm")])
    assert code == EXIT_DATA
    err = capsys.readouterr().err
    assert err.startswith("scvad: data-error:")
    assert not (tmp_path / "m.scvm").exists()  # no partial outputs


def test_bad_window_shots_is_usage_error(tmp_path, capsys):
    (tmp_path / "s.scvf").write_bytes(b"")
    code = main(["train", "--input", str(tmp_path / "s.scvf"),
                 "--output", str(tmp_path / "m.scvm"),
                 "--n-shots", "5", "--window", "10"])
    assert code == EXIT_USAGE
    assert capsys.readouterr().err.startswith("scvad: usage-error:")


def test_bad_flags_use_argparse_usage_exit(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["train", "--no-such-flag"])
    assert exc.value.code == 2


def test_corrupt_stream_is_data_error(tmp_path, capsys):
    bad = tmp_path / "bad.scvf"
    bad.write_bytes(b"JUNKJUNKJUNKJUNKJUNK")
    code = main(["train", "--input", str(bad), "--output", str(tmp_path / "m.scvm")])
    assert code == EXIT_DATA


def test_every_run_emits_one_manifest(tmp_path):
    code = main(["synth", "--output", str(tmp_path / "s.scvf"), "--dim", "4",
                 "--length", "30", "--seed", "1"])
    assert code == 0
    manifest = json.loads((tmp_path / "s.scvf.manifest.json").read_text())
    assert manifest["command"] == "synth"
    assert manifest["seed"] == 1
    assert str(tmp_path / "s.scvf") in manifest["outputs"]
