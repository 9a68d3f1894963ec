import io
import json
import os
import socket
import subprocess
import sys
import time
from contextlib import redirect_stdout

import pytest

from smartwear.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out.strip()
    return code, (json.loads(out) if out else None)


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("cli")


@pytest.fixture(scope="module")
def pipeline(workdir):
    """gen -> preprocess on the default corpus, shared by the tests below."""
    env_out = {}
    for name, argv in [("gen", ["gen", "--out", str(workdir / "sessions")]),
                       ("pre", ["preprocess", "--sessions", str(workdir / "sessions"), "--no-augment",
                                "--out", str(workdir / "dataset")])]:
        buf = io.StringIO()
        with redirect_stdout(buf):
            assert main(argv) == 0
        env_out[name] = json.loads(buf.getvalue())
    return env_out


def test_gen_and_preprocess_counts(pipeline, workdir):
    assert pipeline["gen"]["sessions"] == 6 * 5 * 4
    assert pipeline["pre"]["raw_windows"] == 600
    assert (pipeline["pre"]["train"], pipeline["pre"]["val"], pipeline["pre"]["test"]) == (420, 90, 90)
    man = json.load(open(workdir / "sessions" / "manifest.json"))
    assert man["subcommand"] == "gen" and len(man["checksums"]) == 240
    assert os.path.isfile(workdir / "dataset" / "run_manifest.json")


def test_train_tiny_is_reproducible_and_downstream_runs(pipeline, workdir, capsys):
    common = ["--dataset", str(workdir / "dataset"), "--config", "tiny", "--epochs", "1"]
    code, a = run(capsys, "train", *common, "--out", str(workdir / "t1"))
    assert code == 0
    code, b = run(capsys, "train", *common, "--out", str(workdir / "t2"))
    assert code == 0 and a["sha256"] == b["sha256"]
    man = json.load(open(workdir / "t1" / "manifest.json"))
    assert man["config"]["model"] == "tiny" and man["config"]["epochs"] == 1

    ck = ["--checkpoint", str(workdir / "t1" / "checkpoint.swck"), "--dataset", str(workdir / "dataset")]
    code, ev = run(capsys, "eval", *ck, "--out", str(workdir / "ev"))
    assert code == 0 and ev["n"] == 90
    assert open(workdir / "ev" / "confusion.csv").read().count("\n") == 7
    code, ex = run(capsys, "explain", *ck, "--limit", "2", "--out", str(workdir / "ex"))
    assert code == 0 and len(ex["windows"]) == 2
    cam = open(workdir / "ex" / (ex["windows"][0]["window_id"] + ".csv")).read().splitlines()
    assert cam[0] == "sample,time_s,cam" and len(cam) == 1301
    code, ts = run(capsys, "tsne", *ck, "--iterations", "300", "--out", str(workdir / "ts"))
    assert code == 0 and ts["points"] == 90 and ts["perplexity"] == 29.666666666666668


def test_config_from_previous_manifest(pipeline, workdir, capsys):
    code, first = run(capsys, "preprocess", "--sessions", str(workdir / "sessions"), "--no-augment",
                      "--split-seed", "7", "--out", str(workdir / "d7"))
    assert code == 0
    code, again = run(capsys, "preprocess", "--sessions", str(workdir / "sessions"),
                      "--config", str(workdir / "d7" / "run_manifest.json"), "--out", str(workdir / "d7b"))
    assert code == 0
    m1 = json.load(open(workdir / "d7" / "manifest.json"))
    m2 = json.load(open(workdir / "d7b" / "manifest.json"))
    assert m1["split"] == m2["split"]
    run_man = json.load(open(workdir / "d7b" / "run_manifest.json"))
    assert run_man["config"]["split_seed"] == 7 and run_man["config"]["augment"] is False


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["gen", "--subjects", "9"],
    ["gen", "--classes", "0,1"],
    ["train", "--arch", "vgg"],
    ["train", "--config", "no-such-preset"],
    ["ablate", "--variants", "cnn/filtered"],
    ["stream"],
    [],
])
def test_usage_errors_exit_1(argv, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SMARTWEAR_DATA", str(tmp_path))
    assert main(argv) == 1
    assert capsys.readouterr().out == ""


def test_runtime_errors_exit_2(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SMARTWEAR_DATA", str(tmp_path))
    assert main(["train"]) == 2  # no dataset under the data dir
    assert main(["preprocess", "--sessions", str(tmp_path / "missing")]) == 2
    assert "error:" in capsys.readouterr().err


def test_data_dir_from_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SMARTWEAR_DATA", str(tmp_path))
    code, out = run(capsys, "gen", "--classes", "1", "--subjects", "1", "--sessions-per-class", "1",
                    "--duration-s", "10")
    assert code == 0 and out["sessions"] == 1
    assert os.path.isfile(tmp_path / "sessions" / "c1_s1_r0.csv")
    assert os.path.isfile(tmp_path / "sessions" / "manifest.json")


def test_stream_and_record_in_separate_processes(tmp_path):
    env = dict(os.environ, SMARTWEAR_DATA=str(tmp_path))
    cmd = [sys.executable, "-m", "smartwear.cli"]
    subprocess.run(cmd + ["gen", "--classes", "3", "--subjects", "1", "--sessions-per-class", "1",
                          "--duration-s", "10"], env=env, check=True, capture_output=True)
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = str(s.getsockname()[1])
    rec = subprocess.Popen(cmd + ["record", "--port", port, "--timeout", "60",
                                  "--label-from", str(tmp_path / "sessions" / "c3_s1_r0"),
                                  "--out", str(tmp_path / "rec" / "one")],
                           env=env, stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
    for _ in range(100):
        st = subprocess.run(cmd + ["stream", "--session", str(tmp_path / "sessions" / "c3_s1_r0"),
                                   "--port", port], env=env, capture_output=True, text=True)
        if st.returncode == 0:
            break
        assert st.returncode == 2  # listener not up yet
        time.sleep(0.1)
    assert json.loads(st.stdout)["frames_sent"] == 100
    out, err = rec.communicate(timeout=60)
    assert rec.returncode == 0, err
    summary = json.loads(out)
    assert summary["samples"] == 1300 and summary["gaps"] == []
    meta = json.load(open(tmp_path / "rec" / "one.json"))
    assert meta["label"]["class_id"] == 3
    assert os.path.isfile(tmp_path / "rec" / "one.manifest.json")
    assert os.path.isfile(tmp_path / "runs" / "stream-c3_s1_r0.json")
