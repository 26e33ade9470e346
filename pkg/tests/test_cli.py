import json
import subprocess
import sys

import pytest

from rwprofile.cli import main
from rwprofile.synthgen import GenSpec, generate_corpus
from rwprofile.trace import ApiEvent, Trace, save_trace


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture()
def small_corpus(tmp_path):
    specs = [GenSpec("ransomware", duration=60.0, seed=1),
             GenSpec("ransomware", duration=60.0, seed=2),
             GenSpec("benign_random", duration=60.0, seed=3),
             GenSpec("copy", duration=60.0, seed=4),
             GenSpec("git_like", duration=90.0, seed=5)]
    out = tmp_path / "corpus"
    generate_corpus(specs, out)
    return out


def test_gen_then_classify_end_to_end(tmp_path, capsys):
    manifest = tmp_path / "m.json"
    manifest.write_text(json.dumps([
        {"kind": "ransomware", "duration": 60, "seed": 1},
        {"kind": "benign_random", "duration": 60, "seed": 2}]))
    out = tmp_path / "c"
    code, stdout, _ = run_cli(["gen", "--manifest", str(manifest),
                               "--out", str(out)], capsys)
    assert code == 0
    assert json.loads(stdout)["written"] == 2

    code, stdout, _ = run_cli(["classify", "--corpus", str(out),
                               "--model", "builtin"], capsys)
    assert code == 0
    lines = [json.loads(l) for l in stdout.strip().splitlines()]
    verdicts = [l for l in lines if "final" in l]
    summary = [l for l in lines if "summary" in l]
    assert len(verdicts) == 2 and len(summary) == 1
    finals = {v["id"]: v["final"] for v in verdicts}
    assert finals["ransomware-00001"] == "ransomware"
    assert finals["benign_random-00002"] == "benign"
    assert summary[0]["summary"]["precision"] == 1.0


def test_classify_single_trace(small_corpus, capsys):
    trace_path = small_corpus / "ransomware-00001.jsonl"
    code, stdout, _ = run_cli(["classify", "--trace", str(trace_path)], capsys)
    assert code == 0
    doc = json.loads(stdout)
    assert doc["final"] == "ransomware"


def test_classify_calibrate_flag(small_corpus, capsys):
    code, stdout, err = run_cli(["classify", "--corpus", str(small_corpus),
                                 "--calibrate", "--metric", "euclidean"], capsys)
    assert code == 0
    lines = [json.loads(l) for l in stdout.strip().splitlines()]
    assert "calibrated_stage1_threshold" in lines[0]
    summary = [l for l in lines if "summary" in l][0]["summary"]
    assert summary["recall"] == 1.0 and summary["precision"] == 1.0


def test_classify_jobs_matches_serial(small_corpus, capsys):
    code, serial, _ = run_cli(["classify", "--corpus", str(small_corpus)], capsys)
    assert code == 0
    code, parallel, _ = run_cli(["classify", "--corpus", str(small_corpus),
                                 "--jobs", "2"], capsys)
    assert code == 0
    assert serial == parallel


def test_score_constant_trace_zero(tmp_path, capsys):
    events = []
    for t in range(12):
        for j, api in enumerate(("NtReadFile", "NtWriteFile")):
            events.append(ApiEvent(t + 0.2 * j, api))
    path = tmp_path / "const.jsonl"
    save_trace(Trace("const", "unknown", 12.0, events), path)
    code, stdout, _ = run_cli(["score", "--trace", str(path),
                               "--scores", "manhattan"], capsys)
    assert code == 0
    assert json.loads(stdout)["manhattan"] == 0.0
    # --metric shorthand selects the score as well
    code, stdout, _ = run_cli(["score", "--trace", str(path),
                               "--metric", "euclidean"], capsys)
    assert code == 0
    assert json.loads(stdout)["euclidean"] == 0.0


def test_score_multiple_metrics(small_corpus, capsys):
    code, stdout, _ = run_cli(
        ["score", "--corpus", str(small_corpus),
         "--scores", "manhattan,evenness-normalized,changepoints"], capsys)
    assert code == 0
    rows = [json.loads(l) for l in stdout.strip().splitlines()]
    assert len(rows) == 5
    for row in rows:
        assert {"id", "manhattan", "evenness-normalized", "changepoints"} <= set(row)
    assert [r["id"] for r in rows] == sorted(r["id"] for r in rows)


def test_score_unknown_metric(capsys):
    code, _, err = run_cli(["score", "--trace", "x", "--scores", "nope"], capsys)
    assert code == 1


def test_classify_missing_model_is_io_error(small_corpus, capsys):
    code, _, err = run_cli(["classify", "--corpus", str(small_corpus),
                            "--model", "/nonexistent/model.json"], capsys)
    assert code == 2
    assert "rwprofile:" in err


def test_unknown_flag_exits_one(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["classify", "--frobnicate"])
    assert exc.value.code == 1


def test_no_command_prints_usage(capsys):
    assert main([]) == 1


def test_repeat_runs_byte_identical(small_corpus):
    cmd = [sys.executable, "-m", "rwprofile.cli", "classify",
           "--corpus", str(small_corpus)]
    a = subprocess.run(cmd, capture_output=True)
    b = subprocess.run(cmd, capture_output=True)
    assert a.returncode == 0
    assert a.stdout == b.stdout


def test_ingest_roundtrip(tmp_path, capsys):
    report = {"info": {"duration": 30},
              "target": {"file": {"name": "sample.exe"}},
              "behavior": {"processes": [
                  {"calls": [{"time": 1000.0 + i * 0.5, "api": "NtWriteFile",
                              "category": "file"} for i in range(40)]}]}}
    rpt = tmp_path / "report.json"
    rpt.write_text(json.dumps(report))
    out = tmp_path / "trace.jsonl"
    code, _, _ = run_cli(["ingest", "--input", str(rpt), "--out", str(out)], capsys)
    assert code == 0
    first = json.loads(out.read_text().splitlines()[0])
    assert first["id"] == "sample.exe"
    code, stdout, _ = run_cli(["score", "--trace", str(out),
                               "--scores", "manhattan"], capsys)
    assert code == 0
    assert json.loads(stdout)["id"] == "sample.exe"


def test_train_contrast_and_use(tmp_path, small_corpus, capsys):
    model_path = tmp_path / "model.json"
    code, stdout, _ = run_cli(["train-contrast", "--corpus", str(small_corpus),
                               "--out", str(model_path)], capsys)
    assert code == 0
    doc = json.loads(model_path.read_text())
    assert set(doc) == {"tau", "reference_duration", "R", "B", "O"}
    code, stdout, _ = run_cli(["classify", "--corpus", str(small_corpus),
                               "--model", str(model_path)], capsys)
    assert code == 0


def test_report_command(tmp_path, small_corpus, capsys):
    code, stdout, _ = run_cli(["classify", "--corpus", str(small_corpus)], capsys)
    verdicts = tmp_path / "verdicts.jsonl"
    verdicts.write_text(stdout)
    code, stdout, err = run_cli(["report", "--verdicts", str(verdicts),
                                 "--corpus", str(small_corpus), "--pretty"], capsys)
    assert code == 0
    doc = json.loads(stdout)
    assert doc["recall"] == 1.0
    assert "precision" in err  # pretty table on stderr


def test_config_file_layering(tmp_path, small_corpus, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"score": {"scores": "euclidean"}}))
    code, stdout, _ = run_cli(["score", "--corpus", str(small_corpus),
                               "--config", str(cfg)], capsys)
    assert code == 0
    row = json.loads(stdout.strip().splitlines()[0])
    assert "euclidean" in row and "manhattan" not in row
    # explicit flag beats the config file
    code, stdout, _ = run_cli(["score", "--corpus", str(small_corpus),
                               "--config", str(cfg), "--scores", "manhattan"],
                              capsys)
    assert code == 0
    row = json.loads(stdout.strip().splitlines()[0])
    assert "manhattan" in row and "euclidean" not in row


def test_gen_requires_manifest_or_preset(tmp_path, capsys):
    code, _, err = run_cli(["gen", "--out", str(tmp_path / "d")], capsys)
    assert code == 1
