import hashlib
import json
from pathlib import Path

import pytest

from pinf.cli import main

FIXTURE = Path(__file__).parent / "data" / "caption_fixture.json"


def run(capsys, *argv) -> tuple[int, str]:
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def dir_digest(root: Path) -> str:
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(p.relative_to(root).as_posix().encode())
            h.update(p.read_bytes())
    return h.hexdigest()


def run_chain(workdir: Path, capsys) -> str:
    """gen -> train -> calibrate -> eval-detect -> eval-flaws -> filter ->
    caption -> eval-captions, all with fixed seeds; returns captured JSON."""
    import os

    workdir.mkdir(parents=True, exist_ok=True)
    old = os.getcwd()
    os.chdir(workdir)
    try:
        outputs = []
        for argv in (
            ["gen-corpus", "--out", "corpus", "--count", "160", "--seed", "9", "--json"],
            ["train", "--corpus", "corpus", "--out", "model.json", "--seed", "2",
             "--epochs", "25", "--hidden", "24", "--json"],
            ["calibrate", "--corpus", "corpus", "--model", "model.json",
             "--out", "calib.json", "--json"],
            ["eval-detect", "--corpus", "corpus", "--split", "test",
             "--model", "model.json", "--calib", "calib.json", "--json"],
            ["eval-flaws", "--corpus", "corpus", "--split", "test",
             "--model", "model.json", "--json"],
            ["filter", "--corpus", "corpus", "--split", "test", "--model", "model.json",
             "--calib", "calib.json", "--out", "qualified.json", "--json"],
            ["caption", "--corpus", "corpus", "--split", "test",
             "--candidates", "cand.jsonl", "--references", "refs.jsonl", "--json"],
            ["eval-captions", "--candidates", "cand.jsonl",
             "--references", "refs.jsonl", "--json"],
        ):
            code, out = run(capsys, *argv)
            assert code == 0, f"{argv} failed: {out}"
            outputs.append(out)
        return "".join(outputs)
    finally:
        os.chdir(old)


def test_gen_corpus_deterministic(tmp_path, capsys):
    code, _ = run(capsys, "gen-corpus", "--out", str(tmp_path / "a"),
                  "--count", "10", "--seed", "4")
    assert code == 0
    code, _ = run(capsys, "gen-corpus", "--out", str(tmp_path / "b"),
                  "--count", "10", "--seed", "4")
    assert code == 0
    assert dir_digest(tmp_path / "a") == dir_digest(tmp_path / "b")


def test_full_chain_outputs_and_determinism(tmp_path, capsys):
    out1 = run_chain(tmp_path / "run1", capsys)
    out2 = run_chain(tmp_path / "run2", capsys)
    assert out1 == out2  # byte-identical reports across runs

    lines = [json.loads(l) for l in out1.strip().splitlines()]
    detect = lines[3]
    for key in ("precision", "recall", "auc_roc", "auc_pr"):
        assert key in detect
    flaws = lines[4]
    assert len(flaws["rows"]) == 7
    filter_doc = lines[5]
    assert filter_doc["kept"] + filter_doc["excluded"] == filter_doc["total"]
    captions = lines[7]
    for key in ("bleu4", "meteor_lite", "rouge_l", "cider"):
        assert key in captions


def test_eval_detect_prints_named_statistics(tmp_path, capsys):
    run_chain(tmp_path, capsys)
    import os

    old = os.getcwd()
    os.chdir(tmp_path)
    try:
        code, out = run(capsys, "eval-detect", "--corpus", "corpus", "--split", "test",
                        "--model", "model.json", "--calib", "calib.json")
    finally:
        os.chdir(old)
    assert code == 0
    for name in ("precision", "recall", "auc_roc", "auc_pr"):
        assert name in out


def test_eval_captions_matches_fixture_table(tmp_path, capsys):
    fixture = json.loads(FIXTURE.read_text())
    cand = tmp_path / "cand.jsonl"
    refs = tmp_path / "refs.jsonl"
    with open(cand, "w") as cf, open(refs, "w") as rf:
        for item in fixture:
            cf.write(json.dumps({"image_id": item["image_id"],
                                 "caption": item["caption"]}) + "\n")
            rf.write(json.dumps({"image_id": item["image_id"],
                                 "captions": item["references"]}) + "\n")
    code, out = run(capsys, "eval-captions", "--candidates", str(cand),
                    "--references", str(refs), "--json")
    assert code == 0
    doc = json.loads(out)
    expected = json.loads((FIXTURE.parent / "caption_fixture_expected.json").read_text())
    for key in ("bleu4", "meteor_lite", "rouge_l", "cider"):
        assert abs(doc[key] - expected[key]) < 1e-6


def test_predict_command(tmp_path, capsys, small_trained_model):
    model_path, corpus_dir = small_trained_model
    image = next((corpus_dir / "images").glob("*.ppm"))
    code, out = run(capsys, "predict", "--image", str(image),
                    "--model", str(model_path), "--json")
    assert code == 0
    doc = json.loads(out)
    assert doc["decision"] in ("pass", "retake")
    assert len(doc["prediction"]["raw"]) == 7


def test_train_single_task_flag(tmp_path, capsys, small_trained_model):
    _, corpus_dir = small_trained_model
    model_out = tmp_path / "single.json"
    code, _ = run(capsys, "train", "--corpus", str(corpus_dir), "--out", str(model_out),
                  "--seed", "5", "--epochs", "6", "--hidden", "8", "--single-task")
    assert code == 0
    doc = json.loads(model_out.read_text())
    assert doc["train_meta"]["single_task"] is True


def test_usage_error_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["train"])  # missing required flags
    assert exc.value.code == 2


def test_runtime_error_exits_1(tmp_path, capsys):
    code = main(["train", "--corpus", str(tmp_path / "absent"),
                 "--out", str(tmp_path / "m.json")])
    assert code == 1
    assert "error:" in capsys.readouterr().err
