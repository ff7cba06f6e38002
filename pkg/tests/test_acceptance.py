"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines; the desk-scale experiment (2,000 generated samples, training,
calibration, evaluation) runs once and is shared.
"""

import itertools
import json
import math
import os
import random
import statistics
import time

import pytest
from fastapi.testclient import TestClient

from pinf.calibration import (
    ScoredLabels,
    auc_pr,
    auc_roc,
    mse,
    pearson_corr,
    precision_recall_at,
    select_threshold,
)
from pinf.cli import main as cli_main
from pinf.corpus import generate_corpus, split_corpus
from pinf.features import extract_features
from pinf.images import RasterImage, decode_image, encode_ppm
from pinf.model import TrainConfig, init_params, loss_and_grad, train
from pinf.pipeline import (
    PASS,
    RETAKE,
    CaptionerError,
    GateConfig,
    StubCaptioner,
    gate,
    run_session,
)
from pinf.quality import FLAW_ORDER, OUTPUT_NAMES, QualityPrediction, binarize_ground_truth
from pinf.service import ServiceConfig, create_app
from pinf.textmetrics import EvalPair, cider_per_pair, evaluate_corpus, rouge_l

from .conftest import image_from_fn
from .oracles.caption_oracle import compute_all, oracle_unigram_precision
from .test_calibration import ap_oracle, pairwise_auc_oracle, threshold_oracle

DESK_COUNT = 2000
DESK_SEED = 7
SPLIT_SEED = 0
TRAIN_SEED = 1


def report(name: str):
    print(f"\nACCEPTANCE {name}: PASS")


@pytest.fixture(scope="module")
def desk(tmp_path_factory):
    """The desk-scale protocol: generate, train, calibrate, evaluate."""
    t0 = time.monotonic()
    root = tmp_path_factory.mktemp("desk")
    corpus_dir = root / "corpus"
    corpus = generate_corpus(DESK_COUNT, DESK_SEED, corpus_dir)
    train_s, val_s, test_s = split_corpus(corpus, SPLIT_SEED)

    def featurize(split):
        return [
            (extract_features(decode_image(e.path.read_bytes())),
             e.annotation.severity_vector())
            for e in split.entries
        ]

    ftr, fva, fte = featurize(train_s), featurize(val_s), featurize(test_s)
    model, history = train(ftr, fva, TrainConfig(seed=TRAIN_SEED))

    def scored(split, feats):
        scores, labels, preds = [], [], []
        for (f, _), e in zip(feats, split.entries):
            pred = model.predict_features(f)
            preds.append(pred)
            scores.append(pred.unrecognizable_hat)
            labels.append(binarize_ground_truth(e.annotation))
        return ScoredLabels(tuple(scores), tuple(labels)), preds

    val_scored, _ = scored(val_s, fva)
    calib = select_threshold(val_scored, seed=SPLIT_SEED)
    test_scored, test_preds = scored(test_s, fte)
    elapsed = time.monotonic() - t0
    return {
        "corpus_dir": corpus_dir,
        "splits": (train_s, val_s, test_s),
        "model": model,
        "history": history,
        "calib": calib,
        "test_scored": test_scored,
        "test_preds": test_preds,
        "elapsed_s": elapsed,
    }


def test_gradient_correctness_vs_finite_differences():
    t0 = time.monotonic()
    rng = random.Random(100)
    h = 1e-5
    worst = 0.0
    for trial in range(100):
        nin = rng.randint(3, 8)
        nh = rng.randint(2, 6)
        params = init_params(rng.randrange(10**6), nh, nin=nin, nout=7)
        for tensor in params.tensors():  # non-zero biases too
            for i in range(len(tensor)):
                tensor[i] += rng.gauss(0.0, 0.4)
        batch = [([rng.gauss(0, 1) for _ in range(nin)],
                  [rng.gauss(0, 1) for _ in range(7)])
                 for _ in range(rng.randint(1, 5))]
        _, grads = loss_and_grad(params, batch)
        for t_idx, tensor in enumerate(params.tensors()):
            for i in range(len(tensor)):
                orig = tensor[i]
                tensor[i] = orig + h
                up = loss_and_grad(params, batch)[0]
                tensor[i] = orig - h
                down = loss_and_grad(params, batch)[0]
                tensor[i] = orig
                fd = (up - down) / (2 * h)
                denom = max(abs(fd), abs(grads[t_idx][i]), 1e-8)
                worst = max(worst, abs(fd - grads[t_idx][i]) / denom)
    elapsed = time.monotonic() - t0
    assert worst < 1e-4, f"max relative gradient error {worst}"
    assert elapsed < 30.0, f"gradient check took {elapsed:.1f}s"
    report(f"gradient-correctness (max rel err {worst:.2e}, {elapsed:.1f}s)")


def test_auc_oracles():
    t0 = time.monotonic()
    rng = random.Random(200)
    for trial in range(200):
        n = rng.randint(5, 500)
        labels = [rng.random() < 0.4 for _ in range(n)]
        if not any(labels):
            labels[0] = True
        if all(labels):
            labels[-1] = False
        if trial % 2 == 0:  # heavy ties
            pool = [round(rng.random(), 1) for _ in range(5)]
            scores = [rng.choice(pool) for _ in range(n)]
        else:
            scores = [rng.gauss(1.0 if l else 0.0, 1.0) for l in labels]
        d = ScoredLabels(tuple(scores), tuple(labels))
        assert abs(auc_roc(d) - pairwise_auc_oracle(d)) < 1e-12
        assert abs(auc_pr(d) - ap_oracle(d)) < 1e-12
    elapsed = time.monotonic() - t0
    assert elapsed < 30.0, f"AUC oracle check took {elapsed:.1f}s"
    report(f"auc-oracles (200 instances, {elapsed:.1f}s)")


def test_threshold_rule_matches_exhaustive_search():
    rng = random.Random(300)
    for trial in range(200):
        n = rng.randint(3, 200)
        labels = [rng.random() < 0.5 for _ in range(n)]
        if not any(labels):
            labels[0] = True
        if all(labels):
            labels[-1] = False
        if trial % 3 == 0:
            pool = [0.0, 0.5, 1.0, 1.5, 2.0]
            scores = [rng.choice(pool) for _ in range(n)]
        else:
            scores = [rng.gauss(1.0 if l else 0.0, 1.0) for l in labels]
        d = ScoredLabels(tuple(scores), tuple(labels))
        assert select_threshold(d).tau_unrecognizable == threshold_oracle(d)
    report("threshold-rule (200 instances, exact incl. tie rule)")


def test_caption_metric_oracles():
    data_dir = os.path.join(os.path.dirname(__file__), "data")
    with open(os.path.join(data_dir, "caption_fixture.json"), encoding="utf-8") as fh:
        fixture = json.load(fh)
    with open(os.path.join(data_dir, "caption_fixture_expected.json"),
              encoding="utf-8") as fh:
        frozen = json.load(fh)
    fresh = compute_all(fixture)
    for key, value in frozen.items():
        assert fresh[key] == pytest.approx(value, abs=1e-9)

    pairs = [EvalPair.from_text(i["image_id"], i["caption"], i["references"])
             for i in fixture]
    rep = evaluate_corpus(pairs)
    assert rep.bleu4 == pytest.approx(frozen["bleu4"], abs=1e-6)
    assert rep.meteor_lite == pytest.approx(frozen["meteor_lite"], abs=1e-6)
    assert rep.rouge_l == pytest.approx(frozen["rouge_l"], abs=1e-6)
    assert rep.cider == pytest.approx(frozen["cider"], abs=1e-6)

    # documented worked examples
    from pinf.textmetrics import tokenize

    num, den = oracle_unigram_precision(
        tokenize("the the the the the the the"), [tokenize("the cat is on the mat")]
    )
    assert (num, den) == (2, 7)

    rouge_pair = EvalPair.from_text("r", "the cat sat", ["the cat is on the mat"])
    value = rouge_l([rouge_pair])
    r, p = 2 / 6, 2 / 3
    assert value == pytest.approx(100 * 2.44 * r * p / (r + 1.44 * p), abs=1e-6)
    assert abs(value - 41.93) < 0.01

    ident = [
        EvalPair.from_text("a", "a red circle sits on the table quietly",
                           ["a red circle sits on the table quietly"]),
        EvalPair.from_text("b", "two green squares float over water today",
                           ["two green squares float over water today"]),
    ]
    for v in cider_per_pair(ident):
        assert v == pytest.approx(10.0, abs=1e-6)
    report("caption-metric-oracles (12-pair fixture + worked examples)")


def test_detection_quality_desk_scale(desk):
    scored = desk["test_scored"]
    roc = auc_roc(scored)
    pr = auc_pr(scored)
    assert roc >= 0.90, f"AUC-ROC {roc:.4f} below 0.90"
    assert pr >= 0.75, f"AUC-PR {pr:.4f} below 0.75"
    assert desk["elapsed_s"] < 600.0, f"desk protocol took {desk['elapsed_s']:.0f}s"
    report(f"detection-quality (AUC-ROC {roc:.3f}, AUC-PR {pr:.3f}, "
           f"{desk['elapsed_s']:.0f}s)")


def test_flaw_regression_desk_scale(desk):
    _, _, test_s = desk["splits"]
    preds = desk["test_preds"]
    corrs = []
    for i, name in enumerate(OUTPUT_NAMES):
        gt = [float(e.annotation.severity_vector()[i]) for e in test_s.entries]
        pv = [p.as_vector()[i] for p in preds]
        mean = sum(gt) / len(gt)
        variance = sum((g - mean) ** 2 for g in gt) / len(gt)
        err = mse(pv, gt)
        if i > 0:  # the six flaws
            assert err < variance, f"{name}: MSE {err:.3f} >= variance {variance:.3f}"
            corrs.append(pearson_corr(pv, gt))
    mean_corr = statistics.mean(corrs)
    assert mean_corr >= 0.5, f"mean flaw correlation {mean_corr:.3f} below 0.5"
    report(f"flaw-regression (all MSE < var, mean corr {mean_corr:.3f})")


def test_filtering_direction_improves_all_caption_metrics(desk):
    _, _, test_s = desk["splits"]
    model = desk["model"]
    tau = desk["calib"].tau_unrecognizable
    stub = StubCaptioner.from_corpus_dir(desk["corpus_dir"])

    def pairs_for(entries):
        return [
            EvalPair.from_text(
                e.annotation.image_id,
                stub.caption_id(e.annotation.image_id),
                list(e.annotation.captions),
            )
            for e in entries
        ]

    full = evaluate_corpus(pairs_for(test_s.entries))
    kept = [
        e for e, pred in zip(test_s.entries, desk["test_preds"])
        if pred.unrecognizable_hat < tau
    ]
    assert 0 < len(kept) < len(test_s.entries)
    qualified = evaluate_corpus(pairs_for(kept), excluded=len(test_s.entries) - len(kept))
    assert qualified.bleu4 > full.bleu4
    assert qualified.meteor_lite > full.meteor_lite
    assert qualified.rouge_l > full.rouge_l
    assert qualified.cider > full.cider
    report(
        "filtering-direction (bleu "
        f"{full.bleu4:.1f}->{qualified.bleu4:.1f}, meteor {full.meteor_lite:.1f}->"
        f"{qualified.meteor_lite:.1f}, rouge {full.rouge_l:.1f}->{qualified.rouge_l:.1f}, "
        f"cider {full.cider:.2f}->{qualified.cider:.2f}; excluded {qualified.excluded})"
    )


def test_pipeline_invariants():
    # termination on adversarial suppliers
    class NoisyModel:
        def predict(self, img):
            return QualityPrediction(5.0, {k: 5.0 for k in FLAW_ORDER})

    class EchoCaptioner:
        info = {"kind": "echo"}

        def caption(self, data, media_type=None):
            return "echo"

    poor = encode_ppm(RasterImage.filled(8, 8, (0.0, 0.0, 0.0)))
    for supplier in (
        itertools.cycle([poor]),
        iter(lambda: poor, None),  # infinite callable-iterator
        [poor] * 1000,
    ):
        session = run_session(supplier, NoisyModel(), EchoCaptioner(),
                              GateConfig(max_attempts=5), clock=lambda: 0.0)
        assert len(session.attempts) <= 5

    # every retake carries feedback; gate monotone over 10^4 random predictions
    rng = random.Random(400)
    cfg = GateConfig(2.0, 2.0)
    for _ in range(10_000):
        flaws = {k: rng.uniform(-1.0, 6.0) for k in FLAW_ORDER}
        low = rng.uniform(-1.0, 6.0)
        high = low + rng.uniform(0.0, 4.0)
        d_low = gate(QualityPrediction(low, flaws), cfg)
        d_high = gate(QualityPrediction(high, flaws), cfg)
        if d_low.verdict == RETAKE:
            assert len(d_low.feedback) >= 1
            assert d_high.verdict == RETAKE  # monotone
        if d_high.verdict == RETAKE:
            assert len(d_high.feedback) >= 1
        ranked = [f.raw_severity for f in d_high.feedback]
        assert ranked == sorted(ranked, reverse=True)
    report("pipeline-invariants (termination, feedback, monotonicity over 10^4)")


def run_cli_chain(workdir, capsys) -> str:
    workdir.mkdir(parents=True, exist_ok=True)
    old = os.getcwd()
    os.chdir(workdir)
    try:
        outputs = []
        for argv in (
            ["gen-corpus", "--out", "corpus", "--count", "240", "--seed", "5", "--json"],
            ["train", "--corpus", "corpus", "--out", "model.json", "--seed", "3",
             "--epochs", "30", "--hidden", "32", "--json"],
            ["calibrate", "--corpus", "corpus", "--model", "model.json",
             "--out", "calib.json", "--json"],
            ["eval-detect", "--corpus", "corpus", "--split", "test",
             "--model", "model.json", "--calib", "calib.json", "--json"],
            ["filter", "--corpus", "corpus", "--split", "test", "--model", "model.json",
             "--calib", "calib.json", "--out", "qualified.json", "--json"],
            ["caption", "--corpus", "corpus", "--split", "test",
             "--candidates", "cand.jsonl", "--references", "refs.jsonl", "--json"],
            ["eval-captions", "--candidates", "cand.jsonl",
             "--references", "refs.jsonl", "--json"],
        ):
            assert cli_main(list(argv)) == 0
            outputs.append(capsys.readouterr().out)
        return "".join(outputs)
    finally:
        os.chdir(old)


def test_cli_chain_determinism(tmp_path, capsys):
    out1 = run_cli_chain(tmp_path / "one", capsys)
    out2 = run_cli_chain(tmp_path / "two", capsys)
    assert out1.encode() == out2.encode()
    report("cli-determinism (byte-identical JSON reports across two runs)")


def test_service_contract(desk):
    # build the app around the already-trained in-memory model
    app = create_app(ServiceConfig(
        model=str(desk["corpus_dir"] / "missing-model.json"),
        corpus=str(desk["corpus_dir"]),
        max_upload_bytes=256 * 1024,
        max_attempts=5,
    ))
    state = app.state.pinf
    state.model = desk["model"]
    state.gate_cfg = GateConfig(desk["calib"].tau_unrecognizable, 2.0, 5)
    client = TestClient(app)

    entries = desk["splits"][2].entries
    clean = next(e for e in entries if e.annotation.unrecognizable == 0)
    valid_bytes = clean.path.read_bytes()

    def counter():
        return state.inference_count

    # valid image: 200, exactly one inference
    n = counter()
    resp = client.post("/v1/predict", content=valid_bytes)
    assert resp.status_code == 200
    assert counter() == n + 1
    doc = resp.json()
    assert set(doc["prediction"]["raw"]) == set(OUTPUT_NAMES)
    assert doc["decision"] in (PASS, RETAKE)

    # garbage bytes: 400, no inference
    n = counter()
    assert client.post("/v1/predict", content=b"garbage not an image").status_code == 400
    assert counter() == n

    # oversize body: 413, no inference
    n = counter()
    big = b"P6" + b"\x00" * (300 * 1024)
    assert client.post("/v1/predict", content=big).status_code == 413
    assert counter() == n

    # unknown session: 404, no inference
    n = counter()
    assert client.post("/v1/sessions/ghost/attempts", content=valid_bytes).status_code == 404
    assert counter() == n

    # attempt on terminal session: 409, no inference beyond the first attempt
    sid = client.post("/v1/sessions").json()["session_id"]
    n = counter()
    first = client.post(f"/v1/sessions/{sid}/attempts", content=valid_bytes)
    assert first.status_code == 200
    assert counter() == n + 1
    assert first.json()["state"] == "captioned"
    n = counter()
    assert client.post(f"/v1/sessions/{sid}/attempts", content=valid_bytes).status_code == 409
    assert counter() == n

    # the counter is observable via GET /v1/model
    assert client.get("/v1/model").json()["inference_count"] == counter()
    report("service-contract (status codes + one inference per 2xx)")
