"""Command-line protocol: generate, train, calibrate, evaluate, filter,
caption, and serve.

The full chain with fixed seeds is deterministic end to end:

  pinf gen-corpus --out corpus --count 2000 --seed 7
  pinf train --corpus corpus --out model.json --seed 1
  pinf calibrate --corpus corpus --model model.json --out calib.json
  pinf eval-detect --corpus corpus --split test --model model.json --calib calib.json
  pinf eval-flaws --corpus corpus --split test --model model.json
  pinf filter --corpus corpus --model model.json --calib calib.json --out qualified.json
  pinf caption --corpus corpus --split test --candidates c.jsonl --references r.jsonl
  pinf eval-captions --candidates c.jsonl --references r.jsonl
  pinf predict --image photo.ppm --model model.json --calib calib.json
  pinf serve --config service.json

Exit status: 0 success, 2 usage error, 1 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from ._backend import backend_name
from .calibration import (
    Calibration,
    ScoredLabels,
    UndefinedCorrelationError,
    auc_pr,
    auc_roc,
    load_calibration,
    mse,
    pearson_corr,
    precision_recall_at,
    save_calibration,
    select_threshold,
)
from .corpus import (
    AnnotatedCorpus,
    generate_corpus,
    load_annotations,
    load_catalog,
    save_annotations,
    select_split,
    split_corpus,
)
from .features import extract_features
from .images import decode_image
from .model import TrainConfig, load_model, save_model, train
from .pipeline import GateConfig, StubCaptioner, filter_dataset, gate
from .quality import FLAW_ORDER, OUTPUT_NAMES, binarize_ground_truth, display_severity
from .service import apply_env_overrides, load_service_config, serve
from .textmetrics import evaluate_corpus, pairs_from_files


def _json_out(doc: dict) -> None:
    print(json.dumps(doc, sort_keys=True))


def _load_features(corpus: AnnotatedCorpus):
    """(FeatureVector, 7-target) pairs for every entry, in corpus order."""
    samples = []
    for e in corpus.entries:
        img = decode_image(e.path.read_bytes())
        samples.append((extract_features(img), e.annotation.severity_vector()))
    return samples


def _scores_and_labels(corpus: AnnotatedCorpus, model):
    scores = []
    labels = []
    preds = []
    for e in corpus.entries:
        img = decode_image(e.path.read_bytes())
        pred = model.predict(img)
        preds.append(pred)
        scores.append(pred.unrecognizable_hat)
        labels.append(binarize_ground_truth(e.annotation))
    return ScoredLabels(tuple(scores), tuple(labels)), preds


def cmd_gen_corpus(args) -> int:
    corpus = generate_corpus(args.count, args.seed, args.out)
    poor = sum(1 for e in corpus.entries if binarize_ground_truth(e.annotation))
    if args.json:
        _json_out({"count": len(corpus), "poor": poor, "seed": args.seed,
                   "out": str(args.out)})
    else:
        print(f"wrote {len(corpus)} samples to {args.out} "
              f"({poor} poor by ground truth, seed {args.seed})")
    return 0


def cmd_train(args) -> int:
    corpus = load_annotations(args.corpus)
    train_split, val_split, _ = split_corpus(corpus, args.split_seed)
    cfg = TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch,
        max_epochs=args.epochs,
        patience=args.patience,
        seed=args.seed,
        hidden=args.hidden,
        single_task=args.single_task,
    )
    model, history = train(_load_features(train_split), _load_features(val_split), cfg)
    model.train_meta["split_seed"] = args.split_seed
    save_model(model, args.out)
    doc = {
        "epochs_run": history.stop_epoch,
        "best_epoch": history.best_epoch,
        "best_val_loss": min(history.val_losses),
        "train_size": len(train_split),
        "val_size": len(val_split),
        "backend": backend_name(),
        "out": str(args.out),
    }
    if args.json:
        _json_out(doc)
    else:
        print(f"trained {doc['epochs_run']} epochs (best {doc['best_epoch']}, "
              f"val loss {doc['best_val_loss']:.6f}) on {doc['train_size']} samples; "
              f"model written to {args.out}")
    return 0


def cmd_calibrate(args) -> int:
    corpus = load_annotations(args.corpus)
    val_split = select_split(corpus, "val", args.split_seed)
    model = load_model(args.model)
    scored, _ = _scores_and_labels(val_split, model)
    calib = select_threshold(scored, flaw_feedback_threshold=args.flaw_threshold,
                             seed=args.split_seed)
    save_calibration(calib, args.out)
    doc = {"tau_unrecognizable": calib.tau_unrecognizable, **calib.val,
           "val_size": len(val_split), "out": str(args.out)}
    if args.json:
        _json_out(doc)
    else:
        print(f"tau = {calib.tau_unrecognizable:.6f} "
              f"(val precision {calib.val['precision']:.3f}, "
              f"recall {calib.val['recall']:.3f}); calibration written to {args.out}")
    return 0


def cmd_eval_detect(args) -> int:
    corpus = load_annotations(args.corpus)
    split = select_split(corpus, args.split, args.split_seed)
    model = load_model(args.model)
    calib = load_calibration(args.calib)
    scored, _ = _scores_and_labels(split, model)
    precision, recall = precision_recall_at(scored, calib.tau_unrecognizable)
    doc = {
        "split": args.split,
        "n": len(split),
        "positives": scored.positives(),
        "tau_unrecognizable": calib.tau_unrecognizable,
        "precision": precision,
        "recall": recall,
        "auc_roc": auc_roc(scored),
        "auc_pr": auc_pr(scored),
    }
    if args.json:
        _json_out(doc)
    else:
        print(f"split {args.split} (n={doc['n']}, {doc['positives']} poor), "
              f"tau {calib.tau_unrecognizable:.4f}")
        for key in ("precision", "recall", "auc_roc", "auc_pr"):
            print(f"{key} {doc[key]:.4f}")
    return 0


def cmd_eval_flaws(args) -> int:
    corpus = load_annotations(args.corpus)
    split = select_split(corpus, args.split, args.split_seed)
    model = load_model(args.model)
    _, preds = _scores_and_labels(split, model)
    rows = []
    for i, name in enumerate(OUTPUT_NAMES):
        gt = [float(e.annotation.severity_vector()[i]) for e in split.entries]
        pr = [p.as_vector()[i] for p in preds]
        n = len(gt)
        mean = sum(gt) / n
        sd = (sum((g - mean) ** 2 for g in gt) / n) ** 0.5
        try:
            corr = pearson_corr(pr, gt)
        except UndefinedCorrelationError:
            corr = None
        rows.append({"output": name, "gt_mean": mean, "gt_sd": sd,
                     "mse": mse(pr, gt), "corr": corr})
    valid = [r for r in rows if r["corr"] is not None]
    avg = {
        "output": "average",
        "gt_mean": sum(r["gt_mean"] for r in rows) / len(rows),
        "gt_sd": sum(r["gt_sd"] for r in rows) / len(rows),
        "mse": sum(r["mse"] for r in rows) / len(rows),
        "corr": sum(r["corr"] for r in valid) / len(valid) if valid else None,
    }
    doc = {"split": args.split, "n": len(split), "rows": rows, "average": avg}
    if args.json:
        _json_out(doc)
    else:
        print(f"{'output':16s} {'gt mean+-sd':>16s} {'mse':>8s} {'corr':>7s}")
        for r in rows + [avg]:
            corr = f"{r['corr']:.3f}" if r["corr"] is not None else "n/a"
            print(f"{r['output']:16s} {r['gt_mean']:8.3f}+-{r['gt_sd']:6.3f} "
                  f"{r['mse']:8.3f} {corr:>7s}")
    return 0


def cmd_filter(args) -> int:
    corpus = load_annotations(args.corpus)
    split = select_split(corpus, args.split, args.split_seed)
    model = load_model(args.model)
    calib = load_calibration(args.calib)
    samples = [(e.path, e.annotation) for e in split.entries]
    kept, excluded = filter_dataset(samples, model, calib.tau_unrecognizable)
    kept_ids = {ann.image_id for _, ann in kept}
    qualified = AnnotatedCorpus(
        tuple(e for e in split.entries if e.annotation.image_id in kept_ids),
        split=f"{args.split}-qualified",
        seed=args.split_seed,
    )
    save_annotations(qualified, args.out)
    doc = {"split": args.split, "total": len(split), "kept": len(kept),
           "excluded": excluded, "out": str(args.out)}
    if args.json:
        _json_out(doc)
    else:
        print(f"kept {doc['kept']} of {doc['total']} ({doc['excluded']} excluded); "
              f"qualified annotations written to {args.out}")
    return 0


def cmd_caption(args) -> int:
    corpus_dir = Path(args.corpus)
    if args.annotations:
        subset = load_annotations(args.annotations)
    else:
        subset = select_split(load_annotations(corpus_dir), args.split, args.split_seed)
    catalog = load_catalog(corpus_dir)
    full = load_annotations(corpus_dir)
    severities = {e.annotation.image_id: e.annotation.unrecognizable for e in full.entries}
    stub = StubCaptioner(catalog, severities)
    with open(args.candidates, "w", encoding="utf-8") as cf, \
            open(args.references, "w", encoding="utf-8") as rf:
        for e in subset.entries:
            image_id = e.annotation.image_id
            cf.write(json.dumps(
                {"image_id": image_id, "caption": stub.caption_id(image_id)},
                sort_keys=True) + "\n")
            rf.write(json.dumps(
                {"image_id": image_id, "captions": list(e.annotation.captions)},
                sort_keys=True) + "\n")
    if args.json:
        _json_out({"images": len(subset), "candidates": str(args.candidates),
                   "references": str(args.references)})
    else:
        print(f"wrote stub captions for {len(subset)} images")
    return 0


def cmd_eval_captions(args) -> int:
    pairs = pairs_from_files(args.candidates, args.references)
    report = evaluate_corpus(pairs)
    doc = report.to_dict()
    if args.json:
        _json_out(doc)
    else:
        print(f"pairs {report.pairs}")
        for key in ("bleu4", "meteor_lite", "rouge_l", "cider"):
            print(f"{key} {doc[key]:.4f}")
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    if args.calib:
        calib = load_calibration(args.calib)
        cfg = GateConfig(calib.tau_unrecognizable, calib.flaw_feedback_threshold)
    else:
        cfg = GateConfig()
    pred = model.predict(decode_image(Path(args.image).read_bytes()))
    decision = gate(pred, cfg)
    vec = pred.as_vector()
    if args.json:
        _json_out({
            "prediction": {
                "raw": dict(zip(OUTPUT_NAMES, vec)),
                "display": dict(zip(OUTPUT_NAMES, (display_severity(v) for v in vec))),
            },
            "decision": decision.verdict,
            "feedback": [f.to_dict() for f in decision.feedback],
            "tau_unrecognizable": cfg.tau_unrecognizable,
        })
    else:
        print(f"decision: {decision.verdict} "
              f"(unrecognizable {display_severity(vec[0]):.2f}, tau {cfg.tau_unrecognizable})")
        for name, v in zip(OUTPUT_NAMES, vec):
            print(f"  {name:16s} {display_severity(v):.2f}  (raw {v:+.3f})")
        for f in decision.feedback:
            print(f"  ! {f.message}")
    return 0


def cmd_serve(args) -> int:
    if args.config:
        config = load_service_config(args.config)
    else:
        config = apply_env_overrides({"model": args.model or "model.json"})
    serve(config, host=args.host)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pinf",
        description="Poor-image notification: quality gating and retake "
                    "feedback for captioning pipelines.",
    )
    parser.add_argument("--version", action="version", version=f"pinf {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, split=False, model=False, calib=False):
        p.add_argument("--json", action="store_true", help="emit JSON instead of text")
        if split:
            p.add_argument("--split", default="test",
                           choices=["train", "val", "test", "all"])
            p.add_argument("--split-seed", type=int, default=0,
                           help="seed of the train/val/test shuffle (default 0)")
        if model:
            p.add_argument("--model", required=True, help="model JSON path")
        if calib:
            p.add_argument("--calib", required=True, help="calibration JSON path")

    p = sub.add_parser("gen-corpus", help="generate a synthetic annotated corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    add_common(p)
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("train", help="train the quality regressor")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lr", type=float, default=TrainConfig.learning_rate)
    p.add_argument("--batch", type=int, default=TrainConfig.batch_size)
    p.add_argument("--epochs", type=int, default=TrainConfig.max_epochs)
    p.add_argument("--patience", type=int, default=TrainConfig.patience)
    p.add_argument("--hidden", type=int, default=TrainConfig.hidden)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--single-task", action="store_true",
                   help="train only the unrecognizable output")
    p.add_argument("--split-seed", type=int, default=0)
    add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("calibrate", help="select the gate threshold on the val split")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--flaw-threshold", type=float, default=2.0)
    p.add_argument("--split-seed", type=int, default=0)
    add_common(p, model=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("eval-detect", help="precision/recall/AUC on a split")
    p.add_argument("--corpus", required=True)
    add_common(p, split=True, model=True, calib=True)
    p.set_defaults(func=cmd_eval_detect)

    p = sub.add_parser("eval-flaws", help="per-flaw regression quality on a split")
    p.add_argument("--corpus", required=True)
    add_common(p, split=True, model=True)
    p.set_defaults(func=cmd_eval_flaws)

    p = sub.add_parser("filter", help="exclude predicted-poor images from a split")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="qualified annotation file to write")
    add_common(p, split=True, model=True, calib=True)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("caption", help="run the stub captioner over a split or subset")
    p.add_argument("--corpus", required=True)
    p.add_argument("--candidates", required=True, help="candidate JSONL to write")
    p.add_argument("--references", required=True, help="reference JSONL to write")
    p.add_argument("--annotations", help="annotation file overriding the split subset")
    add_common(p, split=True)
    p.set_defaults(func=cmd_caption)

    p = sub.add_parser("eval-captions", help="BLEU-4/METEOR-lite/ROUGE-L/CIDEr")
    p.add_argument("--candidates", required=True)
    p.add_argument("--references", required=True)
    add_common(p)
    p.set_defaults(func=cmd_eval_captions)

    p = sub.add_parser("predict", help="predict severity and gate one image")
    p.add_argument("--image", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--calib")
    add_common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", help="service config JSON")
    p.add_argument("--model", help="model path when no config file is given")
    p.add_argument("--host", default="127.0.0.1")
    add_common(p)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
