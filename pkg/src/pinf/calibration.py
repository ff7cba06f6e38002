"""Detection-quality math: ROC/PR areas, threshold selection, MSE, Pearson.

Positive predictions use a closed boundary (score >= tau), matching the
ground-truth rule that grade 2 or more means poor. AUC-ROC is defined by the
pairwise Mann-Whitney statistic; AUC-PR is the step-form average precision
(no trapezoids). Threshold selection maximizes precision x recall over the
distinct observed scores, breaking ties toward the smallest tau so the gate
prefers over-detection (an extra retake is cheaper than a missed poor image).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

CALIBRATION_FILE_VERSION = 1
DEFAULT_FLAW_FEEDBACK_THRESHOLD = 2.0


class DegenerateInputError(ValueError):
    """Score/label data cannot support the requested statistic."""


class UndefinedCorrelationError(ValueError):
    """Pearson correlation of a constant array is undefined."""


class CalibrationFileError(ValueError):
    pass


@dataclass(frozen=True)
class ScoredLabels:
    """Parallel (score, is_positive) arrays."""

    scores: tuple[float, ...]
    labels: tuple[bool, ...]

    def __post_init__(self):
        if len(self.scores) != len(self.labels) or not self.scores:
            raise ValueError("scores and labels must be parallel non-empty arrays")
        for s in self.scores:
            if not math.isfinite(s):
                raise ValueError("scores must be finite")

    @classmethod
    def from_pairs(cls, pairs) -> "ScoredLabels":
        scores, labels = zip(*pairs)
        return cls(tuple(float(s) for s in scores), tuple(bool(b) for b in labels))

    def positives(self) -> int:
        return sum(self.labels)


def _require_both_classes(d: ScoredLabels, op: str):
    npos = d.positives()
    if npos == 0 or npos == len(d.labels):
        raise DegenerateInputError(f"{op} needs at least one positive and one negative label")


def auc_roc(d: ScoredLabels) -> float:
    """Mann-Whitney statistic: P(score_pos > score_neg) + 0.5 P(tie).

    Computed by a midrank sweep, which is exactly the pairwise form.
    """
    _require_both_classes(d, "auc_roc")
    n = len(d.scores)
    order = sorted(range(n), key=lambda i: d.scores[i])
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and d.scores[order[j + 1]] == d.scores[order[i]]:
            j += 1
        midrank = (i + j + 2) / 2.0  # 1-based average rank of the tied block
        for k in range(i, j + 1):
            ranks[order[k]] = midrank
        i = j + 1
    npos = d.positives()
    nneg = n - npos
    rank_sum = sum(r for r, lab in zip(ranks, d.labels) if lab)
    return (rank_sum - npos * (npos + 1) / 2.0) / (npos * nneg)


def auc_pr(d: ScoredLabels) -> float:
    """Average precision: sum of precision-at-cut times recall increment,
    sweeping distinct scores descending (ties processed as one block)."""
    npos = d.positives()
    if npos == 0:
        raise DegenerateInputError("auc_pr needs at least one positive label")
    pairs = sorted(zip(d.scores, d.labels), key=lambda p: -p[0])
    ap = 0.0
    tp = 0
    fp = 0
    prev_tp = 0
    i = 0
    n = len(pairs)
    while i < n:
        j = i
        while j + 1 < n and pairs[j + 1][0] == pairs[i][0]:
            j += 1
        for k in range(i, j + 1):
            if pairs[k][1]:
                tp += 1
            else:
                fp += 1
        if tp > prev_tp:
            precision = tp / (tp + fp)
            ap += precision * ((tp - prev_tp) / npos)
            prev_tp = tp
        i = j + 1
    return ap


def precision_recall_at(d: ScoredLabels, tau: float) -> tuple[float, float]:
    """Precision and recall with positive prediction iff score >= tau.

    Precision is defined as 0 when nothing is predicted positive, keeping the
    precision x recall objective total at extreme thresholds.
    """
    tp = fp = fn = 0
    for s, lab in zip(d.scores, d.labels):
        if s >= tau:
            if lab:
                tp += 1
            else:
                fp += 1
        elif lab:
            fn += 1
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    return precision, recall


@dataclass(frozen=True)
class Calibration:
    """Decision threshold plus the validation statistics at fit time."""

    tau_unrecognizable: float
    flaw_feedback_threshold: float = DEFAULT_FLAW_FEEDBACK_THRESHOLD
    val: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if not math.isfinite(self.tau_unrecognizable):
            raise ValueError("tau must be finite")


def select_threshold(validation: ScoredLabels,
                     flaw_feedback_threshold: float = DEFAULT_FLAW_FEEDBACK_THRESHOLD,
                     seed: int = 0) -> Calibration:
    """Pick the tau (among distinct observed scores) maximizing
    precision(tau) x recall(tau); ties go to the smallest tau."""
    _require_both_classes(validation, "select_threshold")
    best_tau = None
    best_product = -1.0
    for tau in sorted(set(validation.scores)):
        p, r = precision_recall_at(validation, tau)
        product = p * r
        if product > best_product:
            best_product = product
            best_tau = tau
    p, r = precision_recall_at(validation, best_tau)
    return Calibration(
        tau_unrecognizable=best_tau,
        flaw_feedback_threshold=flaw_feedback_threshold,
        val={
            "precision": p,
            "recall": r,
            "auc_roc": auc_roc(validation),
            "auc_pr": auc_pr(validation),
        },
        seed=seed,
    )


def mse(pred, gt) -> float:
    if len(pred) != len(gt) or not len(pred):
        raise ValueError("mse needs equal, non-zero length arrays")
    s = 0.0
    for p, g in zip(pred, gt):
        d = p - g
        s += d * d
    return s / len(pred)


def pearson_corr(pred, gt) -> float:
    if len(pred) != len(gt) or len(pred) < 2:
        raise ValueError("pearson_corr needs equal length arrays of at least 2")
    n = len(pred)
    mp = sum(pred) / n
    mg = sum(gt) / n
    sxx = syy = sxy = 0.0
    for p, g in zip(pred, gt):
        dp = p - mp
        dg = g - mg
        sxx += dp * dp
        syy += dg * dg
        sxy += dp * dg
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("correlation of a constant array is undefined")
    r = sxy / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


# --- persistence ---------------------------------------------------------


def save_calibration(calib: Calibration, path) -> None:
    doc = {
        "version": CALIBRATION_FILE_VERSION,
        "tau_unrecognizable": calib.tau_unrecognizable,
        "flaw_feedback_threshold": calib.flaw_feedback_threshold,
        "val": calib.val,
        "seed": calib.seed,
        "meta": {
            "threshold_grid": "distinct observed scores, ties to smallest tau",
            "pr_curve": "average-precision step form",
            "boundary": "positive iff score >= tau",
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_calibration(path) -> Calibration:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CalibrationFileError(f"calibration file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("version") != CALIBRATION_FILE_VERSION:
        raise CalibrationFileError(
            f"unsupported calibration file version {doc.get('version')!r}"
        )
    tau = doc.get("tau_unrecognizable")
    thr = doc.get("flaw_feedback_threshold", DEFAULT_FLAW_FEEDBACK_THRESHOLD)
    if not isinstance(tau, (int, float)) or not math.isfinite(tau):
        raise CalibrationFileError(f"invalid tau {tau!r}")
    if not isinstance(thr, (int, float)) or not math.isfinite(thr):
        raise CalibrationFileError(f"invalid flaw feedback threshold {thr!r}")
    return Calibration(
        tau_unrecognizable=float(tau),
        flaw_feedback_threshold=float(thr),
        val=dict(doc.get("val") or {}),
        seed=int(doc.get("seed") or 0),
    )
