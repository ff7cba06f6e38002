import math
import random

import numpy as np
import pytest

from pinf.calibration import (
    Calibration,
    DegenerateInputError,
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


def scored(scores, labels):
    return ScoredLabels(tuple(float(s) for s in scores), tuple(labels))


def pairwise_auc_oracle(d: ScoredLabels) -> float:
    """Brute-force Mann-Whitney statistic, the defining form."""
    pos = [s for s, l in zip(d.scores, d.labels) if l]
    neg = [s for s, l in zip(d.scores, d.labels) if not l]
    total = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                total += 1.0
            elif p == n:
                total += 0.5
    return total / (len(pos) * len(neg))


def ap_oracle(d: ScoredLabels) -> float:
    """Exhaustive cut enumeration over distinct scores, by direct counting."""
    npos = sum(d.labels)
    cuts = sorted(set(d.scores), reverse=True)
    ap = 0.0
    prev_recall = 0.0
    for tau in cuts:
        tp = sum(1 for s, l in zip(d.scores, d.labels) if s >= tau and l)
        fp = sum(1 for s, l in zip(d.scores, d.labels) if s >= tau and not l)
        recall = tp / npos
        if recall > prev_recall:
            ap += (tp / (tp + fp)) * (recall - prev_recall)
            prev_recall = recall
    return ap


def threshold_oracle(d: ScoredLabels) -> float:
    """Exhaustive search with the smallest-tau tie rule."""
    best_tau, best_product = None, -1.0
    for tau in sorted(set(d.scores)):
        p, r = precision_recall_at(d, tau)
        if p * r > best_product:
            best_product, best_tau = p * r, tau
    return best_tau


def random_instance(rng, n, score_pool=None):
    labels = [rng.random() < 0.4 for _ in range(n)]
    if not any(labels):
        labels[0] = True
    if all(labels):
        labels[-1] = False
    if score_pool:
        scores = [rng.choice(score_pool) for _ in range(n)]
    else:
        scores = [rng.gauss(l * 1.0, 1.0) for l in labels]
    return scored(scores, labels)


# --- auc_roc -------------------------------------------------------------------


def test_auc_roc_perfect_separation():
    assert auc_roc(scored([0.9, 0.8, 0.3, 0.1], [True, True, False, False])) == 1.0


def test_auc_roc_half_when_two_of_four_pairs_ordered():
    d = scored([0.9, 0.2, 0.8, 0.4], [True, True, False, False])
    assert auc_roc(d) == 0.5
    assert pairwise_auc_oracle(d) == 0.5


def test_auc_roc_all_ties_is_half():
    assert auc_roc(scored([1.0] * 6, [True, True, False, False, False, True])) == 0.5


def test_auc_roc_rejects_single_class():
    with pytest.raises(DegenerateInputError):
        auc_roc(scored([1, 2, 3], [True, True, True]))


def test_auc_roc_matches_pairwise_oracle_with_ties():
    rng = random.Random(5)
    for trial in range(50):
        d = random_instance(rng, rng.randint(4, 60),
                            score_pool=[0.0, 0.25, 0.5, 0.75, 1.0] if trial % 2 else None)
        assert abs(auc_roc(d) - pairwise_auc_oracle(d)) < 1e-12


def test_auc_roc_invariant_under_monotone_transform():
    rng = random.Random(6)
    for _ in range(20):
        d = random_instance(rng, 40)
        transformed = scored([math.exp(2.0 * s) for s in d.scores], list(d.labels))
        assert abs(auc_roc(d) - auc_roc(transformed)) < 1e-12


def test_auc_roc_complement_symmetry():
    # negating scores (or flipping labels) complements the statistic
    rng = random.Random(7)
    for _ in range(20):
        d = random_instance(rng, 30)
        negated = scored([-s for s in d.scores], list(d.labels))
        relabeled = scored(list(d.scores), [not l for l in d.labels])
        assert abs(auc_roc(d) + auc_roc(negated) - 1.0) < 1e-12
        assert abs(auc_roc(d) + auc_roc(relabeled) - 1.0) < 1e-12


def test_auc_roc_matches_sklearn():
    sklearn_metrics = pytest.importorskip("sklearn.metrics")
    rng = random.Random(8)
    for _ in range(10):
        d = random_instance(rng, 50, score_pool=[0.1, 0.3, 0.5, 0.7])
        expected = sklearn_metrics.roc_auc_score(
            np.array(d.labels, dtype=int), np.array(d.scores)
        )
        assert abs(auc_roc(d) - expected) < 1e-12


# --- auc_pr --------------------------------------------------------------------


def test_auc_pr_perfect():
    assert auc_pr(scored([0.9, 0.8, 0.3, 0.1], [True, True, False, False])) == 1.0


def test_auc_pr_worked_example():
    d = scored([0.9, 0.2, 0.8, 0.4], [True, True, False, False])
    assert auc_pr(d) == pytest.approx(0.5 * 1.0 + 0.5 * 0.5, abs=1e-12)


def test_auc_pr_single_positive_ranked_last():
    d = scored([0.9, 0.8, 0.7, 0.1], [False, False, False, True])
    assert auc_pr(d) == pytest.approx(0.25, abs=1e-12)


def test_auc_pr_needs_a_positive():
    with pytest.raises(DegenerateInputError):
        auc_pr(scored([1, 2], [False, False]))


def test_auc_pr_matches_exhaustive_oracle():
    rng = random.Random(9)
    for trial in range(50):
        d = random_instance(rng, rng.randint(3, 60),
                            score_pool=[0.0, 0.5, 1.0] if trial % 3 == 0 else None)
        assert abs(auc_pr(d) - ap_oracle(d)) < 1e-12


# --- precision / recall ----------------------------------------------------------


def test_precision_recall_at_boundaries():
    d = scored([0.9, 0.6, 0.8, 0.1], [True, False, True, False])
    assert precision_recall_at(d, -1.0) == (0.5, 1.0)  # everything predicted
    assert precision_recall_at(d, 2.0) == (0.0, 0.0)  # nothing predicted
    assert precision_recall_at(d, 0.8) == (1.0, 1.0)


def test_recall_monotone_non_increasing_in_tau():
    rng = random.Random(10)
    d = random_instance(rng, 50)
    taus = sorted(set(d.scores))
    recalls = [precision_recall_at(d, t)[1] for t in taus]
    assert recalls == sorted(recalls, reverse=True)


# --- select_threshold --------------------------------------------------------------


def test_select_threshold_worked_example():
    d = scored([0.9, 0.8, 0.6, 0.1], [True, True, False, False])
    calib = select_threshold(d)
    assert calib.tau_unrecognizable == 0.8
    assert calib.val["precision"] == 1.0 and calib.val["recall"] == 1.0


def test_select_threshold_perfect_separation_takes_smallest_positive():
    d = scored([3.0, 2.5, 2.0, 1.0, 0.5], [True, True, True, False, False])
    assert select_threshold(d).tau_unrecognizable == 2.0


def test_select_threshold_tie_breaks_to_smallest():
    # taus 1.0 and 2.0 both give product 1.0
    d = scored([2.0, 1.0], [True, True])
    with pytest.raises(DegenerateInputError):
        select_threshold(d)  # needs a negative
    d = scored([3.0, 2.0, 1.0], [True, True, False])
    # tau=2: P=1, R=1 -> 1.0 ; tau=3: P=1, R=0.5
    assert select_threshold(d).tau_unrecognizable == 2.0


def test_select_threshold_matches_exhaustive_oracle():
    rng = random.Random(11)
    for trial in range(100):
        d = random_instance(rng, rng.randint(3, 40),
                            score_pool=[0.0, 0.5, 1.0, 1.5] if trial % 2 else None)
        assert select_threshold(d).tau_unrecognizable == threshold_oracle(d)


# --- mse / pearson -------------------------------------------------------------------


def test_mse_examples():
    assert mse([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert mse([1.0, 2.0], [0.0, 0.0]) == 2.5
    with pytest.raises(ValueError):
        mse([1.0], [1.0, 2.0])


def test_pearson_examples():
    xs = [1.0, 2.0, 3.0, 4.0]
    assert pearson_corr(xs, [2 * x for x in xs]) == pytest.approx(1.0)
    assert pearson_corr(xs, [-x for x in xs]) == pytest.approx(-1.0)
    expected = np.corrcoef([1, 2, 3], [2, 1, 4])[0, 1]
    assert pearson_corr([1, 2, 3], [2, 1, 4]) == pytest.approx(float(expected), abs=1e-12)


def test_pearson_rejects_constant_arrays():
    with pytest.raises(UndefinedCorrelationError):
        pearson_corr([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
    with pytest.raises(UndefinedCorrelationError):
        pearson_corr([1.0, 2.0, 3.0], [5.0, 5.0, 5.0])


# --- persistence ---------------------------------------------------------------------


def test_calibration_round_trip(tmp_path):
    calib = Calibration(1.875, 2.0, {"precision": 0.9, "recall": 0.8,
                                     "auc_roc": 0.95, "auc_pr": 0.88}, seed=3)
    path = tmp_path / "calib.json"
    save_calibration(calib, path)
    loaded = load_calibration(path)
    assert loaded.tau_unrecognizable == calib.tau_unrecognizable
    assert loaded.flaw_feedback_threshold == 2.0
    assert loaded.val == calib.val
    assert loaded.seed == 3
