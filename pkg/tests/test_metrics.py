import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from esad.metrics import (
    average_precision,
    classification_report,
    confusion_at_threshold,
    evaluate_scores,
    pr_curve_points,
    roc_auc,
    roc_curve_points,
)
from reference_dsp import brute_force_ap, mann_whitney_auc


def random_examples(rng, n, tie_prob=0.3):
    scores = rng.random(n)
    if tie_prob and rng.random() < tie_prob:
        # force ties by snapping to a coarse grid
        scores = np.round(scores * 10) / 10
    labels = rng.integers(0, 2, n)
    if labels.sum() == 0:
        labels[0] = 1
    if labels.sum() == n:
        labels[0] = 0
    return scores, labels


class TestConfusion:
    def test_perfect_pair(self):
        assert confusion_at_threshold([0.9, 0.1], [1, 0]) == (1, 0, 0, 1)

    def test_boundary_score_counts_as_positive(self):
        tn, fp, fn, tp = confusion_at_threshold([0.5], [0])
        assert (tn, fp, fn, tp) == (0, 1, 0, 0)

    def test_brute_force_tally(self):
        rng = np.random.default_rng(0)
        scores, labels = random_examples(rng, 100, tie_prob=0)
        tn, fp, fn, tp = confusion_at_threshold(scores, labels)
        expected = {"tn": 0, "fp": 0, "fn": 0, "tp": 0}
        for s, y in zip(scores, labels):
            key = ("t" if (s >= 0.5) == bool(y) else "f") + ("p" if s >= 0.5 else "n")
            expected[key] += 1
        assert (tn, fp, fn, tp) == (
            expected["tn"], expected["fp"], expected["fn"], expected["tp"]
        )

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            confusion_at_threshold([], [])


class TestClassificationReport:
    def test_perfect_predictions(self):
        report = classification_report([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0])
        for cls in ("normal", "anomalous"):
            assert report[cls]["precision"] == 1.0
            assert report[cls]["recall"] == 1.0
            assert report[cls]["f1"] == 1.0
        assert report["accuracy"] == 1.0
        assert report["normal"]["support"] == 2
        assert report["anomalous"]["support"] == 2

    def test_degenerate_all_predicted_anomalous(self):
        report = classification_report([0.9] * 4, [1, 1, 0, 0])
        assert report["normal"]["precision"] == 0.0
        assert report["normal"]["recall"] == 0.0
        assert report["normal"]["f1"] == 0.0
        assert report["anomalous"]["precision"] == 0.5
        assert report["anomalous"]["recall"] == 1.0

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            classification_report([0.5, 0.8], [1, 1])

    def test_accuracy_consistent_with_confusion(self):
        rng = np.random.default_rng(1)
        scores, labels = random_examples(rng, 250)
        report = classification_report(scores, labels)
        c = report["confusion"]
        assert report["accuracy"] == (c["tp"] + c["tn"]) / 250


class TestRocAuc:
    def test_perfect_separation(self):
        auc, _, _ = roc_auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
        assert auc == 1.0

    def test_constant_scores_give_chance(self):
        auc, fpr, tpr = roc_auc([0.5] * 10, [1, 0] * 5)
        assert auc == pytest.approx(0.5)
        assert fpr.tolist() == [0.0, 1.0]
        assert tpr.tolist() == [0.0, 1.0]

    def test_matches_mann_whitney_with_ties(self):
        rng = np.random.default_rng(2)
        for n in (10, 50, 200, 500):
            scores, labels = random_examples(rng, n)
            auc, _, _ = roc_auc(scores, labels)
            assert auc == pytest.approx(mann_whitney_auc(scores, labels), abs=1e-9)

    def test_curve_monotone_and_anchored(self):
        rng = np.random.default_rng(3)
        scores, labels = random_examples(rng, 300)
        fpr, tpr = roc_curve_points(scores, labels)
        assert fpr[0] == 0.0 and tpr[0] == 0.0
        assert fpr[-1] == 1.0 and tpr[-1] == 1.0
        assert np.all(np.diff(fpr) >= 0)
        assert np.all(np.diff(tpr) >= 0)

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            roc_auc([0.5, 0.6], [0, 0])


class TestAveragePrecision:
    def test_perfect_separation(self):
        ap, _, _ = average_precision([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
        assert ap == 1.0

    def test_single_positive_ranked_last(self):
        ap, _, _ = average_precision([0.9, 0.8, 0.7, 0.1], [0, 0, 0, 1])
        assert ap == pytest.approx(0.25)

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(4)
        for n in (10, 50, 200, 500):
            scores, labels = random_examples(rng, n)
            ap, _, _ = average_precision(scores, labels)
            assert ap == pytest.approx(brute_force_ap(scores, labels), abs=1e-9)

    def test_leftmost_precision_is_top_threshold_precision(self):
        rng = np.random.default_rng(5)
        scores, labels = random_examples(rng, 120, tie_prob=0)
        recall, precision = pr_curve_points(scores, labels)
        top = np.argmax(scores)
        assert precision[0] == float(labels[top])

    def test_no_positives_rejected(self):
        with pytest.raises(ValueError):
            average_precision([0.2, 0.4], [0, 0])


class TestInvariances:
    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(10, 120))
    def test_label_swap_symmetry(self, seed, n):
        rng = np.random.default_rng(seed)
        scores, labels = random_examples(rng, n)
        auc, _, _ = roc_auc(scores, labels)
        flipped, _, _ = roc_auc(1.0 - scores, 1 - labels)
        assert flipped == pytest.approx(auc, abs=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(10, 120))
    def test_monotone_score_transform_invariance(self, seed, n):
        rng = np.random.default_rng(seed)
        scores, labels = random_examples(rng, n)
        auc_a, _, _ = roc_auc(scores, labels)
        auc_b, _, _ = roc_auc(scores**3, labels)
        ap_a, _, _ = average_precision(scores, labels)
        ap_b, _, _ = average_precision(scores**3, labels)
        assert auc_b == pytest.approx(auc_a, abs=1e-12)
        assert ap_b == pytest.approx(ap_a, abs=1e-12)


class TestEvalReport:
    def test_report_fields_consistent(self):
        rng = np.random.default_rng(6)
        scores, labels = random_examples(rng, 200)
        report = evaluate_scores(scores, labels)
        c = report.confusion
        assert c["tn"] + c["fp"] + c["fn"] + c["tp"] == 200
        assert report.per_class["normal"]["support"] + report.per_class["anomalous"]["support"] == 200
        assert report.accuracy == (c["tp"] + c["tn"]) / 200
        doc = report.to_dict()
        assert set(doc) == {
            "threshold", "confusion", "per_class", "accuracy",
            "roc_auc", "average_precision", "roc_points", "pr_points",
        }
