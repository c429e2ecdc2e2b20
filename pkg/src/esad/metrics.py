"""Binary classification metrics: confusion counts, per-class report, ROC, PR."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _check_examples(scores, labels):
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if s.ndim != 1 or y.shape != s.shape or s.size == 0:
        raise ValueError("scores and labels must be matching non-empty 1-D sequences")
    if not np.all(np.isfinite(s)) or s.min() < 0.0 or s.max() > 1.0:
        raise ValueError("scores must be finite probabilities in [0, 1]")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    return s, y


def confusion_at_threshold(scores, labels, threshold: float = 0.5):
    """(tn, fp, fn, tp) with the anomalous class predicted when score >= threshold."""
    s, y = _check_examples(scores, labels)
    pred = s >= threshold
    tp = int(np.sum(pred & (y == 1)))
    fp = int(np.sum(pred & (y == 0)))
    fn = int(np.sum(~pred & (y == 1)))
    tn = int(np.sum(~pred & (y == 0)))
    return tn, fp, fn, tp


def classification_report(scores, labels, threshold: float = 0.5) -> dict:
    """Per-class precision/recall/F1/support plus accuracy, at one threshold."""
    s, y = _check_examples(scores, labels)
    if len(np.unique(y)) < 2:
        raise ValueError("classification report needs both classes present")
    tn, fp, fn, tp = confusion_at_threshold(s, y, threshold)

    def prf(tp_, fp_, fn_, support):
        precision = tp_ / (tp_ + fp_) if tp_ + fp_ > 0 else 0.0
        recall = tp_ / (tp_ + fn_) if tp_ + fn_ > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        return {"precision": precision, "recall": recall, "f1": f1, "support": support}

    return {
        "normal": prf(tn, fn, fp, tn + fp),  # class 0 treated as positive
        "anomalous": prf(tp, fp, fn, tp + fn),
        "accuracy": (tp + tn) / s.size,
        "confusion": {"tn": tn, "fp": fp, "fn": fn, "tp": tp},
    }


def _sweep(scores, labels):
    """Cumulative tp/fp over unique scores descending, ties grouped."""
    order = np.argsort(-scores, kind="stable")
    s_sorted = scores[order]
    y_sorted = labels[order]
    # last index of each tie group
    distinct = np.flatnonzero(np.diff(s_sorted) != 0.0)
    ends = np.append(distinct, s_sorted.size - 1)
    cum_tp = np.cumsum(y_sorted == 1)[ends]
    cum_fp = np.cumsum(y_sorted == 0)[ends]
    return cum_tp, cum_fp


def roc_curve_points(scores, labels):
    """(fpr, tpr) arrays starting at the (0, 0) sentinel and ending at (1, 1)."""
    s, y = _check_examples(scores, labels)
    n_pos = int(np.sum(y == 1))
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both classes present")
    cum_tp, cum_fp = _sweep(s, y)
    fpr = np.concatenate([[0.0], cum_fp / n_neg])
    tpr = np.concatenate([[0.0], cum_tp / n_pos])
    return fpr, tpr


def roc_auc(scores, labels):
    """Trapezoidal area under the ROC sweep; returns (auc, fpr, tpr)."""
    fpr, tpr = roc_curve_points(scores, labels)
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) * 0.5))
    return auc, fpr, tpr


def pr_curve_points(scores, labels):
    """(recall, precision) at every distinct score, descending."""
    s, y = _check_examples(scores, labels)
    n_pos = int(np.sum(y == 1))
    if n_pos == 0:
        raise ValueError("average precision needs at least one positive example")
    cum_tp, cum_fp = _sweep(s, y)
    recall = cum_tp / n_pos
    precision = cum_tp / (cum_tp + cum_fp)
    return recall, precision


def average_precision(scores, labels):
    """Step-wise AP = sum (R_k - R_{k-1}) * P_k; returns (ap, recall, precision)."""
    recall, precision = pr_curve_points(scores, labels)
    prev = np.concatenate([[0.0], recall[:-1]])
    ap = float(np.sum((recall - prev) * precision))
    return ap, recall, precision


@dataclass
class EvalReport:
    confusion: dict
    per_class: dict
    accuracy: float
    roc_auc: float
    average_precision: float
    roc_points: dict
    pr_points: dict
    threshold: float

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "confusion": self.confusion,
            "per_class": self.per_class,
            "accuracy": self.accuracy,
            "roc_auc": self.roc_auc,
            "average_precision": self.average_precision,
            "roc_points": self.roc_points,
            "pr_points": self.pr_points,
        }


def evaluate_scores(scores, labels, threshold: float = 0.5) -> EvalReport:
    report = classification_report(scores, labels, threshold)
    auc, fpr, tpr = roc_auc(scores, labels)
    ap, recall, precision = average_precision(scores, labels)
    return EvalReport(
        confusion=report["confusion"],
        per_class={"normal": report["normal"], "anomalous": report["anomalous"]},
        accuracy=report["accuracy"],
        roc_auc=auc,
        average_precision=ap,
        roc_points={"fpr": fpr.tolist(), "tpr": tpr.tolist()},
        pr_points={"recall": recall.tolist(), "precision": precision.tolist()},
        threshold=threshold,
    )
