"""Binary classification metrics: confusion counts, report tables, ROC/AUC."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from cbdetect.errors import DataError

CLASS_NAMES = {0: "non-clickbait", 1: "clickbait"}


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with clickbait (label 1) as the positive class."""

    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def confusion(y_true, y_pred) -> ConfusionMatrix:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise DataError(f"label arrays must be equal-length vectors, got {y_true.shape} and {y_pred.shape}")
    if len(y_true) == 0:
        raise DataError("cannot build a confusion matrix from zero samples")
    bad = set(np.unique(np.concatenate([y_true, y_pred])).tolist()) - {0, 1}
    if bad:
        raise DataError(f"labels must be 0 or 1, found {sorted(bad)[0]}")
    tp = int(((y_true == 1) & (y_pred == 1)).sum())
    fp = int(((y_true == 0) & (y_pred == 1)).sum())
    fn = int(((y_true == 1) & (y_pred == 0)).sum())
    tn = int(((y_true == 0) & (y_pred == 0)).sum())
    return ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f_score: float
    support: int


@dataclass(frozen=True)
class Averages:
    precision: float
    recall: float
    f_score: float


@dataclass(frozen=True)
class EvalReport:
    per_class: tuple  # (ClassMetrics for class 0, ClassMetrics for class 1)
    accuracy: float
    macro: Averages
    weighted: Averages
    zero_division: bool  # true when any denominator was 0 and defined as 0


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float, bool]:
    flagged = False
    if tp + fp == 0:
        precision, flagged = 0.0, True
    else:
        precision = tp / (tp + fp)
    if tp + fn == 0:
        recall, flagged = 0.0, True
    else:
        recall = tp / (tp + fn)
    if precision + recall == 0.0:
        f_score, flagged = 0.0, True
    else:
        f_score = 2.0 * precision * recall / (precision + recall)
    return precision, recall, f_score, flagged


def aggregate(per_class: list, supports: list) -> tuple:
    """Macro and support-weighted averages of (precision, recall, f) triples.

    Aggregation happens at full precision; rounding is a rendering concern
    only. This is what makes a table's macro/weighted rows reproducible
    from its per-class rows.
    """
    total = sum(supports)
    if total <= 0:
        raise DataError("supports must sum to a positive total")
    arr = np.asarray(per_class, dtype=np.float64)
    sup = np.asarray(supports, dtype=np.float64)
    macro = arr.mean(axis=0)
    weighted = (arr * sup[:, None]).sum(axis=0) / total
    return Averages(*macro), Averages(*weighted)


def report(cm: ConfusionMatrix) -> EvalReport:
    """Full per-class and averaged metrics from a confusion matrix.

    Each class plays the positive role in turn. Supports derive from the
    matrix itself (true-label counts). Zero denominators yield 0 and set
    the report's flag instead of propagating NaN.
    """
    if cm.total == 0:
        raise DataError("cannot report on an empty confusion matrix")
    p1, r1, f1, flag1 = _prf(cm.tp, cm.fp, cm.fn)
    # class 0 as positive: its hits are the true negatives
    p0, r0, f0, flag0 = _prf(cm.tn, cm.fn, cm.fp)
    support1 = cm.tp + cm.fn
    support0 = cm.tn + cm.fp
    macro, weighted = aggregate([(p0, r0, f0), (p1, r1, f1)], [support0, support1])
    return EvalReport(
        per_class=(
            ClassMetrics(p0, r0, f0, support0),
            ClassMetrics(p1, r1, f1, support1),
        ),
        accuracy=(cm.tp + cm.tn) / cm.total,
        macro=macro,
        weighted=weighted,
        zero_division=flag0 or flag1,
    )


def render_value(x: float) -> str:
    """Two decimals, round half up, from the shortest decimal form of x."""
    return str(Decimal(repr(float(x))).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def format_report(rep: EvalReport) -> str:
    """Aligned text table: Class, Precision, Recall, F-score, Support."""
    rows = [("Class", "Precision", "Recall", "F-score", "Support")]
    for cls in (0, 1):
        m = rep.per_class[cls]
        rows.append(
            (
                f"{CLASS_NAMES[cls]} ({cls})",
                render_value(m.precision),
                render_value(m.recall),
                render_value(m.f_score),
                str(m.support),
            )
        )
    total = rep.per_class[0].support + rep.per_class[1].support
    rows.append(("accuracy", "", "", render_value(rep.accuracy), str(total)))
    for name, avg in (("macro avg", rep.macro), ("weighted avg", rep.weighted)):
        rows.append(
            (
                name,
                render_value(avg.precision),
                render_value(avg.recall),
                render_value(avg.f_score),
                str(total),
            )
        )
    widths = [max(len(r[i]) for r in rows) for i in range(5)]
    lines = []
    for r in rows:
        cells = [r[0].ljust(widths[0])] + [r[i].rjust(widths[i]) for i in range(1, 5)]
        lines.append("  ".join(cells).rstrip())
    if rep.zero_division:
        lines.append("note: a zero denominator was reported as 0")
    return "\n".join(lines)


def report_dict(rep: EvalReport) -> dict:
    """Machine-readable report with full-precision values."""
    out = {"accuracy": rep.accuracy, "zero_division": rep.zero_division}
    for cls in (0, 1):
        m = rep.per_class[cls]
        out[CLASS_NAMES[cls]] = {
            "precision": m.precision,
            "recall": m.recall,
            "f_score": m.f_score,
            "support": m.support,
        }
    for name, avg in (("macro_avg", rep.macro), ("weighted_avg", rep.weighted)):
        out[name] = {
            "precision": avg.precision,
            "recall": avg.recall,
            "f_score": avg.f_score,
        }
    return out


@dataclass(frozen=True)
class RocCurve:
    points: np.ndarray  # (k, 2) rows of (fpr, tpr), from (0,0) to (1,1)
    thresholds: np.ndarray  # score cut for each point; +inf for (0,0)
    auc: float


def roc(y_true, scores) -> RocCurve:
    """Threshold sweep over every distinct score.

    The area accumulates integer trapezoids, 2*area = sum dFP*(TP+TP'),
    and divides once at the end; that makes it exactly the Mann-Whitney
    statistic (ties counted half) with no float drift.
    """
    y_true = np.asarray(y_true, dtype=np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    if y_true.shape != scores.shape or y_true.ndim != 1:
        raise DataError("labels and scores must be equal-length vectors")
    P = int((y_true == 1).sum())
    N = int((y_true == 0).sum())
    if P == 0 or N == 0:
        raise DataError("ROC needs both classes present")

    order = np.argsort(-scores, kind="stable")
    ys = y_true[order]
    ss = scores[order]
    points = [(0.0, 0.0)]
    thresholds = [np.inf]
    tp = fp = 0
    area2 = 0
    i = 0
    n = len(ys)
    while i < n:
        j = i
        while j < n and ss[j] == ss[i]:
            j += 1
        tp_prev, fp_prev = tp, fp
        tp += int((ys[i:j] == 1).sum())
        fp += int((ys[i:j] == 0).sum())
        area2 += (fp - fp_prev) * (tp_prev + tp)
        points.append((fp / N, tp / P))
        thresholds.append(float(ss[i]))
        i = j
    return RocCurve(
        points=np.array(points, dtype=np.float64),
        thresholds=np.array(thresholds, dtype=np.float64),
        auc=area2 / (2 * N * P),
    )


def write_roc_csv(curve: RocCurve, path) -> None:
    """Two-column csv of (fpr, tpr) for plotting."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fpr", "tpr"])
        for fpr, tpr in curve.points:
            writer.writerow([repr(float(fpr)), repr(float(tpr))])
