"""Evaluation metrics for binary classifiers and the McNemar test."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import rankdata

from .errors import DataError, NoDiscordantsError

MCNEMAR_CRITICAL = 3.841
TABLE_COLUMNS = ("Accuracy", "Precision", "Recall", "F1 score", "AUC ROC", "AUC PR", "MCC")
REPORT_FIELDS = ("accuracy", "precision", "recall", "f1", "roc_auc", "pr_auc", "mcc")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self):
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class EvaluationReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    roc_auc: float
    pr_auc: float
    mcc: float
    confusion: ConfusionMatrix
    degenerate: tuple = ()
    training_time_s: float = field(default=0.0, compare=False)
    execution_time_s: float = field(default=0.0, compare=False)

    def metrics(self):
        return {k: getattr(self, k) for k in REPORT_FIELDS}

    def to_dict(self, timings=True):
        d = self.metrics()
        d["confusion"] = asdict(self.confusion)
        d["degenerate"] = list(self.degenerate)
        if timings:
            d["training_time_s"] = self.training_time_s
            d["execution_time_s"] = self.execution_time_s
        return d


@dataclass(frozen=True)
class ContingencyTable:
    """Paired correctness of two models on the same observations.

    ``n00`` counts rows both models get wrong, ``n01`` rows only model B
    gets right, ``n10`` rows only model A gets right and ``n11`` rows both
    get right.
    """

    n00: int
    n01: int
    n10: int
    n11: int

    @property
    def total(self):
        return self.n00 + self.n01 + self.n10 + self.n11

    def reversed(self):
        return ContingencyTable(self.n00, self.n10, self.n01, self.n11)


def _binary(a, name):
    a = np.asarray(a).ravel()
    if a.size and not np.isin(a, (0, 1)).all():
        raise DataError(f"{name} must contain only 0 and 1")
    return a.astype(np.int64)


def _pair(y_true, y_pred):
    t = _binary(y_true, "y_true")
    p = _binary(y_pred, "y_pred")
    if t.shape != p.shape:
        raise DataError(f"length mismatch: {t.size} vs {p.size}")
    return t, p


def confusion_matrix(y_true, y_pred) -> ConfusionMatrix:
    t, p = _pair(y_true, y_pred)
    tp = int(np.sum((t == 1) & (p == 1)))
    fp = int(np.sum((t == 0) & (p == 1)))
    fn = int(np.sum((t == 1) & (p == 0)))
    return ConfusionMatrix(tp, fp, fn, t.size - tp - fp - fn)


def _ratio(num, den):
    return (num / den, False) if den > 0 else (0.0, True)


def precision_recall_f1(cm: ConfusionMatrix):
    """Precision, recall, F1 and the names of any zero-denominator metrics."""
    flags = []
    p, bad = _ratio(cm.tp, cm.tp + cm.fp)
    if bad:
        flags.append("precision")
    r, bad = _ratio(cm.tp, cm.tp + cm.fn)
    if bad:
        flags.append("recall")
    f, bad = _ratio(2.0 * p * r, p + r)
    if bad:
        flags.append("f1")
    return p, r, f, flags


def mcc(cm: ConfusionMatrix) -> float:
    """Matthews correlation; 0 when any row or column marginal is 0."""
    den = (cm.tp + cm.fp) * (cm.tp + cm.fn) * (cm.tn + cm.fp) * (cm.tn + cm.fn)
    if den == 0:
        return 0.0
    return (cm.tp * cm.tn - cm.fp * cm.fn) / math.sqrt(den)


def roc_auc(y_true, scores) -> float:
    """Mann-Whitney AUC with average ranks for ties; 0.5 if a class is absent."""
    t = _binary(y_true, "y_true")
    s = np.asarray(scores, dtype=np.float64).ravel()
    n_pos = int(t.sum())
    n_neg = t.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return 0.5
    ranks = rankdata(s, method="average")
    return float((ranks[t == 1].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def average_precision(y_true, scores) -> float:
    """Sum of precision at each distinct threshold weighted by the recall gained there."""
    t = _binary(y_true, "y_true")
    s = np.asarray(scores, dtype=np.float64).ravel()
    n_pos = int(t.sum())
    if n_pos == 0:
        return 0.0
    order = np.argsort(-s, kind="stable")
    s, t = s[order], t[order]
    last = np.r_[np.nonzero(s[1:] != s[:-1])[0], s.size - 1]
    tps = np.cumsum(t)[last]
    precision = tps / (last + 1.0)
    recall_gain = np.diff(np.r_[0, tps]) / n_pos
    return float(np.sum(recall_gain * precision))


def compute_report(y_true, y_pred, scores, training_time_s=0.0, execution_time_s=0.0) -> EvaluationReport:
    t, p = _pair(y_true, y_pred)
    s = np.asarray(scores, dtype=np.float64).ravel()
    if s.shape != t.shape:
        raise DataError(f"length mismatch: {t.size} labels vs {s.size} scores")
    cm = confusion_matrix(t, p)
    prec, rec, f1, flags = precision_recall_f1(cm)
    acc, bad = _ratio(cm.tp + cm.tn, cm.total)
    if bad:
        flags.append("accuracy")
    if t.sum() in (0, t.size):
        flags += ["roc_auc", "pr_auc"] if t.sum() == 0 else ["roc_auc"]
    return EvaluationReport(acc, prec, rec, f1, roc_auc(t, s), average_precision(t, s), mcc(cm), cm,
                            tuple(flags), training_time_s, execution_time_s)


def cohen_kappa(labels_a, labels_b) -> float:
    a = np.asarray(labels_a).ravel()
    b = np.asarray(labels_b).ravel()
    if a.size == 0:
        raise DataError("cohen_kappa needs at least one observation")
    if a.shape != b.shape:
        raise DataError(f"length mismatch: {a.size} vs {b.size}")
    p_o = float(np.mean(a == b))
    cats = np.union1d(a, b)
    p_e = float(sum(np.mean(a == c) * np.mean(b == c) for c in cats))
    if p_e == 1.0:
        if p_o == 1.0:
            return 1.0
        raise DataError("chance agreement is 1 but observed agreement is not")
    return (p_o - p_e) / (1.0 - p_e)


def contingency_table(y_true, pred_a, pred_b) -> ContingencyTable:
    t, pa = _pair(y_true, pred_a)
    _, pb = _pair(y_true, pred_b)
    ca = pa == t
    cb = pb == t
    return ContingencyTable(int(np.sum(~ca & ~cb)), int(np.sum(~ca & cb)),
                            int(np.sum(ca & ~cb)), int(np.sum(ca & cb)))


def mcnemar_test(table: ContingencyTable):
    """Uncorrected McNemar statistic, chi-square(1) p-value and rejection flag.

    Rejects marginal homogeneity when the statistic exceeds 3.841.
    """
    d = table.n01 + table.n10
    if d == 0:
        raise NoDiscordantsError("the two models never disagree; the test is undefined")
    mu = (table.n01 - table.n10) ** 2 / d
    return mu, math.erfc(math.sqrt(mu / 2.0)), mu > MCNEMAR_CRITICAL
