"""Confusion matrices and precision / recall / fall-out / F1.

A metric whose denominator is zero is ``None`` ("undefined"), never 0 or NaN.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import LabelOutOfRange

DEFAULT_CLASS_NAMES = ["benign", "web-attack", "botnet", "port-scan", "dos-ddos",
                       "brute-force", "heartbleed-infiltration"]


@dataclass(frozen=True)
class Metrics:
    precision: float | None
    recall: float | None
    fall_out: float | None
    f1: float | None


def confusion(truth: Sequence[int], pred: Sequence[int], n_classes: int) -> np.ndarray:
    """counts[t, p]: rows are true classes, columns predictions."""
    t = np.asarray(truth, dtype=np.int64)
    p = np.asarray(pred, dtype=np.int64)
    if t.shape != p.shape:
        raise ValueError("truth and prediction lengths differ")
    for name, arr in (("truth", t), ("prediction", p)):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise LabelOutOfRange(f"{name} label outside [0, {n_classes})")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    return cm


def binary_counts(cm: np.ndarray, positive: int = 1) -> tuple[int, int, int, int]:
    """(TP, FP, TN, FN) for one class against the rest."""
    cm = np.asarray(cm)
    tp = int(cm[positive, positive])
    fp = int(cm[:, positive].sum()) - tp
    fn = int(cm[positive, :].sum()) - tp
    tn = int(cm.sum()) - tp - fp - fn
    return tp, fp, tn, fn


def metrics_from_counts(tp: int, fp: int, tn: int, fn: int) -> Metrics:
    pr = tp / (tp + fp) if tp + fp else None
    rc = tp / (tp + fn) if tp + fn else None
    fo = fp / (fp + tn) if fp + tn else None
    f1 = None
    if pr is not None and rc is not None and pr + rc > 0:
        # algebraically the harmonic mean of pr and rc, without double rounding
        f1 = 2 * tp / (2 * tp + fp + fn)
    return Metrics(pr, rc, fo, f1)


def metrics(cm: np.ndarray, positive: int = 1) -> Metrics:
    return metrics_from_counts(*binary_counts(cm, positive))


def collapse(cm: np.ndarray, cls: int) -> np.ndarray:
    """2x2 one-vs-rest matrix with ``cls`` as class 1."""
    tp, fp, tn, fn = binary_counts(cm, cls)
    return np.array([[tn, fp], [fn, tp]], dtype=np.int64)


def _mean(values) -> float | None:
    vals = [v for v in values if v is not None]
    return sum(vals) / len(vals) if vals else None


def multiclass_report(cm: np.ndarray, class_names: Sequence[str] | None = None) -> dict:
    cm = np.asarray(cm)
    n = cm.shape[0]
    if n < 2:
        raise ValueError("multiclass report needs at least two classes")
    names = list(class_names) if class_names else _default_names(n)
    per_class, undefined = [], []
    support = cm.sum(axis=1)
    for c in range(n):
        m = metrics(cm, c)
        per_class.append({"name": names[c], "support": int(support[c]), **asdict(m)})
        if m.precision is None or m.recall is None or m.f1 is None:
            undefined.append(names[c])
    macro = {k: _mean(pc[k] for pc in per_class)
             for k in ("precision", "recall", "fall_out", "f1")}
    weighted = {}
    for k in ("precision", "recall", "fall_out", "f1"):
        pairs = [(pc[k], pc["support"]) for pc in per_class if pc[k] is not None]
        w = sum(s for _, s in pairs)
        weighted[k] = sum(v * s for v, s in pairs) / w if w else None
    return {"per_class": per_class, "macro": macro, "weighted": weighted,
            "undefined_classes": undefined}


def _default_names(n: int) -> list[str]:
    if n == 2:
        return ["benign", "attack"]
    return [DEFAULT_CLASS_NAMES[i] if i < len(DEFAULT_CLASS_NAMES) else f"class-{i}"
            for i in range(n)]


def report_json(cm: np.ndarray, class_names: Sequence[str] | None = None,
                extra: dict | None = None) -> dict:
    """Metrics document: raw counts, binary attack-vs-benign view, per-class view.

    Undefined metrics are ``null``; ``undefined_as_zero`` records the
    alternative presentation where they print as 0.
    """
    cm = np.asarray(cm)
    attack = cm.copy()
    if cm.shape[0] > 2:
        attack = np.array([[cm[0, 0], cm[0, 1:].sum()],
                           [cm[1:, 0].sum(), cm[1:, 1:].sum()]], dtype=np.int64)
    tp, fp, tn, fn = binary_counts(attack, 1)
    doc = {
        "counts": cm.tolist(),
        "binary": {"tp": tp, "fp": fp, "tn": tn, "fn": fn,
                   **asdict(metrics_from_counts(tp, fp, tn, fn))},
        **multiclass_report(cm, class_names),
        "undefined_convention": "null",
        "undefined_as_zero": False,
    }
    if extra:
        doc.update(extra)
    return doc


def report_csv(doc: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scope", "name", "precision", "recall", "fall_out", "f1"])
    fmt = lambda v: "" if v is None else repr(v)
    b = doc["binary"]
    w.writerow(["binary", "attack", *(fmt(b[k]) for k in ("precision", "recall", "fall_out", "f1"))])
    for pc in doc["per_class"]:
        w.writerow(["class", pc["name"],
                    *(fmt(pc[k]) for k in ("precision", "recall", "fall_out", "f1"))])
    for scope in ("macro", "weighted"):
        w.writerow([scope, "all", *(fmt(doc[scope][k])
                                    for k in ("precision", "recall", "fall_out", "f1"))])
    return buf.getvalue()
