"""Seeded class balancing, stratified splits and k-fold assignment.

All functions work on label arrays and return record indices, so they apply
equally to in-memory matrices and to DIDM files.
"""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np

from ..errors import SingleClassDataset, TooFewRecords

log = logging.getLogger(__name__)

SPLIT_FRACTIONS = (0.64, 0.16, 0.20)


def balance(labels: Sequence[int], mode: str = "binary", seed: int = 0) -> np.ndarray:
    """Return sorted indices of the retained records.

    ``binary`` keeps every attack (label != 0) and draws the same number of
    benign records; ``multiclass`` cuts every class down to the smallest one.
    """
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    if mode == "binary":
        benign = np.flatnonzero(labels == 0)
        attack = np.flatnonzero(labels != 0)
        if len(benign) == 0 or len(attack) == 0:
            raise SingleClassDataset("binary balancing needs benign and attack records")
        if len(benign) < len(attack):
            log.warning("only %d benign flows for %d attacks; keeping all", len(benign), len(attack))
            keep_benign = benign
        else:
            keep_benign = rng.choice(benign, size=len(attack), replace=False)
        return np.sort(np.concatenate([keep_benign, attack]))
    if mode == "multiclass":
        classes = np.unique(labels)
        if len(classes) < 2:
            raise SingleClassDataset("multiclass balancing needs at least two classes")
        n = min(int(np.sum(labels == c)) for c in classes)
        picks = [rng.choice(np.flatnonzero(labels == c), size=n, replace=False) for c in classes]
        return np.sort(np.concatenate(picks))
    raise ValueError(f"unknown balance mode {mode!r}")


def split(labels: Sequence[int], fractions: Sequence[float] = SPLIT_FRACTIONS,
          seed: int = 0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stratified train/val/test split: floor(f1 n) and floor((f1 + f2) n) cut points."""
    if len(fractions) != 3 or abs(sum(fractions) - 1.0) > 1e-9 or min(fractions) < 0:
        raise ValueError("fractions must be three non-negative values summing to 1")
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    parts: tuple[list, list, list] = ([], [], [])
    for c in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == c))
        n = len(idx)
        # cumulative floors keep every part within one record of its exact share;
        # round first so 0.64 * 100 gives 64, not 63
        cut1 = int(np.floor(round(fractions[0] * n, 9)))
        cut2 = int(np.floor(round((fractions[0] + fractions[1]) * n, 9)))
        parts[0].append(idx[:cut1])
        parts[1].append(idx[cut1:cut2])
        parts[2].append(idx[cut2:])
    return tuple(np.sort(np.concatenate(p)) if p else np.array([], dtype=int)
                 for p in parts)


def kfold(labels: Sequence[int], k: int = 10, seed: int = 0) -> np.ndarray:
    """Fold id per record, stratified; fold sizes differ by at most one."""
    if k < 2:
        raise ValueError("k must be >= 2")
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    folds = np.empty(len(labels), dtype=np.int64)
    pos = 0
    for c in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == c))
        if len(idx) < k:
            raise TooFewRecords(f"class {int(c)} has {len(idx)} records, fewer than k={k}")
        # continue the round-robin across classes to keep totals within one
        folds[idx] = (pos + np.arange(len(idx))) % k
        pos += len(idx)
    return folds
