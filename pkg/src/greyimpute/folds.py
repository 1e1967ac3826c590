"""Stratified fold assignment shared by k selection and evaluation."""

from __future__ import annotations

import numpy as np

from ._rng import make_rng
from .errors import TooFewRowsError

__all__ = ["stratified_fold_ids", "effective_fold_count"]


def effective_fold_count(labels: np.ndarray, requested: int) -> int:
    """Requested fold count, reduced to the smallest class size (min 2)."""
    counts = np.bincount(np.asarray(labels, dtype=int))
    smallest = int(counts[counts > 0].min())
    return max(2, min(requested, smallest))


def stratified_fold_ids(labels: np.ndarray, n_folds: int, seed: int) -> np.ndarray:
    """Deterministic per-seed fold id for every row, stratified by class.

    Within each class the rows are shuffled and dealt round-robin, so every
    fold sees near-identical class proportions.
    """
    labels = np.asarray(labels, dtype=int)
    n = len(labels)
    if n < n_folds:
        raise TooFewRowsError(f"{n} rows cannot fill {n_folds} folds")
    rng = make_rng(seed, "folds")
    fold = np.empty(n, dtype=int)
    for y in np.unique(labels):
        idx = np.nonzero(labels == y)[0]
        rng.shuffle(idx)
        fold[idx] = np.arange(len(idx)) % n_folds
    return fold
