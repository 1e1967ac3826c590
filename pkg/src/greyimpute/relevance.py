"""Feature-relevance estimation: entropies, mutual information, weights.

Mutual information between a feature and the class label is the entropy of
the label minus its conditional entropy given the feature. Categorical
features use plug-in histogram estimates; continuous features use Parzen
window density estimates, where the class posterior at a training point is
the ratio of its class-restricted kernel sum to its total kernel sum.

All entropies are in bits (log base 2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import EmptyInputError

__all__ = [
    "MIEstimate",
    "ParzenSettings",
    "entropy_discrete",
    "conditional_entropy_discrete",
    "parzen_conditional_entropy",
    "mutual_information",
    "class_weights",
    "feature_feature_weights",
    "dataset_class_weights",
]

BANDWIDTH_FLOOR = 1e-6


@dataclass(frozen=True)
class ParzenSettings:
    """Kernel and bandwidth rule for continuous-feature estimates.

    ``window`` is "gaussian" or "rectangular". The bandwidth follows
    Silverman's factor h = 1.06 * std * n^(-1/5), floored so zero-variance
    features stay finite.
    """

    window: str = "gaussian"
    bandwidth_factor: float = 1.06

    def __post_init__(self):
        if self.window not in ("gaussian", "rectangular"):
            raise ValueError(f"unknown window {self.window!r}")

    def bandwidth(self, values: np.ndarray) -> float:
        n = len(values)
        sd = float(np.std(values, ddof=1)) if n > 1 else 0.0
        return max(self.bandwidth_factor * sd * n ** (-0.2), BANDWIDTH_FLOOR)


@dataclass(frozen=True)
class MIEstimate:
    """Nonnegative mutual information in bits plus which estimator made it."""

    mi: float
    estimator: str  # "histogram" | "parzen"


def _plogp(p: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(p > 0.0, p * np.log2(p), 0.0)


def entropy_discrete(counts) -> float:
    """Plug-in entropy of a histogram, -sum p log2 p with 0 log 0 = 0."""
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    if total <= 0:
        raise EmptyInputError("entropy of an empty histogram")
    return float(-_plogp(counts / total).sum())


def conditional_entropy_discrete(joint) -> float:
    """H(Y|X) from a feature-by-class contingency table."""
    joint = np.asarray(joint, dtype=float)
    total = joint.sum()
    if total <= 0:
        raise EmptyInputError("conditional entropy of an empty table")
    p_xy = joint / total
    p_x = p_xy.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p_y_given_x = np.where(p_x > 0, p_xy / p_x, 0.0)
        terms = np.where(p_xy > 0, p_xy * np.log2(p_y_given_x), 0.0)
    return float(-terms.sum())


def _kernel_matrix(x: np.ndarray, h: float, window: str) -> np.ndarray:
    d = x[:, None] - x[None, :]
    if window == "gaussian":
        return np.exp(-(d * d) / (2.0 * h * h))
    return (np.abs(d) <= h / 2.0).astype(float)


def parzen_conditional_entropy(
    feature: np.ndarray,
    labels: np.ndarray,
    n_classes: int,
    settings: ParzenSettings = ParzenSettings(),
) -> float:
    """H(Y|X) for a continuous feature by Parzen windows.

    The class posterior at each training point is its class-restricted
    kernel sum over its total kernel sum (the shared bandwidth and the
    class priors cancel); the conditional entropy is the average posterior
    entropy over training points.
    """
    x = np.asarray(feature, dtype=float)
    y = np.asarray(labels, dtype=int)
    n = len(x)
    if n < 2:
        raise EmptyInputError("parzen estimate needs at least 2 observations")
    h = settings.bandwidth(x)
    kernel = _kernel_matrix(x, h, settings.window)
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y] = 1.0
    numer = kernel @ onehot
    # the total kernel mass is the sum over class-restricted masses, so the
    # posterior rows sum to exactly one
    denom = numer.sum(axis=1)
    post = numer / denom[:, None]
    return float(-_plogp(post).sum(axis=1).mean())


def _contingency(x: np.ndarray, y: np.ndarray, kx: int, ky: int) -> np.ndarray:
    table = np.zeros((kx, ky))
    np.add.at(table, (x.astype(int), y.astype(int)), 1.0)
    return table


def mutual_information(
    column: np.ndarray,
    labels: np.ndarray,
    categorical: bool,
    n_classes: int,
    n_levels: int | None = None,
    settings: ParzenSettings = ParzenSettings(),
) -> MIEstimate:
    """MI between one complete feature column and the class labels.

    Histogram path for categorical columns, Parzen path for continuous.
    Clamped at zero: plug-in estimates can dip slightly negative.
    """
    y = np.asarray(labels, dtype=int)
    h_y = entropy_discrete(np.bincount(y, minlength=n_classes))
    if categorical:
        table = _contingency(np.asarray(column), y, n_levels or int(max(column)) + 1, n_classes)
        h_y_given_x = conditional_entropy_discrete(table)
        kind = "histogram"
    else:
        h_y_given_x = parzen_conditional_entropy(column, y, n_classes, settings)
        kind = "parzen"
    return MIEstimate(max(0.0, h_y - h_y_given_x), kind)


def class_weights(estimates: list[MIEstimate]) -> np.ndarray:
    """Simplex-normalized feature weights from per-feature MI.

    An all-zero MI vector falls back to uniform weights so weighted
    distances degrade gracefully to unweighted ones.
    """
    mi = np.array([e.mi for e in estimates], dtype=float)
    total = mi.sum()
    if total <= 0.0:
        return np.full(len(mi), 1.0 / len(mi))
    return mi / total


def dataset_class_weights(
    dataset: Dataset, settings: ParzenSettings = ParzenSettings()
) -> tuple[np.ndarray, list[MIEstimate]]:
    """Per-feature class-relevance weights for a complete labeled dataset."""
    cat = dataset.schema.categorical_mask
    m = len(dataset.schema.class_levels)
    estimates = []
    for j, feat in enumerate(dataset.schema.features):
        estimates.append(
            mutual_information(
                dataset.values[:, j],
                dataset.labels,
                bool(cat[j]),
                m,
                len(feat.levels) if feat.levels else None,
                settings,
            )
        )
    return class_weights(estimates), estimates


def _equal_frequency_bins(x: np.ndarray, bins: int = 10) -> np.ndarray:
    edges = np.quantile(x, np.linspace(0, 1, bins + 1)[1:-1])
    return np.searchsorted(edges, x, side="right")


def feature_feature_weights(
    dataset: Dataset, bins: int = 10
) -> np.ndarray:
    """Inter-feature relevance weights for a complete dataset.

    Each feature's raw score is the mean pairwise MI between it and every
    other feature, computed on discretized columns (continuous features are
    cut into equal-frequency bins); scores are simplex-normalized.
    """
    p = dataset.p
    if p == 1:
        return np.ones(1)
    cat = dataset.schema.categorical_mask
    cols = []
    for j in range(p):
        col = dataset.values[:, j]
        cols.append(col.astype(int) if cat[j] else _equal_frequency_bins(col, bins))
    mi = np.zeros((p, p))
    for a in range(p):
        for b in range(a + 1, p):
            ka, kb = cols[a].max() + 1, cols[b].max() + 1
            table = _contingency(cols[a], cols[b], ka, kb)
            h_b = entropy_discrete(table.sum(axis=0))
            mi[a, b] = mi[b, a] = max(0.0, h_b - conditional_entropy_discrete(table))
    scores = mi.sum(axis=1) / (p - 1)
    total = scores.sum()
    if total <= 0.0:
        return np.full(p, 1.0 / p)
    return scores / total
