"""Iterative kNN imputation engine.

A run proceeds: rescale continuous columns onto [0, 1]; pre-fill missing
cells with column means/modes (within class for the per-class methods);
derive feature weights where the method calls for them; pick k by
stratified cross-validation when not given; then sweep repeatedly over the
incomplete rows, re-ranking neighbors against the previous iterate and
re-estimating every originally-missing cell, until the largest cell change
drops below epsilon or the iteration cap is hit.

Sweeps update the iterate in place over a fixed ascending row order, so a
run is fully deterministic and later rows benefit from earlier rows'
refreshed estimates within the same pass. Observed cells are never
touched: the output matrix is composed from the original input plus the
imputed cells only.

Method variants differ along four orthogonal axes captured by
:class:`MethodPlan`: candidate pool (whole matrix vs same class), metric
(heterogeneous Euclidean/overlap vs grey relational), feature-weight
source (none, class relevance, inter-feature relevance) and whether cell
estimates are distance-weighted.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, RangeTable, normalize, validate
from .distance import GreyMetric, GreyParams, HeomMetric
from .errors import (
    DataError,
    InsufficientCandidatesError,
    SchemaMismatchError,
    TooFewRowsError,
)
from .folds import effective_fold_count, stratified_fold_ids
from .relevance import ParzenSettings, dataset_class_weights, feature_feature_weights

__all__ = [
    "Method",
    "MethodPlan",
    "ImputeConfig",
    "ImputationResult",
    "initial_impute",
    "select_k",
    "nearest_neighbors",
    "impute_numeric_cell",
    "impute_categorical_cell",
    "run_impute",
    "run_plan",
    "prepare",
    "sweep",
    "impute_test",
    "PLANS",
    "DEFAULT_K_GRID",
]

DEFAULT_K_GRID = (1, 3, 5, 7, 9, 11, 13, 15)


class Method(str, enum.Enum):
    MEAN_MODE = "meanmode"
    IKNN = "iknn"
    MIKNN = "miknn"
    GKNN = "gknn"
    FWGKNN = "fwgknn"
    CGKNN = "cgknn"


@dataclass(frozen=True)
class MethodPlan:
    """The four axes a method varies along."""

    per_class_pool: bool
    metric: str  # "heom" | "grey"
    weight_source: str  # "none" | "class_mi" | "feature_mi"
    weighted_cells: bool
    iterative: bool = True


PLANS = {
    Method.MEAN_MODE: MethodPlan(False, "heom", "none", False, iterative=False),
    Method.IKNN: MethodPlan(False, "heom", "none", True),
    Method.MIKNN: MethodPlan(False, "heom", "class_mi", True),
    Method.GKNN: MethodPlan(True, "grey", "none", False),
    Method.FWGKNN: MethodPlan(False, "grey", "feature_mi", True),
    Method.CGKNN: MethodPlan(True, "grey", "class_mi", True),
}

_NEEDS_LABELS = {Method.MIKNN, Method.GKNN, Method.FWGKNN, Method.CGKNN}


@dataclass(frozen=True)
class ImputeConfig:
    """Everything a run needs besides the data.

    ``k=None`` selects k from ``k_grid`` by cross-validation. ``eq11_literal``
    switches the numeric estimator to the literal 1/(kW) prefactor variant
    instead of the standard weighted mean; it is off by default.
    """

    method: Method = Method.CGKNN
    k: int | None = None
    k_grid: tuple[int, ...] = DEFAULT_K_GRID
    rho: float = 0.5
    epsilon: float = 1e-4
    max_iter: int = 50
    seed: int = 0
    folds: int = 10
    eq11_literal: bool = False
    parzen: ParzenSettings = field(default_factory=ParzenSettings)

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if self.k is not None and self.k < 1:
            raise ValueError("k must be positive")
        if not self.k_grid or any(k < 1 for k in self.k_grid):
            raise ValueError("k_grid must hold positive integers")
        GreyParams(self.rho)


@dataclass(frozen=True)
class ImputationResult:
    """A completed dataset plus the run's diagnostics.

    ``trace`` holds the largest absolute cell change (normalized scale;
    categorical changes count as 1) per iteration. ``converged`` is False
    when the iteration cap stopped the run instead of the tolerance.
    """

    completed: Dataset
    trace: tuple[float, ...]
    iterations: int
    chosen_k: int
    weights_used: np.ndarray | None
    converged: bool
    used_pool_fallback: bool
    ranges: RangeTable


def _column_mean(values, mask, j):
    obs = values[mask[:, j], j]
    return float(obs.mean()) if obs.size else None


def _column_mode(values, mask, j, n_levels):
    obs = values[mask[:, j], j]
    if not obs.size:
        return None
    counts = np.bincount(obs.astype(int), minlength=n_levels)
    return float(np.argmax(counts))


def initial_impute(dataset: Dataset, per_class: bool = False) -> Dataset:
    """Mean/mode pre-fill producing a complete matrix.

    Continuous gaps take the observed column mean, categorical gaps the
    observed column mode (ties to the lowest level index). With
    ``per_class`` the statistics come from the row's own class, falling
    back to the whole column when a class has nothing observed there.
    """
    cat = dataset.schema.categorical_mask
    vals = dataset.values.copy()
    feats = dataset.schema.features

    def fill(rows: np.ndarray, global_fallback: bool):
        sub_mask = dataset.mask[rows]
        for j in range(dataset.p):
            gaps = rows[~sub_mask[:, j]]
            if gaps.size == 0:
                continue
            if cat[j]:
                stat = _column_mode(dataset.values[rows], sub_mask, j, len(feats[j].levels))
                if stat is None and global_fallback:
                    stat = _column_mode(dataset.values, dataset.mask, j, len(feats[j].levels))
            else:
                stat = _column_mean(dataset.values[rows], sub_mask, j)
                if stat is None and global_fallback:
                    stat = _column_mean(dataset.values, dataset.mask, j)
            if stat is None:
                raise DataError(
                    f"column {feats[j].name!r} has no observed values to impute from"
                )
            vals[gaps, j] = stat

    if per_class:
        if dataset.labels is None:
            raise DataError("per-class initial imputation requires labels")
        for y in np.unique(dataset.labels):
            fill(np.nonzero(dataset.labels == y)[0], global_fallback=True)
    else:
        fill(np.arange(dataset.n), global_fallback=False)
    return dataset.with_values(vals, np.ones_like(dataset.mask))


def _majority(ranked_labels: np.ndarray) -> int:
    counts = np.bincount(ranked_labels)
    best = counts.max()
    for lab in ranked_labels:
        if counts[lab] == best:
            return int(lab)
    raise AssertionError("unreachable")


def select_k(
    values: np.ndarray,
    labels: np.ndarray,
    metric,
    grid: tuple[int, ...] = DEFAULT_K_GRID,
    folds: int = 10,
    seed: int = 0,
) -> int:
    """Pick k from the grid by stratified CV misclassification of a
    k-nearest-neighbor classifier under the given metric.

    Ties go to the smallest k. Grid values larger than a training fold are
    skipped. The matrix must be complete (pre-filled).
    """
    labels = np.asarray(labels, dtype=int)
    n = len(labels)
    if n < 4:
        raise TooFewRowsError(f"k selection needs at least 4 rows, got {n}")
    grid = tuple(sorted(set(grid)))
    folds = effective_fold_count(labels, folds)
    fold_ids = stratified_fold_ids(labels, folds, seed)
    errors = {k: 0 for k in grid}
    usable = {k: True for k in grid}
    for f in range(folds):
        train = np.nonzero(fold_ids != f)[0]
        test = np.nonzero(fold_ids == f)[0]
        for k in grid:
            if k > len(train):
                usable[k] = False
        for q in test:
            d = metric.distances(values[q], values[train])
            ranked = labels[train][np.argsort(d, kind="stable")]
            for k in grid:
                if usable[k] and _majority(ranked[:k]) != labels[q]:
                    errors[k] += 1
    candidates = [k for k in grid if usable[k]]
    if not candidates:
        raise TooFewRowsError("every grid value exceeds the training fold size")
    return min(candidates, key=lambda k: (errors[k], k))


def nearest_neighbors(
    query: np.ndarray,
    candidate_rows: np.ndarray,
    candidate_indices: np.ndarray,
    metric,
    k: int,
) -> list[tuple[int, float]]:
    """The k candidates closest to the query, ascending by distance with
    ties broken by ascending row index."""
    if len(candidate_indices) < k:
        raise InsufficientCandidatesError(
            f"need {k} candidates, have {len(candidate_indices)}"
        )
    d = metric.distances(query, candidate_rows)
    order = np.argsort(d, kind="stable")[:k]
    return [(int(candidate_indices[i]), float(d[i])) for i in order]


def impute_numeric_cell(
    distances: np.ndarray,
    values: np.ndarray,
    weighted: bool = True,
    eq11_literal: bool = False,
) -> float:
    """Estimate one continuous cell from its neighbors.

    Weighted form: inverse-square-distance mean. Any zero-distance neighbor
    short-circuits to the plain mean over exactly the zero-distance ones
    (the weighted mean's limit). Unweighted form: plain mean of all k.
    """
    values = np.asarray(values, dtype=float)
    if not weighted:
        return float(values.mean())
    distances = np.asarray(distances, dtype=float)
    zero = distances == 0.0
    if zero.any():
        return float(values[zero].mean())
    w = 1.0 / (distances * distances)
    est = float((w * values).sum() / w.sum())
    if eq11_literal:
        est /= len(values)
    return est


def impute_categorical_cell(
    distances: np.ndarray,
    values: np.ndarray,
    n_levels: int,
    weighted: bool = True,
) -> int:
    """Estimate one categorical cell from its neighbors.

    Weighted form: rank weights (d_k - d_l)/(d_k - d_1), all 1 when every
    distance is equal; the category with the largest weight sum wins.
    Unweighted form: plain mode. Ties go to the nearest neighbor's category
    if it is among the tied, else to the lowest level index.
    """
    values = np.asarray(values)
    distances = np.asarray(distances, dtype=float)
    k = len(values)
    if weighted and distances[-1] != distances[0]:
        alpha = (distances[-1] - distances) / (distances[-1] - distances[0])
    else:
        alpha = np.ones(k)
    sums = np.zeros(n_levels)
    np.add.at(sums, values.astype(int), alpha)
    best = sums.max()
    tied = np.nonzero(sums == best)[0]
    nearest = int(values[0])
    if nearest in tied:
        return nearest
    return int(tied.min())


@dataclass
class RunState:
    """Mutable state threaded through the per-iteration sweeps."""

    dataset: Dataset
    config: ImputeConfig
    plan: MethodPlan
    ranges: RangeTable
    values: np.ndarray  # current complete iterate, normalized scale
    metric: object
    k: int
    weights: np.ndarray | None
    incomplete_rows: np.ndarray
    missing_cols: dict[int, np.ndarray]
    class_rows: dict[int, np.ndarray] | None
    used_pool_fallback: bool = False


@dataclass(frozen=True)
class SweepResult:
    max_change: float
    neighbors: dict[int, list[tuple[int, float]]]


def _build_metric(plan: MethodPlan, schema, rho: float, weights):
    cat = schema.categorical_mask
    if plan.metric == "grey":
        return GreyMetric(cat, GreyParams(rho), weights)
    return HeomMetric(cat, None, weights)


def prepare(
    dataset: Dataset,
    config: ImputeConfig,
    plan: MethodPlan | None = None,
    weights_override: np.ndarray | None = None,
) -> RunState:
    """Normalize, pre-fill, weigh and pick k; returns the ready-to-sweep
    state. ``plan``/``weights_override`` exist so variant combinations can
    be exercised directly; normal callers go through :func:`run_impute`."""
    report = validate(dataset)
    if not report.ok:
        first = report.violations[0]
        raise DataError(
            f"dataset fails validation with {len(report.violations)} violation(s); "
            f"first: {first.kind} at ({first.row}, {first.column})"
        )
    plan = PLANS[config.method] if plan is None else plan
    if config.method in _NEEDS_LABELS and dataset.labels is None:
        raise DataError(f"method {config.method.value} requires class labels")

    normalized, ranges = normalize(dataset)
    initial = initial_impute(normalized, per_class=plan.per_class_pool)

    if weights_override is not None:
        weights = np.asarray(weights_override, dtype=float)
    elif plan.weight_source == "class_mi":
        weights, _ = dataset_class_weights(initial, config.parzen)
    elif plan.weight_source == "feature_mi":
        weights = feature_feature_weights(initial)
    else:
        weights = None

    metric = _build_metric(plan, dataset.schema, config.rho, weights)

    incomplete = np.nonzero(~dataset.mask.all(axis=1))[0]
    if not plan.iterative:
        k = 0
    elif config.k is not None:
        k = config.k
    elif len(incomplete) == 0:
        k = 0
    else:
        if dataset.labels is None:
            raise DataError("automatic k selection requires class labels")
        k = select_k(
            initial.values, dataset.labels, metric, config.k_grid, config.folds, config.seed
        )

    missing_cols = {int(r): np.nonzero(~dataset.mask[r])[0] for r in incomplete}
    class_rows = None
    if plan.per_class_pool:
        class_rows = {
            int(y): np.nonzero(dataset.labels == y)[0] for y in np.unique(dataset.labels)
        }
    return RunState(
        dataset=dataset,
        config=config,
        plan=plan,
        ranges=ranges,
        values=initial.values.copy(),
        metric=metric,
        k=k,
        weights=weights,
        incomplete_rows=incomplete,
        missing_cols=missing_cols,
        class_rows=class_rows,
    )


def _pool_for(state: RunState, row: int) -> np.ndarray:
    n = state.dataset.n
    if state.class_rows is not None:
        rows = state.class_rows[int(state.dataset.labels[row])]
        pool = rows[rows != row]
        if len(pool) >= state.k:
            return pool
        state.used_pool_fallback = True
    pool = np.arange(n)
    pool = pool[pool != row]
    if len(pool) < state.k:
        raise InsufficientCandidatesError(
            f"row {row}: {len(pool)} candidates for k={state.k}"
        )
    return pool


def sweep(state: RunState) -> SweepResult:
    """One sequential pass: re-rank neighbors and re-estimate every
    originally missing cell, updating the iterate in place.

    Candidates take their values from the iterate (imputed cells count as
    known information), but the query keeps its originally-missing cells
    missing, so those features hit the metrics' missing-cell branches
    instead of anchoring the search on their own current estimates.

    Updates land in the iterate immediately (fixed ascending row order, so
    runs are deterministic); rows later in the sweep see the refreshed
    estimates of earlier ones, which damps the donor flip-flop cycles a
    hold-everything-then-update schedule falls into on correlated data.
    """
    cat = state.dataset.schema.categorical_mask
    feats = state.dataset.schema.features
    neighbors_out: dict[int, list[tuple[int, float]]] = {}
    max_change = 0.0
    for r in state.incomplete_rows:
        r = int(r)
        pool = _pool_for(state, r)
        query = state.values[r].copy()
        query[state.missing_cols[r]] = np.nan
        nbrs = nearest_neighbors(
            query, state.values[pool], pool, state.metric, state.k
        )
        neighbors_out[r] = nbrs
        idx = np.array([i for i, _ in nbrs], dtype=int)
        dist = np.array([d for _, d in nbrs], dtype=float)
        for j in state.missing_cols[r]:
            j = int(j)
            nb_vals = state.values[idx, j]
            if cat[j]:
                est = float(
                    impute_categorical_cell(
                        dist, nb_vals, len(feats[j].levels), state.plan.weighted_cells
                    )
                )
                change = 0.0 if est == state.values[r, j] else 1.0
            else:
                est = impute_numeric_cell(
                    dist, nb_vals, state.plan.weighted_cells, state.config.eq11_literal
                )
                change = abs(est - state.values[r, j])
            state.values[r, j] = est
            max_change = max(max_change, change)
    return SweepResult(max_change, neighbors_out)


def _compose_result(state: RunState, trace: list[float], converged: bool) -> ImputationResult:
    dataset = state.dataset
    cat = dataset.schema.categorical_mask
    out = dataset.values.copy()
    for r, cols in state.missing_cols.items():
        for j in cols:
            v = state.values[r, j]
            if not cat[j]:
                span = state.ranges.maxs[j] - state.ranges.mins[j]
                v = state.ranges.maxs[j] if span == 0.0 else state.ranges.maxs[j] - v * span
            out[r, j] = v
    completed = Dataset(dataset.schema, out, np.ones_like(dataset.mask), dataset.labels)
    return ImputationResult(
        completed=completed,
        trace=tuple(trace),
        iterations=len(trace),
        chosen_k=state.k,
        weights_used=state.weights,
        converged=converged,
        used_pool_fallback=state.used_pool_fallback,
        ranges=state.ranges,
    )


def run_plan(
    dataset: Dataset,
    config: ImputeConfig,
    plan: MethodPlan,
    weights_override: np.ndarray | None = None,
) -> ImputationResult:
    """Run an explicit method plan (the advanced entry point)."""
    state = prepare(dataset, config, plan, weights_override)
    trace: list[float] = []
    converged = True
    if plan.iterative and len(state.incomplete_rows):
        converged = False
        for _ in range(config.max_iter):
            result = sweep(state)
            trace.append(result.max_change)
            if result.max_change < config.epsilon:
                converged = True
                break
    return _compose_result(state, trace, converged)


def run_impute(dataset: Dataset, config: ImputeConfig) -> ImputationResult:
    """Impute every missing cell of a dataset with the configured method."""
    return run_plan(dataset, config, PLANS[config.method])


def impute_test(
    result: ImputationResult, test: Dataset, config: ImputeConfig
) -> Dataset:
    """Impute an unlabeled test set in one pass against the completed
    training matrix.

    Neighbors are ranked over all training rows (the class is unknown at
    test time) with the training feature weights; there is no iteration.
    """
    train = result.completed
    # the test set carries no class column; only the features must agree
    if test.schema.features != train.schema.features:
        raise SchemaMismatchError("test features differ from training features")
    if test.n == 0:
        return test
    plan = PLANS[config.method]
    cat = test.schema.categorical_mask
    feats = test.schema.features
    ranges = result.ranges

    def norm(values):
        v = values.copy()
        for j in range(test.p):
            if cat[j]:
                continue
            span = ranges.maxs[j] - ranges.mins[j]
            obs = ~np.isnan(v[:, j])
            v[obs, j] = 0.0 if span == 0.0 else (ranges.maxs[j] - v[obs, j]) / span
        return v

    train_vals = norm(train.values)
    test_vals = norm(np.where(test.mask, test.values, np.nan))
    metric = _build_metric(plan, test.schema, config.rho, result.weights_used)
    k = result.chosen_k if result.chosen_k >= 1 else 1
    if train.n < k:
        raise InsufficientCandidatesError(f"{train.n} training rows for k={k}")
    pool = np.arange(train.n)
    out = test.values.copy()
    for r in range(test.n):
        gaps = np.nonzero(~test.mask[r])[0]
        if gaps.size == 0:
            continue
        nbrs = nearest_neighbors(test_vals[r], train_vals, pool, metric, k)
        idx = np.array([i for i, _ in nbrs], dtype=int)
        dist = np.array([d for _, d in nbrs], dtype=float)
        for j in gaps:
            j = int(j)
            nb_vals = train_vals[idx, j]
            if cat[j]:
                est = float(
                    impute_categorical_cell(dist, nb_vals, len(feats[j].levels), plan.weighted_cells)
                )
            else:
                est = impute_numeric_cell(dist, nb_vals, plan.weighted_cells, config.eq11_literal)
                span = ranges.maxs[j] - ranges.mins[j]
                est = ranges.maxs[j] if span == 0.0 else ranges.maxs[j] - est * span
            out[r, j] = est
    return Dataset(test.schema, out, np.ones_like(test.mask), test.labels)
