"""Metrics, a mixed-feature naive Bayes classifier, cross-validation and
the benchmark harness.

Imputation precision is scored as root mean square error over the
artificially masked cells, on the normalized [0, 1] scale so continuous
and categorical errors are commensurable (a wrong category counts 1).
Downstream effect is scored as stratified k-fold naive-Bayes
classification accuracy on the imputed data, against a no-imputation
baseline fit on complete cases only.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from ._rng import derive_seed
from .dataset import Dataset, RangeTable
from .engine import ImputeConfig, Method, run_impute
from .errors import (
    DataError,
    DegenerateClassError,
    EmptyMaskError,
    LengthMismatchError,
    SchemaMismatchError,
)
from .folds import effective_fold_count, stratified_fold_ids
from .synth import MarSpec, gen_cubes, gen_mvn_mar, inject_mar, inject_mcar

__all__ = [
    "rmse",
    "NaiveBayesModel",
    "nb_fit",
    "nb_predict",
    "classification_accuracy",
    "kfold_cv",
    "no_imputation_cv",
    "BenchmarkSpec",
    "benchmark",
]

VARIANCE_FLOOR = 1e-9


def rmse(truth: Dataset, imputed: Dataset, positions: np.ndarray) -> float:
    """Root mean square error over the masked positions, on the normalized
    scale of the truth dataset; categorical cells score 0/1."""
    if truth.schema != imputed.schema:
        raise SchemaMismatchError("truth and imputed schemas differ")
    positions = np.asarray(positions, dtype=bool)
    m = int(positions.sum())
    if m == 0:
        raise EmptyMaskError("no masked cells to score")
    cat = truth.schema.categorical_mask
    spans = RangeTable.from_dataset(truth).spans
    total = 0.0
    rows, cols = np.nonzero(positions)
    for i, j in zip(rows, cols):
        t, v = truth.values[i, j], imputed.values[i, j]
        if np.isnan(t) or np.isnan(v):
            raise DataError(f"cell ({i}, {j}) is missing on one side")
        if cat[j]:
            err = 0.0 if t == v else 1.0
        else:
            err = (t - v) / spans[j]
        total += err * err
    return float(np.sqrt(total / m))


@dataclass(frozen=True)
class NaiveBayesModel:
    """Gaussian likelihoods for continuous features, Laplace-smoothed level
    frequencies for categorical ones."""

    log_prior: np.ndarray  # (m,)
    cont_mean: np.ndarray  # (m, p), NaN at categorical columns
    cont_var: np.ndarray  # (m, p), floored
    cat_log_lik: dict  # j -> (m, K_j) log probabilities
    categorical: np.ndarray
    n_classes: int


def nb_fit(dataset: Dataset) -> NaiveBayesModel:
    """Fit on a complete labeled dataset; every class needs >= 2 rows."""
    if dataset.labels is None:
        raise DataError("naive Bayes needs class labels")
    if not dataset.mask.all():
        raise DataError("naive Bayes training data must be complete")
    m = len(dataset.schema.class_levels)
    counts = np.bincount(dataset.labels, minlength=m)
    if (counts < 2).any():
        lacking = int(np.argmin(counts))
        raise DegenerateClassError(
            f"class {dataset.schema.class_levels[lacking]!r} has {counts[lacking]} row(s)"
        )
    cat = dataset.schema.categorical_mask
    p = dataset.p
    log_prior = np.log(counts / counts.sum())
    mean = np.full((m, p), np.nan)
    var = np.full((m, p), np.nan)
    cat_log_lik: dict[int, np.ndarray] = {}
    for y in range(m):
        rows = dataset.values[dataset.labels == y]
        for j in range(p):
            if cat[j]:
                continue
            mean[y, j] = rows[:, j].mean()
            var[y, j] = max(rows[:, j].var(), VARIANCE_FLOOR)
    for j in range(p):
        if not cat[j]:
            continue
        k = len(dataset.schema.features[j].levels)
        table = np.zeros((m, k))
        np.add.at(table, (dataset.labels, dataset.values[:, j].astype(int)), 1.0)
        cat_log_lik[j] = np.log((table + 1.0) / (table.sum(axis=1, keepdims=True) + k))
    return NaiveBayesModel(log_prior, mean, var, cat_log_lik, cat, m)


def _joint_log_likelihood(model: NaiveBayesModel, values: np.ndarray) -> np.ndarray:
    n = values.shape[0]
    scores = np.tile(model.log_prior, (n, 1))
    for j in range(values.shape[1]):
        col = values[:, j]
        if model.categorical[j]:
            scores += model.cat_log_lik[j][:, col.astype(int)].T
        else:
            mu = model.cont_mean[:, j]
            var = model.cont_var[:, j]
            scores += -0.5 * (np.log(2.0 * np.pi * var) + (col[:, None] - mu) ** 2 / var)
    return scores


def nb_predict(model: NaiveBayesModel, values: np.ndarray) -> np.ndarray:
    """Most probable class per row (ties to the lower class index). Rows
    must be complete. Accepts one row or a matrix."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    return np.argmax(_joint_log_likelihood(model, values), axis=1)


def classification_accuracy(predicted, truth) -> float:
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape:
        raise LengthMismatchError(
            f"length {predicted.shape} vs {truth.shape}"
        )
    if predicted.size == 0:
        raise DataError("empty label vectors")
    return float((predicted == truth).mean())


def kfold_cv(dataset: Dataset, folds: int = 10, seed: int = 0) -> float:
    """Mean held-out naive-Bayes accuracy over stratified folds."""
    if dataset.labels is None:
        raise DataError("cross-validation needs class labels")
    folds = effective_fold_count(dataset.labels, folds)
    fold_ids = stratified_fold_ids(dataset.labels, folds, seed)
    accs = []
    for f in range(folds):
        train = np.nonzero(fold_ids != f)[0]
        test = np.nonzero(fold_ids == f)[0]
        model = nb_fit(
            Dataset(
                dataset.schema,
                dataset.values[train],
                dataset.mask[train],
                dataset.labels[train],
            )
        )
        pred = nb_predict(model, dataset.values[test])
        accs.append(classification_accuracy(pred, dataset.labels[test]))
    return float(np.mean(accs))


def no_imputation_cv(dataset: Dataset, folds: int = 10, seed: int = 0) -> float:
    """Baseline accuracy without imputation: fit on the training fold's
    complete cases only; fill a test row's gaps with the training fold's
    observed column means/modes at predict time."""
    if dataset.labels is None:
        raise DataError("cross-validation needs class labels")
    cat = dataset.schema.categorical_mask
    folds = effective_fold_count(dataset.labels, folds)
    fold_ids = stratified_fold_ids(dataset.labels, folds, seed)
    accs = []
    for f in range(folds):
        train = np.nonzero(fold_ids != f)[0]
        test = np.nonzero(fold_ids == f)[0]
        complete = train[dataset.mask[train].all(axis=1)]
        model = nb_fit(
            Dataset(
                dataset.schema,
                dataset.values[complete],
                dataset.mask[complete],
                dataset.labels[complete],
            )
        )
        fill = np.empty(dataset.p)
        for j in range(dataset.p):
            obs = dataset.values[train, j][dataset.mask[train, j]]
            if obs.size == 0:
                raise DataError(f"column {j} unobserved in a training fold")
            if cat[j]:
                counts = np.bincount(
                    obs.astype(int), minlength=len(dataset.schema.features[j].levels)
                )
                fill[j] = float(np.argmax(counts))
            else:
                fill[j] = float(obs.mean())
        rows = dataset.values[test].copy()
        gaps = ~dataset.mask[test]
        rows[gaps] = np.broadcast_to(fill, rows.shape)[gaps]
        pred = nb_predict(model, rows)
        accs.append(classification_accuracy(pred, dataset.labels[test]))
    return float(np.mean(accs))


@dataclass(frozen=True)
class BenchmarkSpec:
    """A sweep over methods, missing rates and seeds on one data source.

    ``dataset`` is "cubes", "mvn" or an in-memory complete Dataset (file
    sources are loaded by the CLI before building the spec). The MCAR
    mechanism masks ``mcar_columns``; the MAR mechanism calibrates a
    logistic model on ``mar_predictors``/``mar_targets`` to each rate.
    """

    dataset: object
    methods: tuple[Method, ...]
    rates: tuple[float, ...]
    seeds: tuple[int, ...]
    mechanism: str = "mcar"
    mcar_columns: tuple = ("x1",)
    mar_targets: tuple[int, ...] | None = None
    mar_predictors: tuple[int, ...] | None = None
    k: int | None = None
    k_grid: tuple[int, ...] = (1, 3, 5, 7, 9, 11, 13, 15)
    rho: float = 0.5
    epsilon: float = 1e-4
    max_iter: int = 50
    folds: int = 10
    timing: bool = True

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(Method(m) for m in self.methods))
        if not self.seeds:
            raise DataError("at least one seed is required")
        if any(not (0.0 < r < 1.0) for r in self.rates):
            raise DataError("missing rates must lie in (0, 1)")
        if self.mechanism not in ("mcar", "mar"):
            raise DataError(f"unknown mechanism {self.mechanism!r}")


def _truth_for(spec: BenchmarkSpec, seed: int):
    if isinstance(spec.dataset, Dataset):
        return spec.dataset, None
    if spec.dataset == "cubes":
        return gen_cubes(seed), None
    if spec.dataset == "mvn":
        return gen_mvn_mar(seed)
    raise DataError(f"unknown dataset source {spec.dataset!r}")


def _inject(spec: BenchmarkSpec, truth: Dataset, default_mar, rate: float, seed: int):
    inj_seed = derive_seed(seed, int(rate * 1e6))
    if spec.mechanism == "mcar":
        return inject_mcar(truth, spec.mcar_columns, rate, inj_seed)
    if spec.mar_targets is not None:
        mar = MarSpec(
            targets=tuple(spec.mar_targets),
            predictors=tuple(spec.mar_predictors),
            coefficients=tuple((1.0,) * len(spec.mar_predictors) for _ in spec.mar_targets),
            target_rate=rate,
        )
    elif default_mar is not None:
        mar = replace(default_mar, target_rate=rate, intercepts=None)
    else:
        raise DataError("MAR mechanism needs targets/predictors")
    return inject_mar(truth, mar, inj_seed)


def _run_cell(spec, method, rate, seed, truth, injected, baseline):
    row = {
        "method": method.value,
        "missing_rate": float(rate),
        "seed": int(seed),
        "rmse": None,
        "classification_accuracy": None,
        "baseline_accuracy": baseline,
        "iterations": None,
        "chosen_k": None,
        "wall_time_ms": 0.0,
        "converged": None,
        "pool_fallback": None,
        "error": None,
    }
    config = ImputeConfig(
        method=method,
        k=spec.k,
        k_grid=spec.k_grid,
        rho=spec.rho,
        epsilon=spec.epsilon,
        max_iter=spec.max_iter,
        seed=seed,
        folds=spec.folds,
    )
    try:
        start = time.perf_counter()
        result = run_impute(injected, config)
        elapsed = (time.perf_counter() - start) * 1000.0
        positions = truth.mask & ~injected.mask
        row["rmse"] = rmse(truth, result.completed, positions)
        row["classification_accuracy"] = kfold_cv(
            result.completed, spec.folds, derive_seed(seed, 0xCA)
        )
        row["iterations"] = result.iterations
        row["chosen_k"] = result.chosen_k
        row["converged"] = result.converged
        row["pool_fallback"] = result.used_pool_fallback
        if spec.timing:
            row["wall_time_ms"] = elapsed
    except DataError as exc:
        row["error"] = str(exc)
    return row


def benchmark(spec: BenchmarkSpec, jobs: int = 1) -> list[dict]:
    """Run the full method x rate x seed sweep.

    Per cell: retain the truth, inject missingness, impute, score RMSE
    against the truth and accuracy by naive-Bayes CV. Failures are recorded
    on their row without aborting the sweep. Output order is canonical
    (method, rate, seed), so parallel runs serialize identically.
    """
    cells = []
    for seed in spec.seeds:
        truth, default_mar = _truth_for(spec, seed)
        for rate in spec.rates:
            injected = _inject(spec, truth, default_mar, rate, seed)
            baseline = no_imputation_cv(injected, spec.folds, derive_seed(seed, 0xBA))
            for method in spec.methods:
                cells.append((method, rate, seed, truth, injected, baseline))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(
                pool.map(lambda c: _run_cell(spec, *c), cells)
            )
    else:
        rows = [_run_cell(spec, *c) for c in cells]

    order = {m: i for i, m in enumerate(spec.methods)}
    rows.sort(key=lambda r: (order[Method(r["method"])], r["missing_rate"], r["seed"]))
    return rows
