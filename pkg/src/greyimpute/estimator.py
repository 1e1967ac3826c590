"""Scikit-learn style estimator wrapper around the imputation engine.

:class:`GreyKNNImputer` follows the fit/transform contract and implements
``get_params``/``set_params`` from its constructor signature, so it
composes with pipelines, grid search and ``clone`` without requiring
scikit-learn itself.

Input is a plain ``(n, p)`` float array with NaN marking missing cells.
Columns listed in ``categorical_features`` are treated as categorical with
their observed values as level codes (non-negative integers); everything
else is continuous. ``fit`` runs the full iterative imputation on the
training matrix; ``transform`` imputes new rows in a single pass against
the completed training data, and ``fit_transform`` returns the completed
training matrix itself.
"""

from __future__ import annotations

import inspect

import numpy as np

from .dataset import Dataset, Feature, Schema
from .engine import ImputeConfig, Method, impute_test, run_impute
from .errors import DataError

__all__ = ["GreyKNNImputer", "check_matrix"]


def check_matrix(X, n_features: int | None = None) -> np.ndarray:
    """Validate a 2-D float matrix: finite or NaN everywhere, optional
    fixed width."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DataError(f"expected a 2-D matrix, got shape {X.shape}")
    if np.isinf(X).any():
        raise DataError("matrix contains infinities")
    if n_features is not None and X.shape[1] != n_features:
        raise DataError(f"expected {n_features} features, got {X.shape[1]}")
    return X


class GreyKNNImputer:
    """Impute missing cells of a mixed-type matrix by iterative kNN.

    Parameters
    ----------
    method : str, default="cgknn"
        One of "meanmode", "iknn", "miknn", "gknn", "fwgknn", "cgknn".
    n_neighbors : int or None, default=None
        Neighborhood size; None selects it from ``k_grid`` by stratified
        cross-validation (requires ``y`` at fit time).
    k_grid : tuple of int
        Candidate neighborhood sizes for the selection.
    rho : float, default=0.5
        Grey distinguishing coefficient.
    epsilon : float, default=1e-4
        Convergence tolerance on the largest per-iteration cell change.
    max_iter : int, default=50
        Iteration cap.
    categorical_features : tuple of int, default=()
        Column indices holding categorical level codes.
    random_state : int, default=0
        Seed for fold assignment.

    Attributes
    ----------
    result_ : ImputationResult
        Full diagnostics of the training run.
    feature_weights_ : ndarray or None
        Feature weights the metric used, when the method has any.
    n_iter_ : int
        Iterations until convergence (or the cap).
    """

    def __init__(
        self,
        method="cgknn",
        n_neighbors=None,
        k_grid=(1, 3, 5, 7, 9, 11, 13, 15),
        rho=0.5,
        epsilon=1e-4,
        max_iter=50,
        categorical_features=(),
        random_state=0,
    ):
        self.method = method
        self.n_neighbors = n_neighbors
        self.k_grid = k_grid
        self.rho = rho
        self.epsilon = epsilon
        self.max_iter = max_iter
        self.categorical_features = categorical_features
        self.random_state = random_state

    # -- sklearn-compatible parameter plumbing ---------------------------
    @classmethod
    def _param_names(cls):
        sig = inspect.signature(cls.__init__)
        return [name for name in sig.parameters if name != "self"]

    def get_params(self, deep=True):
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = set(self._param_names())
        for key, value in params.items():
            if key not in valid:
                raise ValueError(f"invalid parameter {key!r} for GreyKNNImputer")
            setattr(self, key, value)
        return self

    # -- fitting ----------------------------------------------------------
    def _schema_for(self, X, y) -> tuple[Schema, np.ndarray | None]:
        cat = set(int(j) for j in self.categorical_features)
        features = []
        for j in range(X.shape[1]):
            if j in cat:
                col = X[:, j]
                obs = col[~np.isnan(col)]
                if obs.size == 0:
                    raise DataError(f"categorical column {j} has no observed values")
                if (obs < 0).any() or (obs != np.floor(obs)).any():
                    raise DataError(
                        f"categorical column {j} must hold non-negative integer codes"
                    )
                levels = tuple(str(code) for code in range(int(obs.max()) + 1))
                features.append(Feature(f"f{j}", levels))
            else:
                features.append(Feature(f"f{j}"))
        labels = None
        class_levels: tuple[str, ...] = ()
        class_column = None
        if y is not None:
            y = np.asarray(y)
            if y.shape != (X.shape[0],):
                raise DataError("y length must match the number of rows")
            seen: dict = {}
            for v in y:
                seen.setdefault(v, len(seen))
            labels = np.array([seen[v] for v in y], dtype=int)
            class_levels = tuple(str(v) for v in seen)
            class_column = "target"
        return Schema(tuple(features), class_column, class_levels), labels

    def _config(self) -> ImputeConfig:
        return ImputeConfig(
            method=Method(self.method),
            k=self.n_neighbors,
            k_grid=tuple(self.k_grid),
            rho=self.rho,
            epsilon=self.epsilon,
            max_iter=self.max_iter,
            seed=self.random_state,
        )

    def fit(self, X, y=None):
        """Run the iterative imputation on the training matrix."""
        X = check_matrix(X)
        schema, labels = self._schema_for(X, y)
        dataset = Dataset(schema, X, ~np.isnan(X), labels)
        self.result_ = run_impute(dataset, self._config())
        self.schema_ = schema
        self.n_features_in_ = X.shape[1]
        self.feature_weights_ = self.result_.weights_used
        self.n_iter_ = self.result_.iterations
        return self

    def transform(self, X):
        """Impute rows in one pass against the completed training matrix."""
        if not hasattr(self, "result_"):
            raise DataError("GreyKNNImputer is not fitted yet; call fit first")
        X = check_matrix(X, self.n_features_in_)
        # the test rows carry no labels; only the features must line up
        bare = Schema(self.schema_.features, None, ())
        test = Dataset(bare, X, ~np.isnan(X), None)
        return impute_test(self.result_, test, self._config()).values.copy()

    def fit_transform(self, X, y=None):
        """Fit and return the completed training matrix."""
        return self.fit(X, y).result_.completed.values.copy()
