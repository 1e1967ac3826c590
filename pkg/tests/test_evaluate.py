import numpy as np
import pytest

from greyimpute.errors import (
    DataError,
    DegenerateClassError,
    EmptyMaskError,
    LengthMismatchError,
)
from greyimpute.evaluate import (
    BenchmarkSpec,
    benchmark,
    classification_accuracy,
    kfold_cv,
    nb_fit,
    nb_predict,
    no_imputation_cv,
    rmse,
)
from greyimpute.folds import stratified_fold_ids
from greyimpute.io import write_report

from conftest import build_dataset

NAN = float("nan")


def _truth_pair(truth_vals, imputed_vals, positions, **kw):
    truth = build_dataset(truth_vals, **kw)
    imputed = build_dataset(imputed_vals, **kw)
    return truth, imputed, np.asarray(positions, dtype=bool)


class TestRmse:
    def test_perfect_imputation(self):
        t, i, p = _truth_pair([[0.0], [1.0]], [[0.0], [1.0]], [[True], [False]])
        assert rmse(t, i, p) == 0.0

    def test_symmetric_errors(self):
        # unit-span column; imputed off by +0.1 and -0.1
        t, i, p = _truth_pair(
            [[0.0], [1.0], [0.5], [0.5]],
            [[0.0], [1.0], [0.6], [0.4]],
            [[False], [False], [True], [True]],
        )
        assert rmse(t, i, p) == pytest.approx(0.1)

    def test_categorical_zero_one(self):
        t, i, p = _truth_pair(
            [[0.0], [0.0], [1.0], [1.0]],
            [[0.0], [0.0], [1.0], [0.0]],
            [[True], [True], [True], [True]],
            categorical_levels={0: ("a", "b")},
        )
        assert rmse(t, i, p) == pytest.approx(0.5)

    def test_empty_mask_rejected(self):
        t, i, p = _truth_pair([[0.0], [1.0]], [[0.0], [1.0]], [[False], [False]])
        with pytest.raises(EmptyMaskError):
            rmse(t, i, p)

    def test_permutation_invariance(self, rng):
        vals = rng.random((10, 2))
        vals[0] = [0.0, 0.0]
        vals[1] = [1.0, 1.0]
        imp = vals + rng.normal(0, 0.01, vals.shape)
        imp[:2] = vals[:2]
        pos = np.zeros_like(vals, dtype=bool)
        pos[2:, :] = True
        t = build_dataset(vals)
        a = rmse(t, build_dataset(imp), pos)
        perm = rng.permutation(10)
        b = rmse(
            build_dataset(vals[perm]), build_dataset(imp[perm]), pos[perm]
        )
        assert a == pytest.approx(b)


class TestNaiveBayes:
    def test_separated_gaussians(self, rng):
        x = np.concatenate([rng.normal(-10, 1, 50), rng.normal(10, 1, 50)])[:, None]
        y = np.array([0] * 50 + [1] * 50)
        model = nb_fit(build_dataset(x, labels=y))
        assert nb_predict(model, np.array([[9.0]]))[0] == 1
        assert nb_predict(model, np.array([[-9.0]]))[0] == 0

    def test_chance_level_when_independent(self, rng):
        x = rng.normal(size=(500, 1))
        y = rng.integers(0, 2, size=500)
        ds = build_dataset(x, labels=y)
        acc = kfold_cv(ds, folds=5, seed=0)
        assert acc == pytest.approx(0.5, abs=0.1)

    def test_unseen_level_handled_by_smoothing(self):
        values = np.array([[0.0], [0.0], [1.0], [1.0]])
        y = np.array([0, 0, 1, 1])
        ds = build_dataset(values, categorical_levels={0: ("a", "b", "c")}, labels=y)
        model = nb_fit(ds)
        # level c never observed in training; smoothing keeps it finite
        pred = nb_predict(model, np.array([[2.0]]))
        assert pred[0] in (0, 1)

    def test_mixed_features(self, rng):
        cont = np.concatenate([rng.normal(-3, 1, 40), rng.normal(3, 1, 40)])
        cat = np.concatenate([np.zeros(40), np.ones(40)])
        values = np.column_stack([cont, cat])
        y = np.array([0] * 40 + [1] * 40)
        ds = build_dataset(values, categorical_levels={1: ("u", "v")}, labels=y)
        model = nb_fit(ds)
        assert nb_predict(model, np.array([[2.5, 1.0]]))[0] == 1

    def test_degenerate_class_rejected(self):
        ds = build_dataset([[1.0], [2.0], [3.0]], labels=[0, 0, 1])
        with pytest.raises(DegenerateClassError):
            nb_fit(ds)

    def test_log_space_stability_at_extremes(self, rng):
        x = np.array([[1e6], [-1e6]] * 5)
        y = np.array([0, 1] * 5)
        model = nb_fit(build_dataset(x, labels=y))
        pred = nb_predict(model, np.array([[1e6], [-1e6]]))
        assert pred.tolist() == [0, 1]


class TestClassificationAccuracy:
    def test_identical(self):
        assert classification_accuracy([1, 2, 3], [1, 2, 3]) == 1.0

    def test_disjoint(self):
        assert classification_accuracy([1, 1], [0, 0]) == 0.0

    def test_three_of_four(self):
        assert classification_accuracy([1, 1, 0, 0], [1, 1, 0, 1]) == 0.75

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            classification_accuracy([1], [1, 2])


class TestKfold:
    def test_separable_data(self, rng):
        x = np.vstack([rng.normal(-5, 0.5, (30, 2)), rng.normal(5, 0.5, (30, 2))])
        y = np.array([0] * 30 + [1] * 30)
        assert kfold_cv(build_dataset(x, labels=y), folds=5, seed=1) == 1.0

    def test_fold_assignment_deterministic(self):
        labels = np.array([0, 1] * 20)
        a = stratified_fold_ids(labels, 5, seed=7)
        b = stratified_fold_ids(labels, 5, seed=7)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, stratified_fold_ids(labels, 5, seed=8))

    def test_folds_are_stratified(self):
        labels = np.array([0] * 20 + [1] * 20)
        ids = stratified_fold_ids(labels, 4, seed=3)
        for f in range(4):
            fold_labels = labels[ids == f]
            assert np.bincount(fold_labels).tolist() == [5, 5]

    def test_fold_count_reduced_for_small_classes(self, rng):
        x = rng.normal(size=(12, 1))
        y = np.array([0] * 9 + [1] * 3)
        acc = kfold_cv(build_dataset(x, labels=y), folds=10, seed=0)
        assert 0.0 <= acc <= 1.0  # would raise without the reduction


class TestNoImputationBaseline:
    def test_complete_data_matches_plain_cv(self, rng):
        x = np.vstack([rng.normal(-4, 1, (30, 2)), rng.normal(4, 1, (30, 2))])
        y = np.array([0] * 30 + [1] * 30)
        ds = build_dataset(x, labels=y)
        assert no_imputation_cv(ds, 5, 3) == kfold_cv(ds, 5, 3)

    def test_runs_on_incomplete_data(self, rng):
        x = np.vstack([rng.normal(-4, 1, (30, 2)), rng.normal(4, 1, (30, 2))])
        x[rng.random((60, 2)) < 0.15] = NAN
        y = np.array([0] * 30 + [1] * 30)
        ds = build_dataset(x, labels=y)
        acc = no_imputation_cv(ds, 5, 3)
        assert 0.5 <= acc <= 1.0


class TestBenchmark:
    def _small_spec(self, **kw):
        defaults = dict(
            dataset="cubes",
            methods=("meanmode", "cgknn"),
            rates=(0.1,),
            seeds=(1, 2),
            mechanism="mcar",
            mcar_columns=("x1",),
            timing=False,
        )
        defaults.update(kw)
        return BenchmarkSpec(**defaults)

    def test_single_cell_single_row(self):
        spec = self._small_spec(methods=("meanmode",), seeds=(1,))
        rows = benchmark(spec)
        assert len(rows) == 1
        row = rows[0]
        assert row["method"] == "meanmode" and row["error"] is None
        assert row["rmse"] > 0

    def test_grid_shape_and_ordering(self):
        rows = benchmark(self._small_spec())
        assert len(rows) == 4
        assert [r["method"] for r in rows] == ["meanmode"] * 2 + ["cgknn"] * 2
        assert all(r["baseline_accuracy"] is not None for r in rows)

    def test_mean_mode_is_worst(self):
        rows = benchmark(self._small_spec())
        mm = np.mean([r["rmse"] for r in rows if r["method"] == "meanmode"])
        cg = np.mean([r["rmse"] for r in rows if r["method"] == "cgknn"])
        assert mm > cg

    def test_serial_and_parallel_reports_identical(self):
        spec = self._small_spec()
        serial = write_report(benchmark(spec, jobs=1))
        parallel = write_report(benchmark(spec, jobs=3))
        assert serial == parallel

    def test_mar_mechanism_on_mvn(self):
        spec = BenchmarkSpec(
            dataset="mvn", methods=("meanmode",), rates=(0.1,), seeds=(1,),
            mechanism="mar", timing=False,
        )
        rows = benchmark(spec)
        assert rows[0]["error"] is None and rows[0]["rmse"] > 0

    def test_file_dataset_source(self, rng):
        x = rng.normal(size=(40, 2))
        y = rng.integers(0, 2, 40)
        y[:2] = [0, 1]
        ds = build_dataset(x, labels=y)
        spec = BenchmarkSpec(
            dataset=ds, methods=("iknn",), rates=(0.2,), seeds=(5,),
            mcar_columns=("f0",), k=3, timing=False,
        )
        rows = benchmark(spec)
        assert rows[0]["error"] is None

    def test_bad_rate_rejected(self):
        with pytest.raises(DataError):
            self._small_spec(rates=(1.5,))

    def test_failures_recorded_not_raised(self):
        # k larger than any candidate pool forces a per-cell failure
        spec = self._small_spec(methods=("cgknn",), seeds=(1,), k=400)
        rows = benchmark(spec)
        assert rows[0]["error"] is not None
        assert rows[0]["rmse"] is None
