import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_knn
from obstune.experiments import ExperimentLog, ExperimentRecord, run_bootstrap
from obstune.mappers import (
    InsufficientData,
    KnnModel,
    LinearModel,
    fit_param_mapper,
    fit_quality_mapper,
    predict_param,
    predict_quality,
)
from obstune.objectives import canonical_objective
from obstune.space import HyperParamSpace, HyperParamVector, ParamSpec, normalize


def make_log(space, fn, count, seed):
    return run_bootstrap(space, fn, count, seed)


class TestQualityMapper:
    def test_constant_quality(self, unit_square):
        log = make_log(unit_square, lambda hp: 0.4, 20, 1)
        for k in (1, 3, 5):
            m = fit_quality_mapper(log, "knn", k)
            for q in ([0.1, 0.9], [0.5, 0.5], [1.0, 0.0]):
                assert predict_quality(m, HyperParamVector(q)) == pytest.approx(0.4, abs=1e-15)

    def test_affine_recovery(self, unit_line):
        log = make_log(unit_line, lambda hp: 0.2 + 0.5 * hp[0], 20, 3)
        m = fit_quality_mapper(log, "linear")
        assert predict_quality(m, HyperParamVector((0.6,))) == pytest.approx(0.5, abs=1e-9)
        assert m.model.coef[0] == pytest.approx(0.5, rel=1e-9)
        assert m.model.intercept == pytest.approx(0.2, rel=1e-9)

    def test_canonical_at_optimum(self, unit_square):
        log = make_log(unit_square, canonical_objective(unit_square), 500, 1)
        m = fit_quality_mapper(log, "knn", 5)
        got = predict_quality(m, HyperParamVector((0.3, 0.7)))
        # exhaustive-sort oracle, computed independently
        assert got == 0.9938897522403414
        rows = [normalize(unit_square, r.hp) for r in log]
        assert got == brute_force_knn(rows, [r.quality for r in log], [0.3, 0.7], 5)
        assert abs(got - 1.0) < 0.1

    def test_exact_training_point(self, unit_square):
        log = make_log(unit_square, canonical_objective(unit_square), 50, 4)
        m = fit_quality_mapper(log, "knn", 5)
        for rec in log.records[:10]:
            assert predict_quality(m, rec.hp) == rec.quality

    def test_held_out_affine_point(self, unit_square):
        log = make_log(unit_square, lambda hp: 0.1 + 0.3 * hp[0] + 0.4 * hp[1], 30, 9)
        m = fit_quality_mapper(log, "linear")
        assert predict_quality(m, HyperParamVector((0.25, 0.75))) == pytest.approx(0.1 + 0.075 + 0.3, abs=1e-9)

    def test_insufficient_data(self, unit_square):
        log = make_log(unit_square, lambda hp: 0.5, 4, 1)
        with pytest.raises(InsufficientData):
            fit_quality_mapper(log, "knn", 5)
        with pytest.raises(InsufficientData):
            fit_quality_mapper(make_log(unit_square, lambda hp: 0.5, 2, 1), "linear")

    def test_predictions_clamped(self, unit_line):
        log = make_log(unit_line, lambda hp: hp[0], 20, 2)
        m = fit_quality_mapper(log, "linear")
        # the fit is ~identity, so raw predictions outside [0, 1] must be clamped
        assert m.model.predict([3.0]) > 1.0
        assert predict_quality(m, HyperParamVector((1.0,))) <= 1.0
        assert m.predict([5.0]) == 1.0 and m.predict([-5.0]) == 0.0


class TestParamMapper:
    def test_monotone_1d(self, unit_line):
        log = make_log(unit_line, lambda hp: hp[0], 50, 5)
        m = fit_param_mapper(log, 0, "knn", 3)
        got = predict_param(m, [], 1.0)
        assert got == 0.9739839195997427  # oracle value
        assert abs(got - 1.0) <= 0.15

    def test_constant_target(self, unit_square):
        log = ExperimentLog(unit_square, seed=0)
        rng = np.random.default_rng(0)
        for _ in range(20):
            log.append(HyperParamVector((0.25, float(rng.uniform()))), float(rng.uniform()))
        m = fit_param_mapper(log, 0, "knn", 5)
        for other, q in ((0.1, 0.9), (0.7, 0.2), (0.5, 1.0)):
            assert predict_param(m, [other], q) == pytest.approx(0.25, abs=1e-15)

    def test_ridge_2d(self, unit_square):
        log = make_log(unit_square, lambda hp: 1 - abs(hp[0] - hp[1]), 100, 5)
        m = fit_param_mapper(log, 0, "knn", 5)
        got = predict_param(m, [0.5], 1.0)
        assert got == 0.5467962929934133  # oracle value
        assert abs(got - 0.5) <= 0.2

    def test_features_drop_own_coordinate(self):
        space = HyperParamSpace([ParamSpec(n, "continuous", 0, 10) for n in "abc"])
        log = make_log(space, lambda hp: 0.5, 10, 1)
        m = fit_param_mapper(log, 1, "knn", 3)
        assert m.features(HyperParamVector((1.0, 9.0, 5.0)), 0.8) == [0.1, 0.5, 0.8]

    def test_native_units_and_integer_rounding(self):
        space = HyperParamSpace([ParamSpec("k", "integer", 1, 4), ParamSpec("x", "continuous", 0, 1)])
        log = make_log(space, lambda hp: hp[1], 30, 2)
        m = fit_param_mapper(log, 0, "knn", 5)
        v = predict_param(m, [0.3], 0.9)
        assert v in (1.0, 2.0, 3.0, 4.0)

    def test_bad_index(self, unit_square):
        log = make_log(unit_square, lambda hp: 0.5, 10, 1)
        with pytest.raises(IndexError):
            fit_param_mapper(log, 2)


def test_refit_is_deterministic(unit_square):
    log = make_log(unit_square, canonical_objective(unit_square), 80, 3)
    a, b = fit_quality_mapper(log), fit_quality_mapper(log)
    queries = np.random.default_rng(1).uniform(size=(50, 2))
    assert [a.predict(q) for q in queries] == [b.predict(q) for q in queries]


def test_permutation_invariance_without_ties(unit_square):
    log = make_log(unit_square, canonical_objective(unit_square), 60, 3)
    perm = list(reversed(log.records))
    shuffled = ExperimentLog(unit_square, seed=0, records=[ExperimentRecord(i, r.hp, r.quality) for i, r in enumerate(perm)])
    a, b = fit_quality_mapper(log), fit_quality_mapper(shuffled)
    rng = np.random.default_rng(5)
    for q in rng.uniform(size=(50, 2)):
        # distinct random continuous points: exact distance ties have probability zero
        _, d = a.model.neighbours(q)
        assert len(set(d.tolist())) == len(d)
        assert a.predict(q) == pytest.approx(b.predict(q), rel=1e-14)


class TestKnnModel:
    def test_k_larger_than_rows(self):
        with pytest.raises(InsufficientData):
            KnnModel(np.zeros((3, 2)), np.zeros(3), k=4)

    def test_tie_goes_to_lowest_row(self):
        X = np.array([[1.0], [0.0], [1.0]])
        model = KnnModel(X, np.array([0.1, 0.2, 0.3]), k=1)
        assert model.predict([1.0]) == 0.1
        # equidistant neighbours from 0.5: rows 0 and 1 (d=0.5) before row 2
        idx, _ = KnnModel(X, np.array([0.1, 0.2, 0.3]), k=3).neighbours([0.5])
        assert idx.tolist() == [0, 1, 2]


@settings(max_examples=200, deadline=None)
@given(
    st.integers(1, 5),
    st.integers(1, 8),
    st.integers(0, 2**32 - 1),
)
def test_knn_matches_oracle(m, k, seed):
    rng = np.random.default_rng(seed)
    rows = int(rng.integers(k, 40))
    X = rng.uniform(size=(rows, m))
    y = rng.uniform(size=rows)
    q = rng.uniform(size=m)
    model = KnnModel(X, y, k)
    assert model.predict(q.tolist()) == brute_force_knn(X.tolist(), y.tolist(), q.tolist(), k)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_linear_recovers_affine(m, seed):
    rng = np.random.default_rng(seed)
    coef = rng.uniform(-1, 1, size=m)
    b = float(rng.uniform(-1, 1))
    X = rng.uniform(size=(4 * m + 10, m))
    y = X @ coef + b
    model = LinearModel(X, y)
    pred = np.array([model.predict(row) for row in X])
    assert np.max(np.abs(pred - y)) <= 1e-9 * max(1.0, np.max(np.abs(y)))
    np.testing.assert_allclose(model.coef, coef, rtol=0, atol=1e-8)


def test_linear_handles_rank_deficiency():
    X = np.column_stack([np.linspace(0, 1, 10), np.linspace(0, 1, 10)])
    model = LinearModel(X, 0.3 + 0.4 * X[:, 0])
    assert model.predict([0.5, 0.5]) == pytest.approx(0.5, abs=1e-6)
