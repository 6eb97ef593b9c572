import json

import numpy as np
import pytest
from sklearn.gaussian_process import GaussianProcessRegressor
from sklearn.gaussian_process.kernels import ConstantKernel, DotProduct, WhiteKernel

from aivat.estimators import AffineEstimate, EstimatorConfig, decompose_many, evaluate_affine
from aivat.exceptions import (
    FeatureDimensionError,
    HyperplaneDegeneracyError,
    InsufficientDataError,
    InvalidArgumentError,
    InvalidDataError,
    MissingHeuristicValueError,
)
from aivat.games import sample_playout
from aivat.heuristics import (
    BayesianLinearModel,
    BayesianLinearRegressor,
    FeatureMap,
    LinearHeuristic,
    TabularHeuristic,
    VarianceMinimizingLinear,
    closed_form_theta,
    content_hash,
    dumps_record,
    fit_bayesian_linear,
    heuristic_from_record,
    heuristic_to_record,
    history_value_pairs,
    linear_variance_cost,
    psi_features,
    psi_matrix,
)


def kernel_oracle(X, y, Xs, a, s2):
    """Predictive mean/variance of GP regression with k = a<x,x'> + s2 delta."""
    K = a * X @ X.T + s2 * np.eye(len(X))
    ks = a * X @ Xs.T
    mean = ks.T @ np.linalg.solve(K, y)
    var = a * np.sum(Xs * Xs, axis=1) - np.sum(ks * np.linalg.solve(K, ks), axis=0)
    return mean, var


class TestFeatures:
    def test_psi_empty(self):
        fm = FeatureMap(2, lambda h: (1.0, 1.0))
        assert np.array_equal(psi_features(AffineEstimate(0.0, {}), fm), np.zeros(2))

    def test_psi_single(self):
        fm = FeatureMap.from_table({"h": (2.0, 0.0)}, 2)
        np.testing.assert_array_equal(psi_features(AffineEstimate(0.0, {"h": -0.5}), fm), [-1.0, 0.0])

    def test_dimension_mismatch(self):
        fm = FeatureMap(3, lambda h: (1.0, 2.0))
        with pytest.raises(FeatureDimensionError):
            fm("h")

    def test_non_finite(self):
        with pytest.raises(InvalidDataError):
            FeatureMap(1, lambda h: (np.nan,))("h")

    def test_missing_table_entry(self):
        with pytest.raises(MissingHeuristicValueError):
            FeatureMap.from_table({}, 1)("h")

    def test_linear_heuristic_is_psi_dot_theta(self, leduc, leduc_uniform):
        rng = np.random.default_rng(0)
        Z = [sample_playout(leduc, leduc_uniform, rng) for _ in range(25)]
        ests = decompose_many(leduc, Z, leduc_uniform, EstimatorConfig.mivat(0))
        fm = FeatureMap.from_game(leduc, 0)
        theta = rng.normal(size=fm.dim)
        b, Psi = psi_matrix(ests, fm)
        heur = LinearHeuristic(theta, fm)
        got = [evaluate_affine(e, heur) for e in ests]
        np.testing.assert_allclose(got, b + Psi @ theta, atol=1e-9)


class TestClosedForm:
    def test_one_dimensional_example(self):
        theta = closed_form_theta([(1.0, [1.0]), (3.0, [2.0]), (5.0, [3.0])])
        assert theta == pytest.approx([-2.0], abs=1e-12)
        cost, _ = linear_variance_cost(theta, [(1.0, [1.0]), (3.0, [2.0]), (5.0, [3.0])])
        assert cost == pytest.approx(0.0, abs=1e-20)

    def test_constant_coordinate_is_degenerate(self):
        rng = np.random.default_rng(0)
        Psi = np.column_stack([np.ones(50), rng.normal(size=(50, 2))])
        with pytest.raises(HyperplaneDegeneracyError):
            closed_form_theta((rng.normal(size=50), Psi))

    def test_perturbation_restores_solvability(self):
        rng = np.random.default_rng(1)
        normal = rng.normal(size=3)
        Psi = rng.normal(size=(40, 3))
        Psi -= np.outer(Psi @ normal / (normal @ normal), normal)  # project onto normal . psi = 0
        b = rng.normal(size=40)
        with pytest.raises(HyperplaneDegeneracyError):
            closed_form_theta((b, Psi))
        theta = closed_form_theta((b, Psi + 1e-3 * rng.normal(size=Psi.shape)))
        assert np.all(np.isfinite(theta))

    def test_is_minimum(self):
        rng = np.random.default_rng(2)
        Psi, b = rng.normal(size=(60, 4)), rng.normal(size=60)
        theta = closed_form_theta((b, Psi))
        cost, grad = linear_variance_cost(theta, (b, Psi))
        assert np.max(np.abs(grad)) < 1e-9 * max(1.0, cost)
        for _ in range(20):
            assert linear_variance_cost(theta + 0.01 * rng.normal(size=4), (b, Psi))[0] > cost

    def test_matches_lstsq(self):
        rng = np.random.default_rng(3)
        Psi, b = rng.normal(size=(80, 5)), rng.normal(size=80)
        Xc = Psi - Psi.mean(axis=0)
        expect, *_ = np.linalg.lstsq(Xc, -(b - b.mean()), rcond=None)
        np.testing.assert_allclose(closed_form_theta((b, Psi)), expect, atol=1e-10)

    def test_sklearn_estimator(self):
        rng = np.random.default_rng(4)
        Psi, b = rng.normal(size=(30, 2)), rng.normal(size=30)
        model = VarianceMinimizingLinear().fit(Psi, b)
        np.testing.assert_allclose(model.coef_, closed_form_theta((b, Psi)))
        v = model.estimates(Psi, b)
        assert np.var(v) <= np.var(b)

    def test_negative_ridge(self):
        with pytest.raises(InvalidArgumentError):
            closed_form_theta([(1.0, [1.0]), (2.0, [2.0])], ridge=-1)

    def test_empty(self):
        with pytest.raises(InsufficientDataError):
            closed_form_theta([])


class TestBayesianLinear:
    @pytest.fixture
    def data(self):
        rng = np.random.default_rng(5)
        return rng.normal(size=(5, 3)), rng.normal(size=5), rng.normal(size=(7, 3))

    def test_kernel_equivalence(self, data):
        X, y, Xs = data
        for a, s2 in [(1.0, 1.0), (2.5, 0.1), (0.3, 4.0)]:
            model = fit_bayesian_linear((X, y), a, s2)
            mean, std = model.predict(Xs, return_std=True)
            kmean, kvar = kernel_oracle(X, y, Xs, a, s2)
            np.testing.assert_allclose(mean, kmean, atol=1e-8)
            np.testing.assert_allclose(std ** 2, kvar, atol=1e-8)

    def test_matches_sklearn_gpr(self, data):
        X, y, Xs = data
        a, s2 = 1.7, 0.4
        kernel = ConstantKernel(a, "fixed") * DotProduct(0.0, "fixed") + WhiteKernel(s2, "fixed")
        gpr = GaussianProcessRegressor(kernel, optimizer=None, alpha=0.0).fit(X, y)
        gmean, gstd = gpr.predict(Xs, return_std=True)
        model = fit_bayesian_linear((X, y), a, s2, include_noise=True)
        mean, std = model.predict(Xs, return_std=True)
        np.testing.assert_allclose(mean, gmean, atol=1e-8)
        np.testing.assert_allclose(std, gstd, atol=1e-8)

    def test_tight_prior(self):
        model = fit_bayesian_linear([([1.0], 0.0)], prior_scale=1e-6, noise_variance=1.0)
        assert abs(model.posterior_mean[0]) < 1e-9

    def test_errors(self):
        with pytest.raises(InsufficientDataError):
            fit_bayesian_linear((np.zeros((0, 2)), np.zeros(0)))
        with pytest.raises(InvalidDataError):
            fit_bayesian_linear([([np.inf], 1.0)])
        with pytest.raises(InvalidArgumentError):
            fit_bayesian_linear([([1.0], 1.0)], prior_scale=0.0)

    def test_variance_grows_away_from_data(self, data):
        X, y, _ = data
        model = fit_bayesian_linear((X, y), 1.0, 1.0)
        _, near = model.predict(X.mean(axis=0), return_std=True)
        _, far = model.predict(100 * np.ones(3), return_std=True)
        assert far[0] > near[0]

    def test_posterior_shrinks_prior(self, data):
        X, y, _ = data
        a = 2.0
        model = fit_bayesian_linear((X, y), a, 0.5)
        assert np.linalg.eigvalsh(a * np.eye(3) - model.posterior_covariance).min() >= -1e-12

    def test_joint_prediction(self, data):
        X, y, _ = data
        table = {"a": X[0], "b": X[1]}
        fm = FeatureMap.from_table(table, 3)
        model = fit_bayesian_linear((X, y), 1.0, 1.0, features=fm)
        mean, cov = model.joint_prediction(["a"])
        _, std = model.predict(X[:1], return_std=True)
        assert cov.shape == (1, 1) and cov[0, 0] == pytest.approx(std[0] ** 2)
        _, cov = model.joint_prediction(["b", "b"])
        assert np.allclose(cov[0], cov[1]) and np.linalg.matrix_rank(cov, tol=1e-10) <= 1
        _, cov = model.joint_prediction(["a", "b", "a"])
        assert np.allclose(cov, cov.T) and np.linalg.eigvalsh(cov).min() > -1e-12

    def test_estimate_variance_is_quadratic_form(self, data):
        X, y, _ = data
        fm = FeatureMap.from_table({"a": X[0], "b": X[1], "c": X[2]}, 3)
        model = fit_bayesian_linear((X, y), 1.0, 1.0, features=fm)
        est = AffineEstimate(0.0, {"a": 0.5, "b": -1.0, "c": 0.5})
        _, cov = model.joint_prediction(["a", "b", "c"])
        c = np.array([0.5, -1.0, 0.5])
        assert model.estimate_variance(est) == pytest.approx(c @ cov @ c, rel=1e-10)

    def test_regressor_wrapper(self, data):
        X, y, Xs = data
        reg = BayesianLinearRegressor(prior_scale=1.5, noise_variance=0.2).fit(X, y)
        direct = fit_bayesian_linear((X, y), 1.5, 0.2)
        np.testing.assert_allclose(reg.predict(Xs), direct.predict(Xs))
        assert reg.get_params()["prior_scale"] == 1.5


class TestRecords:
    def test_tabular_round_trip(self):
        heur = TabularHeuristic({(0, 1): 2.5, (1, 0, 1): -1.0}, default=0.25)
        back = heuristic_from_record(json.loads(dumps_record(heuristic_to_record(heur))))
        assert back.theta == heur.theta and back.default == heur.default

    def test_bayes_round_trip(self, kuhn):
        fm = FeatureMap.from_game(kuhn, 0)
        Z = [(0, 1, 0, 0), (2, 1, 1, 1), (1, 0, 0, 1, 1)]
        hs, y = history_value_pairs(kuhn, Z, 0)
        model = fit_bayesian_linear((fm.matrix(hs), y), 2.0, 1.0, features=fm)
        back = heuristic_from_record(heuristic_to_record(model), fm)
        assert isinstance(back, BayesianLinearModel)
        np.testing.assert_allclose(back.values(hs), model.values(hs))

    def test_linear_needs_features(self, kuhn):
        rec = LinearHeuristic(np.zeros(5), FeatureMap.from_game(kuhn, 0)).to_record()
        with pytest.raises(InvalidArgumentError):
            heuristic_from_record(rec)

    def test_hash_is_stable(self):
        text = dumps_record({"b": 1, "a": [1, 2]})
        assert text == '{"a":[1,2],"b":1}'
        assert content_hash(text) == content_hash(text.encode())

    def test_unknown_kind(self):
        with pytest.raises(InvalidArgumentError):
            heuristic_from_record({"kind": "oracle"})


def test_history_value_pairs(kuhn):
    hs, y = history_value_pairs(kuhn, [(0, 1, 1, 1)], 0)
    assert hs == [(0,), (0, 1), (0, 1, 1), (0, 1, 1, 1)]
    assert np.all(y == -2.0)
