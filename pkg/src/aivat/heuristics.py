"""Heuristic value functions v'(h).

Three families:

* :class:`TabularHeuristic`, one free value per history;
* :class:`LinearHeuristic`, ``phi(h) @ theta``, including the closed-form
  variance-minimizing ``theta`` over a training set of affine estimates;
* :class:`BayesianLinearModel`, conjugate Gaussian regression over
  features. Its predictive covariance feeds the variance of each estimate.

The Bayesian model is the weight-space form of a Gaussian process with
kernel ``prior_scale * <x, x'> + noise_variance * delta(x, x')``; fitting
costs O(d^3) instead of O(n^3).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .estimators import AffineEstimate
from .exceptions import (
    FeatureDimensionError,
    HyperplaneDegeneracyError,
    InsufficientDataError,
    InvalidArgumentError,
    InvalidDataError,
    MissingHeuristicValueError,
)
from .games.base import GameTree, History, history_id, parse_history_id

#: Condition number above which the centered second-moment matrix counts as singular.
MAX_CONDITION = 1e12


def _key_text(key: Hashable) -> str:
    return history_id(key) if isinstance(key, tuple) else str(key)


# --------------------------------------------------------------------------
# Feature maps


@dataclass(frozen=True)
class FeatureMap:
    """``phi: history -> R^dim``. ``name`` identifies the map in saved records."""

    dim: int
    fn: Callable[[Hashable], Sequence[float]]
    name: str = "custom"

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidArgumentError("feature dimension must be at least 1")

    def __call__(self, h: Hashable) -> np.ndarray:
        phi = np.asarray(self.fn(h), dtype=float).ravel()
        if phi.size != self.dim:
            raise FeatureDimensionError(f"feature map {self.name!r} returned {phi.size} values, expected {self.dim}")
        if not np.all(np.isfinite(phi)):
            raise InvalidDataError(f"non-finite features for history {_key_text(h)!r}")
        return phi

    def matrix(self, histories: Iterable[Hashable]) -> np.ndarray:
        rows = [self(h) for h in histories]
        return np.vstack(rows) if rows else np.zeros((0, self.dim))

    @classmethod
    def from_game(cls, game: GameTree, player: int) -> "FeatureMap":
        """The game's built-in features, from ``player``'s point of view."""
        dim = game.feature_dim
        return cls(dim, lambda h: game.features(tuple(h), player), f"{game.name}:{player}")

    @classmethod
    def from_table(cls, table: Mapping[Hashable, Sequence[float]], dim: int, name: str = "table") -> "FeatureMap":
        """Precomputed features. Unknown histories raise :class:`MissingHeuristicValueError`."""

        def lookup(h):
            try:
                return table[h]
            except KeyError:
                raise MissingHeuristicValueError(f"no features for history {_key_text(h)!r}") from None

        return cls(dim, lookup, name)


# --------------------------------------------------------------------------
# Tabular and linear heuristics


class TabularHeuristic:
    """``v'(h) = theta[h]``; histories absent from the table get ``default``."""

    kind = "tabular"

    def __init__(self, theta: Optional[Mapping[Hashable, float]] = None, default: float = 0.0):
        self.theta = dict(theta or {})
        self.default = float(default)
        values = np.fromiter(self.theta.values(), dtype=float, count=len(self.theta))
        if not (np.all(np.isfinite(values)) and math.isfinite(self.default)):
            raise InvalidDataError("tabular heuristic values must be finite")

    def value(self, h: Hashable) -> float:
        return self.theta.get(h, self.default)

    def values(self, keys: Sequence[Hashable]) -> np.ndarray:
        return np.array([self.theta.get(k, self.default) for k in keys], dtype=float)

    def to_record(self) -> dict:
        return {
            "kind": self.kind,
            "default": self.default,
            "theta": sorted([_key_text(k), v] for k, v in self.theta.items()),
        }

    @classmethod
    def from_record(cls, record: dict, game_histories: bool = True) -> "TabularHeuristic":
        key = parse_history_id if game_histories else str
        return cls({key(k): float(v) for k, v in record["theta"]}, record.get("default", 0.0))


class LinearHeuristic:
    """``v'(h) = phi(h) @ theta``."""

    kind = "linear"

    def __init__(self, theta, features: FeatureMap):
        self.theta = np.asarray(theta, dtype=float).ravel()
        if self.theta.size != features.dim:
            raise FeatureDimensionError(f"theta has {self.theta.size} entries, features have {features.dim}")
        self.features = features

    def value(self, h: Hashable) -> float:
        return float(self.features(h) @ self.theta)

    def values(self, keys: Sequence[Hashable]) -> np.ndarray:
        return self.features.matrix(keys) @ self.theta if len(keys) else np.zeros(0)

    def to_record(self) -> dict:
        return {"kind": self.kind, "features": self.features.name, "dim": self.features.dim,
                "theta": self.theta.tolist()}


def psi_features(est: AffineEstimate, features: FeatureMap) -> np.ndarray:
    """``psi = sum_h c_h phi(h)``, so that a linear heuristic gives ``b + psi @ theta``."""
    psi = np.zeros(features.dim)
    for h, c in est.coeffs.items():
        psi += c * features(h)
    return psi


def psi_matrix(estimates: Sequence[AffineEstimate], features: FeatureMap) -> Tuple[np.ndarray, np.ndarray]:
    """Stack ``(b, Psi)`` for a list of estimates."""
    b = np.array([est.b for est in estimates], dtype=float)
    Psi = np.vstack([psi_features(est, features) for est in estimates]) if estimates else np.zeros((0, features.dim))
    return b, Psi


def _as_b_psi(dataset) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(dataset, tuple) and len(dataset) == 2 and np.ndim(dataset[1]) == 2:
        b, Psi = dataset
    else:
        pairs = list(dataset)
        if not pairs:
            raise InsufficientDataError("empty dataset")
        b = [p[0] for p in pairs]
        Psi = [np.ravel(p[1]) for p in pairs]
    b = np.asarray(b, dtype=float).ravel()
    Psi = np.atleast_2d(np.asarray(Psi, dtype=float))
    if Psi.shape[0] != b.size:
        raise FeatureDimensionError("b and psi disagree on the number of trials")
    if not (np.all(np.isfinite(b)) and np.all(np.isfinite(Psi))):
        raise InvalidDataError("dataset contains non-finite values")
    return b, Psi


def centered_moments(dataset) -> Tuple[np.ndarray, np.ndarray]:
    """``X = mean(psi psi^T) - psi_bar psi_bar^T`` and ``y = b_bar psi_bar - mean(b psi)``."""
    b, Psi = _as_b_psi(dataset)
    T = b.size
    psi_bar = Psi.mean(axis=0)
    X = Psi.T @ Psi / T - np.outer(psi_bar, psi_bar)
    y = b.mean() * psi_bar - Psi.T @ b / T
    return X, y


def linear_variance_cost(theta, dataset) -> Tuple[float, np.ndarray]:
    """Sum of squared deviations of ``b + Psi theta`` from their mean, and its gradient."""
    b, Psi = _as_b_psi(dataset)
    theta = np.asarray(theta, dtype=float)
    v = b + Psi @ theta
    r = v - v.mean()
    return float(r @ r), 2.0 * (Psi.T @ r)


def closed_form_theta(dataset, ridge: float = 0.0) -> np.ndarray:
    """Variance-minimizing linear parameters ``theta* = X^-1 y``.

    ``dataset`` is a list of ``(b, psi)`` pairs or a ``(b, Psi)`` tuple.
    ``X`` is singular exactly when every ``psi_t`` lies on one hyperplane
    (a constant feature coordinate is the common case), and then no unique
    minimizer exists. ``ridge`` adds ``ridge * I`` to ``X``; it is an
    extension and defaults to off.
    """
    if ridge < 0:
        raise InvalidArgumentError("ridge must be non-negative")
    X, y = centered_moments(dataset)
    if ridge:
        X = X + ridge * np.eye(X.shape[0])
    cond = np.linalg.cond(X)
    if not cond <= MAX_CONDITION:
        raise HyperplaneDegeneracyError(
            f"centered second-moment matrix is singular (condition number {cond:.3g}); "
            "the psi vectors lie on a common hyperplane, so the minimizer is not unique"
        )
    return np.linalg.solve(X, y)


class VarianceMinimizingLinear(RegressorMixin, BaseEstimator):
    """Linear heuristic trained to minimize the sample variance of its own estimates.

    ``fit(Psi, b)`` solves the normal equations in closed form; ``predict``
    returns the correction ``Psi @ theta`` and :meth:`estimates` the full
    ``b + Psi @ theta``. It has no regularization, so it overfits readily.
    """

    def __init__(self, ridge=0.0):
        self.ridge = ridge

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.coef_ = closed_form_theta((y, X), self.ridge)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return check_array(X) @ self.coef_

    def estimates(self, X, b):
        return np.asarray(b, dtype=float) + self.predict(X)

    def heuristic(self, features: FeatureMap) -> LinearHeuristic:
        check_is_fitted(self, "coef_")
        return LinearHeuristic(self.coef_, features)


# --------------------------------------------------------------------------
# Bayesian linear regression


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise InvalidDataError("non-finite training data")


def _posterior(Phi: np.ndarray, y: np.ndarray, prior_scale: float, noise_variance: float):
    d = Phi.shape[1]
    precision = np.eye(d) / prior_scale + Phi.T @ Phi / noise_variance
    factor = linalg.cho_factor(precision, lower=True)
    cov = linalg.cho_solve(factor, np.eye(d))
    cov = 0.5 * (cov + cov.T)
    mean = cov @ (Phi.T @ y) / noise_variance
    return mean, cov


@dataclass
class BayesianLinearModel:
    """Gaussian posterior ``N(posterior_mean, posterior_covariance)`` over weights.

    Queries return the latent function by default; ``include_noise`` adds
    ``noise_variance`` to predictive variances (the diagonal of joint
    covariances).
    """

    posterior_mean: np.ndarray
    posterior_covariance: np.ndarray
    noise_variance: float
    features: Optional[FeatureMap] = None
    include_noise: bool = False
    prior_scale: Optional[float] = None
    kind: str = field(default="bayes-linear", init=False)

    def __post_init__(self):
        self.posterior_mean = np.asarray(self.posterior_mean, dtype=float).ravel()
        self.posterior_covariance = np.atleast_2d(np.asarray(self.posterior_covariance, dtype=float))
        d = self.posterior_mean.size
        if self.posterior_covariance.shape != (d, d):
            raise FeatureDimensionError("posterior mean and covariance disagree on dimension")
        if self.features is not None and self.features.dim != d:
            raise FeatureDimensionError("feature map dimension differs from the model's")
        if not self.noise_variance >= 0:
            raise InvalidArgumentError("noise_variance must be non-negative")

    @property
    def dim(self) -> int:
        return self.posterior_mean.size

    def predict(self, Phi, return_std: bool = False):
        Phi = np.atleast_2d(np.asarray(Phi, dtype=float))
        mean = Phi @ self.posterior_mean
        if not return_std:
            return mean
        var = np.einsum("ij,jk,ik->i", Phi, self.posterior_covariance, Phi)
        if self.include_noise:
            var = var + self.noise_variance
        return mean, np.sqrt(np.maximum(var, 0.0))

    def predict_joint(self, Phi) -> Tuple[np.ndarray, np.ndarray]:
        Phi = np.atleast_2d(np.asarray(Phi, dtype=float))
        mean = Phi @ self.posterior_mean
        cov = Phi @ self.posterior_covariance @ Phi.T
        cov = 0.5 * (cov + cov.T)
        if self.include_noise:
            cov = cov + self.noise_variance * np.eye(len(mean))
        return mean, cov

    def _features(self, features):
        features = features or self.features
        if features is None:
            raise InvalidArgumentError("model has no feature map")
        return features

    def value(self, h: Hashable) -> float:
        return float(self._features(None)(h) @ self.posterior_mean)

    def values(self, keys: Sequence[Hashable]) -> np.ndarray:
        if not len(keys):
            return np.zeros(0)
        return self._features(None).matrix(keys) @ self.posterior_mean

    def joint_prediction(self, histories: Sequence[Hashable], features: Optional[FeatureMap] = None):
        """Predictive means and covariance ``Sigma[h1, h2] = phi(h1) S phi(h2)`` over ``histories``."""
        features = self._features(features)
        return self.predict_joint(features.matrix(histories))

    def estimate_variance(self, est: AffineEstimate, features: Optional[FeatureMap] = None) -> float:
        """Variance ``c^T Sigma c`` of an affine estimate under this model."""
        keys = list(est.coeffs)
        if not keys:
            return 0.0
        psi = psi_features(est, self._features(features))
        var = float(psi @ self.posterior_covariance @ psi)
        if self.include_noise:
            c = est.coefficient_vector(keys)
            var += self.noise_variance * float(c @ c)
        return max(var, 0.0)

    def to_record(self) -> dict:
        return {
            "kind": self.kind,
            "features": self.features.name if self.features is not None else None,
            "dim": self.dim,
            "mean": self.posterior_mean.tolist(),
            "covariance": self.posterior_covariance.tolist(),
            "noise_variance": self.noise_variance,
            "include_noise": self.include_noise,
            "prior_scale": self.prior_scale,
        }


def fit_bayesian_linear(data, prior_scale: float = 1.0, noise_variance: float = 1.0,
                        features: Optional[FeatureMap] = None,
                        include_noise: bool = False) -> BayesianLinearModel:
    """Conjugate posterior for ``y = phi @ w + noise``, ``w ~ N(0, prior_scale I)``.

    ``data`` is a list of ``(phi, target)`` pairs or a ``(Phi, y)`` tuple.
    """
    if isinstance(data, tuple) and len(data) == 2 and np.ndim(data[0]) == 2:
        Phi, y = data
    else:
        pairs = list(data)
        Phi = [np.ravel(p[0]) for p in pairs]
        y = [p[1] for p in pairs]
    Phi = np.asarray(Phi, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if Phi.ndim != 2 or Phi.shape[0] == 0:
        raise InsufficientDataError("need at least one training row")
    if Phi.shape[0] != y.size:
        raise FeatureDimensionError("features and targets disagree on the number of rows")
    if not (prior_scale > 0 and noise_variance > 0):
        raise InvalidArgumentError("prior_scale and noise_variance must be positive")
    _check_finite(Phi, y)
    mean, cov = _posterior(Phi, y, prior_scale, noise_variance)
    return BayesianLinearModel(mean, cov, noise_variance, features, include_noise, prior_scale)


class BayesianLinearRegressor(RegressorMixin, BaseEstimator):
    """scikit-learn wrapper around :func:`fit_bayesian_linear`.

    Equivalent to a Gaussian process with a dot-product plus white-noise
    kernel whose hyperparameters are held fixed.
    """

    def __init__(self, prior_scale=1.0, noise_variance=1.0, include_noise=False):
        self.prior_scale = prior_scale
        self.noise_variance = noise_variance
        self.include_noise = include_noise

    def fit(self, X, y):
        X, y = check_X_y(X, y, ensure_all_finite=False, y_numeric=True)
        self.model_ = fit_bayesian_linear((X, y), self.prior_scale, self.noise_variance,
                                          include_noise=self.include_noise)
        self.coef_ = self.model_.posterior_mean
        self.sigma_ = self.model_.posterior_covariance
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X, return_std=False):
        check_is_fitted(self, "model_")
        return self.model_.predict(check_array(X), return_std=return_std)

    def predict_joint(self, X):
        check_is_fitted(self, "model_")
        return self.model_.predict_joint(check_array(X))


# --------------------------------------------------------------------------
# Training pairs for game heuristics


def history_value_pairs(game: GameTree, terminals: Iterable[History], player: int,
                        min_length: int = 1) -> Tuple[List[History], np.ndarray]:
    """Every prefix of every terminal, paired with the terminal's payoff to ``player``."""
    histories, targets = [], []
    for z in terminals:
        u = float(game.utility(z)[player])
        for k in range(min_length, len(z) + 1):
            histories.append(tuple(z[:k]))
            targets.append(u)
    return histories, np.asarray(targets)


# --------------------------------------------------------------------------
# Records


def heuristic_to_record(heuristic) -> dict:
    if not hasattr(heuristic, "to_record"):
        raise InvalidArgumentError(f"cannot serialize heuristic of type {type(heuristic).__name__}")
    return heuristic.to_record()


def heuristic_from_record(record: dict, features: Optional[FeatureMap] = None, game_histories: bool = True):
    """Rebuild a heuristic; linear and Bayesian records need the matching feature map."""
    kind = record.get("kind")
    if kind == "zero":
        return TabularHeuristic()
    if kind == TabularHeuristic.kind:
        return TabularHeuristic.from_record(record, game_histories)
    if kind in ("linear", "bayes-linear"):
        if features is None:
            raise InvalidArgumentError(f"{kind} heuristic needs a feature map")
        if features.dim != record["dim"]:
            raise FeatureDimensionError(f"record has dimension {record['dim']}, feature map {features.dim}")
        if kind == "linear":
            return LinearHeuristic(record["theta"], features)
        return BayesianLinearModel(record["mean"], record["covariance"], record["noise_variance"],
                                   features, bool(record.get("include_noise", False)),
                                   record.get("prior_scale"))
    raise InvalidArgumentError(f"unknown heuristic kind {kind!r}")


def dumps_record(record: dict) -> str:
    """Canonical JSON text (sorted keys, no whitespace variation)."""
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def content_hash(text) -> str:
    data = text.encode("utf-8") if isinstance(text, str) else bytes(text)
    return hashlib.sha256(data).hexdigest()


__all__ = [
    "BayesianLinearModel",
    "BayesianLinearRegressor",
    "FeatureMap",
    "LinearHeuristic",
    "MAX_CONDITION",
    "TabularHeuristic",
    "VarianceMinimizingLinear",
    "centered_moments",
    "closed_form_theta",
    "content_hash",
    "dumps_record",
    "fit_bayesian_linear",
    "heuristic_from_record",
    "heuristic_to_record",
    "history_value_pairs",
    "linear_variance_cost",
    "psi_features",
    "psi_matrix",
]
