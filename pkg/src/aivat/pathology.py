"""Fitting a heuristic to the evaluation data itself.

Every heuristic output is a free parameter (``v'(h) = theta_h``), so each
estimate is ``b_t + <c_t, theta>``. Adam then drives either the sample
variance of the estimates down or their t-statistic up or down. The
estimator stays unbiased for every fixed theta; what breaks is choosing
theta after looking at the sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Hashable, List, NamedTuple, Optional, Sequence

import numpy as np
from scipy import sparse
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .estimators import AffineEstimate, coefficient_matrix
from .exceptions import (
    DegenerateStatisticError,
    DivergenceError,
    InsufficientDataError,
    InvalidArgumentError,
)
from .stats import TTestResult, t_test_from_statistic


class ObjectiveKind(str, Enum):
    SAMPLE_VARIANCE = "variance"
    TSTAT_MIN = "tstat-min"
    TSTAT_MAX = "tstat-max"


@dataclass(frozen=True)
class AdamConfig:
    """Adam hyperparameters. The defaults are the aggressive settings that
    make the attack converge within a few hundred full-batch steps."""

    learning_rate: float = 100.0
    beta1: float = 0.9
    beta2: float = 0.999
    weight_decay: float = 0.0
    epsilon: float = 1e-8
    iterations: int = 250

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InvalidArgumentError("learning_rate must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise InvalidArgumentError("beta1 and beta2 must lie in [0, 1)")
        if not self.epsilon > 0:
            raise InvalidArgumentError("epsilon must be positive")
        if self.iterations < 0:
            raise InvalidArgumentError("iterations must be non-negative")


class PathologyDataset:
    """Stacked affine estimates: ``C`` (T x H, sparse) and ``b`` (T,).

    ``vocabulary`` maps each parameterized history to its column of ``C``.
    """

    def __init__(self, C, b, vocabulary: Optional[Dict[Hashable, int]] = None):
        self.C = sparse.csr_matrix(C, dtype=float)
        self.b = np.asarray(b, dtype=float).ravel()
        if self.C.shape[0] != self.b.size:
            raise InvalidArgumentError("C and b disagree on the number of trials")
        self.vocabulary = dict(vocabulary) if vocabulary is not None else {
            j: j for j in range(self.C.shape[1])}
        self.c_mean = np.asarray(self.C.mean(axis=0)).ravel()
        self.b_mean = math.fsum(self.b) / max(self.b.size, 1)

    @classmethod
    def from_estimates(cls, estimates: Sequence[AffineEstimate], vocabulary=None) -> "PathologyDataset":
        C, b, vocab = coefficient_matrix(estimates, vocabulary)
        return cls(C, b, vocab)

    @property
    def n_trials(self) -> int:
        return self.b.size

    @property
    def n_params(self) -> int:
        return self.C.shape[1]

    def estimates(self, theta) -> np.ndarray:
        return self.b + self.C @ np.asarray(theta, dtype=float)

    def centered_dense(self):
        """Dense centered design ``X`` and target ``y`` of the least-squares
        form ``C(theta) = ||y + X theta||^2``."""
        X = self.C.toarray() - self.c_mean
        y = self.b - self.b_mean
        return X, y


def sample_variance_cost(theta, data: PathologyDataset):
    """Sum of squared deviations of the estimates from their mean, and its
    gradient ``2 C' r`` (the centering term drops since ``sum r = 0``)."""
    theta = np.asarray(theta, dtype=float)
    v = data.estimates(theta)
    r = v - math.fsum(v) / v.size
    return float(r @ r), 2.0 * (data.C.T @ r)


def t_statistic(theta, data: PathologyDataset, mu0: float = 0.0):
    """``t = (mean - mu0) / (s / sqrt(T))`` of the estimates and its gradient."""
    T = data.n_trials
    if T < 2:
        raise InsufficientDataError("need at least 2 trials")
    theta = np.asarray(theta, dtype=float)
    v = data.estimates(theta)
    mean = math.fsum(v) / T
    r = v - mean
    s2 = float(r @ r) / (T - 1)
    if not s2 > 0:
        raise DegenerateStatisticError("sample standard deviation is zero")
    s = math.sqrt(s2)
    t = (mean - mu0) * math.sqrt(T) / s
    d_mean = data.c_mean
    d_s = (data.C.T @ r) / ((T - 1) * s)
    grad = math.sqrt(T) * (d_mean * s - (mean - mu0) * d_s) / s2
    return t, np.asarray(grad).ravel()


class Adam:
    """Adam with bias correction; ``weight_decay`` adds an L2 term to the gradient."""

    def __init__(self, config: AdamConfig, n_params: int):
        self.config = config
        self.m = np.zeros(n_params)
        self.v = np.zeros(n_params)
        self.t = 0

    def step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        cfg = self.config
        if cfg.weight_decay:
            grad = grad + cfg.weight_decay * theta
        self.t += 1
        self.m = cfg.beta1 * self.m + (1 - cfg.beta1) * grad
        self.v = cfg.beta2 * self.v + (1 - cfg.beta2) * grad * grad
        m_hat = self.m / (1 - cfg.beta1 ** self.t)
        v_hat = self.v / (1 - cfg.beta2 ** self.t)
        return theta - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)


class OptimizationResult(NamedTuple):
    theta: np.ndarray
    trace: List[float]


def objective_and_gradient(objective: ObjectiveKind, theta, data, mu0: float = 0.0):
    """Value to report and gradient of the quantity being *minimized*."""
    objective = ObjectiveKind(objective)
    if objective is ObjectiveKind.SAMPLE_VARIANCE:
        return sample_variance_cost(theta, data)
    t, grad = t_statistic(theta, data, mu0)
    return (t, grad) if objective is ObjectiveKind.TSTAT_MIN else (t, -grad)


def optimize(
    objective,
    data: PathologyDataset,
    adam: AdamConfig = AdamConfig(),
    theta0=None,
    mu0: float = 0.0,
    callback=None,
) -> OptimizationResult:
    """Full-batch Adam on the chosen objective.

    ``trace[k]`` is the objective after ``k`` steps (``trace[0]`` at
    ``theta0``, zeros by default). Ascent for ``TSTAT_MAX`` is descent on
    the negated statistic. ``callback(k, theta, value)`` sees every point
    of the trace.
    """
    theta = np.zeros(data.n_params) if theta0 is None else np.array(theta0, dtype=float)
    opt = Adam(adam, data.n_params)
    trace = []
    for k in range(adam.iterations + 1):
        value, grad = objective_and_gradient(objective, theta, data, mu0)
        if not (math.isfinite(value) and np.all(np.isfinite(grad))):
            raise DivergenceError(k)
        trace.append(float(value))
        if callback is not None:
            callback(k, theta, float(value))
        if k < adam.iterations:
            theta = opt.step(theta, grad)
    return OptimizationResult(theta, trace)


def least_squares_optimum(data: PathologyDataset):
    """Minimum-norm minimizer of the sample-variance cost and its cost."""
    X, y = data.centered_dense()
    theta, *_ = np.linalg.lstsq(X, -y, rcond=None)
    return theta, sample_variance_cost(theta, data)[0]


class PHackReport(NamedTuple):
    t_min: float
    p_min: TTestResult
    t_max: float
    p_max: TTestResult
    theta_min: np.ndarray
    theta_max: np.ndarray


def phack_report(data: PathologyDataset, adam: AdamConfig = AdamConfig(iterations=10),
                 mu0: float = 0.0) -> PHackReport:
    """Drive the t-statistic down and up on the same data.

    The low run is tested against "the mean is not below mu0", the high run
    against "the mean is not above mu0", both one-sided.
    """
    low = optimize(ObjectiveKind.TSTAT_MIN, data, adam, mu0=mu0)
    high = optimize(ObjectiveKind.TSTAT_MAX, data, adam, mu0=mu0)
    t_lo = t_statistic(low.theta, data, mu0)[0]
    t_hi = t_statistic(high.theta, data, mu0)[0]
    T = data.n_trials
    return PHackReport(
        t_lo, t_test_from_statistic(t_lo, T - 1, "less"),
        t_hi, t_test_from_statistic(t_hi, T - 1, "greater"),
        low.theta, high.theta,
    )


class PathologicalHeuristic(RegressorMixin, BaseEstimator):
    """Tabular heuristic fitted to the evaluation sample by Adam.

    ``fit(X, y)`` takes the coefficient matrix ``X`` (T x H) and the
    offsets ``y = b``; :meth:`predict` returns the heuristic correction
    ``X theta`` and :meth:`estimates` returns ``b + X theta``.
    """

    def __init__(self, objective="variance", learning_rate=100.0, beta1=0.9, beta2=0.999,
                 weight_decay=0.0, epsilon=1e-8, n_iter=250, mu0=0.0):
        self.objective = objective
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.weight_decay = weight_decay
        self.epsilon = epsilon
        self.n_iter = n_iter
        self.mu0 = mu0

    def _adam(self) -> AdamConfig:
        return AdamConfig(self.learning_rate, self.beta1, self.beta2, self.weight_decay,
                          self.epsilon, self.n_iter)

    def fit(self, X, y):
        X = check_array(X, accept_sparse="csr")
        y = check_array(y, ensure_2d=False)
        data = PathologyDataset(X, y)
        self.theta_, self.trace_ = optimize(self.objective, data, self._adam(), mu0=self.mu0)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "theta_")
        X = check_array(X, accept_sparse="csr")
        return np.asarray(X @ self.theta_).ravel()

    def estimates(self, X, b):
        return np.asarray(b, dtype=float) + self.predict(X)

    def heuristic(self, vocabulary: Dict[Hashable, int]):
        """The fitted parameters as a history -> value table."""
        from .heuristics import TabularHeuristic

        check_is_fitted(self, "theta_")
        return TabularHeuristic({k: float(self.theta_[j]) for k, j in vocabulary.items()})


__all__ = [
    "Adam",
    "AdamConfig",
    "ObjectiveKind",
    "OptimizationResult",
    "PHackReport",
    "PathologicalHeuristic",
    "PathologyDataset",
    "least_squares_optimum",
    "objective_and_gradient",
    "optimize",
    "phack_report",
    "sample_variance_cost",
    "t_statistic",
]
