"""Uncertainty propagation and (weighted) aggregation of per-trial estimates.

Student-t tail probabilities are computed from the regularized incomplete
beta function, with a log-space path so that p-values far below the
smallest double are still reported (as log10 p).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import (
    DegenerateStatisticError,
    InfiniteWeightError,
    InsufficientDataError,
    InvalidArgumentError,
    InvalidCovarianceError,
    ValidationError,
)

P_UNDERFLOW = 1e-300
_CF_MAX_ITER = 100_000
_CF_EPS = 1e-16
_TINY = 1e-300


# ---------------------------------------------------------------------------
# Incomplete beta and the Student-t distribution
# ---------------------------------------------------------------------------

def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for I_x(a, b) (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = _TINY if abs(d) < _TINY else d
        c = 1.0 + aa / c
        c = _TINY if abs(c) < _TINY else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = _TINY if abs(d) < _TINY else d
        c = 1.0 + aa / c
        c = _TINY if abs(c) < _TINY else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def _log_beta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _log_front(a: float, b: float, x: float, y: float) -> float:
    return a * math.log(x) + b * math.log(y) - _log_beta(a, b)


def log_betainc(a: float, b: float, x: float, y: Optional[float] = None) -> float:
    """Natural log of the regularized incomplete beta I_x(a, b).

    ``y`` is ``1 - x``; pass it when it is known more accurately than the
    subtraction would give.
    """
    if y is None:
        y = 1.0 - x
    if not (a > 0 and b > 0):
        raise InvalidArgumentError("shape parameters must be positive")
    if x <= 0.0:
        return -math.inf
    if y <= 0.0:
        return 0.0
    if x < (a + 1.0) / (a + b + 2.0):
        return _log_front(a, b, x, y) + math.log(_betacf(a, b, x)) - math.log(a)
    tail = math.exp(_log_front(b, a, y, x)) * _betacf(b, a, y) / b
    return math.log1p(-tail)


def betainc(a: float, b: float, x: float, y: Optional[float] = None) -> float:
    return math.exp(log_betainc(a, b, x, y))


def student_t_log_sf(t: float, dof: float) -> float:
    """Natural log of P(T >= t) for a Student-t with ``dof`` degrees of freedom."""
    if dof <= 0:
        raise InvalidArgumentError("degrees of freedom must be positive")
    if math.isinf(t):
        return -math.inf if t > 0 else 0.0
    t2 = t * t
    x = dof / (dof + t2)
    y = t2 / (dof + t2)
    log_half_tail = math.log(0.5) + log_betainc(dof / 2.0, 0.5, x, y)
    if t >= 0:
        return log_half_tail
    return math.log1p(-math.exp(log_half_tail))


def student_t_sf(t: float, dof: float) -> float:
    return math.exp(student_t_log_sf(t, dof))


def student_t_cdf(t: float, dof: float) -> float:
    return math.exp(student_t_log_sf(-t, dof))


# ---------------------------------------------------------------------------
# Records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EstimateWithVariance:
    value: float
    variance: float

    def __post_init__(self):
        if not (math.isfinite(self.value) and math.isfinite(self.variance)):
            raise ValidationError("estimate and variance must be finite")
        if self.variance < 0:
            raise ValidationError("variance must be non-negative")


@dataclass(frozen=True)
class WeightedSummary:
    """Aggregate of per-trial estimates.

    ``se`` is the empirical (weighted) standard error; ``model_variance`` is
    the variance of the mean implied by the per-trial variances.
    """

    mean: float
    se: float
    weights: np.ndarray = field(repr=False)
    scheme: str
    model_variance: Optional[float] = None
    estimated_bias: Optional[float] = None

    @property
    def model_se(self) -> Optional[float]:
        return None if self.model_variance is None else math.sqrt(self.model_variance)


@dataclass(frozen=True)
class TTestResult:
    t: float
    dof: int
    p_one_sided: float
    log10_p: float
    direction: str

    @property
    def underflow(self) -> bool:
        return self.p_one_sided < P_UNDERFLOW

    def p_text(self) -> str:
        """p-value as text, switching to ``log10p=...`` once it underflows."""
        if self.underflow:
            return f"log10p={self.log10_p:.3f}"
        return repr(float(self.p_one_sided))


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def _as_estimates(estimates):
    values = np.array([e.value if isinstance(e, EstimateWithVariance) else e[0] for e in estimates], float)
    variances = np.array([e.variance if isinstance(e, EstimateWithVariance) else e[1] for e in estimates], float)
    if values.size < 2:
        raise InsufficientDataError("need at least 2 estimates")
    if not (np.all(np.isfinite(values)) and np.all(np.isfinite(variances))) or np.any(variances < 0):
        raise ValidationError("estimates must be finite with non-negative variance")
    return values, variances


def check_covariance(sigma, atol: float = 1e-9) -> np.ndarray:
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    if sigma.shape[0] != sigma.shape[1]:
        raise InvalidCovarianceError("covariance must be square")
    if not np.all(np.isfinite(sigma)):
        raise InvalidCovarianceError("covariance must be finite")
    scale = max(1.0, float(np.abs(sigma).max()) if sigma.size else 1.0)
    if not np.allclose(sigma, sigma.T, rtol=0, atol=atol * scale):
        raise InvalidCovarianceError("covariance must be symmetric")
    if sigma.size and np.linalg.eigvalsh((sigma + sigma.T) / 2).min() < -atol * scale:
        raise InvalidCovarianceError("covariance must be positive semidefinite")
    return sigma


def propagate_variance(coefficients, sigma) -> float:
    """Variance ``c' Sigma c`` of an affine estimate whose heuristic outputs
    have covariance ``sigma`` (rows and columns ordered like ``coefficients``).

    ``coefficients`` may be an :class:`~aivat.estimators.AffineEstimate`, in
    which case its support order is used.
    """
    if hasattr(coefficients, "coeffs"):
        coefficients = list(coefficients.coeffs.values())
    c = np.asarray(coefficients, dtype=float).ravel()
    sigma = check_covariance(sigma)
    if sigma.shape[0] != c.size:
        raise InvalidCovarianceError(f"covariance is {sigma.shape}, expected {c.size}x{c.size}")
    return max(0.0, float(c @ sigma @ c))


def propagate_variance_uncorrelated(coefficients, variances) -> float:
    """Diagonal special case: ``sum_h c_h^2 Var(v'(h))``."""
    c = np.asarray(coefficients, dtype=float).ravel()
    return float(np.sum(c * c * np.asarray(variances, dtype=float)))


def weighted_mean(values, weights) -> float:
    x = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    return math.fsum(w * x) / math.fsum(w)


def weighted_se(values, weights=None) -> float:
    """Standard error of the (weighted) mean, ``s* / sqrt(N)`` with

        s*^2 = sum w (x - xbar*)^2 / sum w * N / (N - 1).

    Equal weights give the usual ``s / sqrt(N)``.
    """
    x = np.asarray(values, dtype=float).ravel()
    n = x.size
    if n < 2:
        raise InsufficientDataError("need at least 2 values")
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float).ravel()
    if w.shape != x.shape or np.any(w <= 0):
        raise ValidationError("weights must be positive and match the values")
    mean = weighted_mean(x, w)
    s2 = math.fsum(w * (x - mean) ** 2) / math.fsum(w) * n / (n - 1)
    return math.sqrt(s2 / n)


def estimate_ivw_bias(values, weights) -> float:
    """Asymptotic bias of a weighted mean: ``Cov(w, v) / E[w]`` (divisor T-1)."""
    x = np.asarray(values, dtype=float).ravel()
    w = np.asarray(weights, dtype=float).ravel()
    if x.size < 2 or w.shape != x.shape:
        raise InsufficientDataError("need at least 2 paired values")
    wm = math.fsum(w) / w.size
    xm = math.fsum(x) / x.size
    cov = math.fsum((w - wm) * (x - xm)) / (x.size - 1)
    return cov / wm


def uniform_mean(estimates: Sequence) -> WeightedSummary:
    values, variances = _as_estimates(estimates)
    n = values.size
    return WeightedSummary(
        mean=math.fsum(values) / n,
        se=weighted_se(values),
        weights=np.ones(n),
        scheme="uniform",
        model_variance=math.fsum(variances) / n**2,
    )


def ivw_mean(estimates: Sequence, variance_floor: float = 0.0) -> WeightedSummary:
    """Inverse-variance weighted mean, its model variance ``1 / sum w`` and
    the estimated bias from the weight/estimate covariance.

    Zero variances raise unless a positive ``variance_floor`` is given.
    """
    values, variances = _as_estimates(estimates)
    if variance_floor > 0:
        variances = np.maximum(variances, variance_floor)
    if np.any(variances <= 0):
        raise InfiniteWeightError("an estimate has zero variance; set a variance floor")
    w = 1.0 / variances
    # rescaling leaves every statistic unchanged; equal variances give unit weights exactly
    w_rel = variances.min() / variances
    return WeightedSummary(
        mean=weighted_mean(values, w_rel),
        se=weighted_se(values, w_rel),
        weights=w,
        scheme="ivw",
        model_variance=1.0 / math.fsum(w),
        estimated_bias=estimate_ivw_bias(values, w_rel),
    )


def weighting_model_variance(variances, weights) -> float:
    """Variance of ``sum w v / sum w`` for independent estimates."""
    var = np.asarray(variances, dtype=float)
    w = np.asarray(weights, dtype=float)
    return math.fsum(w * w * var) / math.fsum(w) ** 2


def t_test_from_statistic(t: float, dof: int, direction: str = "greater") -> TTestResult:
    if direction not in ("greater", "less"):
        raise InvalidArgumentError("direction must be 'greater' or 'less'")
    log_p = student_t_log_sf(t if direction == "greater" else -t, dof)
    return TTestResult(float(t), int(dof), math.exp(log_p), log_p / math.log(10.0), direction)


def one_sided_t_test(values, weights=None, mu0: float = 0.0, direction: str = "greater") -> TTestResult:
    """One-sided t-test of the (weighted) mean against ``mu0``, T-1 dof."""
    x = np.asarray(values, dtype=float).ravel()
    if x.size < 2:
        raise InsufficientDataError("need at least 2 values")
    w = np.ones(x.size) if weights is None else np.asarray(weights, dtype=float)
    se = weighted_se(x, w)
    if se == 0:
        raise DegenerateStatisticError("standard error is zero")
    t = (weighted_mean(x, w) - mu0) / se
    return t_test_from_statistic(t, x.size - 1, direction)


__all__ = [
    "EstimateWithVariance",
    "P_UNDERFLOW",
    "TTestResult",
    "WeightedSummary",
    "betainc",
    "check_covariance",
    "estimate_ivw_bias",
    "ivw_mean",
    "log_betainc",
    "one_sided_t_test",
    "propagate_variance",
    "propagate_variance_uncorrelated",
    "student_t_cdf",
    "student_t_log_sf",
    "student_t_sf",
    "t_test_from_statistic",
    "uniform_mean",
    "weighted_mean",
    "weighted_se",
    "weighting_model_variance",
]
