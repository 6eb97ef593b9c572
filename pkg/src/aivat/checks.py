"""Self-checks run by ``aivat check``.

Each check is small, deterministic and compares against an independent
computation: exhaustive enumeration, finite differences, hand-worked
numbers or a brute-force evaluator.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, List, NamedTuple, Optional

import numpy as np

from .estimators import AffineEstimate, CorrectionGroup, EstimatorConfig, decompose_many, evaluate_affine
from .games import KuhnPoker, LeducPoker, iter_terminals, random_profile, uniform_profile
from .heuristics import TabularHeuristic, closed_form_theta, fit_bayesian_linear
from .pathology import PathologyDataset, sample_variance_cost, t_statistic
from .poker.cards import evaluate_many
from .stats import ivw_mean, student_t_sf, weighted_se, weighting_model_variance


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


@dataclass
class CheckOptions:
    corrupt_coefficient: bool = False
    seed: int = 0


def _unbiasedness(game, n_heuristics: int, seed: int) -> str:
    profile = random_profile(game, seed)
    terminals = list(iter_terminals(game, profile))
    Z = [z for z, _ in terminals]
    reach = np.array([p for _, p in terminals])
    rng = np.random.default_rng(seed)
    worst = 0.0
    for config in (EstimatorConfig.mivat(0), EstimatorConfig.aivat(0, (0, 1))):
        ests = decompose_many(game, Z, profile, config)
        truth = math.fsum(reach * np.array([game.utility(z)[0] for z in Z]))
        support = {h for e in ests for h in e.coeffs}
        for _ in range(n_heuristics):
            table = TabularHeuristic({h: rng.normal(scale=5.0) for h in support})
            value = math.fsum(reach * np.array([evaluate_affine(e, table) for e in ests]))
            worst = max(worst, abs(value - truth))
    if worst > 1e-10:
        raise AssertionError(f"expected value off by {worst:.3g}")
    return f"max deviation {worst:.2e}"


def check_kuhn_unbiasedness(opts: CheckOptions) -> str:
    return _unbiasedness(KuhnPoker(), 20, opts.seed)


def check_leduc_unbiasedness(opts: CheckOptions) -> str:
    return _unbiasedness(LeducPoker(), 3, opts.seed)


def _corrupt(est: AffineEstimate) -> AffineEstimate:
    g = est.groups[0]
    (h, c), rest = g.members[0], g.members[1:]
    bad = CorrectionGroup(g.anchor, ((h, c + 1e-3),) + rest)
    return AffineEstimate(est.b, est.coeffs, (bad,) + est.groups[1:])


def check_group_zero_sum(opts: CheckOptions) -> str:
    game = KuhnPoker()
    profile = uniform_profile(game)
    Z = [z for z, _ in iter_terminals(game, profile)]
    worst, count = 0.0, 0
    for config in (EstimatorConfig.mivat(0), EstimatorConfig.aivat(1, (0, 1))):
        ests = decompose_many(game, Z, profile, config)
        if opts.corrupt_coefficient:
            ests[0] = _corrupt(ests[0])
        for est in ests:
            for g in est.groups:
                worst = max(worst, abs(g.total))
                count += 1
    if worst > 1e-10:
        raise AssertionError(f"a correction group sums to {worst:.3g}")
    return f"{count} groups, max |sum| {worst:.2e}"


def _fd_check(f, theta, step=1e-5) -> float:
    _, grad = f(theta)
    fd = np.zeros_like(theta)
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = step
        fd[j] = (f(theta + e)[0] - f(theta - e)[0]) / (2 * step)
    return float(np.linalg.norm(grad - fd) / max(np.linalg.norm(fd), 1e-12))


def _random_dataset(rng, T=60, H=20) -> PathologyDataset:
    C = rng.normal(size=(T, H)) * (rng.random((T, H)) < 0.3)
    return PathologyDataset(C, rng.normal(loc=0.5, size=T))


def check_variance_gradient(opts: CheckOptions) -> str:
    rng = np.random.default_rng(opts.seed)
    worst = 0.0
    for _ in range(10):
        data = _random_dataset(rng)
        worst = max(worst, _fd_check(lambda th: sample_variance_cost(th, data), rng.normal(size=data.n_params)))
    if worst > 1e-5:
        raise AssertionError(f"relative error {worst:.3g}")
    return f"max relative error {worst:.2e}"


def check_tstat_gradient(opts: CheckOptions) -> str:
    rng = np.random.default_rng(opts.seed + 1)
    worst = 0.0
    for _ in range(10):
        data = _random_dataset(rng)
        worst = max(worst, _fd_check(lambda th: t_statistic(th, data, 0.1), rng.normal(size=data.n_params)))
    if worst > 1e-5:
        raise AssertionError(f"relative error {worst:.3g}")
    return f"max relative error {worst:.2e}"


def check_ivw_optimality(opts: CheckOptions) -> str:
    rng = np.random.default_rng(opts.seed + 2)
    margin = math.inf
    for _ in range(20):
        var = rng.uniform(0.1, 10.0, size=50)
        ivw = ivw_mean(list(zip(rng.normal(size=50), var))).model_variance
        for _ in range(50):
            alt = weighting_model_variance(var, rng.uniform(0.01, 1.0, size=50))
            margin = min(margin, alt - ivw)
    if margin < -1e-12:
        raise AssertionError(f"a weighting beat inverse-variance weighting by {-margin:.3g}")
    return f"min excess variance {margin:.2e}"


def check_weighted_se(opts: CheckOptions) -> str:
    se = weighted_se([0, 0, 4], [1, 1, 2])
    if abs(se - math.sqrt(2)) > 1e-12:
        raise AssertionError(f"got {se!r}, expected sqrt(2)")
    plain = weighted_se([1.0, 2.0, 4.0, 7.0])
    expect = np.std([1.0, 2.0, 4.0, 7.0], ddof=1) / 2
    if abs(plain - expect) > 1e-12:
        raise AssertionError("equal weights do not reproduce the plain standard error")
    return "sqrt(2) example and plain reduction hold"


def check_t_pvalue(opts: CheckOptions) -> str:
    p = student_t_sf(2.0, 10)
    if abs(p - 0.0367) > 5e-4:
        raise AssertionError(f"p = {p:.5f}")
    return f"t=2, dof=10: p={p:.5f}"


def _naive5(cards) -> int:
    ranks = sorted((c // 4 for c in cards), reverse=True)
    flush = len({c % 4 for c in cards}) == 1
    distinct = sorted(set(ranks), reverse=True)
    top = -1
    if len(distinct) == 5:
        if distinct[0] - distinct[4] == 4:
            top = distinct[0]
        elif distinct == [12, 3, 2, 1, 0]:
            top = 3
    groups = sorted(((ranks.count(r), r) for r in distinct), reverse=True)
    shape = [n for n, _ in groups]
    order = [r for _, r in groups]
    if top >= 0 and flush:
        cat, key = 8, [top]
    elif shape[0] == 4:
        cat, key = 7, order
    elif shape[:2] == [3, 2]:
        cat, key = 6, order
    elif flush:
        cat, key = 5, ranks
    elif top >= 0:
        cat, key = 4, [top]
    elif shape[0] == 3:
        cat, key = 3, order
    elif shape[:2] == [2, 2]:
        cat, key = 2, order
    elif shape[0] == 2:
        cat, key = 1, order
    else:
        cat, key = 0, ranks
    value = 0
    for i in range(5):
        value = value * 13 + (key[i] if i < len(key) else 0)
    return cat * 13 ** 5 + value


def naive_best_of_seven(cards) -> int:
    """Best 5-card score over all 21 subsets, by brute force."""
    return max(_naive5(c) for c in combinations(cards, 5))


def check_hand_evaluator(opts: CheckOptions) -> str:
    rng = np.random.default_rng(opts.seed + 3)
    draws = np.array([rng.choice(52, 7, replace=False) for _ in range(2000)])
    fast = evaluate_many(draws)
    slow = np.array([naive_best_of_seven(row) for row in draws.tolist()])
    mismatches = int(np.sum(fast != slow))
    if mismatches:
        raise AssertionError(f"{mismatches} mismatches against brute force")
    return "2000 random hands agree with brute force"


def check_kernel_equivalence(opts: CheckOptions) -> str:
    rng = np.random.default_rng(opts.seed + 4)
    X, y, Xs = rng.normal(size=(5, 3)), rng.normal(size=5), rng.normal(size=(4, 3))
    a, s2 = 1.7, 0.3
    model = fit_bayesian_linear((X, y), a, s2)
    mean, std = model.predict(Xs, return_std=True)
    K = a * X @ X.T + s2 * np.eye(5)
    ks = a * X @ Xs.T
    kmean = ks.T @ np.linalg.solve(K, y)
    kvar = a * np.sum(Xs * Xs, axis=1) - np.sum(ks * np.linalg.solve(K, ks), axis=0)
    err = max(np.abs(mean - kmean).max(), np.abs(std ** 2 - kvar).max())
    if err > 1e-8:
        raise AssertionError(f"weight-space and kernel predictions differ by {err:.3g}")
    return f"max difference {err:.2e}"


def check_closed_form(opts: CheckOptions) -> str:
    theta = closed_form_theta([(1.0, [1.0]), (3.0, [2.0]), (5.0, [3.0])])
    if abs(theta[0] + 2.0) > 1e-12:
        raise AssertionError(f"theta = {theta[0]!r}, expected -2")
    return "theta* = -2 on the 1-D example"


CHECKS: List[Callable[[CheckOptions], str]] = [
    check_kuhn_unbiasedness,
    check_leduc_unbiasedness,
    check_group_zero_sum,
    check_variance_gradient,
    check_tstat_gradient,
    check_ivw_optimality,
    check_weighted_se,
    check_t_pvalue,
    check_hand_evaluator,
    check_kernel_equivalence,
    check_closed_form,
]


def check_name(fn) -> str:
    return fn.__name__[len("check_"):].replace("_", "-")


def run_checks(opts: Optional[CheckOptions] = None, only: Optional[List[str]] = None) -> List[CheckResult]:
    opts = opts or CheckOptions()
    results = []
    for fn in CHECKS:
        name = check_name(fn)
        if only and name not in only:
            continue
        start = time.perf_counter()
        try:
            detail = fn(opts)
            passed = True
        except AssertionError as exc:
            detail, passed = str(exc), False
        except Exception as exc:  # a crash is a failure of that check, not of the suite
            detail, passed = f"{type(exc).__name__}: {exc}", False
        results.append(CheckResult(name, passed, f"{detail} ({time.perf_counter() - start:.2f}s)"))
    return results


__all__ = ["CHECKS", "CheckOptions", "CheckResult", "check_name", "naive_best_of_seven", "run_checks"]
