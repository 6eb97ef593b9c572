"""Corpus-level evaluation: decompose every hand, fit or load a heuristic,
evaluate the estimates and summarize them per player.

All amounts are in milli-big-blinds (mbb). For Kuhn and Leduc one chip
counts as one big blind.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np

from .corpus import GameCorpus
from .estimators import AffineEstimate, EstimatorConfig, decompose_many, evaluate_affine
from .exceptions import InsufficientDataError, InvalidArgumentError
from .heuristics import (
    BayesianLinearModel,
    FeatureMap,
    LinearHeuristic,
    TabularHeuristic,
    closed_form_theta,
    fit_bayesian_linear,
    psi_matrix,
)
from .poker.features import HoldemFeatures
from .poker.folds import train_test_folds
from .poker.history import HandHistory
from .poker.mivat import DEFAULT_TRACKED, mivat_decompose_hand, realized_keys
from .stats import EstimateWithVariance, ivw_mean, t_test_from_statistic, uniform_mean, weighted_se

SCHEMES = ("raw", "mivat", "aivat")
HEURISTICS = ("zero", "tabular", "wb-linear", "bayes-linear")
WEIGHTINGS = ("uniform", "ivw")
MBB = 1000.0


@dataclass(frozen=True)
class HeuristicSpec:
    """How to build a heuristic. ``None`` hyperparameters default to the
    sample variance of the training targets."""

    kind: str = "zero"
    prior_scale: Optional[float] = None
    noise_variance: Optional[float] = None
    include_noise: bool = False
    ridge: float = 0.0

    def __post_init__(self):
        if self.kind not in HEURISTICS:
            raise InvalidArgumentError(f"unknown heuristic {self.kind!r}; choose from {HEURISTICS}")


def _shift(est: AffineEstimate, factor: float) -> AffineEstimate:
    """Rescale the offset only: heuristics are trained in the target unit already."""
    return AffineEstimate(est.b * factor, est.coeffs, est.groups)


class _CachedFeatures:
    def __init__(self, fn):
        self.fn = fn
        self.cache: Dict[Hashable, np.ndarray] = {}

    def __call__(self, h):
        phi = self.cache.get(h)
        if phi is None:
            phi = self.cache[h] = np.asarray(self.fn(h), dtype=float)
        return phi


class GameData:
    """A Kuhn or Leduc corpus seen through one estimator scheme."""

    def __init__(self, corpus: GameCorpus):
        self.corpus = corpus
        self.game = corpus.game
        self.profile = corpus.profile()
        self._decomp: Dict[Tuple[int, str], List[AffineEstimate]] = {}
        self._features: Dict[int, FeatureMap] = {}

    @property
    def ids(self) -> List[str]:
        return self.corpus.ids

    @property
    def players(self) -> List[int]:
        return list(range(self.game.num_players))

    def __len__(self) -> int:
        return len(self.corpus)

    def payoffs(self, player: int) -> np.ndarray:
        return self.corpus.payoffs[:, player] * MBB

    def config(self, player: int, scheme: str) -> EstimatorConfig:
        if scheme == "mivat":
            return EstimatorConfig.mivat(player)
        if scheme == "aivat":
            return EstimatorConfig.aivat(player, self.players)
        raise InvalidArgumentError(f"scheme {scheme!r} has no decomposition")

    def decompose(self, player: int, scheme: str) -> List[AffineEstimate]:
        key = (player, scheme)
        if key not in self._decomp:
            ests = decompose_many(self.game, self.corpus.histories, self.profile, self.config(player, scheme))
            self._decomp[key] = [_shift(e, MBB) for e in ests]
        return self._decomp[key]

    def feature_map(self, player: int) -> FeatureMap:
        if player not in self._features:
            base = FeatureMap.from_game(self.game, player)
            self._features[player] = FeatureMap(base.dim, _CachedFeatures(base.fn), base.name)
        return self._features[player]

    def training_pairs(self, player: int, index: Sequence[int], scheme: str):
        """Each prefix of each training hand with that hand's payoff."""
        keys, targets = [], []
        pay = self.payoffs(player)
        for i in index:
            z = self.corpus.histories[i]
            for k in range(1, len(z) + 1):
                keys.append(tuple(z[:k]))
                targets.append(pay[i])
        return keys, np.asarray(targets, dtype=float)


class HoldemData:
    """A hold'em corpus evaluated with MIVAT over board deals."""

    def __init__(self, hands: Sequence[HandHistory], tracked=DEFAULT_TRACKED,
                 interpretation: str = "pot-hs-pow", samples: int = 1000, seed: int = 0):
        self.hands = list(hands)
        self.tracked = tuple(tracked)
        self.features = HoldemFeatures(self.hands, interpretation, samples, seed)
        self._decomp: Dict[int, List[AffineEstimate]] = {}
        counts = {h.players for h in self.hands}
        self.num_players = max(counts) if counts else 2

    @property
    def ids(self) -> List[str]:
        return [h.id for h in self.hands]

    @property
    def players(self) -> List[int]:
        return list(range(self.num_players))

    def __len__(self) -> int:
        return len(self.hands)

    def payoffs(self, player: int) -> np.ndarray:
        return np.array([h.payoffs_mbb()[player] if player < h.players else 0.0 for h in self.hands])

    def decompose(self, player: int, scheme: str) -> List[AffineEstimate]:
        if scheme != "mivat":
            raise InvalidArgumentError("hold'em corpora support the raw and mivat schemes only")
        if player not in self._decomp:
            self._decomp[player] = [mivat_decompose_hand(h, player, self.tracked) for h in self.hands]
        return self._decomp[player]

    def feature_map(self, player: int) -> FeatureMap:
        return self.features.feature_map(player)

    def training_pairs(self, player: int, index: Sequence[int], scheme: str):
        keys, targets = [], []
        for i in index:
            hand = self.hands[i]
            u = hand.payoffs_mbb()[player]
            for key in realized_keys(hand, self.tracked):
                keys.append(key)
                targets.append(u)
        return keys, np.asarray(targets, dtype=float)


def _default_scale(y: np.ndarray) -> float:
    var = float(np.var(y)) if y.size > 1 else 0.0
    return var if var > 0 else 1.0


def train_heuristic(data, spec: HeuristicSpec, player: int, scheme: str, index: Sequence[int]):
    """Fit ``spec`` on the hands at ``index``."""
    if spec.kind == "zero":
        return TabularHeuristic()
    index = list(index)
    if spec.kind == "wb-linear":
        features = data.feature_map(player)
        ests = [data.decompose(player, scheme)[i] for i in index]
        b, Psi = psi_matrix(ests, features)
        return LinearHeuristic(closed_form_theta((b, Psi), spec.ridge), features)
    keys, y = data.training_pairs(player, index, scheme)
    if spec.kind == "tabular":
        if isinstance(data, HoldemData):
            raise InvalidArgumentError("a tabular heuristic cannot generalize across hold'em hands")
        sums: Dict[Hashable, List[float]] = {}
        for k, v in zip(keys, y):
            sums.setdefault(k, []).append(v)
        default = float(np.mean(y)) if y.size else 0.0
        return TabularHeuristic({k: math.fsum(v) / len(v) for k, v in sums.items()}, default)
    features = data.feature_map(player)
    Phi = features.matrix(keys)
    scale = _default_scale(y)
    return fit_bayesian_linear(
        (Phi, y),
        spec.prior_scale if spec.prior_scale is not None else scale,
        spec.noise_variance if spec.noise_variance is not None else scale,
        features,
        spec.include_noise,
    )


@dataclass
class PlayerEstimates:
    player: int
    ids: List[str]
    b: np.ndarray
    values: np.ndarray
    variances: Optional[np.ndarray]


def evaluate_estimates(ests: Sequence[AffineEstimate], heuristic) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    values = np.array([evaluate_affine(e, heuristic) for e in ests], dtype=float)
    if isinstance(heuristic, BayesianLinearModel):
        variances = np.array([heuristic.estimate_variance(e) for e in ests], dtype=float)
        return values, variances
    return values, None


def estimate_player(data, player: int, scheme: str, heuristic=None, spec: Optional[HeuristicSpec] = None,
                    kfold: Optional[int] = None, seed: int = 0) -> PlayerEstimates:
    """Per-hand estimates for one player.

    Give either a fitted ``heuristic`` or a ``spec`` with ``kfold`` (train on
    the other folds, evaluate each held-out fold) or without it (train on
    the whole corpus, in sample).
    """
    if scheme not in SCHEMES:
        raise InvalidArgumentError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    n = len(data)
    if scheme == "raw":
        pay = data.payoffs(player)
        return PlayerEstimates(player, data.ids, pay, pay.copy(), None)
    ests = data.decompose(player, scheme)
    b = np.array([e.b for e in ests])
    if heuristic is not None:
        values, variances = evaluate_estimates(ests, heuristic)
        return PlayerEstimates(player, data.ids, b, values, variances)
    spec = spec or HeuristicSpec()
    if kfold is None:
        h = train_heuristic(data, spec, player, scheme, range(n))
        values, variances = evaluate_estimates(ests, h)
        return PlayerEstimates(player, data.ids, b, values, variances)
    values = np.zeros(n)
    variances = np.zeros(n) if spec.kind == "bayes-linear" else None
    for train, test in train_test_folds(list(range(n)), kfold, seed):
        h = train_heuristic(data, spec, player, scheme, train)
        v, var = evaluate_estimates([ests[i] for i in test], h)
        values[test] = v
        if variances is not None:
            variances[test] = var
    return PlayerEstimates(player, data.ids, b, values, variances)


SUMMARY_COLUMNS = ("player", "scheme", "heuristic", "weighting", "n", "win_rate_mbb", "se_mbb",
                   "se_model_mbb", "est_bias_mbb", "t", "p_or_log10p")


def _t_row(mean: float, se: float, n: int):
    if se == 0:
        return None
    return t_test_from_statistic(mean / se, n - 1, "greater")


def summarize(est: PlayerEstimates, scheme: str, heuristic: str, weighting: str,
              variance_floor: float = 0.0) -> List[dict]:
    """Summary rows for one player; IVW also reports the uniform row for comparison."""
    n = est.values.size
    if n < 2:
        raise InsufficientDataError(f"need at least 2 hands to summarize, got {n}")
    rows = []
    base = {"player": est.player, "scheme": scheme, "heuristic": heuristic, "n": n}
    if est.variances is not None:
        uni = uniform_mean([EstimateWithVariance(float(v), float(s)) for v, s in zip(est.values, est.variances)])
        model_se = uni.model_se
    else:
        uni = None
        model_se = None
    mean = float(np.mean(est.values)) if uni is None else uni.mean
    se = weighted_se(est.values)
    test = _t_row(mean, se, n)
    rows.append(dict(base, weighting="uniform", win_rate_mbb=mean, se_mbb=se, se_model_mbb=model_se,
                     est_bias_mbb=None, t=None if test is None else test.t,
                     p_or_log10p=None if test is None else test.p_text()))
    if weighting == "ivw":
        if est.variances is None:
            raise InvalidArgumentError("ivw weighting needs a heuristic with predictive variance (bayes-linear)")
        summary = ivw_mean([EstimateWithVariance(float(v), float(s)) for v, s in zip(est.values, est.variances)],
                           variance_floor)
        test = _t_row(summary.mean, summary.se, n)
        rows.append(dict(base, weighting="ivw", win_rate_mbb=summary.mean, se_mbb=summary.se,
                         se_model_mbb=summary.model_se, est_bias_mbb=summary.estimated_bias,
                         t=None if test is None else test.t,
                         p_or_log10p=None if test is None else test.p_text()))
    return rows


__all__ = [
    "GameData",
    "HEURISTICS",
    "HeuristicSpec",
    "HoldemData",
    "MBB",
    "PlayerEstimates",
    "SCHEMES",
    "SUMMARY_COLUMNS",
    "WEIGHTINGS",
    "estimate_player",
    "evaluate_estimates",
    "summarize",
    "train_heuristic",
]
