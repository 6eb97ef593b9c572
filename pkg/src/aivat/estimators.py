"""Control-variate estimators: raw Monte Carlo, a single control variate,
and the advantage-sum / MIVAT / AIVAT family through its affine form

    v_hat(z) = b(z) + sum_h c(z)_h * v'(h)

where ``b`` is the imaginary-observation base term and ``c`` collects, per
known node on the path, the expected heuristic value minus the realized
one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Dict, FrozenSet, Hashable, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import (
    DegenerateGroupError,
    DegenerateVariateError,
    InsufficientDataError,
    InvalidArgumentError,
    MissingHeuristicValueError,
    MissingStrategyError,
)
from .games.analysis import Strategy, action_probability, enumerate_u_set
from .games.base import CHANCE, GameTree, History, history_id, parse_history_id


class MonteCarloSummary(NamedTuple):
    mean: float
    sample_variance: float
    se: float


def monte_carlo_summary(values) -> MonteCarloSummary:
    """Mean, unbiased sample variance (divisor T-1) and standard error."""
    x = np.asarray(values, dtype=float).ravel()
    if x.size < 2:
        raise InsufficientDataError("need at least 2 values")
    mean = math.fsum(x) / x.size
    var = math.fsum((x - mean) ** 2) / (x.size - 1)
    return MonteCarloSummary(mean, var, math.sqrt(var / x.size))


def control_variate_estimate(v, w, omega, c):
    """``v - c * (w - omega)``; unbiased whenever ``E[w] = omega``."""
    return v - c * (w - omega)


def optimal_cv_coefficient(cov_vw: float, var_w: float) -> float:
    if not var_w > 0:
        raise DegenerateVariateError("control variate has zero variance")
    return cov_vw / var_w


@dataclass(frozen=True)
class CorrectionGroup:
    """Coefficients contributed by one realized known-node transition.

    ``members`` lists every ``(h', a')`` child history with its coefficient;
    the realized action's children carry the two-term (negative) weight.
    """

    anchor: Hashable
    members: Tuple[Tuple[Hashable, float], ...]

    @property
    def total(self) -> float:
        return math.fsum(c for _, c in self.members)


@dataclass(frozen=True)
class AffineEstimate:
    b: float
    coeffs: Mapping[Hashable, float]
    groups: Tuple[CorrectionGroup, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "coeffs", MappingProxyType(dict(self.coeffs)))

    @property
    def support(self) -> List[Hashable]:
        return list(self.coeffs)

    def coefficient_vector(self, keys: Sequence[Hashable]) -> np.ndarray:
        return np.array([self.coeffs.get(k, 0.0) for k in keys])

    def to_record(self) -> dict:
        """Plain-JSON form: ``{"b": float, "coefficients": [[id, c], ...]}``.

        Tuple histories are written as their canonical ``"."``-joined ids.
        """
        def key(k):
            return history_id(k) if isinstance(k, tuple) else str(k)

        return {
            "b": self.b,
            "coefficients": [[key(k), c] for k, c in self.coeffs.items()],
            "groups": [
                {"anchor": key(g.anchor), "members": [[key(k), c] for k, c in g.members]}
                for g in self.groups
            ],
        }

    @classmethod
    def from_record(cls, record: dict, game_histories: bool = True) -> "AffineEstimate":
        def key(k):
            return parse_history_id(k) if game_histories else k

        groups = tuple(
            CorrectionGroup(key(g["anchor"]), tuple((key(k), float(c)) for k, c in g["members"]))
            for g in record.get("groups", ())
        )
        return cls(float(record["b"]), {key(k): float(c) for k, c in record["coefficients"]}, groups)


@dataclass(frozen=True)
class EstimatorConfig:
    """Which nodes enter K(z) and whether imaginary observations are used.

    Chance nodes are always known. With imaginary observations on, the base
    term averages over the private information of the lowest-numbered known
    player (a single player's swap keeps every other factor of the reach
    probability fixed, so the ratio stays exact).
    """

    evaluated_player: int = 0
    known_players: FrozenSet[int] = field(default_factory=frozenset)
    use_imaginary_observations: bool = False

    def __post_init__(self):
        object.__setattr__(self, "known_players", frozenset(self.known_players))
        if self.evaluated_player < 0:
            raise InvalidArgumentError("evaluated_player must be a non-chance player")

    @classmethod
    def mivat(cls, evaluated_player: int = 0) -> "EstimatorConfig":
        return cls(evaluated_player)

    @classmethod
    def aivat(cls, evaluated_player: int, known_players: Iterable[int]) -> "EstimatorConfig":
        return cls(evaluated_player, frozenset(known_players), True)


class _Reach:
    """Memoized reach probability over chance and the known players only."""

    def __init__(self, game: GameTree, profile: Mapping[int, Strategy], known: FrozenSet[int]):
        self.game = game
        self.profile = profile
        self.known = known
        self.cache: Dict[History, float] = {(): 1.0}

    def __call__(self, h: History) -> float:
        got = self.cache.get(h)
        if got is not None:
            return got
        parent = h[:-1]
        p = self.game.current_player(parent)
        if p == CHANCE or p in self.known:
            step = action_probability(self.game, self.profile, parent, h[-1])
        else:
            step = 1.0
        value = self(parent) * step
        self.cache[h] = value
        return value


def decompose_affine(
    game: GameTree,
    z,
    profile: Mapping[int, Strategy],
    config: EstimatorConfig,
) -> AffineEstimate:
    """Affine decomposition ``(b(z), c(z))`` of the estimate at terminal ``z``.

    Known-node groups are processed in path order. ``profile`` only needs the
    strategies of ``config.known_players``.
    """
    return decompose_many(game, [z], profile, config)[0]


def decompose_many(
    game: GameTree,
    Z: Iterable,
    profile: Mapping[int, Strategy],
    config: EstimatorConfig,
) -> List[AffineEstimate]:
    """:func:`decompose_affine` over many terminals with shared caches."""
    missing = [p for p in config.known_players if p not in profile]
    if missing:
        raise MissingStrategyError(f"no strategy supplied for known players {sorted(missing)}")
    known_profile = {p: profile[p] for p in config.known_players}
    pi = _Reach(game, known_profile, config.known_players)
    u_sets: Dict[Tuple[History, Optional[int]], List[History]] = {}

    def u_set(h, player=None):
        key = (h, player)
        if key not in u_sets:
            u_sets[key] = enumerate_u_set(game, h, player)
        return u_sets[key]

    return [_decompose(game, z, config, pi, u_set) for z in Z]


def _decompose(game, z, config, pi, u_set) -> AffineEstimate:
    z = game.check_history(z)
    if not game.is_terminal(z):
        raise InvalidArgumentError(f"{history_id(z)!r} is not terminal")
    i = config.evaluated_player

    if config.use_imaginary_observations and config.known_players:
        base_set = u_set(z, min(config.known_players))
        weights = np.array([pi(zz) for zz in base_set])
        if weights.sum() <= 0:
            raise DegenerateGroupError(f"base term of {history_id(z)!r} has zero reach")
        utils = np.array([game.utility(zz)[i] for zz in base_set])
        b = float(np.dot(weights, utils) / weights.sum())
    else:
        b = float(game.utility(z)[i])

    coeffs: Dict[History, float] = {}
    groups: List[CorrectionGroup] = []
    for k in range(len(z)):
        h, a = z[:k], z[k]
        p = game.current_player(h)
        if p != CHANCE and p not in config.known_players:
            continue
        if config.use_imaginary_observations and p != CHANCE:
            group = u_set(h)
        else:
            group = [h]
        denom_h = math.fsum(pi(hh) for hh in group)
        denom_a = math.fsum(pi(hh + (a,)) for hh in group)
        if denom_h <= 0 or denom_a <= 0:
            raise DegenerateGroupError(f"group at {history_id(h)!r} has zero reach probability")
        members = []
        for hh in group:
            for aa in game.legal_actions(hh):
                child = hh + (aa,)
                c = pi(child) / denom_h
                if aa == a:
                    c -= pi(child) / denom_a
                members.append((child, c))
                if c != 0.0:
                    coeffs[child] = coeffs.get(child, 0.0) + c
        groups.append(CorrectionGroup(h + (a,), tuple(members)))
    return AffineEstimate(b, coeffs, tuple(groups))


def heuristic_values(heuristic, keys: Sequence[Hashable]) -> np.ndarray:
    """Evaluate ``heuristic`` on ``keys``.

    Accepts an object with a ``values(keys)`` method, a mapping from history
    to value, or a plain callable.
    """
    if hasattr(heuristic, "values") and not isinstance(heuristic, Mapping):
        return np.asarray(heuristic.values(list(keys)), dtype=float)
    if isinstance(heuristic, Mapping):
        try:
            return np.array([heuristic[k] for k in keys], dtype=float)
        except KeyError as exc:
            raise MissingHeuristicValueError(f"heuristic has no value for {exc.args[0]!r}") from None
    if callable(heuristic):
        return np.array([heuristic(k) for k in keys], dtype=float)
    raise TypeError(f"cannot evaluate heuristic of type {type(heuristic).__name__}")


def evaluate_affine(est: AffineEstimate, heuristic) -> float:
    keys = list(est.coeffs)
    if not keys:
        return est.b
    values = heuristic_values(heuristic, keys)
    return est.b + math.fsum(est.coefficient_vector(keys) * values)


def aivat_estimate(game, z, profile, config, heuristic) -> float:
    return evaluate_affine(decompose_affine(game, z, profile, config), heuristic)


def coefficient_matrix(
    estimates: Sequence[AffineEstimate],
    vocabulary: Optional[Mapping[Hashable, int]] = None,
) -> Tuple[sparse.csr_matrix, np.ndarray, Dict[Hashable, int]]:
    """Stack estimates into ``(C, b, vocabulary)`` with ``C`` of shape (T, H).

    Without a vocabulary, columns follow first appearance. With one,
    histories outside it are dropped (their parameter is taken to be 0).
    """
    grow = vocabulary is None
    vocab: Dict[Hashable, int] = {} if grow else dict(vocabulary)
    rows, cols, vals = [], [], []
    for t, est in enumerate(estimates):
        for key, c in est.coeffs.items():
            j = vocab.get(key)
            if j is None:
                if not grow:
                    continue
                j = vocab[key] = len(vocab)
            rows.append(t)
            cols.append(j)
            vals.append(c)
    C = sparse.csr_matrix((vals, (rows, cols)), shape=(len(estimates), len(vocab)))
    b = np.array([est.b for est in estimates], dtype=float)
    return C, b, vocab


class AffineDecomposer(TransformerMixin, BaseEstimator):
    """Turn terminal histories into rows of a sparse coefficient matrix.

    Works like a vectorizer: ``fit`` learns the history vocabulary,
    ``transform`` returns ``C`` (histories unseen at fit time are dropped)
    and :meth:`offsets` returns the matching ``b`` vector.
    """

    def __init__(self, game=None, profile=None, evaluated_player=0,
                 known_players=(), use_imaginary_observations=False):
        self.game = game
        self.profile = profile
        self.evaluated_player = evaluated_player
        self.known_players = known_players
        self.use_imaginary_observations = use_imaginary_observations

    def _config(self) -> EstimatorConfig:
        return EstimatorConfig(self.evaluated_player, frozenset(self.known_players),
                               self.use_imaginary_observations)

    def decompose(self, Z) -> List[AffineEstimate]:
        if self.game is None:
            raise InvalidArgumentError("AffineDecomposer needs a game")
        return decompose_many(self.game, Z, self.profile or {}, self._config())

    def fit(self, Z, y=None):
        _, _, self.vocabulary_ = coefficient_matrix(self.decompose(Z))
        self.histories_ = list(self.vocabulary_)
        return self

    def transform(self, Z):
        check_is_fitted(self, "vocabulary_")
        C, _, _ = coefficient_matrix(self.decompose(Z), self.vocabulary_)
        return C

    def offsets(self, Z) -> np.ndarray:
        return np.array([est.b for est in self.decompose(Z)])

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "vocabulary_")
        return np.array([history_id(k) if isinstance(k, tuple) else str(k) for k in self.histories_],
                        dtype=object)


__all__ = [
    "AffineDecomposer",
    "AffineEstimate",
    "CorrectionGroup",
    "EstimatorConfig",
    "MonteCarloSummary",
    "aivat_estimate",
    "coefficient_matrix",
    "control_variate_estimate",
    "decompose_affine",
    "decompose_many",
    "evaluate_affine",
    "heuristic_values",
    "monte_carlo_summary",
    "optimal_cv_coefficient",
]
