"""Hand strength against a uniformly random opponent hand.

``hs`` is the expected probability of beating one random opponent hole
pair (ties count one half), averaged over the unseen board cards. ``hs2``
is the expectation of the *squared* win probability over board
completions, so it rewards hands whose strength is already settled.

Exact mode enumerates every board completion and opponent pair (flop,
turn and river only). Monte Carlo mode samples a completion and two
independent opponent pairs per draw; their win indicators multiply to an
unbiased estimate of the squared win probability.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence, Tuple

import numpy as np

from ..exceptions import InvalidArgumentError, MissingSeedError
from .cards import evaluate_many, hole_pairs, parse_cards, remaining_deck


@dataclass(frozen=True)
class StrengthMode:
    """``kind`` is "exact" or "mc"; mc needs ``samples`` and a ``seed``."""

    kind: str = "exact"
    samples: int = 1000
    seed: Optional[int] = None

    @classmethod
    def exact(cls) -> "StrengthMode":
        return cls("exact")

    @classmethod
    def mc(cls, samples: int = 1000, seed: Optional[int] = None) -> "StrengthMode":
        return cls("mc", samples, seed)


def _check_cards(hole: Sequence[int], board: Sequence[int]):
    hole = parse_cards(hole)
    board = parse_cards(board)
    if len(hole) != 2:
        raise InvalidArgumentError("hole must have exactly 2 cards")
    if len(board) not in (0, 1, 2, 3, 4, 5):
        raise InvalidArgumentError("board must have at most 5 cards")
    if len(set(hole + board)) != len(hole) + len(board):
        raise InvalidArgumentError("duplicate cards between hole and board")
    return hole, board


def _river_win_probability(hole: Sequence[int], board: Sequence[int]) -> float:
    """Win probability (ties 1/2) against all pairs from the unseen cards."""
    deck = remaining_deck(list(hole) + list(board))
    opps = hole_pairs(deck)
    board = np.asarray(board, dtype=np.int64)
    hero = evaluate_many(np.array([list(hole) + list(board)]))[0]
    rows = np.hstack([opps, np.broadcast_to(board, (len(opps), 5))])
    villain = evaluate_many(rows)
    return float(np.mean((hero > villain) + 0.5 * (hero == villain)))


def _exact(hole, board) -> Tuple[float, float]:
    missing = 5 - len(board)
    if missing > 2:
        raise InvalidArgumentError("exact hand strength needs at least a flop; use mc mode")
    if missing == 0:
        r = _river_win_probability(hole, board)
        return r, r * r
    deck = remaining_deck(list(hole) + list(board))
    rs = np.array([_river_win_probability(hole, list(board) + list(extra))
                   for extra in combinations(deck.tolist(), missing)])
    return float(rs.mean()), float(np.mean(rs * rs))


def _mc(hole, board, samples: int, seed: int) -> Tuple[float, float]:
    if samples < 1:
        raise InvalidArgumentError("samples must be positive")
    rng = np.random.default_rng(seed)
    deck = remaining_deck(list(hole) + list(board))
    missing = 5 - len(board)
    n = len(deck)
    # one permutation gives the completion and the first opponent; the second
    # opponent is drawn from the same post-completion deck independently
    perm = np.argsort(rng.random((samples, n)), axis=1)
    completion = deck[perm[:, :missing]]
    opp1 = deck[perm[:, missing:missing + 2]]
    keys = rng.random((samples, n))
    np.put_along_axis(keys, perm[:, :missing], 2.0, axis=1)
    opp2 = deck[np.argsort(keys, axis=1)[:, :2]]
    full_board = np.hstack([np.broadcast_to(np.asarray(board, dtype=np.int64), (samples, len(board))), completion])
    hero = evaluate_many(np.hstack([np.broadcast_to(np.asarray(hole, dtype=np.int64), (samples, 2)), full_board]))
    v1 = evaluate_many(np.hstack([opp1, full_board]))
    v2 = evaluate_many(np.hstack([opp2, full_board]))
    w1 = (hero > v1) + 0.5 * (hero == v1)
    w2 = (hero > v2) + 0.5 * (hero == v2)
    return float(w1.mean()), float(np.mean(w1 * w2))


def hand_strength(hole, board=(), mode: StrengthMode = StrengthMode.exact()) -> Tuple[float, float]:
    """``(hs, hs2)`` for a hole pair on a partial or complete board."""
    hole, board = _check_cards(hole, board)
    if mode.kind == "exact":
        return _exact(hole, board)
    if mode.kind == "mc":
        if mode.seed is None:
            raise MissingSeedError("Monte Carlo hand strength needs a seed")
        return _mc(hole, board, mode.samples, mode.seed)
    raise InvalidArgumentError(f"unknown hand-strength mode {mode.kind!r}")


__all__ = ["StrengthMode", "hand_strength"]
