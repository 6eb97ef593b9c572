"""Leduc poker.

Rules:

* Six cards: J, Q, K in two suits (card id ``c``: rank ``c // 2``, suit
  ``c % 2``). Each player antes 1 chip.
* Chance deals player 0's private card, then player 1's, each observed only
  by its receiver; after the first betting round a public board card is
  dealt. All deals are uniform over the cards left in the deck.
* Two betting rounds, player 0 acts first in each. Bet size is 2 chips in
  round one and 4 chips in round two; at most two bets (a bet and a raise)
  per round. Actions: fold (0), check/call (1), bet/raise (2). Folding is
  only legal when facing a bet.
* A round ends on a call, or on check-check. After round two the hands are
  compared: pairing the board wins, otherwise the higher rank wins, equal
  ranks split.

History layout: ``(card0, card1, round-one actions..., board, round-two
actions...)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional

import numpy as np

from ..exceptions import InvalidHistoryError
from .base import CHANCE, GameTree, History

RANK_NAMES = ("J", "Q", "K")
FOLD, CALL, RAISE = 0, 1, 2
BET_SIZES = (2, 4)
MAX_RAISES = 2


@dataclass
class _State:
    cards: List[int] = field(default_factory=list)
    board: Optional[int] = None
    round: int = 0
    contrib: List[int] = field(default_factory=lambda: [1, 1])
    raises: int = 0
    facing: bool = False
    checked: bool = False
    to_act: int = 0
    actions: List[List[int]] = field(default_factory=lambda: [[], []])
    folded: Optional[int] = None
    showdown: bool = False
    awaiting_board: bool = False


@lru_cache(maxsize=1 << 18)
def _walk(h: History) -> _State:
    s = _State()
    for i, a in enumerate(h):
        if s.folded is not None or s.showdown:
            raise InvalidHistoryError(f"action past terminal at position {i}")
        if len(s.cards) < 2:
            s.cards.append(a)
            continue
        if s.awaiting_board:
            s.board = a
            s.awaiting_board = False
            s.round = 1
            s.raises, s.facing, s.checked, s.to_act = 0, False, False, 0
            continue
        p = s.to_act
        s.actions[s.round].append(a)
        if a == FOLD:
            s.folded = p
        elif a == CALL:
            if s.facing or s.checked:
                s.contrib[p] = max(s.contrib)
                if s.round == 0:
                    s.awaiting_board = True
                else:
                    s.showdown = True
            else:
                s.checked = True
        else:
            s.contrib[p] = max(s.contrib) + BET_SIZES[s.round]
            s.raises += 1
            s.facing = True
        s.to_act = 1 - p
    return s


def _hand_value(card: int, board: Optional[int]) -> int:
    rank = card // 2
    if board is not None and board // 2 == rank:
        return 10 + rank
    return rank


class LeducPoker(GameTree):
    name = "leduc"
    num_players = 2
    feature_dim = 9

    def is_terminal(self, h: History) -> bool:
        s = _walk(h)
        return s.folded is not None or s.showdown

    def current_player(self, h: History) -> int:
        s = _walk(h)
        if len(s.cards) < 2 or s.awaiting_board:
            return CHANCE
        return s.to_act

    def legal_actions(self, h: History):
        return _legal_actions(h)

    def chance_probabilities(self, h: History):
        n = len(self.legal_actions(h))
        return (1.0 / n,) * n

    def chance_observer(self, h: History):
        return len(h) if len(h) < 2 else None

    def utility(self, z: History) -> np.ndarray:
        return _utility(z).copy()

    def infoset_key(self, h: History, player: int) -> str:
        return _infoset_key(h, player)

    def action_label(self, h: History, a: int) -> str:
        if self.current_player(h) == CHANCE:
            return RANK_NAMES[a // 2] + "ab"[a % 2]
        return "fcr"[a]

    def pot(self, h: History) -> int:
        return sum(_walk(h).contrib)

    def features(self, h: History, player: int) -> np.ndarray:
        """Rank indicators (J reference), pair flags and signed pot."""
        s = _walk(h)
        own = s.cards[player] // 2 if len(s.cards) > player else None
        opp = s.cards[1 - player] // 2 if len(s.cards) > 1 - player else None
        board = s.board // 2 if s.board is not None else None
        sign = 0.0
        if own is not None and opp is not None:
            if board is None:
                sign = float(np.sign(own - opp))
            else:
                sign = float(np.sign(_hand_value(s.cards[player], s.board)
                                     - _hand_value(s.cards[1 - player], s.board)))
        return np.array([
            own == 1, own == 2, opp == 1, opp == 2, board == 1, board == 2,
            board is not None and own == board,
            board is not None and opp == board,
            sum(s.contrib) * sign,
        ], dtype=float)


@lru_cache(maxsize=1 << 16)
def _legal_actions(h: History):
    s = _walk(h)
    if s.folded is not None or s.showdown:
        return ()
    if len(s.cards) < 2 or s.awaiting_board:
        used = set(s.cards)
        return tuple(c for c in range(6) if c not in used)
    if not s.facing:
        return (CALL, RAISE)
    if s.raises < MAX_RAISES:
        return (FOLD, CALL, RAISE)
    return (FOLD, CALL)


@lru_cache(maxsize=1 << 16)
def _utility(z: History) -> np.ndarray:
    s = _walk(z)
    if s.folded is not None:
        loser = s.folded
    elif s.showdown:
        v0 = _hand_value(s.cards[0], s.board)
        v1 = _hand_value(s.cards[1], s.board)
        if v0 == v1:
            return np.zeros(2)
        loser = 0 if v0 < v1 else 1
    else:
        raise InvalidHistoryError("utility requested at a non-terminal history")
    out = np.zeros(2)
    out[loser] = -s.contrib[loser]
    out[1 - loser] = s.contrib[loser]
    return out


@lru_cache(maxsize=1 << 18)
def _infoset_key(h: History, player: int) -> str:
    s = _walk(h)
    card = RANK_NAMES[s.cards[player] // 2] if len(s.cards) > player else "?"
    board = RANK_NAMES[s.board // 2] if s.board is not None else "-"
    rounds = "/".join("".join("fcr"[a] for a in acts) for acts in s.actions)
    return f"{player}:{card}:{board}:{rounds}"

