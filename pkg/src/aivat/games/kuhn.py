"""Kuhn poker.

Rules:

* Deck J, Q, K (card ids 0, 1, 2). Each player antes 1 chip.
* Chance deals player 0's card, then player 1's card (two chance nodes,
  uniform over the cards still in the deck). Each deal is observed only by
  the receiving player.
* One betting round, player 0 first. Actions are pass (0) and bet (1); a
  bet is 1 chip. Facing a bet, pass folds and bet calls.
* Terminal sequences: pp, bp, bb, pbp, pbb. Showdowns go to the higher card.

History layout: ``(card0, card1, action, action, ...)``.
"""

from __future__ import annotations

import numpy as np

from .base import CHANCE, GameTree, History

CARD_NAMES = ("J", "Q", "K")
PASS, BET = 0, 1
_TERMINAL = {(0, 0), (0, 1, 0), (0, 1, 1), (1, 0), (1, 1)}


class KuhnPoker(GameTree):
    name = "kuhn"
    num_players = 2
    feature_dim = 5

    def is_terminal(self, h: History) -> bool:
        return len(h) >= 2 and tuple(h[2:]) in _TERMINAL

    def current_player(self, h: History) -> int:
        if len(h) < 2:
            return CHANCE
        return (len(h) - 2) % 2

    def legal_actions(self, h: History):
        if len(h) == 0:
            return (0, 1, 2)
        if len(h) == 1:
            return tuple(c for c in range(3) if c != h[0])
        if self.is_terminal(h):
            return ()
        return (PASS, BET)

    def chance_probabilities(self, h: History):
        n = 3 - len(h)
        return (1.0 / n,) * n

    def chance_observer(self, h: History):
        return len(h) if len(h) < 2 else None

    def _contributions(self, h: History):
        contrib = [1, 1]
        facing = False
        for i, a in enumerate(h[2:]):
            p = i % 2
            if a == BET:
                contrib[p] += 1
                facing = not facing
            elif facing:
                break
        return contrib

    def utility(self, z: History) -> np.ndarray:
        actions = tuple(z[2:])
        if actions == (0, 1, 0):
            return np.array([-1.0, 1.0])
        if actions == (1, 0):
            return np.array([1.0, -1.0])
        stake = 2.0 if BET in actions else 1.0
        sign = 1.0 if z[0] > z[1] else -1.0
        return np.array([sign * stake, -sign * stake])

    def infoset_key(self, h: History, player: int) -> str:
        card = CARD_NAMES[h[player]] if len(h) > player else "?"
        public = "".join("pb"[a] for a in h[2:])
        return f"{player}:{card}:{public}"

    def action_label(self, h: History, a: int) -> str:
        if len(h) < 2:
            return CARD_NAMES[a]
        return "pb"[a]

    def features(self, h: History, player: int) -> np.ndarray:
        """Card indicators (J is the reference level) and signed pot.

        No coordinate is constant within a correction group, which keeps the
        closed-form linear heuristic well posed.
        """
        own = h[player] if len(h) > player else None
        opp = h[1 - player] if len(h) > 1 - player else None
        pot = float(sum(self._contributions(h))) if len(h) >= 2 else 2.0
        sign = 0.0
        if own is not None and opp is not None:
            sign = 1.0 if own > opp else -1.0
        return np.array([
            own == 1, own == 2, opp == 1, opp == 2, pot * sign,
        ], dtype=float)
