"""Extensive-form game interface.

A history is a tuple of integer action labels. Chance actions carry the
label of the outcome (for card games, the card id), so that the same label
keeps its meaning when earlier private outcomes are swapped out.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Optional, Sequence, Tuple

import numpy as np

from ..exceptions import InvalidHistoryError

CHANCE = -1

History = Tuple[int, ...]


def history_id(h: Sequence[int]) -> str:
    """Canonical string id of a history (``"."``-joined labels, root is ``""``)."""
    return ".".join(str(a) for a in h)


def parse_history_id(text: str) -> History:
    if text == "":
        return ()
    try:
        return tuple(int(part) for part in text.split("."))
    except ValueError as exc:
        raise InvalidHistoryError(f"malformed history id {text!r}") from exc


class GameTree(ABC):
    """Abstract extensive-form game.

    Subclasses describe the rules; every traversal routine lives in
    :mod:`aivat.games.analysis` and only talks to this interface.
    """

    name: str = "game"
    num_players: int = 2

    @property
    def players(self) -> Tuple[int, ...]:
        return (CHANCE,) + tuple(range(self.num_players))

    def root(self) -> History:
        return ()

    @abstractmethod
    def is_terminal(self, h: History) -> bool: ...

    @abstractmethod
    def current_player(self, h: History) -> int:
        """Acting player at a non-terminal history (``CHANCE`` for chance)."""

    @abstractmethod
    def legal_actions(self, h: History) -> Tuple[int, ...]: ...

    @abstractmethod
    def chance_probabilities(self, h: History) -> Tuple[float, ...]:
        """Distribution over ``legal_actions(h)`` at a chance node."""

    @abstractmethod
    def utility(self, z: History) -> np.ndarray:
        """Per-player payoff vector at a terminal history, in chips."""

    @abstractmethod
    def infoset_key(self, h: History, player: int) -> str: ...

    def chance_observer(self, h: History) -> Optional[int]:
        """Player who privately observes the outcome of chance node ``h``.

        ``None`` means the outcome is public (or there is no private
        information at all, which makes every imaginary-observation set a
        singleton).
        """
        return None

    def action_label(self, h: History, a: int) -> str:
        return str(a)

    # feature maps are optional; heuristics that need them check feature_dim
    feature_dim: int = 0

    def features(self, h: History, player: int) -> np.ndarray:
        raise NotImplementedError(f"{self.name} defines no feature map")

    def is_valid(self, h: Sequence[int]) -> bool:
        prefix: History = ()
        for a in h:
            if self.is_terminal(prefix) or a not in self.legal_actions(prefix):
                return False
            prefix = prefix + (a,)
        return True

    def check_history(self, h: Sequence[int]) -> History:
        h = tuple(int(a) for a in h)
        if not self.is_valid(h):
            raise InvalidHistoryError(f"{history_id(h)!r} is not a valid {self.name} history")
        return h

    def chance_probability(self, h: History, a: int) -> float:
        actions = self.legal_actions(h)
        return self.chance_probabilities(h)[actions.index(a)]

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


class ExplicitGame(GameTree):
    """A game given as an explicit nested tree, handy for tiny fixtures.

    Nodes are dicts. Terminal nodes hold ``{"utility": [u0, u1, ...]}``.
    Chance nodes hold ``{"player": -1, "probs": [...], "children": [...]}``
    and may name an ``"observer"``. Player nodes hold ``{"player": i,
    "children": [...]}`` and may set an ``"infoset"`` key; without one the
    history id itself is used.
    """

    def __init__(self, tree: dict, num_players: int = 2, name: str = "explicit"):
        self.tree = tree
        self.num_players = num_players
        self.name = name

    def _node(self, h: History) -> dict:
        node = self.tree
        for a in h:
            children = node.get("children")
            if children is None or not 0 <= a < len(children):
                raise InvalidHistoryError(f"{history_id(h)!r} is not a valid {self.name} history")
            node = children[a]
        return node

    def is_terminal(self, h):
        return "utility" in self._node(h)

    def current_player(self, h):
        return self._node(h)["player"]

    def legal_actions(self, h):
        node = self._node(h)
        return tuple(range(len(node.get("children", ()))))

    def chance_probabilities(self, h):
        return tuple(self._node(h)["probs"])

    def utility(self, z):
        return np.asarray(self._node(z)["utility"], dtype=float)

    def infoset_key(self, h, player):
        node = self._node(h)
        return str(node.get("infoset", f"{node.get('player')}:{history_id(h)}"))

    def chance_observer(self, h):
        return self._node(h).get("observer")
