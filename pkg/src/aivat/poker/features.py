"""Street snapshots and hand-strength features for hold'em heuristics.

A snapshot describes the state right after a chance deal: the pot, the
seats still in the hand and each seat's hand strength on the board dealt
so far. The feature vector is

    [pot] ++ for each seat slot: [g(pot, HS), g(pot, HS2)]

with seat slots rotated so the evaluated seat comes first, folded or
unknown seats left at 0, and ``n`` the number of seats still in the hand.
How ``pot``, the strength and ``n`` combine is configurable:

    "pot-hs-pow"   pot * HS**n        (default)
    "pot-hs-all-pow"  (pot * HS)**n
    "pot-pow-hs"   pot**n * HS
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from ..exceptions import InvalidArgumentError, MissingHeuristicValueError
from ..heuristics import FeatureMap
from .cards import Card
from .history import MAX_SEATS, HandHistory
from .strength import StrengthMode, hand_strength

INTERPRETATIONS = ("pot-hs-pow", "pot-hs-all-pow", "pot-pow-hs")
FEATURE_DIM = 1 + 2 * MAX_SEATS

# chance nodes in dealing order: (node name, street whose betting follows, board slot)
BOARD_NODES = (
    ("flop1", "flop", 0),
    ("flop2", "flop", 1),
    ("flop3", "flop", 2),
    ("turn", "turn", 3),
    ("river", "river", 4),
)
NODE_STREET = {name: street for name, street, _ in BOARD_NODES}
NODE_SLOT = {name: slot for name, _, slot in BOARD_NODES}


@dataclass(frozen=True)
class StreetSnapshot:
    street: str
    pot: float
    non_folded: int
    hs: Tuple[Optional[float], ...]
    hs2: Tuple[Optional[float], ...]

    def __post_init__(self):
        for v in self.hs + self.hs2:
            if v is not None and not 0.0 <= v <= 1.0:
                raise InvalidArgumentError("hand strength must lie in [0, 1]")


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from arbitrary parts (independent of PYTHONHASHSEED)."""
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def hole_node(seat: int, index: int) -> str:
    return f"hole{seat}.{index}"


def _parse_hole_node(node: str) -> Tuple[int, int]:
    seat, index = node[4:].split(".")
    return int(seat), int(index)


def node_state(hand: HandHistory, node: str, card: Optional[int] = None):
    """Holes, board and following street right after ``node`` is dealt.

    ``card`` replaces the card dealt at ``node``; later deals are dropped.
    """
    holes = [list(h) if h else None for h in hand.holes]
    board = hand.board_cards()
    if node.startswith("hole"):
        seat, index = _parse_hole_node(node)
        if card is not None:
            holes[seat][index] = card
        return holes, [], "preflop"
    slot = NODE_SLOT[node]
    board = board[:slot + 1]
    if card is not None:
        board[slot] = card
    return holes, board, NODE_STREET[node]


def snapshot(hand: HandHistory, node: str, card: Optional[int] = None,
             samples: int = 1000, seed: int = 0) -> StreetSnapshot:
    """Snapshot after ``node`` (optionally with a substituted card).

    River strength is exact; earlier streets use ``samples`` Monte Carlo
    draws seeded from ``(seed, hand id, node, card, seat)``.
    """
    holes, board, street = node_state(hand, node, card)
    active = hand.active_before(street)
    hs, hs2 = [None] * hand.players, [None] * hand.players
    for seat in active:
        if holes[seat] is None:
            continue
        if len(board) == 5:
            mode = StrengthMode.exact()
        else:
            mode = StrengthMode.mc(samples, derive_seed(seed, hand.id, node, card, seat))
        hs[seat], hs2[seat] = hand_strength(holes[seat], board, mode)
    return StreetSnapshot(street, hand.pot_before(street), len(active), tuple(hs), tuple(hs2))


def _combine(pot: float, strength: float, n: int, interpretation: str) -> float:
    if interpretation == "pot-hs-pow":
        return pot * strength ** n
    if interpretation == "pot-hs-all-pow":
        return (pot * strength) ** n
    if interpretation == "pot-pow-hs":
        return pot ** n * strength
    raise InvalidArgumentError(f"unknown feature interpretation {interpretation!r}; choose from {INTERPRETATIONS}")


def extract_features(hand: HandHistory, snap: StreetSnapshot, hero: int = 0,
                     interpretation: str = "pot-hs-pow") -> np.ndarray:
    """Feature vector of length ``1 + 2 * MAX_SEATS``; the pot is in big blinds."""
    pot = snap.pot / hand.big_blind
    phi = np.zeros(FEATURE_DIM)
    phi[0] = pot
    for slot in range(hand.players):
        seat = (hero + slot) % hand.players
        if snap.hs[seat] is None:
            continue
        phi[1 + 2 * slot] = _combine(pot, snap.hs[seat], snap.non_folded, interpretation)
        phi[2 + 2 * slot] = _combine(pot, snap.hs2[seat], snap.non_folded, interpretation)
    return phi


def history_key(hand_id: str, node: str, card: int) -> str:
    return f"{hand_id}|{node}|{Card(card)}"


def parse_history_key(key: str) -> Tuple[str, str, int]:
    hand_id, node, card = key.rsplit("|", 2)
    return hand_id, node, Card.parse(card).id


class HoldemFeatures:
    """Features for ``"hand|node|card"`` history keys over a corpus, cached.

    Snapshots are shared between seats; only the rotation differs.
    """

    def __init__(self, hands: Iterable[HandHistory], interpretation: str = "pot-hs-pow",
                 samples: int = 1000, seed: int = 0):
        if interpretation not in INTERPRETATIONS:
            raise InvalidArgumentError(f"unknown feature interpretation {interpretation!r}")
        self.hands: Dict[str, HandHistory] = {h.id: h for h in hands}
        self.interpretation = interpretation
        self.samples = samples
        self.seed = seed
        self._snapshots: Dict[str, StreetSnapshot] = {}

    def snapshot(self, key: str) -> StreetSnapshot:
        snap = self._snapshots.get(key)
        if snap is None:
            hand_id, node, card = parse_history_key(key)
            try:
                hand = self.hands[hand_id]
            except KeyError:
                raise MissingHeuristicValueError(f"unknown hand {hand_id!r}") from None
            snap = self._snapshots[key] = snapshot(hand, node, card, self.samples, self.seed)
        return snap

    def features(self, key: str, hero: int) -> np.ndarray:
        hand_id, _, _ = parse_history_key(key)
        return extract_features(self.hands[hand_id], self.snapshot(key), hero, self.interpretation)

    def feature_map(self, hero: int) -> FeatureMap:
        return FeatureMap(FEATURE_DIM, lambda key: self.features(key, hero), f"holdem:{self.interpretation}")


__all__ = [
    "BOARD_NODES",
    "FEATURE_DIM",
    "HoldemFeatures",
    "INTERPRETATIONS",
    "StreetSnapshot",
    "derive_seed",
    "extract_features",
    "history_key",
    "hole_node",
    "node_state",
    "parse_history_key",
    "snapshot",
]
