"""MIVAT over the card deals of a recorded hold'em hand.

Each tracked card deal is one chance node with a uniform distribution over
the cards the evaluator cannot rule out: 52 minus every revealed hole card
and every earlier board card. With ``n`` candidates the realized card gets
coefficient ``1/n - 1`` and every other candidate ``1/n``. The offset ``b``
is the realized payoff in milli-big-blinds.
"""

from __future__ import annotations

from typing import Iterable, List, Sequence

from ..estimators import AffineEstimate, CorrectionGroup
from ..exceptions import DecompositionError, InvalidArgumentError
from .features import BOARD_NODES, history_key, hole_node
from .history import HandHistory

TRACKABLE = ("hole", "flop", "turn", "river")
DEFAULT_TRACKED = ("flop", "turn", "river")


def _check_tracked(tracked: Iterable[str]) -> frozenset:
    tracked = frozenset(tracked)
    unknown = tracked - set(TRACKABLE)
    if unknown:
        raise InvalidArgumentError(f"unknown chance events {sorted(unknown)}; choose from {TRACKABLE}")
    return tracked


def chance_nodes(hand: HandHistory, tracked: Iterable[str] = DEFAULT_TRACKED) -> List[tuple]:
    """``(node, realized card, candidate cards)`` for each tracked deal, in dealing order."""
    tracked = _check_tracked(tracked)
    revealed = [c for hole in hand.holes if hole for c in hole]
    nodes = []
    if "hole" in tracked:
        for seat, hole in enumerate(hand.holes):
            if hole is None:
                continue
            others = set(revealed) - set(hole)
            for index, card in enumerate(hole):
                dead = others | set(hole[:index])
                nodes.append((hole_node(seat, index), card, [c for c in range(52) if c not in dead]))
    board = hand.board_cards()
    folded = {a.seat for acts in hand.actions.values() for a in acts if a.kind == "fold"}
    showdown = hand.players - len(folded) >= 2
    for name, street, slot in BOARD_NODES:
        if street not in tracked:
            continue
        if slot >= len(board):
            if showdown:
                raise DecompositionError(f"hand {hand.id}: tracked {street} card missing from a showdown hand")
            break
        dead = set(revealed) | set(board[:slot])
        nodes.append((name, board[slot], [c for c in range(52) if c not in dead]))
    return nodes


def mivat_decompose_hand(hand: HandHistory, seat: int,
                         tracked: Iterable[str] = DEFAULT_TRACKED) -> AffineEstimate:
    """Affine estimate of ``seat``'s payoff (mbb) with board luck removed."""
    if not 0 <= seat < hand.players:
        raise InvalidArgumentError(f"seat {seat} out of range")
    b = hand.payoffs_mbb()[seat]
    coeffs, groups = {}, []
    for node, card, candidates in chance_nodes(hand, tracked):
        n = len(candidates)
        members = []
        for c in candidates:
            key = history_key(hand.id, node, c)
            coef = 1.0 / n - (1.0 if c == card else 0.0)
            members.append((key, coef))
            coeffs[key] = coeffs.get(key, 0.0) + coef
        groups.append(CorrectionGroup(history_key(hand.id, node, card), tuple(members)))
    return AffineEstimate(b, coeffs, tuple(groups))


def decompose_hands(hands: Sequence[HandHistory], seat: int,
                    tracked: Iterable[str] = DEFAULT_TRACKED) -> List[AffineEstimate]:
    return [mivat_decompose_hand(h, seat, tracked) for h in hands]


def realized_keys(hand: HandHistory, tracked: Iterable[str] = DEFAULT_TRACKED) -> List[str]:
    """Keys of the deals that actually happened (heuristic training inputs)."""
    return [history_key(hand.id, node, card) for node, card, _ in chance_nodes(hand, tracked)]


__all__ = [
    "DEFAULT_TRACKED",
    "TRACKABLE",
    "chance_nodes",
    "decompose_hands",
    "mivat_decompose_hand",
    "realized_keys",
]
