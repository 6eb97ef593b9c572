"""Synthetic hold'em hands for tests and demos.

Players follow a crude strength-driven policy with one bet and one raise
per street, so hands are short but cover folds, checks, calls, bets and
raises. All hole cards are recorded, as in a post-hoc dataset.
"""

from __future__ import annotations

from typing import List, Sequence

import numpy as np

from ..exceptions import InvalidArgumentError
from .cards import evaluate_many
from .history import STREETS, Action, HandHistory

_BOARD_SLICES = {"flop": (0, 3), "turn": (3, 4), "river": (4, 5)}


def _strength(hole: Sequence[int], board: Sequence[int]) -> float:
    """Cheap strength proxy in [0, 1]: made-hand category postflop, card ranks preflop."""
    if len(board) >= 3:
        score = evaluate_many(np.array([list(hole) + list(board)]))[0]
        category = score // 13 ** 5
        return min(1.0, (category + 1) / 5.0)
    r1, r2 = hole[0] // 4, hole[1] // 4
    return min(1.0, (r1 + r2) / 24.0 + (0.3 if r1 == r2 else 0.0))


def _betting_round(rng, street, order, active, contrib, bet_unit, actions, strength, preflop_level):
    level = preflop_level
    street_put = {s: 0.0 for s in order}
    if street == "preflop":
        street_put = {s: contrib[s] for s in order}
    raises = 0
    to_act = [s for s in order if s in active]
    pending = list(to_act)
    while pending and len(active) > 1:
        seat = pending.pop(0)
        if seat not in active:
            continue
        s = strength[seat]
        owe = level - street_put[seat]
        u = rng.random()
        if owe > 0:
            if u < 0.35 * (1 - s) ** 2:
                actions.append(Action(seat, "fold", 0))
                active.discard(seat)
                continue
            if raises < 2 and u > 1 - 0.5 * s * s:
                amount = owe + bet_unit
                level += bet_unit
                raises += 1
                actions.append(Action(seat, "raise", amount))
                street_put[seat] += amount
                contrib[seat] += amount
                pending = [x for x in _rotate(to_act, seat) if x in active and x != seat]
                continue
            actions.append(Action(seat, "call", owe))
            street_put[seat] += owe
            contrib[seat] += owe
        else:
            if raises < 2 and u > 1 - 0.6 * s:
                level += bet_unit
                raises += 1
                kind = "raise" if street == "preflop" else "bet"
                actions.append(Action(seat, kind, bet_unit))
                street_put[seat] += bet_unit
                contrib[seat] += bet_unit
                pending = [x for x in _rotate(to_act, seat) if x in active and x != seat]
                continue
            actions.append(Action(seat, "check", 0))


def _rotate(order: List[int], seat: int) -> List[int]:
    i = order.index(seat)
    return order[i + 1:] + order[:i + 1]


def generate_hand(rng: np.random.Generator, hand_id: str, players: int = 2,
                  blinds=(50, 100), stack: float = 20000) -> HandHistory:
    if not 2 <= players <= 6:
        raise InvalidArgumentError("players must be between 2 and 6")
    button = int(rng.integers(players))
    deck = rng.permutation(52)
    holes = [tuple(int(c) for c in deck[2 * s:2 * s + 2]) for s in range(players)]
    board_all = [int(c) for c in deck[2 * players:2 * players + 5]]
    sb, bb = blinds
    if players == 2:
        sb_seat, bb_seat = button, (button + 1) % 2
        pre_order = [sb_seat, bb_seat]
        post_order = [bb_seat, sb_seat]
    else:
        sb_seat, bb_seat = (button + 1) % players, (button + 2) % players
        pre_order = [(bb_seat + 1 + i) % players for i in range(players)]
        post_order = [(button + 1 + i) % players for i in range(players)]
    contrib = {s: 0.0 for s in range(players)}
    contrib[sb_seat] += sb
    contrib[bb_seat] += bb
    active = set(range(players))
    actions = {s: [] for s in STREETS}
    board = {"flop": (), "turn": (), "river": ()}
    for street in STREETS:
        if len(active) < 2:
            break
        dealt = []
        if street != "preflop":
            lo, hi = _BOARD_SLICES[street]
            board[street] = tuple(board_all[lo:hi])
        for st in ("flop", "turn", "river"):
            dealt.extend(board[st])
        strength = {s: _strength(holes[s], dealt) for s in active}
        unit = bb if street in ("preflop", "flop") else 2 * bb
        order = pre_order if street == "preflop" else post_order
        _betting_round(rng, street, order, active, contrib, unit, actions[street], strength,
                       bb if street == "preflop" else 0.0)
    pot = sum(contrib.values())
    winnings = {s: 0.0 for s in range(players)}
    if len(active) == 1:
        winnings[next(iter(active))] = pot
    else:
        full = board_all
        seats = sorted(active)
        scores = evaluate_many(np.array([list(holes[s]) + full for s in seats]))
        best = scores.max()
        winners = [s for s, sc in zip(seats, scores) if sc == best]
        share, odd = divmod(int(pot), len(winners))
        for s in winners:
            winnings[s] = float(share)
        # odd chips go to the first winner left of the button
        first = min(winners, key=lambda s: (s - button - 1) % players)
        winnings[first] += odd + (pot - int(pot))
    payoffs = tuple(_chips(winnings[s] - contrib[s]) for s in range(players))
    return HandHistory(
        id=hand_id,
        players=players,
        button=button,
        blinds=(_chips(sb), _chips(bb)),
        stacks=tuple(_chips(stack) for _ in range(players)),
        names=tuple(f"p{s}" for s in range(players)),
        holes=tuple(holes),
        board=board,
        actions={s: tuple(Action(a.seat, a.kind, _chips(a.amount)) for a in actions[s]) for s in STREETS},
        payoffs=payoffs,
    )


def _chips(x: float):
    x = float(x)
    return int(x) if x.is_integer() else x


def generate_hands(n: int, seed: int, players: int = 2, blinds=(50, 100),
                   prefix: str = "h") -> List[HandHistory]:
    """``n`` hands from one seeded generator; deterministic in ``(n, seed, players, blinds)``."""
    if n < 0:
        raise InvalidArgumentError("n must be non-negative")
    rng = np.random.default_rng(seed)
    return [generate_hand(rng, f"{prefix}{i}", players, blinds) for i in range(n)]


__all__ = ["generate_hand", "generate_hands"]
