"""Hold'em hand histories, one JSON object per line.

Record layout (keys in canonical order)::

    {"id": "h17", "players": 2, "button": 0, "blinds": [50, 100],
     "stacks": [10000, 10000], "names": ["alice", "bob"],
     "holes": [["As", "Kd"], null],
     "board": {"flop": ["2c", "7h", "Td"], "turn": ["Js"], "river": []},
     "actions": {"preflop": [[0, "call", 50], [1, "check", 0]], "flop": [], "turn": [], "river": []},
     "payoffs": [-100, 100]}

Seats are 0-based. Unknown hole cards are ``null``. An action amount is
the number of chips that action puts into the pot; blinds are posted
implicitly by the seats after the button (the button itself posts the
small blind heads-up). Payoffs are net chips per seat and must sum to zero.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from ..exceptions import InvalidDataError, ParseError
from .cards import Card, parse_cards

STREETS = ("preflop", "flop", "turn", "river")
BOARD_SIZES = {"flop": 3, "turn": 1, "river": 1}
ACTION_KINDS = ("fold", "check", "call", "bet", "raise")
MAX_SEATS = 6


@dataclass(frozen=True)
class Action:
    seat: int
    kind: str
    amount: float = 0.0


@dataclass(frozen=True)
class HandHistory:
    id: str
    players: int
    button: int
    blinds: Tuple[float, float]
    stacks: Tuple[float, ...]
    names: Tuple[str, ...]
    holes: Tuple[Optional[Tuple[int, int]], ...]
    board: Dict[str, Tuple[int, ...]]
    actions: Dict[str, Tuple[Action, ...]]
    payoffs: Tuple[float, ...]

    @property
    def big_blind(self) -> float:
        return self.blinds[1]

    def board_cards(self, upto: str = "river") -> List[int]:
        cards: List[int] = []
        for street in ("flop", "turn", "river"):
            if STREETS.index(street) > STREETS.index(upto):
                break
            cards.extend(self.board[street])
        return cards

    def known_cards(self) -> List[int]:
        cards = [c for hole in self.holes if hole for c in hole]
        return cards + self.board_cards()

    def payoffs_mbb(self) -> Tuple[float, ...]:
        """Net payoffs in milli-big-blinds."""
        return tuple(p * 1000.0 / self.big_blind for p in self.payoffs)

    def blind_seats(self) -> Tuple[int, int]:
        if self.players == 2:
            return self.button, (self.button + 1) % 2
        return (self.button + 1) % self.players, (self.button + 2) % self.players

    def pot_before(self, street: str) -> float:
        """Chips in the pot when ``street``'s betting begins."""
        pot = self.blinds[0] + self.blinds[1]
        for s in STREETS[:STREETS.index(street)]:
            pot += sum(a.amount for a in self.actions[s])
        return pot

    def folded_before(self, street: str) -> frozenset:
        return frozenset(a.seat for s in STREETS[:STREETS.index(street)]
                         for a in self.actions[s] if a.kind == "fold")

    def active_before(self, street: str) -> List[int]:
        folded = self.folded_before(street)
        return [s for s in range(self.players) if s not in folded]


def _cards_text(ids: Iterable[int]) -> List[str]:
    return [str(Card(c)) for c in ids]


def to_record(hand: HandHistory) -> dict:
    return {
        "id": hand.id,
        "players": hand.players,
        "button": hand.button,
        "blinds": list(hand.blinds),
        "stacks": list(hand.stacks),
        "names": list(hand.names),
        "holes": [_cards_text(h) if h else None for h in hand.holes],
        "board": {s: _cards_text(hand.board[s]) for s in ("flop", "turn", "river")},
        "actions": {s: [[a.seat, a.kind, a.amount] for a in hand.actions[s]] for s in STREETS},
        "payoffs": list(hand.payoffs),
    }


def serialize(hand: HandHistory) -> str:
    return json.dumps(to_record(hand), separators=(",", ":"))


def _num(x):
    """Keep integral chip counts as ints so records round-trip textually."""
    x = float(x)
    return int(x) if x.is_integer() else x


class _Fields:
    """Field access that reports the column of the offending key."""

    def __init__(self, record: dict, text: str, line: int):
        self.record, self.text, self.line = record, text, line

    def error(self, key: str, message: str) -> ParseError:
        pos = self.text.find(f'"{key}"')
        return ParseError(message, self.line, pos + 1 if pos >= 0 else 1)

    def get(self, key: str, kind=None, default=...):
        if key not in self.record:
            if default is not ...:
                return default
            raise self.error(key, f"missing field {key!r}")
        value = self.record[key]
        if kind is not None and not isinstance(value, kind):
            raise self.error(key, f"field {key!r} has the wrong type")
        return value


def _parse_cards_field(f: _Fields, key: str, value) -> Tuple[int, ...]:
    try:
        return tuple(parse_cards(value))
    except Exception as exc:
        raise f.error(key, f"bad cards in {key!r}: {exc}") from None


def from_record(record: dict, text: str = "", line: int = 1, validate: bool = True) -> HandHistory:
    if not isinstance(record, dict):
        raise ParseError("hand record must be a JSON object", line, 1)
    f = _Fields(record, text, line)
    players = f.get("players", int)
    if not 2 <= players <= MAX_SEATS:
        raise f.error("players", f"players must be between 2 and {MAX_SEATS}")
    blinds = f.get("blinds", list)
    if len(blinds) != 2 or not all(isinstance(b, (int, float)) and b > 0 for b in blinds):
        raise f.error("blinds", "blinds must be two positive numbers")
    stacks = f.get("stacks", list, [0] * players)
    names = f.get("names", list, [f"p{i}" for i in range(players)])
    holes_raw = f.get("holes", list)
    payoffs = f.get("payoffs", list)
    for key, seq in (("stacks", stacks), ("names", names), ("holes", holes_raw), ("payoffs", payoffs)):
        if len(seq) != players:
            raise f.error(key, f"{key!r} needs one entry per seat")
    holes = []
    for h in holes_raw:
        if h is None:
            holes.append(None)
            continue
        cards = _parse_cards_field(f, "holes", h)
        if len(cards) != 2:
            raise f.error("holes", "each known hole must have 2 cards")
        holes.append(cards)
    board_raw = f.get("board", dict, {})
    board = {}
    for street, size in BOARD_SIZES.items():
        cards = _parse_cards_field(f, "board", board_raw.get(street, []))
        if len(cards) not in (0, size):
            raise f.error("board", f"{street} must have {size} cards or none")
        board[street] = cards
    actions_raw = f.get("actions", dict, {})
    actions = {}
    for street in STREETS:
        acts = []
        for item in actions_raw.get(street, []):
            if not (isinstance(item, list) and len(item) == 3):
                raise f.error("actions", "each action is [seat, kind, amount]")
            seat, kind, amount = item
            if not isinstance(seat, int) or not 0 <= seat < players:
                raise f.error("actions", f"bad seat {seat!r}")
            if kind not in ACTION_KINDS:
                raise f.error("actions", f"unknown action {kind!r}")
            if not isinstance(amount, (int, float)) or amount < 0:
                raise f.error("actions", f"bad amount {amount!r}")
            acts.append(Action(seat, kind, _num(amount)))
        actions[street] = tuple(acts)
    button = f.get("button", int, 0)
    if not 0 <= button < players:
        raise f.error("button", "button seat out of range")
    if not all(isinstance(p, (int, float)) for p in payoffs):
        raise f.error("payoffs", "payoffs must be numbers")
    hand = HandHistory(
        id=str(f.get("id")),
        players=players,
        button=button,
        blinds=(_num(blinds[0]), _num(blinds[1])),
        stacks=tuple(_num(s) for s in stacks),
        names=tuple(str(n) for n in names),
        holes=tuple(holes),
        board=board,
        actions=actions,
        payoffs=tuple(_num(p) for p in payoffs),
    )
    if validate:
        validate_hand(hand)
    return hand


def validate_hand(hand: HandHistory) -> None:
    """Card distinctness, zero-sum payoffs and stub action legality."""
    cards = hand.known_cards()
    if len(set(cards)) != len(cards):
        dup = sorted({c for c in cards if cards.count(c) > 1})
        raise InvalidDataError(f"hand {hand.id}: duplicate cards {' '.join(_cards_text(dup))}")
    total = math.fsum(hand.payoffs)
    if abs(total) > 1e-9 * max(1.0, max(abs(p) for p in hand.payoffs)):
        raise InvalidDataError(f"hand {hand.id}: payoffs sum to {total}, not 0")
    if (hand.board["turn"] and not hand.board["flop"]) or (hand.board["river"] and not hand.board["turn"]):
        raise InvalidDataError(f"hand {hand.id}: board streets out of order")
    folded = set()
    for street in STREETS:
        acts = hand.actions[street]
        if acts and street != "preflop" and not hand.board[street]:
            raise InvalidDataError(f"hand {hand.id}: {street} actions without {street} cards")
        previous = None
        for a in acts:
            if a.seat in folded:
                raise InvalidDataError(f"hand {hand.id}: seat {a.seat} acts after folding")
            if a.seat == previous:
                raise InvalidDataError(f"hand {hand.id}: seat {a.seat} acts twice in a row")
            if a.kind == "fold":
                folded.add(a.seat)
            previous = a.seat
    if len(folded) >= hand.players:
        raise InvalidDataError(f"hand {hand.id}: every seat folded")


def parse_hand(line: str, line_number: int = 1, validate: bool = True) -> HandHistory:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line_number, exc.colno) from None
    return from_record(record, line, line_number, validate)


def iter_hands(lines: Iterable[str], validate: bool = True) -> Iterator[HandHistory]:
    """Parse a JSON-lines stream; blank lines and ``#`` comments are skipped."""
    for i, line in enumerate(lines, 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        yield parse_hand(s, i, validate)


def read_hands(path, validate: bool = True) -> List[HandHistory]:
    with open(path, encoding="utf-8") as fh:
        return list(iter_hands(fh, validate))


def write_hands(path, hands: Sequence[HandHistory], header: Optional[dict] = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header is not None:
            fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        for hand in hands:
            fh.write(serialize(hand) + "\n")


__all__ = [
    "ACTION_KINDS",
    "Action",
    "BOARD_SIZES",
    "HandHistory",
    "MAX_SEATS",
    "STREETS",
    "from_record",
    "iter_hands",
    "parse_hand",
    "read_hands",
    "serialize",
    "to_record",
    "validate_hand",
    "write_hands",
]
