"""Cards and a table-driven 7-card hand evaluator.

Card ids run 0..51 as ``rank * 4 + suit`` with ranks ``23456789TJQKA``
(0..12) and suits ``cdhs``. A hand score is

    category * 13**5 + kickers

where ``category`` is 0 (high card) .. 8 (straight flush) and ``kickers``
packs the ranks that break ties as base-13 digits, most significant first.
Higher scores win and equal scores tie.

Scores for hands without a flush depend only on the rank multiset, so they
are precomputed for every multiset of 5..7 ranks (keyed by ``sum
count[r] * 5**r``). Flush hands are looked up by the 13-bit rank mask of the
flush suit.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from ..exceptions import InvalidArgumentError

RANKS = "23456789TJQKA"
SUITS = "cdhs"
CATEGORIES = (
    "high card", "pair", "two pair", "three of a kind", "straight",
    "flush", "full house", "four of a kind", "straight flush",
)
BASE = 13 ** 5
_KICKERS = (5, 4, 3, 3, 1, 5, 2, 2, 1)
_POW5 = 5 ** np.arange(13, dtype=np.int64)


@dataclass(frozen=True, order=True)
class Card:
    id: int

    def __post_init__(self):
        if not 0 <= self.id < 52:
            raise InvalidArgumentError(f"card id {self.id} out of range")

    @property
    def rank(self) -> int:
        return self.id // 4

    @property
    def suit(self) -> int:
        return self.id % 4

    @classmethod
    def parse(cls, text: str) -> "Card":
        if len(text) != 2 or text[0] not in RANKS or text[1] not in SUITS:
            raise InvalidArgumentError(f"bad card {text!r}")
        return cls(RANKS.index(text[0]) * 4 + SUITS.index(text[1]))

    def __str__(self) -> str:
        return RANKS[self.rank] + SUITS[self.suit]


def card_id(card) -> int:
    if isinstance(card, Card):
        return card.id
    if isinstance(card, str):
        return Card.parse(card).id
    c = int(card)
    if not 0 <= c < 52:
        raise InvalidArgumentError(f"card id {c} out of range")
    return c


def parse_cards(text) -> List[int]:
    """``"AsKd"``, ``"As Kd"`` or a list of cards -> card ids."""
    if isinstance(text, str):
        s = text.replace(" ", "").replace(",", "")
        return [Card.parse(s[i:i + 2]).id for i in range(0, len(s), 2)]
    return [card_id(c) for c in text]


def format_cards(ids: Iterable[int]) -> str:
    return "".join(str(Card(int(c))) for c in ids)


def _pack(category: int, ranks: Sequence[int]) -> int:
    k = 0
    for r in ranks[:5]:
        k = k * 13 + r
    k *= 13 ** (5 - min(len(ranks), 5))
    return category * BASE + k


def _straight_high(mask: int) -> int:
    """Highest straight top rank in a 13-bit rank mask, or -1."""
    for top in range(12, 3, -1):
        window = 0b11111 << (top - 4)
        if mask & window == window:
            return top
    if mask & 0b1000000001111 == 0b1000000001111:  # A-2-3-4-5
        return 3
    return -1


def _score_ranks(counts: Sequence[int]) -> int:
    """Best non-flush score for a rank multiset of 5..7 cards."""
    by_rank = sorted(range(13), reverse=True)
    quads = [r for r in by_rank if counts[r] >= 4]
    trips = [r for r in by_rank if counts[r] == 3]
    pairs = [r for r in by_rank if counts[r] == 2]
    present = [r for r in by_rank if counts[r] > 0]
    mask = sum(1 << r for r in present)

    if quads:
        q = quads[0]
        return _pack(7, [q, next(r for r in present if r != q)])
    if trips and (len(trips) > 1 or pairs):
        t = trips[0]
        p = max([r for r in trips[1:]] + pairs)
        return _pack(6, [t, p])
    top = _straight_high(mask)
    if top >= 0:
        return _pack(4, [top])
    if trips:
        t = trips[0]
        return _pack(3, [t] + [r for r in present if r != t][:2])
    if len(pairs) >= 2:
        hi, lo = pairs[:2]
        return _pack(2, [hi, lo, next(r for r in present if r not in (hi, lo))])
    if pairs:
        p = pairs[0]
        return _pack(1, [p] + [r for r in present if r != p][:3])
    return _pack(0, present[:5])


def _score_flush_mask(mask: int) -> int:
    top = _straight_high(mask)
    if top >= 0:
        return _pack(8, [top])
    return _pack(5, [r for r in range(12, -1, -1) if mask >> r & 1][:5])


def _multisets(n: int):
    def rec(r, left, counts):
        if r == 13:
            if left == 0:
                yield tuple(counts)
            return
        for c in range(min(4, left) + 1):
            counts.append(c)
            yield from rec(r + 1, left - c, counts)
            counts.pop()

    yield from rec(0, n, [])


@lru_cache(maxsize=None)
def _tables() -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    keys, values = [], []
    for n in (5, 6, 7):
        for counts in _multisets(n):
            keys.append(int(np.dot(counts, _POW5)))
            values.append(_score_ranks(counts))
    keys = np.array(keys, dtype=np.int64)
    order = np.argsort(keys)
    flush = np.full(1 << 13, -1, dtype=np.int64)
    for mask in range(1 << 13):
        if bin(mask).count("1") >= 5:
            flush[mask] = _score_flush_mask(mask)
    return keys[order], np.array(values, dtype=np.int64)[order], flush


def evaluate_many(cards) -> np.ndarray:
    """Scores for an ``(N, k)`` array of card ids, ``5 <= k <= 7``, cards distinct per row."""
    cards = np.asarray(cards, dtype=np.int64)
    if cards.ndim != 2 or not 5 <= cards.shape[1] <= 7:
        raise InvalidArgumentError("expected an (N, k) card array with 5 <= k <= 7")
    keys, values, flush = _tables()
    ranks = cards >> 2
    suits = cards & 3
    key = _POW5[ranks].sum(axis=1)
    score = values[np.searchsorted(keys, key)]
    bits = np.left_shift(1, ranks)
    for s in range(4):
        in_suit = suits == s
        has_flush = in_suit.sum(axis=1) >= 5
        if has_flush.any():
            mask = np.where(in_suit[has_flush], bits[has_flush], 0)
            mask = np.bitwise_or.reduce(mask, axis=1)
            score[has_flush] = np.maximum(score[has_flush], flush[mask])
    return score


def evaluate_7card(cards) -> int:
    """Score of 5 to 7 distinct cards (ids, strings or :class:`Card`)."""
    ids = parse_cards(cards)
    if len(set(ids)) != len(ids):
        raise InvalidArgumentError("duplicate cards")
    return int(evaluate_many(np.array([ids]))[0])


def decode_score(score: int) -> Tuple[str, Tuple[str, ...]]:
    """``(category name, tie-break ranks)`` for a score."""
    category, k = divmod(int(score), BASE)
    digits = []
    for _ in range(5):
        k, d = divmod(k, 13)
        digits.append(RANKS[d])
    return CATEGORIES[category], tuple(reversed(digits))[:_KICKERS[category]]


def full_deck() -> np.ndarray:
    return np.arange(52)


def remaining_deck(dead: Iterable[int]) -> np.ndarray:
    dead = set(int(c) for c in dead)
    return np.array([c for c in range(52) if c not in dead], dtype=np.int64)


def hole_pairs(deck: Sequence[int]) -> np.ndarray:
    """All unordered pairs from ``deck`` as an ``(n, 2)`` array."""
    deck = list(deck)
    return np.array(list(combinations(deck, 2)), dtype=np.int64).reshape(-1, 2)


__all__ = [
    "BASE",
    "CATEGORIES",
    "Card",
    "RANKS",
    "SUITS",
    "card_id",
    "decode_score",
    "evaluate_7card",
    "evaluate_many",
    "format_cards",
    "full_deck",
    "hole_pairs",
    "parse_cards",
    "remaining_deck",
]
