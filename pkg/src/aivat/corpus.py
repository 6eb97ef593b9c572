"""Game corpora: one sampled hand per JSON line after a ``# {header}`` line.

Header keys: ``format`` ("aivat-corpus"), ``game``, ``hands``, ``seed`` and
``profile`` (how to rebuild the strategies that generated the hands).
Hand records are ``{"id", "history", "payoffs"}`` with ``history`` the
canonical dotted action id and payoffs in chips. Hold'em corpora use the
hand-history schema of :mod:`aivat.poker.history` with the same header.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np

from .exceptions import InvalidArgumentError, InvalidDataError, ParseError
from .games import make_game
from .games.analysis import StrategyProfile, random_profile, sample_playout, uniform_profile
from .games.base import GameTree, History, history_id, parse_history_id

FORMAT = "aivat-corpus"


def profile_from_spec(game: GameTree, spec: str) -> StrategyProfile:
    """``"uniform"`` or ``"random:SEED"`` (Dirichlet-random behavior at every infoset)."""
    if spec == "uniform":
        return uniform_profile(game)
    if spec.startswith("random:"):
        try:
            seed = int(spec.split(":", 1)[1])
        except ValueError:
            raise InvalidArgumentError(f"bad profile seed in {spec!r}") from None
        return random_profile(game, seed)
    raise InvalidArgumentError(f"unknown profile {spec!r}; use 'uniform' or 'random:SEED'")


@dataclass
class GameCorpus:
    game_name: str
    histories: List[History]
    payoffs: np.ndarray
    ids: List[str]
    header: Dict = field(default_factory=dict)

    @property
    def game(self) -> GameTree:
        return make_game(self.game_name)

    @property
    def profile_spec(self) -> str:
        return self.header.get("profile", "uniform")

    def profile(self) -> StrategyProfile:
        return profile_from_spec(self.game, self.profile_spec)

    def __len__(self) -> int:
        return len(self.histories)

    def subset(self, index: Sequence[int]) -> "GameCorpus":
        index = list(index)
        return GameCorpus(self.game_name, [self.histories[i] for i in index],
                          self.payoffs[index] if len(index) else np.zeros((0, self.payoffs.shape[1])),
                          [self.ids[i] for i in index], dict(self.header))


def simulate_corpus(game_name: str, hands: int, seed: int, profile: str = "uniform") -> GameCorpus:
    if hands < 0:
        raise InvalidArgumentError("hands must be non-negative")
    game = make_game(game_name)
    strategies = profile_from_spec(game, profile)
    rng = np.random.default_rng(seed)
    histories = [sample_playout(game, strategies, rng) for _ in range(hands)]
    payoffs = np.array([game.utility(z) for z in histories]).reshape(hands, game.num_players)
    header = {"format": FORMAT, "game": game_name, "hands": hands, "seed": seed, "profile": profile}
    return GameCorpus(game_name, histories, payoffs, [f"{game_name}{i}" for i in range(hands)], header)


def _fmt(x: float):
    x = float(x)
    return int(x) if x.is_integer() else x


def corpus_lines(corpus: GameCorpus) -> List[str]:
    lines = ["# " + json.dumps(corpus.header, sort_keys=True)]
    for hid, z, u in zip(corpus.ids, corpus.histories, corpus.payoffs):
        record = {"id": hid, "history": history_id(z), "payoffs": [_fmt(x) for x in u]}
        lines.append(json.dumps(record, separators=(",", ":")))
    return lines


def write_corpus(path, corpus: GameCorpus) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(corpus_lines(corpus)) + "\n")


def read_header(path) -> Dict:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    if not first.startswith("#"):
        raise ParseError("corpus must start with a '# {json}' header line", 1, 1)
    try:
        header = json.loads(first[1:])
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad header: {exc.msg}", 1, exc.colno + 1) from None
    if not isinstance(header, dict) or "game" not in header:
        raise ParseError("header needs a 'game' field", 1, 1)
    return header


def read_corpus(path) -> GameCorpus:
    """Read a Kuhn or Leduc corpus, validating every history against the rules."""
    header = read_header(path)
    game_name = header["game"]
    if game_name == "holdem":
        raise InvalidArgumentError("hold'em corpora are read with aivat.poker.read_hands")
    game = make_game(game_name)
    histories, payoffs, ids = [], [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            try:
                record = json.loads(s)
                z = parse_history_id(record["history"])
                u = np.asarray(record["payoffs"], dtype=float)
                hid = str(record["id"])
            except json.JSONDecodeError as exc:
                raise ParseError(exc.msg, lineno, exc.colno) from None
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"bad record: {exc}", lineno, 1) from None
            if not game.is_valid(z) or not game.is_terminal(z):
                raise InvalidDataError(f"line {lineno}: {record['history']!r} is not a terminal {game_name} history")
            if not np.allclose(u, game.utility(z)):
                raise InvalidDataError(f"line {lineno}: payoffs disagree with the game rules")
            histories.append(z)
            payoffs.append(u)
            ids.append(hid)
    payoffs = np.array(payoffs).reshape(len(histories), game.num_players)
    return GameCorpus(game_name, histories, payoffs, ids, header)


def file_hash(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


__all__ = [
    "FORMAT",
    "GameCorpus",
    "corpus_lines",
    "file_hash",
    "profile_from_spec",
    "read_corpus",
    "read_header",
    "simulate_corpus",
    "write_corpus",
]
