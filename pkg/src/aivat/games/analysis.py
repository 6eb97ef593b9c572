"""Traversal routines over a :class:`GameTree`: reach probabilities,
exhaustive enumeration, sampling and imaginary-observation sets."""

from __future__ import annotations

from typing import Dict, Iterator, List, Mapping, Optional, Tuple, Union

import numpy as np

from ..exceptions import (
    InvalidArgumentError,
    MissingStrategyError,
    TooLargeError,
)
from .base import CHANCE, GameTree, History, history_id

Strategy = Dict[str, Dict[int, float]]
StrategyProfile = Dict[int, Strategy]

MAX_TERMINALS = 10**7


def action_probability(game: GameTree, profile: Mapping[int, Strategy], h: History, a: int) -> float:
    """Probability of action ``a`` at ``h`` under chance or ``profile``."""
    p = game.current_player(h)
    if p == CHANCE:
        return game.chance_probability(h, a)
    try:
        dist = profile[p][game.infoset_key(h, p)]
    except KeyError as exc:
        raise MissingStrategyError(
            f"no strategy for player {p} at infoset {game.infoset_key(h, p)!r}"
        ) from exc
    return float(dist.get(a, 0.0))


def reach_probability(game: GameTree, profile: Mapping[int, Strategy], h) -> Tuple[float, Dict[int, float]]:
    """Return ``(pi(h), {player: pi_i(h)})``, chance included.

    Players absent from ``profile`` contribute a factor of 1, which is what
    the estimators need when only some strategies are known.
    """
    h = game.check_history(h)
    per_player = {p: 1.0 for p in game.players}
    for k, a in enumerate(h):
        prefix = h[:k]
        p = game.current_player(prefix)
        if p != CHANCE and p not in profile:
            continue
        per_player[p] *= action_probability(game, profile, prefix, a)
    total = float(np.prod(list(per_player.values())))
    return total, per_player


def iter_histories(game: GameTree, max_nodes: int = MAX_TERMINALS) -> Iterator[History]:
    """Depth-first walk over every history, parents before children."""
    stack: List[History] = [game.root()]
    seen = 0
    while stack:
        h = stack.pop()
        seen += 1
        if seen > max_nodes:
            raise TooLargeError(f"{game.name} has more than {max_nodes} histories")
        yield h
        if not game.is_terminal(h):
            stack.extend(h + (a,) for a in reversed(game.legal_actions(h)))


def iter_terminals(
    game: GameTree,
    profile: Mapping[int, Strategy],
    max_terminals: int = MAX_TERMINALS,
) -> Iterator[Tuple[History, float]]:
    """Yield every terminal history with its reach probability."""
    count = 0
    stack: List[Tuple[History, float]] = [(game.root(), 1.0)]
    while stack:
        h, reach = stack.pop()
        if game.is_terminal(h):
            count += 1
            if count > max_terminals:
                raise TooLargeError(f"{game.name} has more than {max_terminals} terminals")
            yield h, reach
            continue
        for a in reversed(game.legal_actions(h)):
            stack.append((h + (a,), reach * action_probability(game, profile, h, a)))


def expected_value_exact(
    game: GameTree,
    profile: Mapping[int, Strategy],
    player: int,
    max_terminals: int = MAX_TERMINALS,
) -> float:
    """Exact expected utility of ``player`` by exhaustive enumeration."""
    return float(sum(reach * game.utility(z)[player]
                     for z, reach in iter_terminals(game, profile, max_terminals)))


def subtree_values(game: GameTree, profile: Mapping[int, Strategy], player: int) -> Dict[History, float]:
    """Expected utility of ``player`` conditional on reaching each history.

    Defined for every history, including ones the profile never reaches.
    """
    values: Dict[History, float] = {}

    def visit(h: History) -> float:
        if game.is_terminal(h):
            v = float(game.utility(h)[player])
        else:
            v = sum(action_probability(game, profile, h, a) * visit(h + (a,))
                    for a in game.legal_actions(h))
        values[h] = v
        return v

    visit(game.root())
    return values


def sample_playout(
    game: GameTree,
    profile: Mapping[int, Strategy],
    seed: Union[int, np.random.Generator],
) -> History:
    """Sample a terminal history; deterministic for a given integer seed."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    h = game.root()
    while not game.is_terminal(h):
        actions = game.legal_actions(h)
        probs = np.array([action_probability(game, profile, h, a) for a in actions])
        h = h + (actions[rng.choice(len(actions), p=probs / probs.sum())],)
    return h


def enumerate_u_set(game: GameTree, h, player: Optional[int] = None) -> List[History]:
    """Histories equal to ``h`` except for chance outcomes private to ``player``.

    ``player`` defaults to the player acting at ``h``. The result always
    contains ``h`` itself and is returned in lexicographic order.
    """
    h = game.check_history(h)
    if player is None:
        if game.is_terminal(h):
            raise InvalidArgumentError("a terminal history needs an explicit player")
        player = game.current_player(h)
        if player == CHANCE:
            raise InvalidArgumentError(f"{history_id(h)!r} is a chance node")
    private = {k for k in range(len(h))
               if game.current_player(h[:k]) == CHANCE and game.chance_observer(h[:k]) == player}
    if not private:
        return [h]

    out: List[History] = []

    def extend(prefix: History) -> None:
        k = len(prefix)
        if k == len(h):
            out.append(prefix)
            return
        if game.is_terminal(prefix):
            return
        legal = game.legal_actions(prefix)
        if k in private:
            for a in legal:
                extend(prefix + (a,))
        elif h[k] in legal:
            extend(prefix + (h[k],))

    extend(())
    return sorted(out)


def collect_infosets(game: GameTree) -> Dict[int, Dict[str, Tuple[int, ...]]]:
    """Map each player to its information-set keys and their action sets."""
    infosets: Dict[int, Dict[str, Tuple[int, ...]]] = {p: {} for p in range(game.num_players)}
    for h in iter_histories(game):
        if game.is_terminal(h):
            continue
        p = game.current_player(h)
        if p != CHANCE:
            infosets[p].setdefault(game.infoset_key(h, p), game.legal_actions(h))
    return infosets


def uniform_profile(game: GameTree) -> StrategyProfile:
    return {p: {key: {a: 1.0 / len(acts) for a in acts} for key, acts in sets.items()}
            for p, sets in collect_infosets(game).items()}


def random_profile(game: GameTree, seed: int, concentration: float = 1.0) -> StrategyProfile:
    """Behavioral strategies drawn from a symmetric Dirichlet per infoset."""
    rng = np.random.default_rng(seed)
    profile: StrategyProfile = {}
    for p, sets in collect_infosets(game).items():
        profile[p] = {}
        for key in sorted(sets):
            acts = sets[key]
            probs = rng.dirichlet(np.full(len(acts), concentration))
            profile[p][key] = {a: float(q) for a, q in zip(acts, probs)}
    return profile


def deterministic_profile(game: GameTree, choose) -> StrategyProfile:
    """Pure profile from ``choose(player, infoset_key, actions) -> action``."""
    profile: StrategyProfile = {}
    for p, sets in collect_infosets(game).items():
        profile[p] = {}
        for key, acts in sets.items():
            pick = choose(p, key, acts)
            profile[p][key] = {a: float(a == pick) for a in acts}
    return profile


def check_profile(game: GameTree, profile: Mapping[int, Strategy], atol: float = 1e-12) -> None:
    for p, strategy in profile.items():
        for key, dist in strategy.items():
            total = sum(dist.values())
            if abs(total - 1.0) > atol or any(q < 0 for q in dist.values()):
                raise InvalidArgumentError(f"strategy of player {p} at {key!r} is not a distribution")


__all__ = [
    "Strategy",
    "StrategyProfile",
    "action_probability",
    "reach_probability",
    "iter_histories",
    "iter_terminals",
    "expected_value_exact",
    "subtree_values",
    "sample_playout",
    "enumerate_u_set",
    "collect_infosets",
    "uniform_profile",
    "random_profile",
    "deterministic_profile",
    "check_profile",
]
