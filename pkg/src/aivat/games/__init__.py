"""Extensive-form games: the interface, Kuhn and Leduc poker, and
exact/sampled traversal routines."""

from .analysis import (
    Strategy,
    StrategyProfile,
    action_probability,
    check_profile,
    collect_infosets,
    deterministic_profile,
    enumerate_u_set,
    expected_value_exact,
    iter_histories,
    iter_terminals,
    random_profile,
    reach_probability,
    sample_playout,
    subtree_values,
    uniform_profile,
)
from ..exceptions import InvalidArgumentError
from .base import CHANCE, ExplicitGame, GameTree, History, history_id, parse_history_id
from .kuhn import KuhnPoker
from .leduc import LeducPoker

GAMES = {"kuhn": KuhnPoker, "leduc": LeducPoker}


def make_game(name: str) -> GameTree:
    try:
        return GAMES[name]()
    except KeyError:
        raise InvalidArgumentError(f"unknown game {name!r}; choose from {sorted(GAMES)}") from None


__all__ = [
    "CHANCE",
    "GAMES",
    "ExplicitGame",
    "GameTree",
    "History",
    "KuhnPoker",
    "LeducPoker",
    "Strategy",
    "StrategyProfile",
    "action_probability",
    "check_profile",
    "collect_infosets",
    "deterministic_profile",
    "enumerate_u_set",
    "expected_value_exact",
    "history_id",
    "iter_histories",
    "iter_terminals",
    "make_game",
    "parse_history_id",
    "random_profile",
    "reach_probability",
    "sample_playout",
    "subtree_values",
    "uniform_profile",
]
