import itertools
import math

import numpy as np
import pytest

from aivat.exceptions import InvalidArgumentError, InvalidHistoryError, MissingStrategyError, TooLargeError
from aivat.games import (
    CHANCE,
    ExplicitGame,
    deterministic_profile,
    enumerate_u_set,
    expected_value_exact,
    history_id,
    iter_histories,
    iter_terminals,
    make_game,
    parse_history_id,
    random_profile,
    reach_probability,
    sample_playout,
    subtree_values,
)

J, Q, K = 0, 1, 2
PASS, BET = 0, 1


def kuhn_payoff_by_hand(c0, c1, actions):
    """Player 0's payoff written out from the rules, independent of the game class."""
    s = 1 if c0 > c1 else -1
    return {
        "pp": s, "pbp": -1, "pbb": 2 * s, "bp": 1, "bb": 2 * s,
    }["".join("pb"[a] for a in actions)]


def kuhn_value_by_hand(p0_bet, p1_bet_after_pass, p1_call, p0_call):
    """Expected value to player 0 when each player's move probabilities
    depend only on the line (not the card)."""
    total = 0.0
    for c0, c1 in itertools.permutations((J, Q, K), 2):
        deal = 1 / 6
        lines = {
            (PASS, PASS): (1 - p0_bet) * (1 - p1_bet_after_pass),
            (PASS, BET, PASS): (1 - p0_bet) * p1_bet_after_pass * (1 - p0_call),
            (PASS, BET, BET): (1 - p0_bet) * p1_bet_after_pass * p0_call,
            (BET, PASS): p0_bet * (1 - p1_call),
            (BET, BET): p0_bet * p1_call,
        }
        for acts, prob in lines.items():
            total += deal * prob * kuhn_payoff_by_hand(c0, c1, acts)
    return total


class TestReachProbability:
    def test_empty_history(self, kuhn, kuhn_uniform):
        total, per = reach_probability(kuhn, kuhn_uniform, ())
        assert total == 1.0
        assert all(v == 1.0 for v in per.values())

    def test_deal_has_chance_factor_one_sixth(self, kuhn, kuhn_uniform):
        total, per = reach_probability(kuhn, kuhn_uniform, (J, Q))
        assert per[CHANCE] == pytest.approx(1 / 6, abs=1e-15)
        assert per[0] == per[1] == 1.0
        assert total == pytest.approx(1 / 6, abs=1e-15)

    def test_deterministic_bet(self, kuhn):
        always_bet = deterministic_profile(kuhn, lambda p, key, acts: BET)
        _, per = reach_probability(kuhn, always_bet, (J, Q, BET))
        assert per[0] == 1.0

    def test_invalid_history(self, kuhn, kuhn_uniform):
        with pytest.raises(InvalidHistoryError):
            reach_probability(kuhn, kuhn_uniform, (J, J))

    def test_missing_player_contributes_one(self, kuhn, kuhn_uniform):
        _, per = reach_probability(kuhn, {0: kuhn_uniform[0]}, (J, Q, PASS, BET))
        assert per[1] == 1.0 and per[0] == 0.5

    def test_reach_factorizes(self, leduc):
        profile = random_profile(leduc, 3)
        for z, p in itertools.islice(iter_terminals(leduc, profile), 0, None, 97):
            total, per = reach_probability(leduc, profile, z)
            assert total == pytest.approx(p, rel=1e-12)
            assert total == pytest.approx(math.prod(per.values()), rel=1e-12)


class TestExpectedValue:
    def test_kuhn_uniform_matches_hand_enumeration(self, kuhn, kuhn_uniform):
        oracle = kuhn_value_by_hand(0.5, 0.5, 0.5, 0.5)
        assert oracle == pytest.approx(1 / 8, abs=1e-15)
        assert expected_value_exact(kuhn, kuhn_uniform, 0) == pytest.approx(oracle, abs=1e-14)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_zero_sum(self, leduc, seed):
        profile = random_profile(leduc, seed)
        v0 = expected_value_exact(leduc, profile, 0)
        v1 = expected_value_exact(leduc, profile, 1)
        assert v0 == pytest.approx(-v1, abs=1e-12)

    def test_second_player_always_passes(self, kuhn):
        # player 1 checks behind and folds to any bet; player 0 mixes uniformly
        def choose(p, key, acts):
            return PASS
        passive = deterministic_profile(kuhn, choose)
        profile = {0: {k: {PASS: 0.5, BET: 0.5} for k in passive[0]}, 1: passive[1]}
        oracle = kuhn_value_by_hand(0.5, 0.0, 0.0, 0.5)
        assert oracle == pytest.approx(0.5)
        assert expected_value_exact(kuhn, profile, 0) == pytest.approx(oracle, abs=1e-14)

    def test_guard(self, leduc, leduc_uniform):
        with pytest.raises(TooLargeError):
            expected_value_exact(leduc, leduc_uniform, 0, max_terminals=100)

    def test_flow_conservation(self, leduc):
        profile = random_profile(leduc, 5)
        values = subtree_values(leduc, profile, 0)
        assert values[()] == pytest.approx(expected_value_exact(leduc, profile, 0), abs=1e-12)
        reach = sum(p for _, p in iter_terminals(leduc, profile))
        assert reach == pytest.approx(1.0, abs=1e-12)


class TestSampling:
    def test_deterministic(self, leduc, leduc_uniform):
        assert sample_playout(leduc, leduc_uniform, 42) == sample_playout(leduc, leduc_uniform, 42)

    def test_terminal_and_valid(self, leduc, leduc_uniform):
        rng = np.random.default_rng(0)
        for _ in range(200):
            z = sample_playout(leduc, leduc_uniform, rng)
            assert leduc.is_valid(z) and leduc.is_terminal(z)

    def test_converges_to_exact_value(self, kuhn, kuhn_uniform):
        rng = np.random.default_rng(123)
        u = np.array([kuhn.utility(sample_playout(kuhn, kuhn_uniform, rng))[0] for _ in range(100_000)])
        se = u.std(ddof=1) / math.sqrt(u.size)
        assert abs(u.mean() - expected_value_exact(kuhn, kuhn_uniform, 0)) < 4 * se

    def test_missing_strategy(self, kuhn):
        with pytest.raises(MissingStrategyError):
            sample_playout(kuhn, {}, 0)


class TestUSet:
    def test_kuhn_first_decision(self, kuhn):
        # player 0 holds J, player 1 holds Q: player 0 could equally hold J or K
        assert enumerate_u_set(kuhn, (J, Q)) == [(J, Q), (K, Q)]

    def test_second_player_swaps_own_card(self, kuhn):
        assert enumerate_u_set(kuhn, (J, Q, PASS)) == [(J, Q, PASS), (J, K, PASS)]

    def test_no_private_information(self):
        tree = {"player": 0, "children": [{"utility": [1, -1]}, {"utility": [-1, 1]}]}
        game = ExplicitGame(tree)
        assert enumerate_u_set(game, ()) == [()]

    def test_chance_node_rejected(self, kuhn):
        with pytest.raises(InvalidArgumentError):
            enumerate_u_set(kuhn, (J,))

    def test_members_share_public_actions(self, leduc):
        # player 0 acts and may hold any of the five cards player 1 does not
        h = (0, 3, 1, 2)
        group = enumerate_u_set(leduc, h)
        assert h in group and len(group) == 5
        assert all(g[1:] == h[1:] for g in group)
        keys = {leduc.infoset_key(g, 1) for g in group}
        assert len(keys) == 1


class TestHistoryIds:
    def test_round_trip(self, leduc):
        for h in itertools.islice(iter_histories(leduc), 500):
            assert parse_history_id(history_id(h)) == h

    def test_malformed(self):
        with pytest.raises(InvalidHistoryError):
            parse_history_id("1.x")

    def test_unknown_game(self):
        with pytest.raises(InvalidArgumentError):
            make_game("chess")
