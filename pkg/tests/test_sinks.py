import math

import numpy as np
import pytest

from sinkeq.dynamics import BEST, BETTER, TransitionKernel, best_response_set, build_kernel, is_singleton_br
from sinkeq.errors import DegenerateWelfareError, InvalidParametersError
from sinkeq.game import NormalFormGame, enumerate_nash
from sinkeq.generators import (
    counterexample_game,
    philox_rng,
    sample_action_counts,
    sample_random_game,
)
from sinkeq.sinks import (
    price_of_sinking,
    sink_components,
    sink_equilibria,
    stationary_distribution,
    strongly_connected_components,
)


def single_player(utility):
    u = np.asarray(utility, dtype=float)
    return NormalFormGame((len(u),), np.abs(u), u.reshape(1, -1))


def common_interest(counts, welfare):
    w = np.asarray(welfare, dtype=float)
    return NormalFormGame(counts, w, np.vstack([w] * len(counts)))


def hand_kernel(rows):
    return TransitionKernel(
        num_states=len(rows),
        num_players=1,
        mode=BEST,
        tie_tol=0.0,
        rows=tuple(tuple(sorted(r.items())) for r in rows),
    )


class TestComponents:
    def test_single_player_sink_is_argmax(self):
        k = build_kernel(single_player([0.0, 1.0]), BEST)
        assert sink_components(k) == [(1,)]

    def test_gap_game_unique_four_state_sink(self):
        k = build_kernel(counterexample_game(1.0, 2.0), BEST)
        assert sink_components(k) == [(4, 5, 7, 8)]

    def test_common_interest_sinks_are_equilibria(self):
        g = common_interest((2, 2), [1.0, 0.0, 0.0, 2.0])
        k = build_kernel(g, BEST)
        assert sink_components(k) == [(0,), (3,)]

    def test_scc_on_hand_built_graph(self):
        # 0 <-> 1 feed 2, which self-loops.
        k = hand_kernel([{1: 1.0}, {0: 0.5, 2: 0.5}, {2: 1.0}])
        comps = {c for c in strongly_connected_components(k)}
        assert comps == {(0, 1), (2,)}
        assert sink_components(k) == [(2,)]

    def test_every_state_reaches_a_sink(self):
        rng = philox_rng(31, 0)
        for _ in range(20):
            counts = sample_action_counts(rng, max_players=3, max_actions=4)
            g = sample_random_game(rng, counts)
            for mode in (BEST, BETTER):
                k = build_kernel(g, mode)
                sink_states = {s for comp in sink_components(k) for s in comp}
                reached = set(sink_states)
                frontier = list(sink_states)
                incoming = [[] for _ in range(k.num_states)]
                for src, dst, _ in k.edges():
                    incoming[dst].append(src)
                while frontier:
                    state = frontier.pop()
                    for src in incoming[state]:
                        if src not in reached:
                            reached.add(src)
                            frontier.append(src)
                assert reached == set(range(k.num_states))


class TestStationary:
    def test_singleton_support(self):
        k = build_kernel(single_player([0.0, 1.0]), BEST)
        np.testing.assert_allclose(stationary_distribution(k, (1,)), [1.0])

    def test_symmetric_two_cycle(self):
        k = hand_kernel([{1: 1.0}, {0: 1.0}])
        np.testing.assert_allclose(stationary_distribution(k, (0, 1)), [0.5, 0.5])

    def test_deterministic_four_cycle_is_uniform(self):
        k = hand_kernel([{1: 1.0}, {2: 1.0}, {3: 1.0}, {0: 1.0}])
        np.testing.assert_allclose(
            stationary_distribution(k, (0, 1, 2, 3)), [0.25] * 4
        )

    def test_open_support_is_rejected(self):
        k = hand_kernel([{1: 1.0}, {0: 0.5, 2: 0.5}, {2: 1.0}])
        with pytest.raises(InvalidParametersError):
            stationary_distribution(k, (0, 1))

    def test_residual_and_positivity_on_random_games(self):
        rng = philox_rng(32, 0)
        for _ in range(20):
            counts = sample_action_counts(rng, max_players=3, max_actions=4)
            g = sample_random_game(rng, counts)
            k = build_kernel(g, BEST)
            for support in sink_components(k):
                pi = stationary_distribution(k, support)
                assert pi.min() > 0.0
                assert abs(pi.sum() - 1.0) <= 1e-10
                pos = {s: i for i, s in enumerate(support)}
                residual = np.zeros(len(support))
                for s in support:
                    for t, p in k.rows[s]:
                        residual[pos[t]] += pi[pos[s]] * p
                assert np.max(np.abs(residual - pi)) <= 1e-10


class TestSinkEquilibria:
    def test_common_interest_matches_nash(self):
        g = common_interest((2, 2), [1.0, 0.0, 0.0, 2.0])
        eqs = sink_equilibria(g, BEST)
        assert [eq.support for eq in eqs] == [(0,), (3,)]
        assert [eq.expected_welfare for eq in eqs] == [1.0, 2.0]

    def test_gap_game_zero_welfare_sink(self):
        eqs = sink_equilibria(counterexample_game(1.0, 2.0), BEST)
        assert len(eqs) == 1
        assert eqs[0].support == (4, 5, 7, 8)
        assert eqs[0].expected_welfare == 0.0

    def test_single_player_concentrates_on_argmax(self):
        eqs = sink_equilibria(single_player([0.2, 0.9, 0.5]), BEST)
        assert len(eqs) == 1
        assert eqs[0].support == (1,)

    def test_common_interest_sinks_equal_nash_singletons(self):
        rng = philox_rng(33, 0)
        for _ in range(25):
            counts = sample_action_counts(
                rng, max_players=4, max_actions=4, max_profiles=256
            )
            total = int(np.prod(counts))
            g = common_interest(counts, rng.uniform(0.0, 1.0, size=total))
            supports = {eq.support for eq in sink_equilibria(g, BEST)}
            nash = {(ne.flat,) for ne in enumerate_nash(g)}
            assert supports == nash


class TestPriceOfSinking:
    def test_gap_game_is_exactly_zero(self):
        pos, worst = price_of_sinking(counterexample_game(1.0, 2.0), BEST)
        assert pos == 0.0
        assert worst.support == (4, 5, 7, 8)

    def test_common_interest_matches_anarchy(self):
        g = common_interest((2, 2), [1.0, 0.0, 0.0, 2.0])
        pos, worst = price_of_sinking(g, BEST)
        assert pos == pytest.approx(0.5)
        assert worst.support == (0,)

    def test_single_state_game(self):
        g = NormalFormGame((1,), np.array([3.0]), np.array([[1.0]]))
        pos, _ = price_of_sinking(g, BEST)
        assert pos == 1.0

    def test_degenerate_welfare_rejected(self):
        g = NormalFormGame((2,), np.zeros(2), np.array([[0.0, 1.0]]))
        with pytest.raises(DegenerateWelfareError):
            price_of_sinking(g, BEST)

    def test_ratio_in_unit_interval_and_tight_at_optimum(self):
        rng = philox_rng(34, 0)
        for _ in range(20):
            counts = sample_action_counts(rng, max_players=3, max_actions=4)
            g = sample_random_game(rng, counts)
            pos, _ = price_of_sinking(g, BEST)
            assert 0.0 <= pos <= 1.0
        # Sinks inside the welfare argmax force a ratio of one.
        w = np.array([2.0, 0.0, 0.0, 2.0])
        g = NormalFormGame((2, 2), w, np.vstack([w, w]))
        pos, _ = price_of_sinking(g, BEST)
        assert pos == 1.0


class TestStationarityIdentity:
    def test_best_response_deviation_sums_vanish(self):
        # For singleton best responses, any function g has zero expected
        # total best-response increment under every sink distribution.
        rng = philox_rng(35, 0)
        checked = 0
        while checked < 40:
            counts = sample_action_counts(
                rng, max_players=3, max_actions=4, max_profiles=128
            )
            g = sample_random_game(rng, counts)
            if not is_singleton_br(g)[0]:
                continue
            checked += 1
            for eq in sink_equilibria(g, BEST):
                for _ in range(10):
                    func = rng.uniform(-1.0, 1.0, size=g.num_profiles)
                    total = []
                    for p, s in zip(eq.probabilities, eq.support):
                        ja = g.index_to_joint(s)
                        inner = 0.0
                        for i in range(g.num_players):
                            (br,) = best_response_set(g, i, ja).actions
                            target = s + (br - ja.coords[i]) * g.strides[i]
                            inner += func[s] - func[target]
                        total.append(p * inner)
                    assert abs(math.fsum(total)) <= 1e-8
