import numpy as np
import pytest

from sinkeq.dynamics import BEST, BETTER, build_kernel, is_singleton_br
from sinkeq.errors import (
    CertificateNotFoundError,
    DegenerateWelfareError,
    InvalidParametersError,
)
from sinkeq.game import NormalFormGame, optimal_profile, price_of_anarchy
from sinkeq.generators import (
    counterexample_game,
    make_covering_game,
    make_radio_game,
    philox_rng,
    sample_covering_instance,
    sample_game_with_pure_nash,
    sample_radio_instance,
    sample_random_game,
)
from sinkeq.sinks import price_of_sinking, sink_components
from sinkeq.smoothness import (
    additive_sinking_bound,
    arithmetic_misalignment,
    best_smoothness,
    better_response_witness,
    bound_report,
    check_smoothness,
    geometric_misalignment,
    measure_misalignment,
    multiplicative_sinking_bound,
)


def single_player_common(welfare):
    w = np.asarray(welfare, dtype=float)
    return NormalFormGame((len(w),), w, w.reshape(1, -1))


def scaled_utilities(welfare, factor, counts=(2, 2)):
    w = np.asarray(welfare, dtype=float)
    return NormalFormGame(counts, w, np.vstack([factor * w] * len(counts)))


class TestCheckSmoothness:
    def test_zero_lambda_with_large_mu_is_valid(self):
        rng = philox_rng(41, 0)
        g = sample_random_game(rng, (3, 3))
        opt, wopt = optimal_profile(g)
        deviation = np.zeros(g.num_profiles)
        for i in range(g.num_players):
            dmap = g.deviation_map(i, opt.coords[i])
            deviation += g.utilities[i] - g.utilities[i][dmap]
        positive = g.welfare > 0
        mu = max(1.0, float(np.max(deviation[positive] / g.welfare[positive])))
        assert check_smoothness(g, 0.0, mu).valid

    def test_gap_game_grid(self):
        for lam, mu in [(0.0, 1.0), (1.0, 2.0), (1.0, 1.01), (0.5, 3.0), (2.0, 2.5)]:
            cert = check_smoothness(counterexample_game(lam, mu), lam, mu)
            assert cert.valid

    def test_single_player_common_interest_zero_slack(self):
        cert = check_smoothness(
            single_player_common([0.4, 1.0, 0.2]), 1.0, 1.0, common_interest=True
        )
        assert cert.valid
        np.testing.assert_allclose(cert.slack, 0.0, atol=1e-15)

    def test_rejects_bad_parameters(self):
        g = single_player_common([0.0, 1.0])
        with pytest.raises(InvalidParametersError):
            check_smoothness(g, 2.0, 1.0)
        with pytest.raises(InvalidParametersError):
            check_smoothness(g, -0.5, 1.0)


class TestBestSmoothness:
    def test_single_player_common_interest_reaches_one(self):
        lam, mu = best_smoothness(single_player_common([0.4, 1.0, 0.2]))
        assert lam == pytest.approx(mu)
        assert lam / mu == pytest.approx(1.0)

    def test_covering_ratio_at_least_half(self):
        for seed in range(5):
            inst = sample_covering_instance(2, 3, 0.0, 0.0, seed)
            g = make_covering_game(inst)
            lam, mu = best_smoothness(g, common_interest=True)
            assert lam / mu >= 0.5 - 1e-9

    def test_radio_ratio_at_least_third(self):
        for seed in range(5):
            g = make_radio_game(sample_radio_instance(3, 1.0, seed))
            lam, mu = best_smoothness(g, common_interest=True)
            assert lam / mu >= 1.0 / 3.0 - 1e-9

    def test_certificate_valid_and_sound_against_anarchy(self):
        rng = philox_rng(42, 0)
        for _ in range(100):
            g = sample_game_with_pure_nash(rng)
            lam, mu = best_smoothness(g)
            assert check_smoothness(g, lam, mu).valid
            assert lam / mu <= price_of_anarchy(g) + 1e-6

    def test_degenerate_welfare(self):
        g = NormalFormGame((2,), np.zeros(2), np.array([[0.0, 1.0]]))
        with pytest.raises(DegenerateWelfareError):
            best_smoothness(g)

    def test_no_certificate_when_zero_welfare_state_gains(self):
        # Single player: the zero-welfare state strictly improves on the
        # optimum-coordinate deviation, so no finite pair works.
        g = NormalFormGame((2,), np.array([1.0, 0.0]), np.array([[0.0, 1.0]]))
        with pytest.raises(CertificateNotFoundError):
            best_smoothness(g)


class TestMisalignment:
    def test_common_interest_is_zero(self):
        g = scaled_utilities([1.0, 0.3, 0.3, 2.0], 1.0)
        report = measure_misalignment(g)
        assert report.beta_arithmetic == 0.0
        assert report.beta_geometric == 0.0

    def test_uniform_inflation(self):
        g = scaled_utilities([1.0, 0.3, 0.3, 2.0], 1.4)
        report = arithmetic_misalignment(g)
        assert report.beta_arithmetic == pytest.approx(0.4)
        # Ratio bound: 1/(1-beta) = 1.4 gives beta = 1 - 1/1.4.
        assert report.beta_geometric == pytest.approx(1.0 - 1.0 / 1.4)

    def test_uniform_deflation(self):
        g = scaled_utilities([1.0, 0.3, 0.3, 2.0], 0.75)
        report = geometric_misalignment(g)
        assert report.beta_arithmetic == pytest.approx(0.25)
        assert report.beta_geometric == pytest.approx(0.25)

    def test_zero_welfare_with_nonzero_utility_is_undefined(self):
        w = np.array([1.0, 0.0])
        u = np.array([[1.0, 1.0]])
        report = measure_misalignment(NormalFormGame((2,), w, u))
        assert report.beta_arithmetic is None
        assert report.witness_arithmetic == (0, 1)
        assert report.beta_geometric is None

    def test_nonpositive_ratio_is_undefined_geometrically(self):
        w = np.array([1.0, 1.0])
        u = np.array([[1.0, -0.5]])
        report = measure_misalignment(NormalFormGame((2,), w, u))
        assert report.beta_geometric is None
        assert report.witness_geometric == (0, 1)
        assert report.beta_arithmetic == pytest.approx(1.5)
        assert report.arithmetic_exceeds_unit

    def test_witness_attains_the_maximum(self):
        rng = philox_rng(43, 0)
        for _ in range(20):
            g = sample_random_game(rng, (3, 3), utility_range=(0.1, 2.0))
            report = measure_misalignment(g)
            player, state = report.witness_arithmetic
            ratio = g.utilities[player][state] / g.welfare[state]
            assert abs(ratio - 1.0) == pytest.approx(report.beta_arithmetic)


class TestBoundFormulas:
    def test_additive_matches_hand_arithmetic(self):
        assert additive_sinking_bound(1.0, 2.0, 2, 0.035) == pytest.approx(0.36)
        assert additive_sinking_bound(1.0, 2.0, 2, 0.5) == 0.0
        assert additive_sinking_bound(1.0, 2.0, 3, 0.0) == pytest.approx(0.5)

    def test_multiplicative_matches_hand_arithmetic(self):
        assert multiplicative_sinking_bound(1.0, 3.0, 5, 0.0) == pytest.approx(1 / 3)
        kept = 0.9**2
        assert multiplicative_sinking_bound(1.0, 3.0, 4, 0.1) == pytest.approx(
            1.0 / (3 * kept + (1 - kept) * 4)
        )
        with pytest.raises(InvalidParametersError):
            multiplicative_sinking_bound(1.0, 3.0, 2, 1.0)


class TestBoundReport:
    def test_common_interest_bounds_collapse_to_ratio(self):
        w = philox_rng(44, 0).uniform(0.1, 1.0, size=9)
        g = NormalFormGame((3, 3), w, np.vstack([w, w]))
        report = bound_report(g)
        ratio = report.lambda_c / report.mu_c
        assert report.beta_arithmetic == 0.0
        assert report.bound_arithmetic == pytest.approx(ratio)
        assert report.bound_geometric == pytest.approx(ratio)

    def test_flags_follow_hypotheses(self):
        rng = philox_rng(45, 0)
        w = rng.uniform(0.1, 1.0, size=8)
        factors = rng.uniform(0.9, 1.1, size=(3, 8))
        g = NormalFormGame((2, 2, 2), w, factors * w)
        report = bound_report(g)
        assert report.singleton_br
        assert report.satisfied_arithmetic is True
        assert report.satisfied_geometric is True
        assert report.bound_arithmetic == pytest.approx(
            additive_sinking_bound(
                report.lambda_c, report.mu_c, 3, report.beta_arithmetic
            )
        )

    def test_not_applicable_without_singleton_responses(self):
        u0 = np.zeros(4)
        u1 = np.array([0.0, 1.0, 2.0, 3.0])
        g = NormalFormGame((2, 2), np.ones(4), np.vstack([u0, u1]))
        report = bound_report(g)
        assert not report.singleton_br
        assert report.satisfied_arithmetic is None
        assert report.satisfied_geometric is None


class TestBetterResponseWitness:
    def test_common_interest_sinks_witness_themselves(self):
        w = philox_rng(46, 0).uniform(0.1, 1.0, size=9)
        g = NormalFormGame((3, 3), w, np.vstack([w, w]))
        lam, mu = best_smoothness(g)
        for witness in better_response_witness(g, lam, mu):
            assert witness.meets_threshold
            assert witness.aligned_action is not None

    def test_gap_game_better_sinks_reach_threshold(self):
        g = counterexample_game(1.0, 2.0)
        witnesses = better_response_witness(g, 1.0, 2.0)
        assert len(witnesses) == len(sink_components(build_kernel(g, BETTER)))
        for witness in witnesses:
            assert witness.welfare >= 0.5 - 1e-9

    def test_single_player_witness_is_utility_argmax(self):
        g = single_player_common([0.2, 0.9, 0.4])
        lam, mu = best_smoothness(g)
        (witness,) = better_response_witness(g, lam, mu)
        assert witness.action.flat == 1

    def test_invalid_certificate_rejected(self):
        g = counterexample_game(1.0, 2.0)
        with pytest.raises(InvalidParametersError):
            better_response_witness(g, 2.0, 2.0)


class TestMultiplicativeFloorIsNotUniversal:
    def test_known_ratio_perturbed_game_sits_between_the_two_floor_forms(self):
        # Frozen 2x2 game with singleton best responses whose utilities are a
        # ratio perturbation of the welfare within [0.95, 1/0.95].  Its worst
        # sink is a pure equilibrium with welfare ratio ~0.4224, which falls
        # below the multiplicative floor computed from its own certificate,
        # so a satisfied_geometric of False is a legitimate report.  Scaling
        # the floor's numerator by (1 - beta)^2 restores a true bound; this
        # pins the implemented formula and documents its known slack.
        welfare = np.array(
            [0.35413101624489496, 0.39825422757670503, 0.9429033097452117, 0.3690045797701359]
        )
        utilities = np.array(
            [
                [0.36708133668087484, 0.40490694447340153, 0.9237939725933054, 0.37594228383230427],
                [0.3590220875612458, 0.41501182784025675, 0.961518928697038, 0.3653698070120122],
            ]
        )
        game = NormalFormGame((2, 2), welfare, utilities)
        assert is_singleton_br(game)[0]
        beta = 0.05
        ratios = game.utilities / game.welfare
        assert np.all(ratios >= 1 - beta) and np.all(ratios <= 1 / (1 - beta))

        lam_c, mu_c = best_smoothness(game, common_interest=True)
        pos, worst = price_of_sinking(game, BEST)
        assert worst.support == (1,)
        assert pos == pytest.approx(0.4223701, abs=1e-6)

        stated = multiplicative_sinking_bound(lam_c, mu_c, 2, beta)
        assert pos < stated - 1e-3
        kept = (1 - beta) ** 2
        derived = kept * lam_c / (kept * mu_c + (1 - kept) * 2)
        assert pos >= derived - 1e-9

        report = bound_report(game)
        assert report.singleton_br
        assert report.satisfied_geometric is False
        assert report.satisfied_arithmetic is True


class TestSmoothnessCannotBoundSinking:
    def test_valid_certificates_with_zero_sinking_on_a_grid(self):
        for lam in (0.0, 0.3, 1.0, 2.0):
            for gap in (0.01, 0.5, 2.0):
                mu = lam + gap
                g = counterexample_game(lam, mu)
                assert check_smoothness(g, lam, mu).valid
                pos, _ = price_of_sinking(g)
                assert pos == 0.0
