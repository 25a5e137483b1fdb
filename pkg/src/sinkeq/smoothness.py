"""Smoothness certificates, misalignment measurement, and sinking bounds.

A game is (lam, mu)-smooth when, at every state, the summed gain each player
would forfeit by unilaterally switching to its optimal-profile coordinate is
at most ``mu * W(a) - lam * W(opt)``.  The common-interest variant replaces
every utility by the welfare itself.  ``best_smoothness`` maximizes the ratio
``lam / mu`` over all valid certificates; the ratio lower-bounds the price of
anarchy, and combined with a misalignment measurement it yields lower bounds
on the price of sinking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import BEST, BETTER, build_kernel, is_singleton_br
from .errors import (
    CertificateNotFoundError,
    DegenerateWelfareError,
    InvalidParametersError,
    WitnessNotFoundError,
)
from .game import JointAction, NormalFormGame, optimal_profile
from .sinks import SinkEquilibrium, price_of_sinking, sink_components

SLACK_TOL = 1e-9
RATIO_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SmoothnessCertificate:
    """Per-state slack of the smoothness inequality for one (lam, mu) pair."""

    lam: float
    mu: float
    common_interest: bool
    slack: np.ndarray
    optimum: JointAction

    @property
    def min_slack(self) -> float:
        return float(self.slack.min())

    @property
    def valid(self) -> bool:
        return self.min_slack >= -SLACK_TOL


@dataclass(frozen=True)
class MisalignmentReport:
    """How far utilities stray from the welfare, in additive and ratio terms.

    A ``None`` beta means the corresponding notion is undefined for the game;
    the witness then points at the offending (player, state) pair instead of
    the maximizer.
    """

    beta_arithmetic: float | None
    witness_arithmetic: tuple[int, int] | None
    beta_geometric: float | None
    witness_geometric: tuple[int, int] | None
    arithmetic_exceeds_unit: bool = False


@dataclass(frozen=True, eq=False)
class BoundReport:
    """Exact price of sinking next to each misalignment-based floor."""

    price_of_sinking: float
    lambda_c: float
    mu_c: float
    num_players: int
    singleton_br: bool
    beta_arithmetic: float | None
    bound_arithmetic: float | None
    satisfied_arithmetic: bool | None
    beta_geometric: float | None
    bound_geometric: float | None
    satisfied_geometric: bool | None
    misalignment: MisalignmentReport
    worst_sink: SinkEquilibrium


@dataclass(frozen=True, eq=False)
class SinkWitness:
    """Best support action of one better-response sink versus its floor."""

    support: tuple[int, ...]
    action: JointAction
    welfare: float
    threshold: float
    meets_threshold: bool
    aligned_action: JointAction | None


def _deviation_totals(
    game: NormalFormGame, optimum: JointAction, common_interest: bool
) -> np.ndarray:
    """Per-state sum over players of U_i(a) - U_i(opt_i, rest of a)."""
    total = np.zeros(game.num_profiles)
    for player in range(game.num_players):
        table = game.welfare if common_interest else game.utilities[player]
        dmap = game.deviation_map(player, optimum.coords[player])
        total += table - table[dmap]
    return total


def check_smoothness(
    game: NormalFormGame,
    lam: float,
    mu: float,
    common_interest: bool = False,
) -> SmoothnessCertificate:
    """Evaluate the smoothness inequality at every state for fixed (lam, mu)."""
    if not 0.0 <= lam <= mu:
        raise InvalidParametersError(f"need mu >= lam >= 0, got lam={lam}, mu={mu}")
    optimum, wopt = optimal_profile(game)
    deviation = _deviation_totals(game, optimum, common_interest)
    slack = mu * game.welfare - lam * wopt - deviation
    slack.setflags(write=False)
    return SmoothnessCertificate(
        lam=float(lam),
        mu=float(mu),
        common_interest=bool(common_interest),
        slack=slack,
        optimum=optimum,
    )


def best_smoothness(
    game: NormalFormGame, common_interest: bool = False
) -> tuple[float, float]:
    """Certificate maximizing lam/mu, found by bisection on the ratio.

    For a fixed ratio ``rho``, a certificate with ``lam = rho * mu`` exists iff
    some ``mu >= 0`` satisfies ``mu * (W(a) - rho * W(opt)) >= D(a)`` at every
    state, which reduces to intersecting per-state lower and upper bounds on
    ``mu``.  Feasibility is monotone in ``rho``, so bisection applies; the
    search stops at ratio tolerance 1e-9 and returns the witness with the
    smallest feasible ``mu``.

    Raises
    ------
    DegenerateWelfareError
        If the optimal welfare is zero.
    CertificateNotFoundError
        If no finite certificate exists (a zero-welfare state with positive
        total deviation gain blocks every ``lam >= 0``).
    """
    optimum, wopt = optimal_profile(game)
    if wopt <= 0.0:
        raise DegenerateWelfareError("optimal welfare is zero")
    deviation = _deviation_totals(game, optimum, common_interest)
    welfare = game.welfare
    zero_tol = 1e-12 * max(1.0, wopt)

    def witness(rho: float) -> tuple[float, float] | None:
        margin = welfare - rho * wopt
        pos = margin > zero_tol
        neg = margin < -zero_tol
        lower = 0.0
        upper = math.inf
        if np.any(pos):
            lower = max(0.0, float(np.max(deviation[pos] / margin[pos])))
        if np.any(neg):
            upper = float(np.min(deviation[neg] / margin[neg]))
        if np.any(deviation[~(pos | neg)] > SLACK_TOL):
            return None
        if upper <= 0.0 or lower > upper + 1e-12 * max(1.0, abs(lower)):
            return None
        mu = lower if lower > 0.0 else min(1.0, upper)
        lam = rho * mu
        # Near an unattained supremum the minimal feasible mu blows up and
        # rounding can push some slack below the validity tolerance; such a
        # ratio is treated as infeasible so the returned pair always passes
        # check_smoothness.
        slack = mu * welfare - lam * wopt - deviation
        if float(slack.min()) < -SLACK_TOL:
            return None
        return lam, mu

    best = witness(0.0)
    if best is None:
        raise CertificateNotFoundError(
            "no finite smoothness certificate: a zero-welfare state has "
            "positive total deviation gain"
        )
    top = witness(1.0)
    if top is not None:
        return top
    lo, hi = 0.0, 1.0
    while hi - lo > RATIO_TOL:
        mid = 0.5 * (lo + hi)
        pair = witness(mid)
        if pair is not None:
            lo, best = mid, pair
        else:
            hi = mid
    return best


def additive_sinking_bound(lam_c: float, mu_c: float, num_players: int, beta: float) -> float:
    """Price-of-sinking floor for games within additive distance beta of
    common interest, given common-interest smoothness parameters."""
    if beta < 0:
        raise InvalidParametersError("beta must be nonnegative")
    return max((lam_c - 4.0 * beta * num_players) / mu_c, 0.0)


def multiplicative_sinking_bound(
    lam_c: float, mu_c: float, num_players: int, beta: float
) -> float:
    """Price-of-sinking floor for games whose utility/welfare ratios lie in
    [1-beta, 1/(1-beta)]."""
    if not 0.0 <= beta < 1.0:
        raise InvalidParametersError("beta must lie in [0, 1)")
    kept = (1.0 - beta) ** 2
    return lam_c / (kept * mu_c + (1.0 - kept) * num_players)


def measure_misalignment(game: NormalFormGame) -> MisalignmentReport:
    """Measure both misalignment notions from the stored tables in one pass.

    Zero-welfare states are covered only when every utility vanishes there;
    otherwise the affected notion is undefined.  The ratio notion additionally
    requires every utility/welfare ratio to be positive.
    """
    arith_beta = 0.0
    arith_witness: tuple[int, int] | None = None
    arith_defined = True
    geo_defined = True
    geo_undef_witness: tuple[int, int] | None = None
    ratio_min = math.inf
    ratio_max = -math.inf
    ratio_min_witness: tuple[int, int] | None = None
    ratio_max_witness: tuple[int, int] | None = None

    welfare = game.welfare
    zero = welfare == 0.0
    positive = ~zero
    pos_index = np.flatnonzero(positive)

    for player in range(game.num_players):
        utility = game.utilities[player]
        bad_zero = np.flatnonzero(zero & (utility != 0.0))
        if bad_zero.size and arith_defined:
            arith_defined = False
            arith_witness = (player, int(bad_zero[0]))
        if bad_zero.size and geo_defined:
            geo_defined = False
            geo_undef_witness = (player, int(bad_zero[0]))
        if pos_index.size == 0:
            continue
        ratios = utility[pos_index] / welfare[pos_index]
        if arith_defined:
            deviations = np.abs(ratios - 1.0)
            k = int(np.argmax(deviations))
            if deviations[k] > arith_beta or arith_witness is None:
                arith_beta = float(deviations[k])
                arith_witness = (player, int(pos_index[k]))
        if geo_defined:
            nonpos = np.flatnonzero(ratios <= 0.0)
            if nonpos.size:
                geo_defined = False
                geo_undef_witness = (player, int(pos_index[nonpos[0]]))
            else:
                k = int(np.argmin(ratios))
                if ratios[k] < ratio_min:
                    ratio_min = float(ratios[k])
                    ratio_min_witness = (player, int(pos_index[k]))
                k = int(np.argmax(ratios))
                if ratios[k] > ratio_max:
                    ratio_max = float(ratios[k])
                    ratio_max_witness = (player, int(pos_index[k]))

    if not arith_defined:
        beta_arith = None
    elif pos_index.size == 0:
        beta_arith = 0.0
        arith_witness = None
    else:
        beta_arith = arith_beta

    if not geo_defined:
        beta_geo = None
        geo_witness = geo_undef_witness
    elif pos_index.size == 0 or not math.isfinite(ratio_min):
        beta_geo = 0.0
        geo_witness = None
    else:
        from_low = 1.0 - ratio_min
        from_high = 1.0 - 1.0 / ratio_max
        if from_low >= from_high:
            beta_geo = max(from_low, 0.0)
            geo_witness = ratio_min_witness
        else:
            beta_geo = max(from_high, 0.0)
            geo_witness = ratio_max_witness

    return MisalignmentReport(
        beta_arithmetic=beta_arith,
        witness_arithmetic=arith_witness,
        beta_geometric=beta_geo,
        witness_geometric=geo_witness,
        arithmetic_exceeds_unit=bool(beta_arith is not None and beta_arith > 1.0),
    )


def arithmetic_misalignment(game: NormalFormGame) -> MisalignmentReport:
    """Smallest beta with |U_i(a) - W(a)| <= beta * W(a) everywhere."""
    return measure_misalignment(game)


def geometric_misalignment(game: NormalFormGame) -> MisalignmentReport:
    """Smallest beta with 1-beta <= U_i(a)/W(a) <= 1/(1-beta) everywhere."""
    return measure_misalignment(game)


def bound_report(game: NormalFormGame, tie_tol: float = 0.0) -> BoundReport:
    """Exact price of sinking compared against both misalignment floors.

    The floors use the common-interest certificate from ``best_smoothness``.
    They apply only under singleton best responses; when that hypothesis or a
    beta measurement fails, the corresponding satisfied flag is ``None``.
    """
    lam_c, mu_c = best_smoothness(game, common_interest=True)
    report = measure_misalignment(game)
    singleton, _ = is_singleton_br(game)
    pos, worst = price_of_sinking(game, mode=BEST, tie_tol=tie_tol)
    n = game.num_players

    bound_arith = None
    if report.beta_arithmetic is not None:
        bound_arith = additive_sinking_bound(lam_c, mu_c, n, report.beta_arithmetic)
    bound_geo = None
    if report.beta_geometric is not None:
        bound_geo = multiplicative_sinking_bound(lam_c, mu_c, n, report.beta_geometric)

    satisfied_arith = None
    if singleton and bound_arith is not None:
        satisfied_arith = pos >= bound_arith - SLACK_TOL
    satisfied_geo = None
    if singleton and bound_geo is not None:
        satisfied_geo = pos >= bound_geo - SLACK_TOL

    return BoundReport(
        price_of_sinking=pos,
        lambda_c=lam_c,
        mu_c=mu_c,
        num_players=n,
        singleton_br=singleton,
        beta_arithmetic=report.beta_arithmetic,
        bound_arithmetic=bound_arith,
        satisfied_arithmetic=satisfied_arith,
        beta_geometric=report.beta_geometric,
        bound_geometric=bound_geo,
        satisfied_geometric=satisfied_geo,
        misalignment=report,
        worst_sink=worst,
    )


def better_response_witness(
    game: NormalFormGame, lam: float, mu: float
) -> list[SinkWitness]:
    """Locate, in every better-response sink, an action meeting the smoothness
    welfare floor ``(lam/mu) * W(opt)``.

    Also reports a support action whose unilateral switches to the optimal
    profile are all non-improving, when one exists.  Raises
    WitnessNotFoundError if some sink misses the welfare floor, which would
    contradict the certificate.
    """
    certificate = check_smoothness(game, lam, mu)
    if not certificate.valid:
        raise InvalidParametersError(
            f"({lam}, {mu}) is not a valid smoothness certificate "
            f"(min slack {certificate.min_slack:.3e})"
        )
    optimum, wopt = optimal_profile(game)
    ratio = lam / mu if mu > 0 else 0.0
    threshold = ratio * wopt

    kernel = build_kernel(game, mode=BETTER)
    dev_maps = [
        game.deviation_map(i, optimum.coords[i]) for i in range(game.num_players)
    ]
    witnesses = []
    for support in sink_components(kernel):
        values = game.welfare[list(support)]
        best_pos = int(np.argmax(values))
        best_state = support[best_pos]
        best_welfare = float(values[best_pos])
        meets = best_welfare >= threshold - SLACK_TOL

        aligned = None
        for state in support:
            ok = True
            for player in range(game.num_players):
                table = game.utilities[player]
                if table[state] - table[dev_maps[player][state]] < 0.0:
                    ok = False
                    break
            if ok:
                aligned = game.index_to_joint(state)
                break

        if not meets:
            raise WitnessNotFoundError(
                f"sink starting at state {support[0]} has max welfare "
                f"{best_welfare:.6g} below threshold {threshold:.6g}"
            )
        witnesses.append(
            SinkWitness(
                support=support,
                action=game.index_to_joint(best_state),
                welfare=best_welfare,
                threshold=threshold,
                meets_threshold=meets,
                aligned_action=aligned,
            )
        )
    return witnesses
