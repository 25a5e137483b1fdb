"""Benchmark game families, random-game samplers, and Monte Carlo harness.

Three concrete families are provided:

* a two-player 3x3 "gap" game that is (lam, mu)-smooth yet funnels best
  responses into a single zero-welfare sink,
* region-covering games where each agent maximizes a privately estimated
  version of an additive coverage value,
* two-channel interference games where each agent minimizes globally
  estimated pairwise interference.

All randomness flows through counter-based Philox generators keyed by
``SeedSequence(entropy, spawn_key)``, so trial streams are reproducible
across platforms and independent of execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import BEST, is_singleton_br
from .errors import GameAnalysisError, InvalidParametersError, ValidationError
from .game import NormalFormGame, enumerate_nash
from .sinks import price_of_sinking
from .smoothness import additive_sinking_bound, multiplicative_sinking_bound

BOUND_TOL = 1e-9


def philox_rng(seed: int, *spawn_key: int) -> np.random.Generator:
    """Counter-based generator for the given seed and spawn path."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(spawn_key))
    return np.random.Generator(np.random.Philox(ss))


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    """Independent stream for one Monte Carlo trial."""
    return philox_rng(master_seed, trial)


def _trial_seed(master_seed: int, trial: int) -> int:
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(trial),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


# ---------------------------------------------------------------------------
# Smoothness gap game
# ---------------------------------------------------------------------------

def counterexample_game(lam: float, mu: float) -> NormalFormGame:
    """Two-player 3x3 game that is (lam, mu)-smooth with a worthless sink.

    The welfare puts value 1 at (e1, f1), value (lam + eps)/mu on the two
    adjacent profiles with eps = (mu - lam)/2, and zero elsewhere.  Utilities
    pull both players away from the optimum into a four-state cycle over the
    zero-welfare block, so the unique sink has expected welfare exactly 0.
    Requires mu > lam >= 0.
    """
    if not mu > lam >= 0.0:
        raise InvalidParametersError(f"need mu > lam >= 0, got lam={lam}, mu={mu}")
    eps = (mu - lam) / 2.0
    cross = (lam + eps) / mu
    # The cycle needs a strictly positive rotation payoff even at lam = 0,
    # and the off-diagonal penalty must be at least lam to keep every
    # smoothness slack nonnegative.
    spin = lam if lam > 0.0 else eps
    drop = max(eps, lam)

    welfare = [
        [1.0, cross, 0.0],
        [cross, 0.0, 0.0],
        [0.0, 0.0, 0.0],
    ]
    u_row = [
        [0.0, 0.0, 0.0],
        [eps, spin, -2.0 * spin],
        [-drop, -2.0 * spin, spin],
    ]
    u_col = [
        [0.0, eps, -drop],
        [0.0, -2.0 * spin, spin],
        [0.0, spin, -2.0 * spin],
    ]
    # Tables are indexed [row e_i][column f_j]; flat index is i + 3j.
    return NormalFormGame(
        action_counts=(3, 3),
        welfare=np.asarray(welfare).ravel(order="F"),
        utilities=np.vstack(
            [np.asarray(u_row).ravel(order="F"), np.asarray(u_col).ravel(order="F")]
        ),
        action_labels=(("e1", "e2", "e3"), ("f1", "f2", "f3")),
    )


# ---------------------------------------------------------------------------
# Covering games
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoveringInstance:
    """A region-covering problem with noisy per-agent value estimates.

    ``options[i]`` lists the region subsets agent i may monitor.  Each agent's
    estimate of region r is drawn once per run from
    ``Normal(values[r] + bias, (scale * values[r])^2)`` and is deliberately
    not clamped, so estimates may come out negative.
    """

    values: tuple[float, ...]
    options: tuple[tuple[tuple[int, ...], ...], ...]
    bias: float
    scale: float
    seed: int

    def __post_init__(self):
        if not self.values:
            raise ValidationError("need at least one region")
        if any(v < 0 for v in self.values):
            raise ValidationError("region values must be nonnegative")
        if self.scale < 0:
            raise ValidationError("scale must be nonnegative")
        if not self.options:
            raise ValidationError("need at least one agent")
        m = len(self.values)
        norm = []
        for i, opts in enumerate(self.options):
            if not opts:
                raise ValidationError(f"agent {i} has no coverage options")
            rows = []
            for subset in opts:
                subset = tuple(sorted(set(int(r) for r in subset)))
                if subset and not 0 <= subset[0] <= subset[-1] < m:
                    raise ValidationError(
                        f"agent {i}: option {subset} has regions outside [0, {m})"
                    )
                rows.append(subset)
            norm.append(tuple(rows))
        object.__setattr__(self, "options", tuple(norm))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @property
    def num_agents(self) -> int:
        return len(self.options)

    @property
    def num_regions(self) -> int:
        return len(self.values)


def sample_covering_estimates(instance: CoveringInstance) -> np.ndarray:
    """Per-(agent, region) value estimates, drawn from spawn child 1 of the
    instance seed so they never overlap the option-sampling stream."""
    rng = philox_rng(instance.seed, 1)
    values = np.asarray(instance.values)
    n, m = instance.num_agents, instance.num_regions
    return rng.normal(
        loc=np.broadcast_to(values + instance.bias, (n, m)),
        scale=np.broadcast_to(instance.scale * values, (n, m)),
    )


def make_covering_game(instance: CoveringInstance) -> NormalFormGame:
    """Welfare sums true values over the union of chosen subsets; each agent's
    utility sums its own estimates over the same union."""
    n, m = instance.num_agents, instance.num_regions
    estimates = sample_covering_estimates(instance)
    values = np.asarray(instance.values)

    option_masks = []
    for opts in instance.options:
        masks = np.zeros((len(opts), m), dtype=bool)
        for k, subset in enumerate(opts):
            masks[k, list(subset)] = True
        option_masks.append(masks)

    counts = tuple(len(opts) for opts in instance.options)
    total = 1
    for c in counts:
        total *= c

    welfare = np.zeros(total)
    utilities = np.zeros((n, total))
    for flat in range(total):
        rest = flat
        union = np.zeros(m, dtype=bool)
        for i, c in enumerate(counts):
            union |= option_masks[i][rest % c]
            rest //= c
        welfare[flat] = values[union].sum()
        for i in range(n):
            utilities[i, flat] = estimates[i][union].sum()

    return NormalFormGame(action_counts=counts, welfare=welfare, utilities=utilities)


def sample_covering_instance(
    num_agents: int,
    num_regions: int,
    bias: float,
    scale: float,
    seed: int,
    region_value: float = 1.0,
    options_per_agent: int = 4,
) -> CoveringInstance:
    """Random instance: each agent gets up to ``options_per_agent`` distinct
    random subsets, resampled until at least one is nonempty."""
    if num_agents < 1 or num_regions < 1 or options_per_agent < 1:
        raise InvalidParametersError("agents, regions, and options must be positive")
    rng = philox_rng(seed, 0)
    options = []
    for _ in range(num_agents):
        while True:
            masks = rng.integers(0, 2, size=(options_per_agent, num_regions))
            if masks.any():
                break
        seen = []
        for row in masks:
            subset = tuple(int(r) for r in np.flatnonzero(row))
            if subset not in seen:
                seen.append(subset)
        options.append(tuple(seen))
    return CoveringInstance(
        values=(float(region_value),) * num_regions,
        options=tuple(options),
        bias=float(bias),
        scale=float(scale),
        seed=int(seed),
    )


def covering_instance_to_dict(instance: CoveringInstance) -> dict:
    """Plain-JSON description of a covering instance."""
    return {
        "values": list(instance.values),
        "options": [[list(subset) for subset in opts] for opts in instance.options],
        "bias": instance.bias,
        "scale": instance.scale,
        "seed": instance.seed,
    }


def covering_instance_from_dict(obj: dict) -> CoveringInstance:
    try:
        return CoveringInstance(
            values=tuple(obj["values"]),
            options=tuple(
                tuple(tuple(subset) for subset in opts) for opts in obj["options"]
            ),
            bias=float(obj["bias"]),
            scale=float(obj["scale"]),
            seed=int(obj["seed"]),
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"covering instance: {exc}") from exc


def expected_covering_misalignment(bias: float, scale: float, num_regions: int) -> float:
    """Expected additive misalignment of a noisy covering game.

    The per-region relative estimate error is folded-normal with mean ``bias``
    and deviation ``scale``; the bound sums the folded-normal mean over all
    regions.  Requires ``scale > 0``.
    """
    if scale <= 0:
        raise InvalidParametersError("scale must be positive")
    z = bias / scale
    folded_mean = scale * math.sqrt(2.0 / math.pi) * math.exp(-0.5 * z * z) + bias * (
        1.0 - 2.0 * _normal_cdf(-z)
    )
    return num_regions * folded_mean


def _normal_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def covering_sinking_bound(num_agents: int, misalignment: float) -> float:
    """Expected price-of-sinking floor for covering games: the coverage
    welfare is (1, 2)-smooth under common interest."""
    if num_agents < 1:
        raise InvalidParametersError("need at least one agent")
    return additive_sinking_bound(1.0, 2.0, num_agents, misalignment)


# ---------------------------------------------------------------------------
# Radio interference games
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RadioInstance:
    """Two-channel interference game with per-agent weight estimates.

    ``weights`` is the true pairwise interference matrix (zero diagonal);
    ``estimates[i]`` is agent i's full matrix, entrywise inside
    ``[alpha * w, w / alpha]``.
    """

    weights: np.ndarray
    alpha: float
    estimates: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        if weights.ndim != 2 or weights.shape[0] != weights.shape[1]:
            raise ValidationError("weights must be a square matrix")
        n = weights.shape[0]
        if np.any(weights < 0):
            raise ValidationError("weights must be nonnegative")
        if np.any(np.diag(weights) != 0):
            raise ValidationError("weights must have a zero diagonal")
        if not 0.0 < self.alpha <= 1.0:
            raise ValidationError("alpha must lie in (0, 1]")
        estimates = np.asarray(self.estimates, dtype=float)
        if estimates.shape != (n, n, n):
            raise ValidationError(
                f"estimates must have shape ({n}, {n}, {n}), got {estimates.shape}"
            )
        slop = 1e-12 * (1.0 + weights)
        lo = self.alpha * weights - slop
        hi = weights / self.alpha + slop
        for i in range(n):
            if np.any(estimates[i] < lo) or np.any(estimates[i] > hi):
                raise ValidationError(
                    f"agent {i} estimates leave [alpha*w, w/alpha]"
                )
        weights.setflags(write=False)
        estimates.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "estimates", estimates)

    @property
    def num_agents(self) -> int:
        return self.weights.shape[0]


def sample_radio_instance(
    num_agents: int,
    alpha: float,
    seed: int,
    weights: np.ndarray | None = None,
) -> RadioInstance:
    """Random symmetric weights in (0, 1) plus log-uniform estimate factors.

    Sampling factors log-uniformly on [alpha, 1/alpha] keeps ratios symmetric
    around 1; with alpha = 1 every estimate equals the true weight exactly.
    """
    if num_agents < 2:
        raise InvalidParametersError("need at least two agents")
    rng = philox_rng(seed, 0)
    n = num_agents
    if weights is None:
        weights = np.zeros((n, n))
        iu = np.triu_indices(n, k=1)
        weights[iu] = rng.uniform(0.0, 1.0, size=len(iu[0]))
        weights = weights + weights.T
    else:
        weights = np.asarray(weights, dtype=float)
    span = abs(math.log(alpha))
    factors = np.exp(rng.uniform(-span, span, size=(n, n, n)))
    estimates = weights[None, :, :] * factors
    return RadioInstance(
        weights=weights, alpha=float(alpha), estimates=estimates, seed=int(seed)
    )


def make_radio_game(instance: RadioInstance) -> NormalFormGame:
    """Each agent picks one of two channels; welfare totals the interference
    weight avoided by every ordered pair on different channels."""
    n = instance.num_agents
    total = 1 << n
    states = np.arange(total)
    channels = (states[:, None] >> np.arange(n)[None, :]) & 1
    split = channels[:, :, None] != channels[:, None, :]

    welfare = np.einsum("alj,lj->a", split, instance.weights)
    utilities = np.empty((n, total))
    for i in range(n):
        utilities[i] = np.einsum("alj,lj->a", split, instance.estimates[i])

    labels = tuple(("ch1", "ch2") for _ in range(n))
    return NormalFormGame(
        action_counts=(2,) * n,
        welfare=welfare,
        utilities=utilities,
        action_labels=labels,
    )


def radio_instance_to_dict(instance: RadioInstance) -> dict:
    """Plain-JSON description of an interference instance."""
    return {
        "weights": instance.weights.tolist(),
        "alpha": instance.alpha,
        "estimates": instance.estimates.tolist(),
        "seed": instance.seed,
    }


def radio_instance_from_dict(obj: dict) -> RadioInstance:
    try:
        return RadioInstance(
            weights=np.asarray(obj["weights"], dtype=float),
            alpha=float(obj["alpha"]),
            estimates=np.asarray(obj["estimates"], dtype=float),
            seed=obj.get("seed"),
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"radio instance: {exc}") from exc


def radio_sinking_bound(num_agents: int, alpha: float) -> float:
    """Per-instance price-of-sinking floor for two-channel interference games
    with estimate ratio margin alpha: the welfare is (1, 3)-smooth under
    common interest and the game is (1 - alpha)-ratio-misaligned."""
    if num_agents < 1:
        raise InvalidParametersError("need at least one agent")
    if not 0.0 < alpha <= 1.0:
        raise InvalidParametersError("alpha must lie in (0, 1]")
    return multiplicative_sinking_bound(1.0, 3.0, num_agents, 1.0 - alpha)


# ---------------------------------------------------------------------------
# Random games for property checks
# ---------------------------------------------------------------------------

def sample_action_counts(
    rng: np.random.Generator,
    max_players: int = 3,
    max_actions: int = 4,
    max_profiles: int | None = None,
) -> tuple[int, ...]:
    while True:
        n = int(rng.integers(1, max_players + 1))
        counts = tuple(int(rng.integers(2, max_actions + 1)) for _ in range(n))
        total = 1
        for c in counts:
            total *= c
        if max_profiles is None or total <= max_profiles:
            return counts


def sample_random_game(
    rng: np.random.Generator,
    action_counts: tuple[int, ...],
    welfare_range: tuple[float, float] = (0.05, 1.0),
    utility_range: tuple[float, float] = (-1.0, 1.0),
) -> NormalFormGame:
    total = 1
    for c in action_counts:
        total *= c
    welfare = rng.uniform(*welfare_range, size=total)
    utilities = rng.uniform(*utility_range, size=(len(action_counts), total))
    return NormalFormGame(
        action_counts=action_counts, welfare=welfare, utilities=utilities
    )


def sample_game_with_pure_nash(
    rng: np.random.Generator,
    max_players: int = 3,
    max_actions: int = 4,
) -> NormalFormGame:
    """Rejection-sample until the game has at least one pure equilibrium."""
    while True:
        counts = sample_action_counts(rng, max_players, max_actions)
        game = sample_random_game(rng, counts)
        if enumerate_nash(game):
            return game


def sample_near_common_game(
    rng: np.random.Generator,
    action_counts: tuple[int, ...],
    deviation: float,
    noise: str = "additive",
    max_attempts: int = 500,
) -> NormalFormGame:
    """Common-interest base W ~ U(0.1, 1) with bounded per-entry noise.

    ``additive`` draws utilities in ``W * (1 ± deviation)``; ``multiplicative``
    draws ratio factors log-uniformly in ``[1 - deviation, 1/(1 - deviation)]``.
    Resamples until best responses are singletons everywhere.
    """
    if noise not in ("additive", "multiplicative"):
        raise InvalidParametersError("noise must be 'additive' or 'multiplicative'")
    n = len(action_counts)
    total = 1
    for c in action_counts:
        total *= c
    for _ in range(max_attempts):
        welfare = rng.uniform(0.1, 1.0, size=total)
        if noise == "additive":
            wiggle = rng.uniform(-deviation, deviation, size=(n, total))
            utilities = welfare[None, :] * (1.0 + wiggle)
        else:
            span = -math.log(1.0 - deviation) if deviation > 0 else 0.0
            factors = np.exp(rng.uniform(-span, span, size=(n, total)))
            utilities = welfare[None, :] * factors
        game = NormalFormGame(
            action_counts=action_counts, welfare=welfare, utilities=utilities
        )
        singleton, _ = is_singleton_br(game)
        if singleton:
            return game
    raise InvalidParametersError(
        f"could not reach singleton best responses in {max_attempts} attempts"
    )


# ---------------------------------------------------------------------------
# Monte Carlo harness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoveringMonteCarloSpec:
    """Trial recipe for random covering instances with unit region values."""

    num_agents: int
    num_regions: int
    bias: float
    scale: float
    region_value: float = 1.0
    options_per_agent: int = 4


@dataclass(frozen=True)
class RadioMonteCarloSpec:
    """Trial recipe for random two-channel interference instances."""

    num_agents: int
    alpha: float


@dataclass(frozen=True)
class TrialResult:
    trial: int
    pos: float
    bound: float
    violation: bool


@dataclass(frozen=True)
class MonteCarloSummary:
    """Aggregate view of one experiment; violations count trials whose exact
    price of sinking fell more than 1e-9 below the per-trial bound."""

    trials: int
    mean_pos: float
    std_err: float
    min_pos: float
    bound: float
    violations: int
    results: tuple[TrialResult, ...]


def _covering_bound(spec: CoveringMonteCarloSpec) -> float:
    if spec.scale > 0:
        beta = expected_covering_misalignment(spec.bias, spec.scale, spec.num_regions)
    else:
        # Zero-variance limit of the folded-normal mean.
        beta = spec.num_regions * abs(spec.bias)
    return covering_sinking_bound(spec.num_agents, beta)


def _run_trial(
    spec: CoveringMonteCarloSpec | RadioMonteCarloSpec,
    master_seed: int,
    trial: int,
) -> TrialResult:
    seed = _trial_seed(master_seed, trial)
    if isinstance(spec, CoveringMonteCarloSpec):
        instance = sample_covering_instance(
            spec.num_agents,
            spec.num_regions,
            spec.bias,
            spec.scale,
            seed,
            region_value=spec.region_value,
            options_per_agent=spec.options_per_agent,
        )
        game = make_covering_game(instance)
        bound = _covering_bound(spec)
    elif isinstance(spec, RadioMonteCarloSpec):
        game = make_radio_game(
            sample_radio_instance(spec.num_agents, spec.alpha, seed)
        )
        bound = radio_sinking_bound(spec.num_agents, spec.alpha)
    else:
        raise InvalidParametersError(f"unknown Monte Carlo spec {type(spec).__name__}")
    pos, _ = price_of_sinking(game, mode=BEST)
    return TrialResult(
        trial=trial, pos=pos, bound=bound, violation=pos < bound - BOUND_TOL
    )


def run_monte_carlo(
    spec: CoveringMonteCarloSpec | RadioMonteCarloSpec,
    trials: int,
    master_seed: int,
) -> MonteCarloSummary:
    """Run seeded independent trials and aggregate their sinking prices.

    Deterministic for a fixed ``master_seed``: trial t draws from the Philox
    stream keyed by ``SeedSequence(master_seed, spawn_key=(t,))`` regardless
    of execution order.  A failing trial aborts the run with its seed in the
    error message.
    """
    if trials < 1:
        raise InvalidParametersError("need at least one trial")
    results = []
    for trial in range(trials):
        try:
            results.append(_run_trial(spec, master_seed, trial))
        except GameAnalysisError as exc:
            raise type(exc)(
                f"trial {trial} (master_seed={master_seed}): {exc}"
            ) from exc
    pos = np.array([r.pos for r in results])
    std_err = float(np.std(pos, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return MonteCarloSummary(
        trials=trials,
        mean_pos=float(np.mean(pos)),
        std_err=std_err,
        min_pos=float(np.min(pos)),
        bound=results[0].bound,
        violations=sum(r.violation for r in results),
        results=tuple(results),
    )
