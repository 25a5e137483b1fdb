"""Best- and better-response sets and the Markov kernels they induce.

Each step of the response process picks a player uniformly at random; that
player then moves to an action drawn uniformly from its response set.  A
target reachable through several players therefore accumulates probability
``1 / (n * |set_i|)`` from every player i that can produce it.  Summing the
overlaps is the only convention that keeps rows stochastic; overlaps occur
exactly at self-loops, where a player's current action is already a
(best or better) response.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import InvalidParametersError
from .game import JointAction, NormalFormGame

BEST = "best"
BETTER = "better"

ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class ResponseSet:
    """A player's admissible replies at some state."""

    player: int
    actions: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class TransitionKernel:
    """Sparse row-stochastic kernel over the joint-action space.

    ``rows[a]`` lists ``(target, probability)`` pairs sorted by target; every
    positive-probability target differs from ``a`` in at most one player
    coordinate.
    """

    num_states: int
    num_players: int
    mode: str
    tie_tol: float
    rows: tuple[tuple[tuple[int, float], ...], ...]

    def row(self, state: int) -> tuple[tuple[int, float], ...]:
        return self.rows[state]

    def successors(self, state: int) -> tuple[int, ...]:
        return tuple(t for t, _ in self.rows[state])

    def probability(self, src: int, dst: int) -> float:
        for t, p in self.rows[src]:
            if t == dst:
                return p
        return 0.0

    def edges(self) -> Iterator[tuple[int, int, float]]:
        for src, row in enumerate(self.rows):
            for dst, p in row:
                yield src, dst, p


def _deviation_values(game: NormalFormGame, player: int) -> tuple[np.ndarray, np.ndarray]:
    """Utility matrix ``val[k, a]``: player's payoff after switching to k at a.

    Also returns the player's current action index per state.
    """
    s = game.strides[player]
    c = game.action_counts[player]
    flats = np.arange(game.num_profiles)
    digits = (flats // s) % c
    base = flats - digits * s
    table = game.utilities[player]
    val = np.vstack([table[base + k * s] for k in range(c)])
    return val, digits


def best_response_set(
    game: NormalFormGame,
    player: int,
    action: JointAction | int,
    tie_tol: float = 0.0,
) -> ResponseSet:
    """Actions within ``tie_tol`` of the player's best payoff at the state.

    With the default ``tie_tol=0`` this is the exact argmax set.
    """
    if tie_tol < 0:
        raise InvalidParametersError("tie_tol must be nonnegative")
    ja = game.joint(action)
    s = game.strides[player]
    c = game.action_counts[player]
    base = ja.flat - ja.coords[player] * s
    fiber = game.utilities[player][base + np.arange(c) * s]
    keep = np.flatnonzero(fiber >= fiber.max() - tie_tol)
    return ResponseSet(player=player, actions=tuple(int(k) for k in keep))


def better_response_set(
    game: NormalFormGame,
    player: int,
    action: JointAction | int,
) -> ResponseSet:
    """Actions weakly improving the player's payoff; always contains the
    current action."""
    ja = game.joint(action)
    s = game.strides[player]
    c = game.action_counts[player]
    base = ja.flat - ja.coords[player] * s
    fiber = game.utilities[player][base + np.arange(c) * s]
    keep = np.flatnonzero(fiber >= fiber[ja.coords[player]])
    return ResponseSet(player=player, actions=tuple(int(k) for k in keep))


def build_kernel(
    game: NormalFormGame,
    mode: str = BEST,
    tie_tol: float = 0.0,
) -> TransitionKernel:
    """Transition kernel of the uniform-player response process.

    ``mode`` selects best-response (argmax within ``tie_tol``) or
    better-response (weak self-improvement) sets.
    """
    if mode not in (BEST, BETTER):
        raise InvalidParametersError(f"mode must be '{BEST}' or '{BETTER}'")
    if tie_tol < 0:
        raise InvalidParametersError("tie_tol must be nonnegative")

    n = game.num_players
    num_states = game.num_profiles
    masks: list[np.ndarray] = []
    digits: list[np.ndarray] = []
    for player in range(n):
        val, dig = _deviation_values(game, player)
        if mode == BEST:
            mask = val >= val.max(axis=0) - tie_tol
        else:
            mask = val >= game.utilities[player]
        masks.append(mask)
        digits.append(dig)

    strides = game.strides
    rows = []
    for a in range(num_states):
        acc: dict[int, float] = {}
        for player in range(n):
            acts = np.flatnonzero(masks[player][:, a])
            share = 1.0 / (n * acts.size)
            base = a - int(digits[player][a]) * strides[player]
            for k in acts:
                target = base + int(k) * strides[player]
                acc[target] = acc.get(target, 0.0) + share
        rows.append(tuple(sorted(acc.items())))

    return TransitionKernel(
        num_states=num_states,
        num_players=n,
        mode=mode,
        tie_tol=float(tie_tol),
        rows=tuple(rows),
    )


def is_singleton_br(game: NormalFormGame) -> tuple[bool, tuple[int, int] | None]:
    """Whether every exact best-response set has exactly one element.

    Returns ``(True, None)`` or ``(False, (player, state))`` for the violation
    with the smallest state index (smallest player breaking ties).
    """
    tie_counts = []
    for player in range(game.num_players):
        val, _ = _deviation_values(game, player)
        tie_counts.append((val == val.max(axis=0)).sum(axis=0))
    stacked = np.vstack(tie_counts) > 1
    broken_states = np.flatnonzero(stacked.any(axis=0))
    if broken_states.size == 0:
        return True, None
    state = int(broken_states[0])
    player = int(np.flatnonzero(stacked[:, state])[0])
    return False, (player, state)
