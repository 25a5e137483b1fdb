"""Sink components of response chains and their stationary distributions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import BEST, TransitionKernel, build_kernel
from .errors import (
    DegenerateWelfareError,
    InvalidParametersError,
    NumericalFailureError,
)
from .game import NormalFormGame, optimal_profile

STATIONARY_TOL = 1e-10
DIRECT_SOLVE_LIMIT = 2000
POWER_MAX_STEPS = 10**6
POWER_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SinkEquilibrium:
    """Stationary distribution supported on one sink component."""

    support: tuple[int, ...]
    probabilities: np.ndarray
    expected_welfare: float


def strongly_connected_components(kernel: TransitionKernel) -> list[tuple[int, ...]]:
    """All SCCs of the positive-probability transition graph.

    Iterative Tarjan with an explicit work stack; recursion would overflow on
    chains with ~1e5 states.
    """
    n = kernel.num_states
    index = [-1] * n
    lowlink = [0] * n
    on_stack = bytearray(n)
    stack: list[int] = []
    components: list[tuple[int, ...]] = []
    counter = 0

    for root in range(n):
        if index[root] != -1:
            continue
        work: list[list[int]] = [[root, 0]]
        while work:
            v, pos = work[-1]
            if pos == 0:
                index[v] = lowlink[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = 1
            descended = False
            row = kernel.rows[v]
            while pos < len(row):
                w = row[pos][0]
                pos += 1
                if index[w] == -1:
                    work[-1][1] = pos
                    work.append([w, 0])
                    descended = True
                    break
                if on_stack[w]:
                    lowlink[v] = min(lowlink[v], index[w])
            if descended:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[v])
            if lowlink[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = 0
                    comp.append(w)
                    if w == v:
                        break
                components.append(tuple(sorted(comp)))
    return components


def sink_components(kernel: TransitionKernel) -> list[tuple[int, ...]]:
    """SCCs with no outgoing transition, ordered by their smallest state."""
    components = strongly_connected_components(kernel)
    comp_id = [0] * kernel.num_states
    for cid, comp in enumerate(components):
        for state in comp:
            comp_id[state] = cid
    sinks = []
    for cid, comp in enumerate(components):
        escapes = any(
            comp_id[t] != cid for state in comp for t, _ in kernel.rows[state]
        )
        if not escapes:
            sinks.append(comp)
    sinks.sort(key=lambda comp: comp[0])
    return sinks


def _restricted_matrix(kernel: TransitionKernel, support: tuple[int, ...]) -> np.ndarray:
    pos = {s: i for i, s in enumerate(support)}
    k = len(support)
    matrix = np.zeros((k, k))
    for s in support:
        for t, p in kernel.rows[s]:
            j = pos.get(t)
            if j is None:
                raise InvalidParametersError(
                    f"support is not closed: {s} -> {t} leaves it"
                )
            matrix[pos[s], j] += p
    return matrix


def _power_iteration(matrix: np.ndarray) -> np.ndarray:
    # Lazy chain (P+I)/2 shares the stationary vector and is aperiodic.
    k = matrix.shape[0]
    pi = np.full(k, 1.0 / k)
    for _ in range(POWER_MAX_STEPS):
        nxt = 0.5 * (pi + pi @ matrix)
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - pi)) <= POWER_TOL:
            return nxt
        pi = nxt
    raise NumericalFailureError("power iteration did not converge")


def stationary_distribution(
    kernel: TransitionKernel, support: tuple[int, ...] | list[int]
) -> np.ndarray:
    """Unique stationary vector of the chain restricted to a sink component.

    Solves the balance equations directly with one row replaced by the
    normalization constraint; supports larger than DIRECT_SOLVE_LIMIT states
    fall back to damped power iteration.
    """
    support = tuple(sorted(int(s) for s in support))
    if not support:
        raise InvalidParametersError("support must be nonempty")
    matrix = _restricted_matrix(kernel, support)
    k = len(support)
    if k == 1:
        return np.array([1.0])

    if k <= DIRECT_SOLVE_LIMIT:
        system = matrix.T - np.eye(k)
        system[-1, :] = 1.0
        rhs = np.zeros(k)
        rhs[-1] = 1.0
        try:
            pi = np.linalg.solve(system, rhs)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailureError(f"stationary solve failed: {exc}") from exc
    else:
        pi = _power_iteration(matrix)

    total = pi.sum()
    if not np.isfinite(total) or total <= 0:
        raise NumericalFailureError("stationary solve produced a non-distribution")
    pi = pi / total
    residual = float(np.max(np.abs(pi @ matrix - pi)))
    if residual > STATIONARY_TOL:
        raise NumericalFailureError(
            f"stationary residual {residual:.3e} exceeds {STATIONARY_TOL:.0e}"
        )
    if pi.min() <= 0.0:
        raise NumericalFailureError("stationary distribution is not strictly positive")
    pi.setflags(write=False)
    return pi


def sink_equilibria(
    game: NormalFormGame, mode: str = BEST, tie_tol: float = 0.0
) -> list[SinkEquilibrium]:
    """One equilibrium per sink of the chosen response chain, ordered by the
    smallest support state."""
    kernel = build_kernel(game, mode=mode, tie_tol=tie_tol)
    out = []
    for support in sink_components(kernel):
        pi = stationary_distribution(kernel, support)
        expected = math.fsum(
            float(p) * float(game.welfare[s]) for p, s in zip(pi, support)
        )
        out.append(
            SinkEquilibrium(
                support=support, probabilities=pi, expected_welfare=expected
            )
        )
    return out


def price_of_sinking(
    game: NormalFormGame, mode: str = BEST, tie_tol: float = 0.0
) -> tuple[float, SinkEquilibrium]:
    """Worst sink expected welfare over the optimal welfare, with the
    minimizing equilibrium."""
    _, wopt = optimal_profile(game)
    if wopt <= 0.0:
        raise DegenerateWelfareError("optimal welfare is zero")
    equilibria = sink_equilibria(game, mode=mode, tie_tol=tie_tol)
    worst = equilibria[0]
    for eq in equilibria[1:]:
        if eq.expected_welfare < worst.expected_welfare:
            worst = eq
    return worst.expected_welfare / wopt, worst
