"""The two headline algorithms (value iteration with a step bound, and the
q-rounded variant of Hoffman-Karp strategy iteration) plus profile
evaluation and hitting-time utilities.

Value iteration runs the one-step operator

    M_s^j[a1,a2] = (R(s,a1,a2) + (j-1) * sum_t delta(s,a1,a2)(t) v_t^{j-1}) / j

and takes the matrix-game value at every state.  States are grouped by
action-matrix shape so that the hot shapes (1x1 chains, 2x2 games, one-sided
vectors) run as batched numpy closed forms; anything larger falls back to
the LP solver.  Internally rewards are normalized to [0, 1]; all reported
values are in unnormalized reward units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import CmpgError, IterationLimitError, UnichainError
from .game import Game, GameStats, StationaryStrategy, compute_stats
from .matrix import (
    MatrixGame,
    QRoundedDistribution,
    best_q_rounded,
    q_from_epsilon,
    q_rounded_value,
    round_distribution,
    solve_matrix_game,
)
from .response import (
    PotentialSolution,
    best_response_potentials,
    induced_chain,
    solve_chain_gain_bias,
)


@dataclass
class ValueIterationResult:
    values: dict[str, float]  # per-state v^T, unnormalized units
    bracket: tuple[float, float]
    steps: int
    trace: list[tuple[float, float]] | None = None

    @property
    def width(self) -> float:
        return self.bracket[1] - self.bracket[0]

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.bracket[0] + self.bracket[1])


@dataclass
class StrategyIterationResult:
    strategy: StationaryStrategy  # exactly q-rounded
    gain: float
    potentials: PotentialSolution
    iterations: int
    q: int
    gains: list[float] = field(default_factory=list)
    epsilon_actual: Fraction | None = None


@dataclass
class HittingBound:
    bound: Fraction  # n * delta_min^-r, an upper bound on any profile's hitting time


# -- compiled float view -----------------------------------------------------


class _CompiledGame:
    """Per-shape batched float arrays for the VI hot loop."""

    def __init__(self, game: Game):
        self.n = len(game.states)
        self.scale = float(game.reward_scale)
        by_shape: dict[tuple[int, int], list[int]] = {}
        for si, s in enumerate(game.states):
            shape = (len(game.actions1[s]), len(game.actions2[s]))
            by_shape.setdefault(shape, []).append(si)
        self.groups = []
        inv = 1.0 / self.scale
        for (m1, m2), idx in sorted(by_shape.items()):
            R = np.zeros((len(idx), m1, m2))
            P = np.zeros((len(idx), m1 * m2, self.n))
            for gi, si in enumerate(idx):
                s = game.states[si]
                for i1, a1 in enumerate(game.actions1[s]):
                    for i2, a2 in enumerate(game.actions2[s]):
                        key = (s, a1, a2)
                        R[gi, i1, i2] = float(game.rewards[key]) * inv
                        for t, p in game.transitions[key].items():
                            P[gi, i1 * m2 + i2, game.state_index(t)] = float(p)
            self.groups.append((m1, m2, np.array(idx), R, P))


def _values_2x2_batch(M: np.ndarray) -> np.ndarray:
    a, b = M[:, 0, 0], M[:, 0, 1]
    c, d = M[:, 1, 0], M[:, 1, 1]
    maximin = np.maximum(np.minimum(a, b), np.minimum(c, d))
    minimax = np.minimum(np.maximum(a, c), np.maximum(b, d))
    denom = a + d - b - c
    saddle = (maximin >= minimax) | (denom == 0.0)
    safe = np.where(saddle, 1.0, denom)
    mixed = (a * d - b * c) / safe
    return np.where(saddle, maximin, mixed)


def _value_2x2_scalar(a: float, b: float, c: float, d: float) -> float:
    maximin = max(min(a, b), min(c, d))
    minimax = min(max(a, c), max(b, d))
    denom = a + d - b - c
    if maximin >= minimax or denom == 0.0:
        return maximin
    return (a * d - b * c) / denom


class _PyCompiled:
    """Sparse pure-Python stepper; beats numpy dispatch overhead on the
    small games the generators produce (a few matrix cells per state)."""

    def __init__(self, game: Game):
        self.n = len(game.states)
        self.scale = float(game.reward_scale)
        inv = 1.0 / self.scale
        self.states = []
        for s in game.states:
            m1, m2 = len(game.actions1[s]), len(game.actions2[s])
            cells = []
            for a1 in game.actions1[s]:
                for a2 in game.actions2[s]:
                    key = (s, a1, a2)
                    succ = tuple(
                        (game.state_index(t), float(p)) for t, p in game.transitions[key].items()
                    )
                    cells.append((float(game.rewards[key]) * inv, succ))
            self.states.append((m1, m2, cells))

    @property
    def size(self) -> int:
        return sum(len(succ) + 1 for _, _, cells in self.states for _, succ in cells)

    def step(self, v: list[float], j: int) -> list[float]:
        w = float(j - 1)
        inv = 1.0 / j
        out = []
        for m1, m2, cells in self.states:
            vals = []
            for r, succ in cells:
                acc = r
                for t, p in succ:
                    acc += w * p * v[t]
                vals.append(acc * inv)
            if m1 == 1 and m2 == 1:
                out.append(vals[0])
            elif m1 == 1:
                out.append(min(vals))
            elif m2 == 1:
                out.append(max(vals))
            elif m1 == 2 and m2 == 2:
                out.append(_value_2x2_scalar(vals[0], vals[1], vals[2], vals[3]))
            else:
                M = np.array(vals).reshape(m1, m2)
                out.append(solve_matrix_game(MatrixGame(M)).value)
        return out


def value_iteration(
    game: Game,
    steps: int,
    trace: bool = False,
    stop_width: float | None = None,
) -> ValueIterationResult:
    """Run the finite-horizon one-step operator for `steps` iterations from
    v^0 = 0.

    `stop_width` optionally ends the run early once the bracket
    (min_s v^j, max_s v^j) is at most that wide; the reported step count is
    then the number of iterations actually performed.
    """
    if steps < 1:
        raise CmpgError("steps must be >= 1")
    history: list[tuple[float, float]] | None = [] if trace else None
    done = 0

    py = _PyCompiled(game)
    if py.size <= 256:
        scale = py.scale
        v = [0.0] * py.n
        for j in range(1, steps + 1):
            v = py.step(v, j)
            done = j
            lo, hi = min(v) * scale, max(v) * scale
            if history is not None:
                history.append((lo, hi))
            if stop_width is not None and hi - lo <= stop_width:
                break
        final = v
    else:
        compiled = _CompiledGame(game)
        scale = compiled.scale
        v = np.zeros(compiled.n)
        for j in range(1, steps + 1):
            vnew = np.empty(compiled.n)
            w = float(j - 1)
            inv = 1.0 / j
            for m1, m2, idx, R, P in compiled.groups:
                M = (R + w * (P @ v).reshape(len(idx), m1, m2)) * inv
                if m1 == 1 and m2 == 1:
                    vals = M[:, 0, 0]
                elif m1 == 1:
                    vals = M[:, 0, :].min(axis=1)
                elif m2 == 1:
                    vals = M[:, :, 0].max(axis=1)
                elif m1 == 2 and m2 == 2:
                    vals = _values_2x2_batch(M)
                else:
                    vals = np.array(
                        [solve_matrix_game(MatrixGame(M[i])).value for i in range(len(idx))]
                    )
                vnew[idx] = vals
            v = vnew
            done = j
            lo, hi = float(v.min()) * scale, float(v.max()) * scale
            if history is not None:
                history.append((lo, hi))
            if stop_width is not None and hi - lo <= stop_width:
                break
        final = [float(x) for x in v]

    values = {s: final[game.state_index(s)] * scale for s in game.states}
    lo, hi = min(values.values()), max(values.values())
    return ValueIterationResult(values=values, bracket=(lo, hi), steps=done, trace=history)


def vi_steps_for_epsilon(stats: GameStats, reward_scale: Fraction, epsilon) -> int:
    """Step count sufficient for the value-iteration bracket to be
    epsilon-accurate: ceil(4 * H * c * log2(c)) with c = 2/(epsilon/W) and
    H = n * delta_min^-r.

    The step-bound theorem leaves the log base implicit; its proof halves a
    miss probability per block, which forces base 2.
    """
    epsilon = Fraction(epsilon)
    reward_scale = Fraction(reward_scale)
    if not 0 < epsilon < reward_scale:
        raise CmpgError("epsilon must lie strictly between 0 and the reward scale")
    c = 2 * reward_scale / epsilon
    H = stats.n * Fraction(1) / (stats.delta_min**stats.r)
    base = 4 * H * c  # exact rational
    try:
        t = float(base) * math.log2(float(c))
    except OverflowError:
        raise CmpgError("step bound overflows float range; reduce the instance or epsilon")
    return max(1, math.ceil(t))


def var_hoffman_karp(
    game: Game,
    epsilon,
    anchor: str | None = None,
    q_override: int | None = None,
    iteration_cap: int = 1_000_000,
    node_budget: int | None = None,
) -> StrategyIterationResult:
    """q-rounded strategy iteration for almost-sure ergodic games.

    Starting from the most-uniform q-rounded strategy, each round computes
    Player 2's best-response potentials, forms the local matrix games
    M_s[a1,a2] = R + sum delta * v, and replaces sigma1(s) by a best
    q-rounded distribution for M_s unless the incumbent already is one
    (exact comparison of guaranteed values).  Terminates at the first
    fixed point.

    With q from the corollary grid (q_override is None) the result is
    epsilon-optimal; with an override, `epsilon_actual` reports the
    guarantee the chosen q actually provides.
    """
    epsilon = Fraction(epsilon)
    stats = compute_stats(game)
    W = Fraction(game.reward_scale)
    if anchor is None:
        anchor = game.states[0]
    if q_override is not None:
        q = int(q_override)
        if q < 1:
            raise CmpgError("q must be >= 1")
    else:
        q = q_from_epsilon(stats, epsilon / W)
    max_m1 = max(len(game.actions1[s]) for s in game.states)
    if q < max_m1:
        raise CmpgError(f"q={q} cannot express distributions over {max_m1} actions")
    epsilon_actual = W * 4 * stats.m * stats.n**2 / (stats.delta_min**stats.r) / q

    counts: dict[str, tuple[int, ...]] = {}
    for s in game.states:
        m1 = len(game.actions1[s])
        uniform = [Fraction(1, m1)] * m1
        counts[s] = round_distribution(uniform, q).counts

    def to_strategy(cts: dict[str, tuple[int, ...]]) -> StationaryStrategy:
        return StationaryStrategy(
            1,
            {
                s: {
                    a: Fraction(c, q)
                    for a, c in zip(game.actions1[s], cts[s])
                    if c
                }
                for s in game.states
            },
            exact=True,
        )

    n = len(game.states)
    gains: list[float] = []
    br: PotentialSolution | None = None
    iterations = 0
    for iterations in range(1, iteration_cap + 1):
        sigma = to_strategy(counts)
        br = best_response_potentials(game, sigma, anchor)
        gains.append(br.gain)
        v = br.potentials
        new_counts: dict[str, tuple[int, ...]] = {}
        for s in game.states:
            rows = []
            for a1 in game.actions1[s]:
                row = []
                for a2 in game.actions2[s]:
                    key = (s, a1, a2)
                    # rewards/probabilities stay exact; potentials enter as
                    # the dyadic rationals their floats already are
                    entry = Fraction(game.rewards[key])
                    for t, p in game.transitions[key].items():
                        entry += p * Fraction(v[t])
                    row.append(entry)
                rows.append(row)
            M = MatrixGame.from_exact(rows)
            best_val, best_dist = best_q_rounded(M, q, node_budget=node_budget)
            if q_rounded_value(M, counts[s]) == best_val:
                new_counts[s] = counts[s]
            else:
                new_counts[s] = best_dist.counts
        if new_counts == counts:
            break
        counts = new_counts
    else:
        raise IterationLimitError(
            f"strategy iteration did not reach a fixed point within {iteration_cap} iterations"
        )

    return StrategyIterationResult(
        strategy=to_strategy(counts),
        gain=gains[-1],
        potentials=br,
        iterations=iterations,
        q=q,
        gains=gains,
        epsilon_actual=epsilon_actual,
    )


def evaluate_profile(
    game: Game, sigma1: StationaryStrategy, sigma2: StationaryStrategy, start: str | None = None
) -> float:
    """Long-run average reward of the chain induced by a stationary profile.

    The induced chain must be unichain (always true on ergodic games), in
    which case the gain is independent of the start state.
    """
    if start is None:
        start = game.states[0]
    P, r = induced_chain(game, sigma1, sigma2)
    g, _ = solve_chain_gain_bias(P, r, game.state_index(start))
    return g


def hitting_time(
    game: Game,
    sigma1: StationaryStrategy,
    sigma2: StationaryStrategy,
    source: str,
    target: str,
) -> float:
    """Expected steps to first reach `target` from `source` in the induced
    chain; math.inf when the target is missed with positive probability."""
    P, _ = induced_chain(game, sigma1, sigma2)
    n = P.shape[0]
    src, tgt = game.state_index(source), game.state_index(target)
    if src == tgt:
        return 0.0

    # make the target absorbing, then find states that reach it almost surely
    graph = {i: (set() if i == tgt else {j for j in range(n) if P[i, j] > 0}) for i in range(n)}
    coreach = {tgt}
    changed = True
    while changed:
        changed = False
        for i in range(n):
            if i not in coreach and graph[i] & coreach:
                coreach.add(i)
                changed = True
    certain = set(coreach)
    changed = True
    while changed:  # drop states that can leak outside the coreachable set
        changed = False
        for i in list(certain):
            if i != tgt and (graph[i] - certain or not graph[i]):
                certain.discard(i)
                changed = True
    if src not in certain:
        return math.inf

    rows = sorted(certain - {tgt})
    pos = {i: k for k, i in enumerate(rows)}
    A = np.eye(len(rows))
    b = np.ones(len(rows))
    for i in rows:
        for j in rows:
            A[pos[i], pos[j]] -= P[i, j]
    h = np.linalg.solve(A, b)
    return float(h[pos[src]])


def hitting_bound(stats: GameStats) -> HittingBound:
    """Upper bound n * delta_min^-r on the expected hitting time between any
    state pair under any profile of an ergodic game."""
    return HittingBound(bound=stats.n * Fraction(1) / (stats.delta_min**stats.r))
