"""One-shot zero-sum matrix games: LP solving, exact distribution rounding,
and exact best q-rounded row strategies.

The row player maximizes.  `solve_matrix_game` works in floats (closed forms
for tiny shapes, dense simplex with Bland's rule otherwise).  `best_q_rounded`
and `round_distribution` are exact: they operate on rationals end to end.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import CmpgError, NodeBudgetError
from .game import GameStats

DEFAULT_NODE_BUDGET = 10_000_000


def _node_budget_default() -> int:
    try:
        return int(os.environ.get("CMPG_NODE_BUDGET", DEFAULT_NODE_BUDGET))
    except ValueError:
        return DEFAULT_NODE_BUDGET


@dataclass
class MatrixGame:
    """Dense m1 x m2 payoff matrix; optionally carries the exact entries."""

    entries: np.ndarray
    exact: list[list[Fraction]] | None = None

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=float)
        if self.entries.ndim != 2 or self.entries.size == 0:
            raise CmpgError("matrix game must be a non-empty 2-d matrix")
        if not np.all(np.isfinite(self.entries)):
            raise CmpgError("matrix game entries must be finite")
        if self.exact is not None:
            m1, m2 = self.entries.shape
            if len(self.exact) != m1 or any(len(row) != m2 for row in self.exact):
                raise CmpgError("exact mirror shape mismatch")

    @classmethod
    def from_exact(cls, rows: list[list[Fraction]]) -> "MatrixGame":
        return cls(np.array([[float(x) for x in row] for row in rows]), exact=[list(r) for r in rows])

    def exact_rows(self) -> list[list[Fraction]]:
        """Exact entries; floats are dyadic rationals, so the fallback is lossless."""
        if self.exact is not None:
            return self.exact
        return [[Fraction(float(x)) for x in row] for row in self.entries]


@dataclass
class MatrixGameSolution:
    value: float
    x: np.ndarray  # row distribution (maximizer)
    y: np.ndarray  # column distribution (minimizer)


@dataclass
class QRoundedDistribution:
    """Distribution whose probabilities are counts/q for a positive integer q."""

    q: int
    counts: tuple[int, ...]

    def __post_init__(self):
        if self.q <= 0:
            raise CmpgError("q must be positive")
        if any(c < 0 for c in self.counts) or sum(self.counts) != self.q:
            raise CmpgError("counts must be nonnegative and sum to q")

    def probabilities(self) -> list[Fraction]:
        return [Fraction(c, self.q) for c in self.counts]


def solve_tolerance(entries: np.ndarray) -> float:
    return 1e-9 * (1.0 + float(np.max(np.abs(entries))) if entries.size else 1.0)


def solve_matrix_game(game: MatrixGame) -> MatrixGameSolution:
    """Value and optimal mixed strategies of a zero-sum matrix game.

    x guarantees min_j (x^T M)_j >= value - tol and y guarantees
    max_i (M y)_i <= value + tol with tol = 1e-9 * (1 + max|entry|).
    """
    M = game.entries
    m1, m2 = M.shape
    if m1 == 1 and m2 == 1:
        return MatrixGameSolution(float(M[0, 0]), np.array([1.0]), np.array([1.0]))
    if m1 == 1:
        j = int(np.argmin(M[0]))
        y = np.zeros(m2)
        y[j] = 1.0
        return MatrixGameSolution(float(M[0, j]), np.array([1.0]), y)
    if m2 == 1:
        i = int(np.argmax(M[:, 0]))
        x = np.zeros(m1)
        x[i] = 1.0
        return MatrixGameSolution(float(M[i, 0]), x, np.array([1.0]))
    if m1 == 2 and m2 == 2:
        return _solve_2x2(M)
    return _solve_simplex(M)


def _solve_2x2(M: np.ndarray) -> MatrixGameSolution:
    a, b = float(M[0, 0]), float(M[0, 1])
    c, d = float(M[1, 0]), float(M[1, 1])
    row_mins = [min(a, b), min(c, d)]
    col_maxs = [max(a, c), max(b, d)]
    maximin, minimax = max(row_mins), min(col_maxs)
    denom = a + d - b - c
    if maximin >= minimax or denom == 0.0:
        # saddle point: pure strategies suffice
        i = int(np.argmax(row_mins))
        j = int(np.argmin(col_maxs))
        x = np.zeros(2)
        y = np.zeros(2)
        x[i] = 1.0
        y[j] = 1.0
        return MatrixGameSolution(maximin, x, y)
    value = (a * d - b * c) / denom
    x = np.array([(d - c) / denom, (a - b) / denom])
    y = np.array([(d - b) / denom, (a - c) / denom])
    return MatrixGameSolution(value, x, y)


def _solve_simplex(M: np.ndarray) -> MatrixGameSolution:
    """Standard matrix-game LP by tableau simplex with Bland's rule.

    Shift entries positive, then solve max sum(yt) s.t. M' yt <= 1, yt >= 0.
    The game value is 1/sum(yt*) minus the shift; the row strategy comes from
    the duals (objective-row coefficients of the slack columns).
    """
    m1, m2 = M.shape
    shift = 1.0 - float(M.min())
    A = M + shift  # all entries >= 1
    tol = solve_tolerance(A)

    # tableau: columns = [yt vars | slacks | rhs], rows = constraints + objective
    T = np.zeros((m1 + 1, m2 + m1 + 1))
    T[:m1, :m2] = A
    T[:m1, m2 : m2 + m1] = np.eye(m1)
    T[:m1, -1] = 1.0
    T[-1, :m2] = -1.0  # maximize sum(yt) == minimize -sum(yt)
    basis = list(range(m2, m2 + m1))

    for _ in range(10000):
        reduced = T[-1, :-1]
        enter = -1
        for j in range(m2 + m1):  # Bland: smallest eligible index
            if reduced[j] < -tol:
                enter = j
                break
        if enter < 0:
            break
        ratios = []
        for i in range(m1):
            if T[i, enter] > tol:
                ratios.append((T[i, -1] / T[i, enter], basis[i], i))
        if not ratios:
            raise CmpgError("matrix-game LP unbounded (cannot happen for finite games)")
        _, _, leave = min(ratios)
        pivot = T[leave, enter]
        T[leave] /= pivot
        for i in range(m1 + 1):
            if i != leave and T[i, enter] != 0.0:
                T[i] -= T[i, enter] * T[leave]
        basis[leave] = enter
    else:
        raise CmpgError("simplex failed to terminate")

    obj = T[-1, -1]  # == sum(yt*) at optimum
    if obj <= 0:
        raise CmpgError("degenerate matrix-game LP")
    value_shifted = 1.0 / obj
    yt = np.zeros(m2)
    for i, b in enumerate(basis):
        if b < m2:
            yt[b] = T[i, -1]
    xt = T[-1, m2 : m2 + m1]  # duals of the covering constraints
    x = np.maximum(xt, 0.0) * value_shifted
    y = np.maximum(yt, 0.0) * value_shifted
    x /= x.sum()
    y /= y.sum()
    return MatrixGameSolution(value_shifted - shift, x, y)


# -- exact distribution rounding --------------------------------------------


def round_distribution(d: list[Fraction], q: int) -> QRoundedDistribution:
    """Round an exact distribution to a q-rounded one with componentwise
    error strictly below 1/q.

    Two cases: if no element has mass in [1/q, 1-1/q], the unique element
    above 1-1/q takes everything.  Otherwise the lowest such element is held
    back as the anchor; the rest are rounded down or up in index order
    depending on the sign of the running deficit, and the anchor absorbs the
    residual.
    """
    ell = len(d)
    if ell == 0:
        raise CmpgError("empty distribution")
    d = [Fraction(x) for x in d]
    if any(x < 0 for x in d) or sum(d) != 1:
        raise CmpgError("input is not an exact distribution")
    if q < ell:
        raise CmpgError(f"q={q} is smaller than the support size {ell}")
    if ell == 1:
        return QRoundedDistribution(q, (q,))

    lo, hi = Fraction(1, q), 1 - Fraction(1, q)
    anchor = next((i for i, x in enumerate(d) if lo <= x <= hi), None)
    if anchor is None:
        big = [i for i, x in enumerate(d) if x > hi]
        counts = [0] * ell
        counts[big[0]] = q
        return QRoundedDistribution(q, tuple(counts))

    counts = [0] * ell
    rest = [i for i in range(ell) if i != anchor]
    deficit = Fraction(0)  # running sum of d(z^c) - out(z^c) over processed elements
    for i in rest:
        scaled = d[i] * q
        c = math.floor(scaled) if deficit < 0 else math.ceil(scaled)
        counts[i] = c
        deficit += d[i] - Fraction(c, q)
    counts[anchor] = q - sum(counts)
    return QRoundedDistribution(q, tuple(counts))


# -- exact best q-rounded row strategy ---------------------------------------


def q_rounded_value(M: MatrixGame, counts: tuple[int, ...] | QRoundedDistribution) -> Fraction:
    """Exact guaranteed value of the q-rounded row distribution against all
    columns: min_j sum_i (counts_i / q) M[i, j]."""
    if isinstance(counts, QRoundedDistribution):
        q, counts = counts.q, counts.counts
    else:
        q = sum(counts)
    rows = M.exact_rows()
    m2 = len(rows[0])
    best = None
    for j in range(m2):
        col = sum(Fraction(c) * rows[i][j] for i, c in enumerate(counts) if c)
        if best is None or col < best:
            best = col
    return best / q


def best_q_rounded(
    M: MatrixGame, q: int, node_budget: int | None = None
) -> tuple[Fraction, QRoundedDistribution]:
    """Exact maximizer over all q-rounded row distributions of the guaranteed
    value min_j x^T M e_j.

    Branch and bound over integer compositions of q into m1 parts, explored
    in lexicographic order of count vectors (so the first optimum found is
    the lexicographically smallest) and pruned with the LP relaxation of each
    subtree.  All comparisons happen on an integer-scaled copy of the matrix,
    so pruning never sacrifices exactness: subtree bounds below
    incumbent + 1/2 cannot contain a strictly better integer leaf.
    """
    if q < 1:
        raise CmpgError("q must be >= 1")
    budget = node_budget if node_budget is not None else _node_budget_default()
    rows = M.exact_rows()
    m1, m2 = len(rows), len(rows[0])
    if m1 == 1:
        dist = QRoundedDistribution(q, (q,))
        return q_rounded_value(M, dist), dist

    denom_lcm = 1
    for row in rows:
        for x in row:
            denom_lcm = denom_lcm * x.denominator // math.gcd(denom_lcm, x.denominator)
    A = [[int(x * denom_lcm) for x in row] for row in rows]  # value*q*denom_lcm is integral
    A_np = np.array(A, dtype=float)

    n_leaves = math.comb(q + m1 - 1, m1 - 1)
    state = {"nodes": 0, "best": None, "best_counts": None}

    def leaf_value(counts: list[int]) -> int:
        return min(sum(c * A[i][j] for i, c in enumerate(counts) if c) for j in range(m2))

    def subtree_bound(prefix: list[int], remaining: int) -> float:
        """LP relaxation: free rows share mass `remaining` continuously."""
        base = [sum(c * A[i][j] for i, c in enumerate(prefix) if c) for j in range(m2)]
        free = list(range(len(prefix), m1))
        if remaining == 0 or not free:
            return float(min(base))
        sub = np.array([[base[j] + remaining * A_np[i, j] for j in range(m2)] for i in free])
        return solve_matrix_game(MatrixGame(sub)).value

    def dfs(prefix: list[int], remaining: int):
        state["nodes"] += 1
        if state["nodes"] > budget:
            raise NodeBudgetError(
                f"best_q_rounded exceeded node budget {budget} "
                f"(composition space has {n_leaves} leaves)"
            )
        depth = len(prefix)
        if depth == m1 - 1:
            counts = prefix + [remaining]
            val = leaf_value(counts)
            if state["best"] is None or val > state["best"]:
                state["best"] = val
                state["best_counts"] = tuple(counts)
            return
        # prune whole subtrees on the LP bound; leaf values are integers, so
        # a bound below best + 1/2 cannot hide a strict improvement
        if state["best"] is not None and math.comb(remaining + m1 - depth - 1, m1 - depth - 1) > 64:
            if subtree_bound(prefix, remaining) < state["best"] + 0.5:
                return
        for c in range(remaining + 1):
            dfs(prefix + [c], remaining - c)

    if m1 == 2:
        # compositions of q into 2 parts are leaves; plain ascending scan
        for c0 in range(q + 1):
            state["nodes"] += 1
            if state["nodes"] > budget:
                raise NodeBudgetError(f"best_q_rounded exceeded node budget {budget}")
            val = min(c0 * A[0][j] + (q - c0) * A[1][j] for j in range(m2))
            if state["best"] is None or val > state["best"]:
                state["best"] = val
                state["best_counts"] = (c0, q - c0)
    else:
        dfs([], q)

    dist = QRoundedDistribution(q, state["best_counts"])
    return Fraction(state["best"], q * denom_lcm), dist


def q_from_epsilon(stats: GameStats, epsilon: Fraction) -> int:
    """Rounding grid guaranteeing an epsilon-optimal q-rounded strategy for
    rewards normalized to [0, 1]: ceil(4 * m * n^2 * delta_min^-r / epsilon).

    Computed in exact rational arithmetic; the result can be astronomically
    large, and the caller decides feasibility.
    """
    epsilon = Fraction(epsilon)
    if epsilon <= 0:
        raise CmpgError("epsilon must be positive")
    q = 4 * Fraction(1) / epsilon * stats.m * stats.n**2 * Fraction(1) / (stats.delta_min**stats.r)
    return math.ceil(q)
