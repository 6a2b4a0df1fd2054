"""Player-2 best response against a fixed stationary Player-1 strategy:
gain, potentials anchored at a chosen state, and a positional policy
attaining the minimum.

Once Player 1 is fixed the game is a Player-2 MDP; for a fixed positional
policy the gain/potential pair solves a square linear system (LU), and the
policy itself is found by Howard policy iteration with keep-on-tie
improvement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IterationLimitError, UnichainError
from .game import Game, StationaryStrategy, positional


@dataclass
class PotentialSolution:
    """Gain plus per-state potentials with v[anchor] = 0 and the positional
    Player-2 policy achieving the one-step minimum."""

    gain: float
    potentials: dict[str, float]
    anchor: str
    policy: StationaryStrategy

    def residual(self, game: Game, sigma1: StationaryStrategy) -> float:
        """Max violation of g + v_s = min_a2 (ExpRew + sum delta v)."""
        rows = induced_mdp(game, sigma1)
        v = np.array([self.potentials[s] for s in game.states])
        worst = 0.0
        for si, s in enumerate(game.states):
            best = min(r + P @ v for r, P in rows[si].values())
            worst = max(worst, abs(self.gain + v[si] - best))
        return worst


def induced_mdp(game: Game, sigma1: StationaryStrategy):
    """Player-2 MDP rows: for each state, map a2 -> (expected reward, row of
    successor probabilities) under sigma1."""
    n = len(game.states)
    rows: list[dict[str, tuple[float, np.ndarray]]] = []
    for s in game.states:
        d1 = sigma1.dist[s]
        per_a2 = {}
        for a2 in game.actions2[s]:
            r = 0.0
            P = np.zeros(n)
            for a1, p1 in d1.items():
                if p1 == 0:
                    continue
                w = float(p1)
                key = (s, a1, a2)
                r += w * float(game.rewards[key])
                for t, pt in game.transitions[key].items():
                    P[game.state_index(t)] += w * float(pt)
            per_a2[a2] = (r, P)
        rows.append(per_a2)
    return rows


def induced_chain(game: Game, sigma1: StationaryStrategy, sigma2: StationaryStrategy):
    """Markov chain (P, r) induced by a full stationary profile."""
    n = len(game.states)
    P = np.zeros((n, n))
    r = np.zeros(n)
    for si, s in enumerate(game.states):
        for a1, p1 in sigma1.dist[s].items():
            if p1 == 0:
                continue
            for a2, p2 in sigma2.dist[s].items():
                if p2 == 0:
                    continue
                w = float(p1) * float(p2)
                key = (s, a1, a2)
                r[si] += w * float(game.rewards[key])
                for t, pt in game.transitions[key].items():
                    P[si, game.state_index(t)] += w * float(pt)
    return P, r


def check_unichain(P: np.ndarray) -> None:
    """Reject chains with more than one recurrent class (support graph must
    have a single bottom SCC)."""
    from .classify import strongly_connected_components

    n = P.shape[0]
    graph = {i: {j for j in range(n) if P[i, j] > 0.0} for i in range(n)}
    bottoms = 0
    for scc in strongly_connected_components(graph):
        members = set(scc)
        if not any(graph[v] - members for v in scc):
            bottoms += 1
    if bottoms != 1:
        raise UnichainError(f"induced chain has {bottoms} recurrent classes, expected 1")


def solve_chain_gain_bias(P: np.ndarray, r: np.ndarray, anchor_index: int):
    """Solve g + v = r + P v with v[anchor] = 0 for a unichain chain."""
    check_unichain(P)
    n = P.shape[0]
    # unknowns: g and v_s for s != anchor
    others = [i for i in range(n) if i != anchor_index]
    A = np.zeros((n, n))
    b = np.array(r, dtype=float)
    for row in range(n):
        A[row, 0] = 1.0  # g coefficient
        for col, s in enumerate(others, start=1):
            A[row, col] = (1.0 if row == s else 0.0) - P[row, s]
    try:
        sol = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise UnichainError(f"gain/bias system singular: {exc}")
    g = float(sol[0])
    v = np.zeros(n)
    for col, s in enumerate(others, start=1):
        v[s] = sol[col]
    return g, v


def solve_gain_bias(
    game: Game, sigma1: StationaryStrategy, sigma2: StationaryStrategy, anchor: str
) -> tuple[float, dict[str, float]]:
    """Gain and potentials of the chain induced by (sigma1, sigma2), anchored
    at `anchor`.  The profile must induce a unichain Markov chain."""
    P, r = induced_chain(game, sigma1, sigma2)
    g, v = solve_chain_gain_bias(P, r, game.state_index(anchor))
    return g, {s: float(v[game.state_index(s)]) for s in game.states}


def best_response_potentials(
    game: Game,
    sigma1: StationaryStrategy,
    anchor: str,
    max_iterations: int | None = None,
) -> PotentialSolution:
    """Howard policy iteration over Player-2 positional policies.

    Gains are nonincreasing across improvement steps (Player 2 minimizes);
    incumbent actions are kept on ties, so the iteration terminates at a
    policy whose gain/potentials satisfy the min-equations.
    """
    n = len(game.states)
    rows = induced_mdp(game, sigma1)
    anchor_index = game.state_index(anchor)
    cap = max_iterations if max_iterations is not None else max(
        10 * n * max(len(game.actions2[s]) for s in game.states), 20
    )

    policy = [game.actions2[s][0] for s in game.states]
    seen = set()
    g, v = None, None
    for _ in range(cap):
        key = tuple(policy)
        if key in seen:
            raise IterationLimitError("policy iteration revisited a policy (numerical tie cycling)")
        seen.add(key)
        P = np.array([rows[si][policy[si]][1] for si in range(n)])
        r = np.array([rows[si][policy[si]][0] for si in range(n)])
        g, v = solve_chain_gain_bias(P, r, anchor_index)
        # improvement threshold guards against float noise re-switching
        imp_tol = 1e-10 * (1.0 + float(np.max(np.abs(v))) + float(np.max(np.abs(r))))
        new_policy = list(policy)
        for si in range(n):
            incumbent = rows[si][policy[si]]
            best_val = incumbent[0] + incumbent[1] @ v
            best_a2 = policy[si]
            for a2, (ra, Pa) in rows[si].items():
                val = ra + Pa @ v
                if val < best_val - imp_tol:
                    best_val = val
                    best_a2 = a2
            new_policy[si] = best_a2
        if new_policy == policy:
            break
        policy = new_policy
    else:
        raise IterationLimitError(f"policy iteration did not converge within {cap} iterations")

    return PotentialSolution(
        gain=float(g),
        potentials={s: float(v[game.state_index(s)]) for s in game.states},
        anchor=anchor,
        policy=positional(2, {s: policy[game.state_index(s)] for s in game.states}),
    )
