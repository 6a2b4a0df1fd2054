"""Instance generators with known closed-form values, the skew-symmetry
verifier, the SSG-to-ergodic-mean-payoff reduction, and rational
reconstruction from a threshold oracle.

Families:

* square-root games: a two-state game of value sqrt(b) for every positive
  integer b (single self-loops for the perfect squares 1 and 4);
* square-root-sum games: a fresh start state fanning out uniformly into
  disjoint square-root games, of value (sum_i sqrt(n_i)) / l;
* patience lower-bound games: skew-symmetric ergodic games of value 1/2
  where every 1/48-optimal strategy needs patience at least
  1 / (2 eta^(k/2)).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import CmpgError, GameFormatError, InconsistentOracleError
from .game import Game, parse_rational

ONE = Fraction(1)


@dataclass
class SkewSymmetryWitness:
    """State involution plus per-state action maps swapping the players.

    ``action_map_1[s]`` sends Gamma1(s) to Gamma2(f(s)); ``action_map_2[s]``
    sends Gamma2(s) to Gamma1(f(s)).
    """

    state_map: dict[str, str]
    action_map_1: dict[str, dict[str, str]]
    action_map_2: dict[str, dict[str, str]]

    def to_json(self) -> str:
        return json.dumps(
            {
                "state_map": self.state_map,
                "action_map_1": self.action_map_1,
                "action_map_2": self.action_map_2,
            },
            indent=1,
        )

    @classmethod
    def from_json(cls, text: str) -> "SkewSymmetryWitness":
        doc = json.loads(text)
        return cls(doc["state_map"], doc["action_map_1"], doc["action_map_2"])


# -- square-root games -------------------------------------------------------


def sqrt_game_parameters(b: int) -> tuple[Fraction, Fraction]:
    """The pair (k_b, d_b) with b = k^2 - d*k/2 and k > d > 0."""
    if b == 2:
        return Fraction(3, 2), Fraction(1, 3)
    k = math.isqrt(b) + 1  # smallest integer with k^2 > b
    kf = Fraction(k)
    d = 2 * kf - Fraction(2 * b) / kf
    return kf, d


def gen_sqrt_game(b: int) -> Game:
    """Two-state ergodic game of value sqrt(b).

    State w always returns to u with reward k_b; state u is a 2x2 game with
    reward k_b on the action diagonal and k_b - d_b off it, where the (a1,b1)
    cell stays at u with probability d_b/k_b.  For b in {1, 4} the value is
    an integer and a single rewarded self-loop suffices.
    """
    if b < 1:
        raise CmpgError("b must be a positive integer")
    if b in (1, 4):
        val = Fraction(math.isqrt(b))
        return Game(
            states=["u"],
            actions1={"u": ["a1"]},
            actions2={"u": ["b1"]},
            transitions={("u", "a1", "b1"): {"u": ONE}},
            rewards={("u", "a1", "b1"): val},
            reward_scale=val,
        )
    k, d = sqrt_game_parameters(b)
    stay = d / k
    transitions = {
        ("u", "a1", "b1"): {"u": stay, "w": 1 - stay},
        ("u", "a1", "b2"): {"w": ONE},
        ("u", "a2", "b1"): {"w": ONE},
        ("u", "a2", "b2"): {"w": ONE},
        ("w", "a", "b"): {"u": ONE},
    }
    rewards = {
        ("u", "a1", "b1"): k,
        ("u", "a1", "b2"): k - d,
        ("u", "a2", "b1"): k - d,
        ("u", "a2", "b2"): k,
        ("w", "a", "b"): k,
    }
    return Game(
        states=["u", "w"],
        actions1={"u": ["a1", "a2"], "w": ["a"]},
        actions2={"u": ["b1", "b2"], "w": ["b"]},
        transitions=transitions,
        rewards=rewards,
        reward_scale=k,
    )


def sqrt_game_entry_state(b: int) -> str:
    return "u"


def gen_sqrt_sum(nums: list[int]) -> Game:
    """Sure-ergodic game whose value at the start state s* is
    (sum_i sqrt(n_i)) / len(nums): s* fans out uniformly into disjoint
    square-root game copies, entering each at its 2x2 state."""
    if not nums:
        raise CmpgError("nums must be nonempty")
    ell = len(nums)
    states = ["s*"]
    actions1ems = {"s*": ["a"]}
    actions2ems = {"s*": ["b"]}
    transitions: dict = {}
    rewards: dict = {}
    scale = Fraction(1)
    fanout: dict[str, Fraction] = {}
    for i, b in enumerate(nums):
        sub = gen_sqrt_game(b)
        rename = {s: f"{i}:{s}" for s in sub.states}
        states.extend(rename[s] for s in sub.states)
        for s in sub.states:
            actions1ems[rename[s]] = sub.actions1[s]
            actions2ems[rename[s]] = sub.actions2[s]
        for (s, a1, a2), dist in sub.transitions.items():
            transitions[(rename[s], a1, a2)] = {rename[t]: p for t, p in dist.items()}
            rewards[(rename[s], a1, a2)] = sub.rewards[(s, a1, a2)]
        scale = max(scale, sub.reward_scale)
        entry = rename[sqrt_game_entry_state(b)]
        fanout[entry] = fanout.get(entry, Fraction(0)) + Fraction(1, ell)
    transitions[("s*", "a", "b")] = fanout
    rewards[("s*", "a", "b")] = Fraction(0)
    return Game(
        states=states,
        actions1=actions1ems,
        actions2=actions2ems,
        transitions=transitions,
        rewards=rewards,
        reward_scale=scale,
    )


# -- patience lower-bound family ---------------------------------------------


def gen_lower_bound(k: int, eta: Fraction) -> tuple[Game, SkewSymmetryWitness]:
    """The 2k+5-state skew-symmetric ergodic game of value 1/2 whose
    1/48-optimal strategies all have patience at least 1/(2 eta^(k/2)).

    Layout: a central state a (reward 1/2) fans out to every other state;
    chains s_1..s_k (rewards 0) and their mirrors sbar_1..sbar_k (rewards 1)
    funnel back to a slowly (probability eta per downward step); the only
    choices sit at c and its mirror cbar, 2x2 deterministic states routing to
    b / bbar / the chain tops.  The emitted witness is verified before
    returning.
    """
    eta = Fraction(eta)
    if k < 2:
        raise CmpgError("k must be at least 2")
    if not 0 < eta < Fraction(1, 4 * k + 4):
        raise CmpgError(f"eta must lie strictly between 0 and 1/{4 * k + 4}")

    chain = [f"s{y}" for y in range(1, k + 1)]
    chain_bar = [f"sbar{y}" for y in range(1, k + 1)]
    states = ["a", "b", "bbar", "c", "cbar"] + chain + chain_bar
    single1 = {s: ["i1"] for s in states}
    single2 = {s: ["j1"] for s in states}
    for s in ("c", "cbar"):
        single1[s] = ["i1", "i2"]
        single2[s] = ["j1", "j2"]

    transitions: dict = {}
    rewards: dict = {}

    def put(s, a1, a2, dist, reward):
        transitions[(s, a1, a2)] = dist
        rewards[(s, a1, a2)] = Fraction(reward)

    # chains: s_y -> s_k with prob 1-eta, s_{y-1} with prob eta (s_0 = a)
    for names, reward in ((chain, 0), (chain_bar, 1)):
        for y in range(1, k + 1):
            below = "a" if y == 1 else names[y - 2]
            put(names[y - 1], "i1", "j1", {names[-1]: 1 - eta, below: eta}, reward)
    put("b", "i1", "j1", {"a": ONE}, 0)
    put("bbar", "i1", "j1", {"a": ONE}, 1)
    # c: deterministic 2x2, rewards 0
    put("c", "i1", "j1", {"bbar": ONE}, 0)
    put("c", "i2", "j2", {"bbar": ONE}, 0)
    put("c", "i1", "j2", {"b": ONE}, 0)
    put("c", "i2", "j1", {chain[-1]: ONE}, 0)
    # cbar: the skew-symmetric mirror, rewards 1
    put("cbar", "i1", "j1", {"b": ONE}, 1)
    put("cbar", "i2", "j2", {"b": ONE}, 1)
    put("cbar", "i2", "j1", {"bbar": ONE}, 1)
    put("cbar", "i1", "j2", {chain_bar[-1]: ONE}, 1)
    # central state: 1/4 to c and cbar each, 1/(4k+4) to every other state
    spread = Fraction(1, 4 * k + 4)
    fan = {"c": Fraction(1, 4), "cbar": Fraction(1, 4)}
    for s in states:
        if s not in ("a", "c", "cbar"):
            fan[s] = spread
    put("a", "i1", "j1", fan, Fraction(1, 2))

    game = Game(
        states=states,
        actions1=single1,
        actions2=single2,
        transitions=transitions,
        rewards=rewards,
        reward_scale=ONE,
    )

    state_map = {"a": "a", "b": "bbar", "bbar": "b", "c": "cbar", "cbar": "c"}
    for y in range(k):
        state_map[chain[y]] = chain_bar[y]
        state_map[chain_bar[y]] = chain[y]
    action_map_1 = {s: {"i1": "j1"} for s in states}
    action_map_2 = {s: {"j1": "i1"} for s in states}
    for s in ("c", "cbar"):
        action_map_1[s] = {"i1": "j1", "i2": "j2"}
        action_map_2[s] = {"j1": "i1", "j2": "i2"}
    witness = SkewSymmetryWitness(state_map, action_map_1, action_map_2)

    ok, violation = check_skew_symmetric(game, witness)
    if not ok:
        raise CmpgError(f"generator produced a non-skew-symmetric game: {violation}")
    return game, witness


def lower_bound_reference_strategy(game: Game, k: int, eta: Fraction):
    """The maximal-value strategy within the patience class 1/p,
    p = 2 eta^(k/2): probability p on i2 at c and on i1 at cbar."""
    from .game import StationaryStrategy

    p = 2 * Fraction(eta) ** Fraction(k, 2) if k % 2 == 0 else None
    if p is None:
        # eta^(k/2) irrational for odd k; callers supply their own p there
        raise CmpgError("reference strategy requires even k")
    dist: dict[str, dict[str, Fraction]] = {}
    for s in game.states:
        acts = game.actions1[s]
        if s == "c":
            dist[s] = {"i1": 1 - p, "i2": p}
        elif s == "cbar":
            dist[s] = {"i1": p, "i2": 1 - p}
        else:
            dist[s] = {acts[0]: ONE}
    return StationaryStrategy(1, dist, exact=True)


def check_skew_symmetric(
    game: Game, witness: SkewSymmetryWitness
) -> tuple[bool, str | None]:
    """Verify a skew-symmetry witness exactly.

    Conditions, with rewards scaled into [0, 1] by the reward scale:
    the state map is an involution, paired rewards sum to 1, transitions
    mirror through the state map, and the action maps invert each other.
    Returns (ok, first violated condition) and raises on non-total or
    non-bijective maps.
    """
    f = witness.state_map
    if set(f) != set(game.states) or set(f.values()) != set(game.states):
        raise CmpgError("state map is not a bijection on the states")
    for s in game.states:
        if f[f[s]] != s:
            raise CmpgError(f"state map is not an involution at {s!r}")
    for s in game.states:
        sbar = f[s]
        m1, m2 = witness.action_map_1.get(s), witness.action_map_2.get(s)
        if m1 is None or set(m1) != set(game.actions1[s]) or set(m1.values()) != set(game.actions2[sbar]):
            raise CmpgError(f"action_map_1 not a bijection Gamma1({s!r}) -> Gamma2({f[s]!r})")
        if m2 is None or set(m2) != set(game.actions2[s]) or set(m2.values()) != set(game.actions1[sbar]):
            raise CmpgError(f"action_map_2 not a bijection Gamma2({s!r}) -> Gamma1({f[s]!r})")

    W = Fraction(game.reward_scale)
    for s in game.states:
        sbar = f[s]
        for i in game.actions1[s]:
            ibar = witness.action_map_1[s][i]
            if witness.action_map_2[sbar][ibar] != i:
                return False, f"condition 3 violated at (s={s!r}, i={i!r})"
        for j in game.actions2[s]:
            jbar = witness.action_map_2[s][j]
            if witness.action_map_1[sbar][jbar] != j:
                return False, f"condition 3 violated at (s={s!r}, j={j!r})"
        for i in game.actions1[s]:
            for j in game.actions2[s]:
                ibar = witness.action_map_1[s][i]
                jbar = witness.action_map_2[s][j]
                r = game.rewards[(s, i, j)] / W
                rbar = game.rewards[(sbar, jbar, ibar)] / W
                if r != 1 - rbar:
                    return False, f"condition 1 violated at (s={s!r}, i={i!r}, j={j!r})"
                dist = game.transitions[(s, i, j)]
                dist_bar = game.transitions[(sbar, jbar, ibar)]
                mirrored = {f[t]: p for t, p in dist.items()}
                if mirrored != dist_bar:
                    return False, f"condition 2 violated at (s={s!r}, i={i!r}, j={j!r})"
    return True, None


# -- SSGs and the reduction --------------------------------------------------


@dataclass
class SSG:
    """A game in simple-stochastic-game shape: turn-based, stopping, two
    absorbing terminals rewarded 1 (top) and 0 (bottom), all positive
    probabilities 1/2 or 1, all other rewards 0."""

    game: Game
    top: str
    bottom: str

    @classmethod
    def from_game(cls, game: Game) -> "SSG":
        from .classify import almost_surely_reaches

        terminals = {}
        for s in game.states:
            pairs = list(game.action_pairs(s))
            if len(game.actions1[s]) > 1 and len(game.actions2[s]) > 1:
                raise GameFormatError("not turn-based: both players choose", location=f"state {s}")
            if all(game.support(s, a1, a2) == {s} for a1, a2 in pairs):
                rewards = {game.rewards[(s, a1, a2)] for a1, a2 in pairs}
                if len(rewards) != 1:
                    raise GameFormatError("terminal reward must be constant 0 or 1", location=f"state {s}")
                reward = rewards.pop()
                if reward not in (0, 1):
                    raise GameFormatError("terminal reward must be constant 0 or 1", location=f"state {s}")
                terminals[s] = reward
            else:
                for a1, a2 in pairs:
                    if game.rewards[(s, a1, a2)] != 0:
                        raise GameFormatError(
                            "non-terminal transitions must have reward 0", location=f"state {s}"
                        )
        tops = [s for s, r in terminals.items() if r == 1]
        bottoms = [s for s, r in terminals.items() if r == 0]
        if len(tops) != 1 or len(bottoms) != 1:
            raise GameFormatError(
                f"need exactly one 1-terminal and one 0-terminal, found {len(tops)} and {len(bottoms)}"
            )
        for (s, a1, a2), dist in game.transitions.items():
            for p in dist.values():
                if p not in (Fraction(1, 2), ONE):
                    raise GameFormatError(
                        "positive probabilities must be 1/2 or 1", location=str((s, a1, a2))
                    )
        ok, trap = almost_surely_reaches(game, {tops[0], bottoms[0]})
        if not ok:
            raise GameFormatError(f"SSG is not stopping: trap {trap}")
        return cls(game=game, top=tops[0], bottom=bottoms[0])

    @property
    def n_nonterminal(self) -> int:
        return len(self.game.states) - 2


def reduce_ssg(ssg: SSG, state: str, alpha: int, beta: int) -> Game:
    """Turn an SSG into an ergodic mean-payoff game whose value tracks the
    SSG value at `state`.

    Terminals leak into a fresh recycling state with probability 2^-alpha
    (keeping reward 1 at the top terminal); the recycling state returns to
    `state` with probability 1 - 2^-beta and spreads 2^-beta uniformly over
    the other states.  With alpha = 9n and beta = 7n the mean-payoff value
    lies within 2^(-7n+1) of the SSG value.
    """
    game = ssg.game
    if state not in game.states or state in (ssg.top, ssg.bottom):
        raise CmpgError(f"state must be a non-terminal SSG state, got {state!r}")
    if alpha < 1 or beta < 1:
        raise CmpgError("alpha and beta must be positive")
    fresh = "s'"
    if fresh in game.states:
        raise CmpgError("game already uses the reserved state name s'")
    leak = Fraction(1, 2**alpha)
    back = Fraction(1, 2**beta)

    states = list(game.states) + [fresh]
    actions1 = {s: list(game.actions1[s]) for s in game.states}
    actions2 = {s: list(game.actions2[s]) for s in game.states}
    actions1[fresh] = ["i1"]
    actions2[fresh] = ["j1"]
    transitions: dict = {}
    rewards: dict = {}
    for (s, a1, a2), dist in game.transitions.items():
        if s == ssg.top:
            transitions[(s, a1, a2)] = {ssg.top: 1 - leak, fresh: leak}
            rewards[(s, a1, a2)] = ONE
        elif s == ssg.bottom:
            transitions[(s, a1, a2)] = {ssg.bottom: 1 - leak, fresh: leak}
            rewards[(s, a1, a2)] = Fraction(0)
        else:
            transitions[(s, a1, a2)] = dict(dist)
            rewards[(s, a1, a2)] = Fraction(0)
    others = [s for s in game.states if s != state]
    spread = back / len(others)
    fan = {state: 1 - back}
    for s in others:
        fan[s] = fan.get(s, Fraction(0)) + spread
    transitions[(fresh, "i1", "j1")] = fan
    rewards[(fresh, "i1", "j1")] = Fraction(0)
    return Game(
        states=states,
        actions1=actions1,
        actions2=actions2,
        transitions=transitions,
        rewards=rewards,
        reward_scale=ONE,
    )


# -- rational reconstruction --------------------------------------------------


def kwek_mehlhorn(oracle, bound: int) -> Fraction:
    """Best rational lower approximation of an unknown a in [0, 1] from a
    threshold oracle.

    ``oracle(p, q)`` answers whether a >= p/q.  Returns p/q with q <= bound,
    p/q <= a and a - p/q < 1/bound, using O(log bound) oracle calls: a
    Stern-Brocot descent where runs of same-direction mediant steps are
    found by doubling followed by binary search.
    """
    if bound < 1:
        raise CmpgError("bound must be >= 1")
    if not oracle(0, 1):
        raise InconsistentOracleError("oracle denies a >= 0 for a in [0, 1]")
    if oracle(1, 1):
        return Fraction(1, 1)

    lo_p, lo_q = 0, 1  # oracle true: a >= lo
    hi_p, hi_q = 1, 1  # oracle false: a < hi
    while lo_q + hi_q <= bound:
        # the next mediant step direction decides which endpoint moves;
        # find the largest run length t in that direction within the bound
        if oracle(lo_p + hi_p, lo_q + hi_q):
            # lo moves toward hi: lo <- lo + t*hi
            t_cap = (bound - lo_q) // hi_q
            t = _largest_true(lambda t: oracle(lo_p + t * hi_p, lo_q + t * hi_q), t_cap)
            lo_p, lo_q = lo_p + t * hi_p, lo_q + t * hi_q
        else:
            # hi moves toward lo: hi <- hi + t*lo, keeping oracle false
            t_cap = (bound - hi_q) // lo_q
            t = _largest_true(lambda t: not oracle(hi_p + t * lo_p, hi_q + t * lo_q), t_cap)
            hi_p, hi_q = hi_p + t * lo_p, hi_q + t * lo_q
    return Fraction(lo_p, lo_q)


def _largest_true(pred, cap: int) -> int:
    """Largest t in [1, cap] with pred(t) true, assuming pred monotone and
    pred(1) true; exponential doubling then binary search."""
    if cap <= 1:
        return max(cap, 1)
    t = 1
    while t < cap:
        nxt = min(2 * t, cap)
        if pred(nxt):
            t = nxt
        else:
            lo, hi = t, nxt  # pred(lo) true, pred(hi) false
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if pred(mid):
                    lo = mid
                else:
                    hi = mid
            return lo
    return t


def parse_witness(text: str) -> SkewSymmetryWitness:
    try:
        return SkewSymmetryWitness.from_json(text)
    except (json.JSONDecodeError, KeyError) as exc:
        raise GameFormatError(f"invalid witness document: {exc}")
