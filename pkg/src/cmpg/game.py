"""Concurrent mean-payoff game model, exact arithmetic and the on-disk format.

A game is a finite set of states; at each state both players pick an action
simultaneously and the pair determines a reward and a probability
distribution over successor states.  Probabilities and rewards are stored
as exact `fractions.Fraction` values; solvers convert to floats internally.

The file format is JSON:

    {
      "states": ["u", "w"],
      "gamma1": {"u": ["a1", "a2"], "w": ["a"]},
      "gamma2": {"u": ["b1", "b2"], "w": ["b"]},
      "transitions": [
        {"from": "u", "a1": "a1", "a2": "b1", "reward": "2",
         "successors": {"u": "1/2", "w": "1/2"}},
        ...
      ],
      "reward_scale": "2"
    }

Rationals are written as "p/q" strings or integer strings.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import GameFormatError, SupportError

TransitionKey = tuple[str, str, str]  # (state, action1, action2)


def parse_rational(text) -> Fraction:
    """Parse "p/q", "p" or a JSON integer into an exact Fraction."""
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, str):
        try:
            return Fraction(text.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise GameFormatError(f"bad rational literal {text!r}: {exc}")
    raise GameFormatError(f"expected rational string, got {type(text).__name__}")


def format_rational(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class GameStats:
    """Size parameters of a game: state count n, max actions m, random-state
    count r and the smallest positive transition probability."""

    n: int
    m: int
    r: int
    delta_min: Fraction


@dataclass
class Game:
    """A validated concurrent mean-payoff game.

    ``transitions[(s, a1, a2)]`` maps successor states to positive exact
    probabilities summing to 1; ``rewards[(s, a1, a2)]`` lies in
    [0, reward_scale].
    """

    states: list[str]
    actions1: dict[str, list[str]]
    actions2: dict[str, list[str]]
    transitions: dict[TransitionKey, dict[str, Fraction]]
    rewards: dict[TransitionKey, Fraction]
    reward_scale: Fraction

    def __post_init__(self):
        self._state_index = {s: i for i, s in enumerate(self.states)}
        self.validate()

    # -- structure helpers -------------------------------------------------

    def state_index(self, s: str) -> int:
        try:
            return self._state_index[s]
        except KeyError:
            raise GameFormatError(f"unknown state {s!r}")

    def action_pairs(self, s: str) -> Iterable[tuple[str, str]]:
        for a1 in self.actions1[s]:
            for a2 in self.actions2[s]:
                yield a1, a2

    def support(self, s: str, a1: str, a2: str) -> set[str]:
        return set(self.transitions[(s, a1, a2)])

    def validate(self) -> None:
        if not self.states:
            raise GameFormatError("game has no states")
        if len(set(self.states)) != len(self.states):
            raise GameFormatError("duplicate state identifiers")
        if self.reward_scale <= 0:
            raise GameFormatError("reward_scale must be positive")
        for s in self.states:
            for label, acts in (("gamma1", self.actions1), ("gamma2", self.actions2)):
                if s not in acts or not acts[s]:
                    raise GameFormatError(f"{label} missing or empty", location=f"state {s}")
                if len(set(acts[s])) != len(acts[s]):
                    raise GameFormatError(f"duplicate actions in {label}", location=f"state {s}")
        seen = set()
        for s in self.states:
            for a1, a2 in self.action_pairs(s):
                key = (s, a1, a2)
                if key not in self.transitions:
                    raise GameFormatError("missing transition entry", location=str(key))
                dist = self.transitions[key]
                if any(p <= 0 for p in dist.values()):
                    raise GameFormatError("non-positive probability", location=str(key))
                if any(t not in self._state_index for t in dist):
                    raise GameFormatError("successor is not a declared state", location=str(key))
                if sum(dist.values()) != 1:
                    raise GameFormatError(
                        f"distribution sums to {format_rational(sum(dist.values()))}, not 1",
                        location=str(key),
                    )
                r = self.rewards.get(key)
                if r is None:
                    raise GameFormatError("missing reward entry", location=str(key))
                if not (0 <= r <= self.reward_scale):
                    raise GameFormatError(
                        f"reward {format_rational(r)} outside [0, {format_rational(self.reward_scale)}]",
                        location=str(key),
                    )
                seen.add(key)
        for key in self.transitions:
            if key not in seen:
                raise GameFormatError("transition references undeclared action pair", location=str(key))

    def fingerprint(self) -> str:
        """Content hash of the canonical serialization."""
        return hashlib.sha256(serialize_game(self).encode()).hexdigest()


@dataclass
class StationaryStrategy:
    """Per-state distribution over that state's actions for one player.

    ``exact`` tags whether probabilities are exact rationals (Fraction) or
    floats; exact distributions must sum to 1 exactly, float ones within
    1e-12.
    """

    player: int
    dist: dict[str, dict[str, Fraction | float]]
    exact: bool = True

    def validate(self, game: Game) -> None:
        if self.player not in (1, 2):
            raise GameFormatError(f"player must be 1 or 2, got {self.player}")
        actions = game.actions1 if self.player == 1 else game.actions2
        for s in game.states:
            if s not in self.dist:
                raise GameFormatError("strategy missing state", location=f"state {s}")
            d = self.dist[s]
            legal = set(actions[s])
            for a, p in d.items():
                if a not in legal:
                    raise SupportError(f"action {a!r} not available to player {self.player} at state {s!r}")
                if p < 0:
                    raise GameFormatError("negative probability", location=f"state {s}")
            total = sum(d.values())
            if self.exact:
                if total != 1:
                    raise GameFormatError(
                        f"distribution sums to {total}, not 1", location=f"state {s}"
                    )
            elif abs(total - 1) > 1e-12:
                raise GameFormatError(f"distribution sums to {total}", location=f"state {s}")

    def prob(self, s: str, a: str):
        return self.dist[s].get(a, Fraction(0) if self.exact else 0.0)

    def is_q_rounded(self, q: int) -> bool:
        if not self.exact:
            return False
        for d in self.dist.values():
            for p in d.values():
                if (Fraction(p) * q).denominator != 1:
                    return False
        return True


def positional(player: int, choice: Mapping[str, str]) -> StationaryStrategy:
    """Build the pure stationary strategy playing ``choice[s]`` at each state."""
    return StationaryStrategy(
        player, {s: {a: Fraction(1)} for s, a in choice.items()}, exact=True
    )


def uniform_strategy(game: Game, player: int) -> StationaryStrategy:
    actions = game.actions1 if player == 1 else game.actions2
    return StationaryStrategy(
        player,
        {s: {a: Fraction(1, len(acts)) for a in acts} for s, acts in actions.items()},
        exact=True,
    )


# -- operations ------------------------------------------------------------


def compute_stats(game: Game) -> GameStats:
    """n, m, r and delta_min computed exactly from the transition table."""
    n = len(game.states)
    m = max(
        max(len(game.actions1[s]), len(game.actions2[s])) for s in game.states
    )
    random_states = 0
    delta_min = None
    for s in game.states:
        is_random = False
        for a1, a2 in game.action_pairs(s):
            dist = game.transitions[(s, a1, a2)]
            if len(dist) >= 2:
                is_random = True
            for p in dist.values():
                if delta_min is None or p < delta_min:
                    delta_min = p
        if is_random:
            random_states += 1
    return GameStats(n=n, m=m, r=random_states, delta_min=delta_min)


def expected_reward(game: Game, s: str, d1: Mapping[str, object], d2: Mapping[str, object]):
    """One-step expected reward Sum R(s,a1,a2) * d1(a1) * d2(a2).

    Exact when both distributions are exact; float otherwise.
    """
    legal1, legal2 = set(game.actions1[s]), set(game.actions2[s])
    for a in d1:
        if a not in legal1:
            raise SupportError(f"action {a!r} not in Gamma1({s!r})")
    for a in d2:
        if a not in legal2:
            raise SupportError(f"action {a!r} not in Gamma2({s!r})")
    total = 0
    for a1, p1 in d1.items():
        if p1 == 0:
            continue
        for a2, p2 in d2.items():
            if p2 == 0:
                continue
            total += game.rewards[(s, a1, a2)] * p1 * p2
    return total


def patience(sigma: StationaryStrategy):
    """Inverse of the smallest positive action probability; 1 if positional."""
    worst = None
    for d in sigma.dist.values():
        for p in d.values():
            if p > 0 and (worst is None or p < worst):
                worst = p
    if worst is None:
        raise GameFormatError("strategy assigns no positive probability anywhere")
    return 1 / worst if not sigma.exact else Fraction(1) / worst


# -- serialization ----------------------------------------------------------


def parse_game(text: str) -> Game:
    """Parse and validate a game document.

    Raises GameFormatError with a location for syntax and semantic problems.
    Zero-probability successor entries are rejected (supports are the stored
    entries).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GameFormatError(f"invalid JSON: {exc.msg}", location=f"line {exc.lineno} column {exc.colno}")
    if not isinstance(doc, dict):
        raise GameFormatError("top-level value must be an object")
    for fld in ("states", "gamma1", "gamma2", "transitions", "reward_scale"):
        if fld not in doc:
            raise GameFormatError(f"missing field {fld!r}")
    states = doc["states"]
    if not isinstance(states, list) or not all(isinstance(s, str) for s in states):
        raise GameFormatError("'states' must be a list of strings")
    actions1 = {s: list(doc["gamma1"].get(s, [])) for s in states}
    actions2 = {s: list(doc["gamma2"].get(s, [])) for s in states}
    transitions: dict[TransitionKey, dict[str, Fraction]] = {}
    rewards: dict[TransitionKey, Fraction] = {}
    if not isinstance(doc["transitions"], list):
        raise GameFormatError("'transitions' must be a list")
    for i, rec in enumerate(doc["transitions"]):
        loc = f"transitions[{i}]"
        for fld in ("from", "a1", "a2", "reward", "successors"):
            if fld not in rec:
                raise GameFormatError(f"missing field {fld!r}", location=loc)
        s, a1, a2 = rec["from"], rec["a1"], rec["a2"]
        if s not in actions1:
            raise GameFormatError(f"unknown state {s!r}", location=loc)
        if a1 not in actions1[s]:
            raise GameFormatError(f"action {a1!r} not declared in gamma1[{s!r}]", location=loc)
        if a2 not in actions2[s]:
            raise GameFormatError(f"action {a2!r} not declared in gamma2[{s!r}]", location=loc)
        key = (s, a1, a2)
        if key in transitions:
            raise GameFormatError("duplicate transition entry", location=loc)
        dist = {}
        for t, p in rec["successors"].items():
            prob = parse_rational(p)
            if prob < 0:
                raise GameFormatError(f"negative probability for successor {t!r}", location=loc)
            if prob == 0:
                raise GameFormatError(f"zero probability entry for successor {t!r}", location=loc)
            dist[t] = prob
        transitions[key] = dist
        rewards[key] = parse_rational(rec["reward"])
    try:
        return Game(
            states=states,
            actions1=actions1,
            actions2=actions2,
            transitions=transitions,
            rewards=rewards,
            reward_scale=parse_rational(doc["reward_scale"]),
        )
    except GameFormatError:
        raise


def serialize_game(game: Game) -> str:
    """Canonical textual form; parse_game(serialize_game(g)) == g bit-exactly."""
    recs = []
    for s in game.states:
        for a1, a2 in game.action_pairs(s):
            key = (s, a1, a2)
            recs.append(
                {
                    "from": s,
                    "a1": a1,
                    "a2": a2,
                    "reward": format_rational(game.rewards[key]),
                    "successors": {
                        t: format_rational(p)
                        for t, p in sorted(
                            game.transitions[key].items(), key=lambda kv: game.state_index(kv[0])
                        )
                    },
                }
            )
    doc = {
        "states": game.states,
        "gamma1": {s: game.actions1[s] for s in game.states},
        "gamma2": {s: game.actions2[s] for s in game.states},
        "transitions": recs,
        "reward_scale": format_rational(game.reward_scale),
    }
    return json.dumps(doc, indent=1)


def parse_strategy(text: str) -> StationaryStrategy:
    """Parse a strategy document {player, strategy: state -> {action: "p/q"}}."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GameFormatError(f"invalid JSON: {exc.msg}", location=f"line {exc.lineno} column {exc.colno}")
    if "player" not in doc or "strategy" not in doc:
        raise GameFormatError("strategy document needs 'player' and 'strategy' fields")
    dist = {
        s: {a: parse_rational(p) for a, p in d.items()}
        for s, d in doc["strategy"].items()
    }
    return StationaryStrategy(player=int(doc["player"]), dist=dist, exact=True)


def serialize_strategy(sigma: StationaryStrategy) -> str:
    dist = {
        s: {a: format_rational(Fraction(p)) for a, p in d.items() if p != 0}
        for s, d in sigma.dist.items()
    }
    return json.dumps({"player": sigma.player, "strategy": dist}, indent=1)
