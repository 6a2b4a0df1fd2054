"""Ergodic decomposition and certification of the game-class hierarchy
(ergodic, sure ergodic, almost-sure ergodic).

A candidate ergodic component is a bottom SCC of the existential graph; it
is certified by checking, for every target state in it, that every other
state reaches the target with positive probability under *all* strategy
profiles.  That check is an attractor computation in a turn-based
abstraction where the two players combine into one side and the random
choices form the other.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .game import Game

VERDICTS = ("Ergodic", "SureErgodic", "AlmostSureErgodic", "None")


@dataclass
class Classification:
    components: list[list[str]]
    verdict: str
    witness: dict | None = None
    checks: dict[str, bool] = field(default_factory=dict)


def existential_graph(game: Game) -> dict[str, set[str]]:
    """Edge (s, t) iff t is in the support of some action pair at s."""
    graph: dict[str, set[str]] = {s: set() for s in game.states}
    for s in game.states:
        for a1, a2 in game.action_pairs(s):
            graph[s] |= game.support(s, a1, a2)
    return graph


def strongly_connected_components(graph: dict[str, set[str]]) -> list[list[str]]:
    """Iterative Tarjan; components in reverse topological order."""
    index: dict[str, int] = {}
    lowlink: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    sccs: list[list[str]] = []
    counter = [0]

    for root in graph:
        if root in index:
            continue
        work = [(root, iter(sorted(graph[root])))]
        index[root] = lowlink[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = lowlink[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(sorted(graph[w]))))
                    advanced = True
                    break
                if w in on_stack:
                    lowlink[v] = min(lowlink[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[v])
            if lowlink[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                sccs.append(comp)
    return sccs


def guaranteed_reach(game: Game, target: set[str]) -> set[str]:
    """States from which `target` is reached with positive probability no
    matter what both players do.

    Least fixpoint of W = target + {s : every action pair has some support
    successor inside W}: the support-chooser side wins the derived turn-based
    reachability game exactly on these states.
    """
    if not target:
        raise ValueError("target must be nonempty")
    win = set(target)
    changed = True
    while changed:
        changed = False
        for s in game.states:
            if s in win:
                continue
            if all(game.support(s, a1, a2) & win for a1, a2 in game.action_pairs(s)):
                win.add(s)
                changed = True
    return win


def ergodic_components(game: Game) -> list[list[str]]:
    """Verified ergodic components, ordered by first state appearance.

    Bottom SCCs of the existential graph are candidates; a candidate is kept
    only if every state in it is guaranteed-positively-reachable from every
    other (one attractor run per target state).  Bottom SCCs are closed under
    supports by construction.
    """
    verified, _ = _components_with_rejects(game)
    return verified


def _components_with_rejects(game: Game) -> tuple[list[list[str]], list[list[str]]]:
    graph = existential_graph(game)
    order = {s: i for i, s in enumerate(game.states)}
    verified, rejected = [], []
    for scc in strongly_connected_components(graph):
        members = set(scc)
        if any(graph[s] - members for s in scc):
            continue  # not a bottom SCC
        ok = all(members <= guaranteed_reach(game, {t}) for t in scc)
        comp = sorted(scc, key=order.get)
        (verified if ok else rejected).append(comp)
    verified.sort(key=lambda c: order[c[0]])
    rejected.sort(key=lambda c: order[c[0]])
    return verified, rejected


def surely_reaches(game: Game, component_union: set[str]) -> tuple[bool, list[str] | None]:
    """Every play certainly reaches the component union iff the existential
    subgraph outside it is acyclic.  Returns (ok, cycle witness)."""
    graph = existential_graph(game)
    outside = [s for s in game.states if s not in component_union]
    sub = {s: {t for t in graph[s] if t not in component_union} for s in outside}
    # cycle detection by iterative DFS coloring
    color = {s: 0 for s in outside}  # 0 white, 1 gray, 2 black
    parent: dict[str, str] = {}
    for root in outside:
        if color[root] != 0:
            continue
        stack = [(root, iter(sorted(sub[root])))]
        color[root] = 1
        while stack:
            v, it = stack[-1]
            found = False
            for w in it:
                if color[w] == 0:
                    color[w] = 1
                    parent[w] = v
                    stack.append((w, iter(sorted(sub[w]))))
                    found = True
                    break
                if color[w] == 1:
                    cycle = [w]
                    cur = v
                    while cur != w:
                        cycle.append(cur)
                        cur = parent[cur]
                    cycle.reverse()
                    return False, cycle
            if not found:
                color[v] = 2
                stack.pop()
    return True, None


def almost_surely_reaches(game: Game, component_union: set[str]) -> tuple[bool, list[str] | None]:
    """The component union is reached with probability 1 under all profiles
    iff no trap exists outside it: a nonempty set U where every state has
    some action pair whose whole support stays in U (greatest fixpoint)."""
    order = {s: i for i, s in enumerate(game.states)}
    trap = {s for s in game.states if s not in component_union}
    changed = True
    while changed:
        changed = False
        for s in list(trap):
            if not any(game.support(s, a1, a2) <= trap for a1, a2 in game.action_pairs(s)):
                trap.discard(s)
                changed = True
    if trap:
        return False, sorted(trap, key=order.get)
    return True, None


def classify(game: Game) -> Classification:
    """Classify a game as Ergodic / SureErgodic / AlmostSureErgodic / None.

    The three predicate evaluations are retained in `checks` (they are
    monotone: ergodic implies sure implies almost-sure)."""
    verified, rejected = _components_with_rejects(game)
    union = {s for comp in verified for s in comp}
    ergodic = len(verified) == 1 and len(verified[0]) == len(game.states)
    sure_ok, cycle = surely_reaches(game, union)
    almost_ok, trap = almost_surely_reaches(game, union)

    checks = {"ergodic": ergodic, "sure": sure_ok, "almost_sure": almost_ok}
    witness: dict | None = None
    if ergodic:
        verdict = "Ergodic"
    elif sure_ok:
        verdict = "SureErgodic"
    elif almost_ok:
        verdict = "AlmostSureErgodic"
    else:
        verdict = "None"
        witness = {}
        if trap is not None:
            witness["trap"] = trap
        elif cycle is not None:
            witness["cycle"] = cycle
        if rejected:
            witness["unverified_components"] = rejected
    return Classification(components=verified, verdict=verdict, witness=witness, checks=checks)
