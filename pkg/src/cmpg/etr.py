"""Existential-theory-of-the-reals sentences whose satisfying assignments
pin down game values, plus a numeric substitution checker and an SMT-LIB 2
export/import round trip.

For one ergodic component the sentence encodes the strategy-iteration
fixpoint: mixed strategies x, y, potentials v anchored at a chosen state,
and the value variable g, with one <= constraint per (state, column action),
one >= constraint per (state, row action), and probability-distribution
blocks.  For an almost-sure ergodic game the component sentences are joined
with reachability variables z_s and a threshold constraint z_s0 <= lambda.

Everything is expressed over rewards scaled into [0, 1]; variable names use
dense state/action indices, with the id tables recorded in the sentence
metadata.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from .classify import classify
from .errors import CmpgError
from .game import Game, format_rational, parse_rational

# expression trees: ("num", Fraction) | ("var", name) | ("+", (e, ...)) | ("*", (e, ...))
Expr = tuple


def num(x) -> Expr:
    return ("num", Fraction(x))


def var(name: str) -> Expr:
    return ("var", name)


def add(*terms: Expr) -> Expr:
    if len(terms) == 1:
        return terms[0]
    return ("+", tuple(terms))


def mul(*factors: Expr) -> Expr:
    if len(factors) == 1:
        return factors[0]
    return ("*", tuple(factors))


def evaluate(expr: Expr, assignment: dict[str, float]) -> float:
    kind = expr[0]
    if kind == "num":
        return float(expr[1])
    if kind == "var":
        try:
            return float(assignment[expr[1]])
        except KeyError:
            raise CmpgError(f"assignment missing variable {expr[1]!r}")
    if kind == "+":
        return sum(evaluate(e, assignment) for e in expr[1])
    if kind == "*":
        out = 1.0
        for e in expr[1]:
            out *= evaluate(e, assignment)
        return out
    raise CmpgError(f"unknown expression node {kind!r}")


@dataclass(frozen=True)
class Constraint:
    label: str
    op: str  # "<=", ">=", "="
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class EtrSentence:
    variables: tuple[str, ...]
    constraints: tuple[Constraint, ...]
    meta: str  # JSON: anchors, threshold, id tables

    def meta_dict(self) -> dict:
        return json.loads(self.meta)


@dataclass
class CheckResult:
    ok: bool
    violated: str | None = None
    residual: float = 0.0

    def __bool__(self) -> bool:
        return self.ok


def check_assignment(sentence: EtrSentence, assignment: dict[str, float], tol: float) -> CheckResult:
    """Substitute and test every constraint.

    Equalities pass iff |lhs - rhs| <= tol; inequalities may be violated by
    at most tol.  Reports the first violated constraint.
    """
    for name in sentence.variables:
        if name not in assignment:
            raise CmpgError(f"assignment missing variable {name!r}")
    for c in sentence.constraints:
        lhs = evaluate(c.lhs, assignment)
        rhs = evaluate(c.rhs, assignment)
        if c.op == "=":
            gap = abs(lhs - rhs)
        elif c.op == "<=":
            gap = lhs - rhs
        elif c.op == ">=":
            gap = rhs - lhs
        else:
            raise CmpgError(f"unknown relation {c.op!r}")
        if gap > tol:
            return CheckResult(ok=False, violated=c.label, residual=gap)
    return CheckResult(ok=True)


# -- emission -----------------------------------------------------------------


def _component_blocks(game: Game, states: list[str], g_name: str, s_star: str):
    """Constraints of the fixpoint sentence for one ergodic component over
    normalized rewards; variables are indexed by the full game's tables."""
    W = Fraction(game.reward_scale)
    variables: list[str] = [g_name]
    constraints: list[Constraint] = []
    vvar = {s: f"v_{game.state_index(s)}" for s in states}
    xvar = {
        (s, a): f"x_{game.state_index(s)}_{i}"
        for s in states
        for i, a in enumerate(game.actions1[s])
    }
    yvar = {
        (s, a): f"y_{game.state_index(s)}_{j}"
        for s in states
        for j, a in enumerate(game.actions2[s])
    }
    variables += [xvar[(s, a)] for s in states for a in game.actions1[s]]
    variables += [yvar[(s, a)] for s in states for a in game.actions2[s]]
    variables += [vvar[s] for s in states]

    def payoff_expr(s: str, a1: str, a2: str) -> Expr:
        key = (s, a1, a2)
        terms = [num(game.rewards[key] / W)]
        for t, p in game.transitions[key].items():
            terms.append(mul(num(p), var(vvar[t])))
        return add(*terms)

    gv = var(g_name)
    for s in states:
        for a2 in game.actions2[s]:
            rhs = add(*[mul(var(xvar[(s, a1)]), payoff_expr(s, a1, a2)) for a1 in game.actions1[s]])
            constraints.append(
                Constraint(f"fix_le[{game.state_index(s)},{a2}]", "<=", add(gv, var(vvar[s])), rhs)
            )
        for a1 in game.actions1[s]:
            rhs = add(*[mul(var(yvar[(s, a2)]), payoff_expr(s, a1, a2)) for a2 in game.actions2[s]])
            constraints.append(
                Constraint(f"fix_ge[{game.state_index(s)},{a1}]", ">=", add(gv, var(vvar[s])), rhs)
            )
    for s in states:
        si = game.state_index(s)
        for a in game.actions1[s]:
            constraints.append(Constraint(f"nonneg[{xvar[(s, a)]}]", ">=", var(xvar[(s, a)]), num(0)))
        constraints.append(
            Constraint(f"probsum_x[{si}]", "=", add(*[var(xvar[(s, a)]) for a in game.actions1[s]]), num(1))
        )
        for a in game.actions2[s]:
            constraints.append(Constraint(f"nonneg[{yvar[(s, a)]}]", ">=", var(yvar[(s, a)]), num(0)))
        constraints.append(
            Constraint(f"probsum_y[{si}]", "=", add(*[var(yvar[(s, a)]) for a in game.actions2[s]]), num(1))
        )
    constraints.append(
        Constraint(f"anchor[{game.state_index(s_star)}]", "=", var(vvar[s_star]), num(0))
    )
    return variables, constraints


def _meta(game: Game, extra: dict) -> str:
    doc = {
        "states": list(game.states),
        "actions1": {str(game.state_index(s)): game.actions1[s] for s in game.states},
        "actions2": {str(game.state_index(s)): game.actions2[s] for s in game.states},
        "reward_scale": format_rational(Fraction(game.reward_scale)),
        "units": "normalized",
    }
    doc.update(extra)
    return json.dumps(doc, sort_keys=True)


def emit_etr_component(game: Game, s_star: str) -> EtrSentence:
    """Sentence for a game that is a single ergodic component; its unique
    solution has g equal to the component value over W."""
    cls = classify(game)
    if cls.verdict != "Ergodic":
        raise CmpgError(f"game must be a single ergodic component, classified {cls.verdict}")
    if s_star not in game.states:
        raise CmpgError(f"unknown anchor state {s_star!r}")
    variables, constraints = _component_blocks(game, list(game.states), "g", s_star)
    meta = _meta(game, {"kind": "component", "anchor": s_star})
    return EtrSentence(tuple(variables), tuple(constraints), meta)


def emit_etr_full(game: Game, lam: Fraction, query_state: str | None = None) -> EtrSentence:
    """Sentence satisfiable iff the game value at the query state is at most
    `lam` (given in unnormalized reward units; scaled internally)."""
    cls = classify(game)
    if cls.verdict == "None":
        raise CmpgError("game is not almost-sure ergodic; no value sentence exists")
    if query_state is None:
        query_state = game.states[0]
    if query_state not in game.states:
        raise CmpgError(f"unknown state {query_state!r}")
    W = Fraction(game.reward_scale)
    lam_norm = Fraction(lam) / W

    variables: list[str] = []
    constraints: list[Constraint] = []
    component_of: dict[str, int] = {}
    anchors: list[str] = []
    for ci, comp in enumerate(cls.components):
        for s in comp:
            component_of[s] = ci
        s_star = comp[0]
        anchors.append(s_star)
        # components are support-closed, so emitting against the full game
        # keeps every referenced variable inside the component
        vs, cs = _component_blocks(game, comp, f"g_{ci}", s_star)
        variables += vs
        constraints += cs

    zvar = {s: f"z_{game.state_index(s)}" for s in game.states}
    outside = [s for s in game.states if s not in component_of]
    xvar = {
        (s, a): f"x_{game.state_index(s)}_{i}"
        for s in outside
        for i, a in enumerate(game.actions1[s])
    }
    yvar = {
        (s, a): f"y_{game.state_index(s)}_{j}"
        for s in outside
        for j, a in enumerate(game.actions2[s])
    }
    variables += [zvar[s] for s in game.states]
    variables += [xvar[(s, a)] for s in outside for a in game.actions1[s]]
    variables += [yvar[(s, a)] for s in outside for a in game.actions2[s]]

    for s in outside:
        si = game.state_index(s)
        for a2 in game.actions2[s]:
            rhs = add(
                *[
                    mul(var(xvar[(s, a1)]), num(p), var(zvar[t]))
                    for a1 in game.actions1[s]
                    for t, p in game.transitions[(s, a1, a2)].items()
                ]
            )
            constraints.append(Constraint(f"reach_le[{si},{a2}]", "<=", var(zvar[s]), rhs))
        for a1 in game.actions1[s]:
            rhs = add(
                *[
                    mul(var(yvar[(s, a2)]), num(p), var(zvar[t]))
                    for a2 in game.actions2[s]
                    for t, p in game.transitions[(s, a1, a2)].items()
                ]
            )
            constraints.append(Constraint(f"reach_ge[{si},{a1}]", ">=", var(zvar[s]), rhs))
        for a in game.actions1[s]:
            constraints.append(Constraint(f"nonneg[{xvar[(s, a)]}]", ">=", var(xvar[(s, a)]), num(0)))
        constraints.append(
            Constraint(f"probsum_x[{si}]", "=", add(*[var(xvar[(s, a)]) for a in game.actions1[s]]), num(1))
        )
        for a in game.actions2[s]:
            constraints.append(Constraint(f"nonneg[{yvar[(s, a)]}]", ">=", var(yvar[(s, a)]), num(0)))
        constraints.append(
            Constraint(f"probsum_y[{si}]", "=", add(*[var(yvar[(s, a)]) for a in game.actions2[s]]), num(1))
        )
    for s, ci in component_of.items():
        constraints.append(
            Constraint(f"bind_z[{game.state_index(s)}]", "=", var(zvar[s]), var(f"g_{ci}"))
        )
    constraints.append(Constraint("threshold", "<=", var(zvar[query_state]), num(lam_norm)))

    meta = _meta(
        game,
        {
            "kind": "full",
            "anchors": anchors,
            "lambda": format_rational(Fraction(lam)),
            "query_state": query_state,
            "components": [list(c) for c in cls.components],
        },
    )
    return EtrSentence(tuple(variables), tuple(constraints), meta)


def restrict_to_component(game: Game, states: list[str]) -> Game:
    """Component subgame; supports stay inside (components are support-closed)."""
    keep = set(states)
    return Game(
        states=list(states),
        actions1={s: list(game.actions1[s]) for s in states},
        actions2={s: list(game.actions2[s]) for s in states},
        transitions={
            (s, a1, a2): dict(game.transitions[(s, a1, a2)])
            for s in states
            for a1, a2 in game.action_pairs(s)
            if set(game.transitions[(s, a1, a2)]) <= keep
        },
        rewards={
            (s, a1, a2): game.rewards[(s, a1, a2)]
            for s in states
            for a1, a2 in game.action_pairs(s)
        },
        reward_scale=game.reward_scale,
    )


# -- SMT-LIB 2 export / import -------------------------------------------------

_SMT_SYMBOL_SAFE = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_")


def _smt_number(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator) if x.numerator >= 0 else f"(- {-x.numerator})"
    if x.numerator >= 0:
        return f"(/ {x.numerator} {x.denominator})"
    return f"(- (/ {-x.numerator} {x.denominator}))"


def _smt_expr(expr: Expr) -> str:
    kind = expr[0]
    if kind == "num":
        return _smt_number(expr[1])
    if kind == "var":
        return expr[1]
    op = kind
    return f"({op} " + " ".join(_smt_expr(e) for e in expr[1]) + ")"


def to_smtlib(sentence: EtrSentence) -> str:
    """Deterministic SMT-LIB 2 document in QF_NRA; one assert per constraint,
    rationals as (/ p q), labels as leading comments."""
    lines = ["(set-logic QF_NRA)"]
    lines.append(f'(set-info :cmpg-meta "{_escape(sentence.meta)}")')
    for name in sentence.variables:
        lines.append(f"(declare-const {name} Real)")
    for c in sentence.constraints:
        lines.append(f"; {c.label}")
        op = c.op if c.op != "=" else "="
        lines.append(f"(assert ({op} {_smt_expr(c.lhs)} {_smt_expr(c.rhs)}))")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def _unescape(text: str) -> str:
    return text.replace('\\"', '"').replace("\\\\", "\\")


def _tokenize(text: str):
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in " \t\n\r":
            i += 1
        elif ch == ";":
            j = text.find("\n", i)
            j = n if j < 0 else j
            yield ("comment", text[i + 1 : j].strip())
            i = j
        elif ch in "()":
            yield (ch, ch)
            i += 1
        elif ch == '"':
            j = i + 1
            out = []
            while j < n:
                if text[j] == "\\" and j + 1 < n:
                    out.append(text[j + 1])
                    j += 2
                elif text[j] == '"':
                    break
                else:
                    out.append(text[j])
                    j += 1
            yield ("string", "".join(out))
            i = j + 1
        else:
            j = i
            while j < n and text[j] not in ' \t\n\r();"':
                j += 1
            yield ("atom", text[i:j])
            i = j
    yield ("eof", "")


def parse_smtlib(text: str) -> EtrSentence:
    """Parse a document produced by `to_smtlib` back into an equal sentence."""
    tokens = list(_tokenize(text))
    pos = [0]

    def peek():
        return tokens[pos[0]]

    def advance():
        tok = tokens[pos[0]]
        pos[0] += 1
        return tok

    def read_sexpr():
        kind, value = advance()
        if kind == "(":
            items = []
            while peek()[0] != ")":
                if peek()[0] == "eof":
                    raise CmpgError("unbalanced parentheses in SMT document")
                items.append(read_sexpr())
            advance()
            return items
        if kind in ("atom", "string"):
            return value
        raise CmpgError(f"unexpected token {value!r}")

    variables: list[str] = []
    constraints: list[Constraint] = []
    meta = "{}"
    pending_label: str | None = None
    while peek()[0] != "eof":
        kind, value = peek()
        if kind == "comment":
            pending_label = value
            advance()
            continue
        form = read_sexpr()
        if not isinstance(form, list) or not form:
            continue
        head = form[0]
        if head == "set-info" and len(form) == 3 and form[1] == ":cmpg-meta":
            meta = form[2]
        elif head == "declare-const":
            variables.append(form[1])
        elif head == "assert":
            rel = form[1]
            op = rel[0]
            if op not in ("<=", ">=", "="):
                raise CmpgError(f"unsupported relation {op!r}")
            lhs = _expr_from_sexpr(rel[1])
            rhs = _expr_from_sexpr(rel[2])
            label = pending_label if pending_label is not None else f"c{len(constraints)}"
            constraints.append(Constraint(label, op, lhs, rhs))
            pending_label = None
    return EtrSentence(tuple(variables), tuple(constraints), meta)


def _expr_from_sexpr(sx) -> Expr:
    if isinstance(sx, str):
        try:
            return num(parse_rational(sx))
        except Exception:
            return var(sx)
    head = sx[0]
    if head == "/":
        return num(Fraction(int(sx[1]), int(sx[2])))
    if head == "-" and len(sx) == 2:
        inner = _expr_from_sexpr(sx[1])
        if inner[0] != "num":
            raise CmpgError("unary minus only supported on numerals")
        return num(-inner[1])
    if head in ("+", "*"):
        return (head, tuple(_expr_from_sexpr(e) for e in sx[1:]))
    raise CmpgError(f"unsupported operator {head!r}")


def parse_assignment(text: str) -> dict[str, float]:
    """Assignment file: JSON object mapping variable names to decimals or
    "p/q" strings."""
    doc = json.loads(text)
    out = {}
    for name, value in doc.items():
        if isinstance(value, str):
            out[name] = float(parse_rational(value))
        else:
            out[name] = float(value)
    return out
