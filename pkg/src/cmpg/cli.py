"""Command-line entry point.

Subcommands: validate, classify, solve, eval, gen, reduce-ssg, export-etr,
check-etr.  Game documents may be read from stdin and written to stdout with
`-`, so generators pipe into solvers.  Every subcommand accepts `--output`
to write a machine-readable run record.  Exit codes: 0 success, 1 domain
error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from fractions import Fraction

from . import __version__
from .classify import classify as classify_game
from .errors import CmpgError
from .etr import (
    check_assignment,
    emit_etr_component,
    emit_etr_full,
    parse_assignment,
    parse_smtlib,
    to_smtlib,
)
from .game import (
    Game,
    compute_stats,
    format_rational,
    parse_game,
    parse_rational,
    parse_strategy,
    serialize_game,
    serialize_strategy,
)
from .generators import SSG, gen_lower_bound, gen_sqrt_game, gen_sqrt_sum, reduce_ssg
from .solvers import (
    evaluate_profile,
    value_iteration,
    var_hoffman_karp,
    vi_steps_for_epsilon,
)

DEFAULT_VI_STEP_CAP = 100_000


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _load_game(path: str) -> Game:
    return parse_game(_read_text(path))


def _threads(args) -> int:
    if getattr(args, "threads", None):
        return args.threads
    env = os.environ.get("CMPG_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _record(args, command: str, parameters: dict, game: Game | None, results: dict, units: dict, t0: float):
    if not getattr(args, "output", None):
        return
    record = {
        "command": command,
        "parameters": parameters,
        "game_sha256": game.fingerprint() if game is not None else None,
        "results": results,
        "units": units,
        "timings": {"wall_s": time.perf_counter() - t0},
        "version": __version__,
    }
    with open(args.output, "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _cmd_validate(args) -> int:
    t0 = time.perf_counter()
    game = _load_game(args.game)
    stats = compute_stats(game)
    print(f"states: {stats.n}")
    print(f"max actions per player: {stats.m}")
    print(f"random states: {stats.r}")
    print(f"delta_min: {format_rational(stats.delta_min)}")
    print(f"reward_scale: {format_rational(game.reward_scale)}")
    results = {
        "n": stats.n,
        "m": stats.m,
        "r": stats.r,
        "delta_min": format_rational(stats.delta_min),
        "reward_scale": format_rational(game.reward_scale),
    }
    _record(args, "validate", {"game": args.game}, game, results, {"delta_min": "probability"}, t0)
    return 0


def _cmd_classify(args) -> int:
    t0 = time.perf_counter()
    game = _load_game(args.game)
    cls = classify_game(game)
    print(f"verdict: {cls.verdict}")
    for i, comp in enumerate(cls.components):
        print(f"component {i}: {' '.join(comp)}")
    if cls.witness:
        print(f"witness: {cls.witness}")
    machine = {
        "verdict": cls.verdict,
        "components": cls.components,
        "witness": cls.witness,
        "checks": cls.checks,
    }
    print(json.dumps(machine, sort_keys=True))
    _record(args, "classify", {"game": args.game}, game, machine, {}, t0)
    return 0


def _cmd_solve(args) -> int:
    t0 = time.perf_counter()
    game = _load_game(args.game)
    stats = compute_stats(game)
    epsilon = parse_rational(args.epsilon)
    units = {"values": "unnormalized-reward", "epsilon": "unnormalized-reward"}
    if args.method == "vi":
        steps = args.steps
        if steps is None:
            steps = min(vi_steps_for_epsilon(stats, game.reward_scale, epsilon), args.max_steps)
        result = value_iteration(game, steps, trace=args.trace)
        lo, hi = result.bracket
        print(f"steps: {result.steps}")
        print(f"bracket: [{lo:.10g}, {hi:.10g}] (width {hi - lo:.4g})")
        print(f"midpoint: {result.midpoint:.10g}")
        results = {
            "method": "vi",
            "steps": result.steps,
            "bracket": [lo, hi],
            "midpoint": result.midpoint,
            "values": result.values,
        }
        if args.trace:
            results["trace"] = result.trace
        _record(args, "solve", _solve_params(args), game, results, units, t0)
        return 0
    result = var_hoffman_karp(
        game,
        epsilon,
        anchor=args.anchor,
        q_override=args.q,
        node_budget=args.node_budget,
    )
    print(f"iterations: {result.iterations}")
    print(f"q: {result.q}")
    print(f"gain: {result.gain:.10g}")
    print(f"epsilon_actual: {float(result.epsilon_actual):.6g}")
    print(f"strategy: {serialize_strategy(result.strategy)}")
    results = {
        "method": "si",
        "iterations": result.iterations,
        "q": result.q,
        "gain": result.gain,
        "epsilon_actual": float(result.epsilon_actual),
        "strategy": json.loads(serialize_strategy(result.strategy)),
        "potentials": result.potentials.potentials,
        "anchor": result.potentials.anchor,
    }
    if args.trace:
        results["gains"] = result.gains
    _record(args, "solve", _solve_params(args), game, results, units, t0)
    return 0


def _solve_params(args) -> dict:
    return {
        "game": args.game,
        "method": args.method,
        "epsilon": args.epsilon,
        "steps": args.steps,
        "q": args.q,
        "anchor": args.anchor,
    }


def _cmd_eval(args) -> int:
    t0 = time.perf_counter()
    game = _load_game(args.game)
    s1 = parse_strategy(_read_text(args.s1))
    s2 = parse_strategy(_read_text(args.s2))
    s1.validate(game)
    s2.validate(game)
    if {s1.player, s2.player} != {1, 2}:
        raise CmpgError("need one strategy per player")
    if s1.player == 2:
        s1, s2 = s2, s1
    gain = evaluate_profile(game, s1, s2, start=args.state)
    print(f"gain: {gain:.10g}")
    _record(
        args,
        "eval",
        {"game": args.game, "s1": args.s1, "s2": args.s2, "state": args.state},
        game,
        {"gain": gain},
        {"gain": "unnormalized-reward"},
        t0,
    )
    return 0


def _cmd_gen(args) -> int:
    t0 = time.perf_counter()
    if args.family == "sqrt":
        game = gen_sqrt_game(int(args.spec[0]))
        params = {"family": "sqrt", "b": int(args.spec[0])}
    elif args.family == "sqrtsum":
        nums = [int(x) for x in args.spec[0].split(",") if x]
        game = gen_sqrt_sum(nums)
        params = {"family": "sqrtsum", "nums": nums}
    elif args.family == "lower-bound":
        if args.k is None or args.eta is None:
            raise CmpgError("gen lower-bound requires --k and --eta")
        game, witness = gen_lower_bound(args.k, parse_rational(args.eta))
        params = {"family": "lower-bound", "k": args.k, "eta": args.eta}
        if args.witness:
            _write_text(args.witness, witness.to_json())
    else:
        raise CmpgError(f"unknown family {args.family!r}")
    _write_text(args.out, serialize_game(game) + "\n")
    _record(args, "gen", params, game, {"states": len(game.states)}, {}, t0)
    return 0


def _cmd_reduce_ssg(args) -> int:
    t0 = time.perf_counter()
    game = _load_game(args.game)
    ssg = SSG.from_game(game)
    reduced = reduce_ssg(ssg, args.state, args.alpha, args.beta)
    _write_text(args.out, serialize_game(reduced) + "\n")
    _record(
        args,
        "reduce-ssg",
        {"game": args.game, "state": args.state, "alpha": args.alpha, "beta": args.beta},
        reduced,
        {"states": len(reduced.states)},
        {},
        t0,
    )
    return 0


def _cmd_export_etr(args) -> int:
    t0 = time.perf_counter()
    game = _load_game(args.game)
    if args.lam is None:
        s_star = args.state or game.states[0]
        sentence = emit_etr_component(game, s_star)
    else:
        sentence = emit_etr_full(game, parse_rational(args.lam), query_state=args.state)
    _write_text(args.out, to_smtlib(sentence))
    _record(
        args,
        "export-etr",
        {"game": args.game, "lambda": args.lam, "state": args.state},
        game,
        {"variables": len(sentence.variables), "constraints": len(sentence.constraints)},
        {"sentence": "normalized-reward"},
        t0,
    )
    return 0


def _cmd_check_etr(args) -> int:
    t0 = time.perf_counter()
    sentence = parse_smtlib(_read_text(args.sentence))
    assignment = parse_assignment(_read_text(args.assignment))
    result = check_assignment(sentence, assignment, args.tol)
    if result.ok:
        print("ok")
    else:
        print(f"violated: {result.violated} (by {result.residual:.4g})")
    _record(
        args,
        "check-etr",
        {"sentence": args.sentence, "assignment": args.assignment, "tol": args.tol},
        None,
        {"ok": result.ok, "violated": result.violated, "residual": result.residual},
        {},
        t0,
    )
    return 0 if result.ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cmpg",
        description="Solvers and generators for ergodic concurrent mean-payoff games",
    )
    parser.add_argument("--threads", type=int, default=None, help="worker thread bound (env CMPG_THREADS)")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("validate", help="parse a game file and print its stats")
    p.add_argument("game")
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("classify", help="ergodic decomposition and class verdict")
    p.add_argument("game")
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("solve", help="approximate the value by vi or si")
    p.add_argument("game")
    p.add_argument("--method", choices=("vi", "si"), required=True)
    p.add_argument("--epsilon", required=True)
    p.add_argument("--steps", type=int, default=None, help="explicit vi step count")
    p.add_argument(
        "--max-steps", type=int, default=DEFAULT_VI_STEP_CAP,
        help="cap on the vi step bound derived from epsilon",
    )
    p.add_argument("--q", type=int, default=None, help="si rounding grid override")
    p.add_argument("--anchor", default=None, help="si zero-potential state")
    p.add_argument("--node-budget", type=int, default=None, help="si branch-and-bound budget (env CMPG_NODE_BUDGET)")
    p.add_argument("--trace", action="store_true")
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("eval", help="long-run average of a fixed strategy profile")
    p.add_argument("game")
    p.add_argument("--s1", required=True)
    p.add_argument("--s2", required=True)
    p.add_argument("--state", default=None)
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("gen", help="emit a generated game in the game file format")
    p.add_argument("family", choices=("sqrt", "sqrtsum", "lower-bound"))
    p.add_argument("spec", nargs="*", help="sqrt: B; sqrtsum: N1,N2,...")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--eta", default=None)
    p.add_argument("--witness", default=None, help="write the skew-symmetry witness here")
    p.add_argument("--out", default="-")
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("reduce-ssg", help="embed an SSG into an ergodic mean-payoff game")
    p.add_argument("game")
    p.add_argument("state")
    p.add_argument("--alpha", type=int, required=True)
    p.add_argument("--beta", type=int, required=True)
    p.add_argument("--out", default="-")
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_reduce_ssg)

    p = sub.add_parser("export-etr", help="emit the value sentence as SMT-LIB 2")
    p.add_argument("game")
    p.add_argument("--lambda", dest="lam", default=None)
    p.add_argument("--state", default=None)
    p.add_argument("--out", default="-")
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_export_etr)

    p = sub.add_parser("check-etr", help="substitute an assignment into a sentence")
    p.add_argument("sentence")
    p.add_argument("assignment")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_check_etr)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 2
    os.environ.setdefault("CMPG_THREADS", str(_threads(args)))
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return 1
    except CmpgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
