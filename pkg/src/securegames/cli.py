"""Command-line front end.

Subcommands: `solve` constructs a secure equilibrium for a game document,
`verify` re-checks a document's bundled profile, `eliminate` dumps the
iterated-elimination trace, `transform` prints the payoff skewing, `oracle`
enumerates the secure equilibria of a finite strategy class, and `gen`
writes a seeded random game document.

Exit codes: 0 on success, 1 when a constructed or supplied profile fails
verification, 2 on bad input or an unsupported request. Default output is
plain text with exact rationals; `--format structured` emits JSON instead.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import report as render
from .arena import CappedHitting, Discounted, FiniteHorizon, ReachedSet
from .construct import _expanded_rewards, clocked_expansion, construct_secure_equilibrium
from .eliminate import eliminate_fixpoint
from .gamefile import DocumentError, GameDocument, parse_document, serialize_document
from .generate import FAMILIES, GeneratorConfig, generate_document
from .transform import compute_delta, construct_secure_equilibrium_det, transform_payoffs
from .verify import oracle_enumerate, verify_profile
from .zerosum import solve_discounted, solve_total_dag

FINITE_RANGE = (ReachedSet, CappedHitting)
GATE_CHECKS = ("nash", "sum_secure")


class CommandError(Exception):
    """Bad input or an unsupported request; the process exits with 2."""


def _load(path: str) -> GameDocument:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise CommandError(f"cannot read {path}: {err}") from err
    return parse_document(text)


def _families(doc: GameDocument) -> set[type]:
    return {type(doc.specs[p]) for p in doc.arena.players}


def _route(doc: GameDocument, requested: str) -> str:
    if requested != "auto":
        return requested
    families = _families(doc)
    if families <= {Discounted} or families <= {FiniteHorizon}:
        return "thm1"
    if families <= set(FINITE_RANGE):
        if not doc.arena.is_deterministic:
            raise CommandError(
                "reached-set and capped-hitting payoffs need deterministic"
                " transitions; no engine applies"
            )
        return "thm2"
    raise CommandError("no engine covers this mix of payoff families")


def _parse_weights(text: str) -> dict[int, Fraction]:
    weights = {}
    for part in text.split(","):
        name, sep, value = part.partition("=")
        if not sep:
            raise CommandError(f"weights look like PLAYER=VALUE, got {part!r}")
        try:
            weights[int(name)] = Fraction(value)
        except (ValueError, ZeroDivisionError) as err:
            raise CommandError(f"bad weight entry {part!r}: {err}") from err
    return weights


def _emit(args, lines: list[str], body: dict) -> None:
    if args.format == "structured":
        print(render.render_json(body))
    else:
        print("\n".join(lines))


def _gate_passes(report) -> bool:
    return all(
        name in report.checks and report.checks[name].holds is True for name in GATE_CHECKS
    )


# ---------------------------------------------------------------------------
# solve


def _cmd_solve(args) -> int:
    doc = _load(args.file)
    engine = _route(doc, args.engine)
    weights = _parse_weights(args.weights) if args.weights else None
    if engine == "thm2" and weights is not None:
        raise CommandError("--weights only applies to the elimination engine (thm1)")

    try:
        if engine == "thm2":
            result = construct_secure_equilibrium_det(doc.arena, doc.specs)
        else:
            result = construct_secure_equilibrium(doc.arena, doc.specs, weights)
    except AssertionError as err:
        print(f"verification failure: {err}", file=sys.stderr)
        return 1

    arena = doc.arena
    solved = GameDocument(arena=arena, specs=doc.specs, profile=result.profile)
    flavor = {"thm1": "iterated elimination", "thm2": "payoff skewing"}[engine]
    lines = [f"engine: {engine} ({flavor})"]
    rows = [("engine", "name", engine)]
    body: dict = {"command": "solve", "engine": engine}
    trace = getattr(result, "trace", None)

    if engine == "thm2":
        if result.params is not None:
            lines.extend(render.delta_lines(result.params))
            rows.extend(render.delta_rows(result.params))
            body["delta"] = render.delta_json(result.params)
        else:
            lines.append("every play pays one constant; any profile is secure")
    else:
        lines.append(
            f"elimination levels: {len(trace.levels)},"
            f" removed actions: {len(trace.removed)}"
        )
        lines.append(f"weighted minimum objective: {render.rational(result.base_objective)}")
        rows.append(("elimination", "levels", str(len(trace.levels))))
        rows.append(("elimination", "removed", str(len(trace.removed))))
        body["elimination"] = {
            "levels": len(trace.levels),
            "removed": len(trace.removed),
        }

    lines.extend(render.payoff_lines(result.payoffs, "payoffs"))
    lines.extend(render.payoff_lines(result.guarantees, "guarantees"))
    lines.extend(render.check_lines(arena, result.report))
    lines.extend(render.profile_lines(arena, result.profile))
    rows.extend(render.payoff_rows(result.payoffs, "payoffs"))
    rows.extend(render.payoff_rows(result.guarantees, "guarantees"))
    rows.extend(render.check_rows(result.report))
    body["payoffs"] = render.payoff_json(result.payoffs)
    body["guarantees"] = render.payoff_json(result.guarantees)
    body["checks"] = render.check_json(arena, result.report)
    body["document"] = json.loads(serialize_document(solved))

    _emit(args, lines, body)
    if args.out:
        render.write_artifacts(
            args.out,
            lines,
            rows,
            payoffs=result.payoffs,
            guarantees=result.guarantees,
            trace=trace,
            document=solved,
        )
    return 0 if _gate_passes(result.report) else 1


# ---------------------------------------------------------------------------
# verify


def _cmd_verify(args) -> int:
    doc = _load(args.file)
    if doc.profile is None:
        raise CommandError("document has no profile section to verify")
    report = verify_profile(doc.arena, doc.specs, doc.profile)

    lines = render.payoff_lines(report.payoffs, "payoffs")
    lines.extend(render.check_lines(doc.arena, report))
    rows = render.payoff_rows(report.payoffs, "payoffs") + render.check_rows(report)
    body = {
        "command": "verify",
        "payoffs": render.payoff_json(report.payoffs),
        "checks": render.check_json(doc.arena, report),
    }
    _emit(args, lines, body)
    if args.out:
        render.write_artifacts(args.out, lines, rows, payoffs=report.payoffs)
    return 0 if _gate_passes(report) else 1


# ---------------------------------------------------------------------------
# eliminate


def _elimination_trace(doc: GameDocument):
    families = _families(doc)
    if families == {Discounted}:
        specs = doc.specs
        beta = specs[doc.arena.players[0]].discount
        tables = {p: specs[p].rewards for p in doc.arena.players}

        def views(work):
            return {
                p: solve_discounted(work, tables[p], beta, maximizer=p)
                for p in work.players
            }

        return eliminate_fixpoint(doc.arena, views)
    if families == {FiniteHorizon}:
        horizon = doc.specs[doc.arena.players[0]].horizon
        expansion = clocked_expansion(doc.arena, horizon)
        tables = {p: _expanded_rewards(doc.specs[p]) for p in doc.arena.players}

        def views(work):
            return {
                p: solve_total_dag(work, tables[p], maximizer=p) for p in work.players
            }

        return eliminate_fixpoint(expansion, views)
    raise CommandError("elimination applies to discounted or finite-horizon payoffs")


def _cmd_eliminate(args) -> int:
    doc = _load(args.file)
    trace = _elimination_trace(doc)
    lines = render.elimination_lines(trace)
    rows = render.elimination_rows(trace)
    body = {"command": "eliminate", **render.elimination_json(trace)}
    _emit(args, lines, body)
    if args.out:
        render.write_artifacts(args.out, lines, rows, trace=trace)
    return 0


# ---------------------------------------------------------------------------
# transform


def _cmd_transform(args) -> int:
    doc = _load(args.file)
    if not _families(doc) <= set(FINITE_RANGE):
        raise CommandError(
            "the payoff skewing applies to reached-set and capped-hitting payoffs"
        )
    params = compute_delta(doc.specs)
    transformed = transform_payoffs(doc.specs, params)
    lines = render.delta_lines(params, transformed)
    rows = render.delta_rows(params)
    body = {"command": "transform", **render.delta_json(params, transformed)}
    _emit(args, lines, body)
    if args.out:
        render.write_artifacts(args.out, lines, rows)
    return 0


# ---------------------------------------------------------------------------
# oracle


def _cmd_oracle(args) -> int:
    doc = _load(args.file)
    result = oracle_enumerate(doc.arena, doc.specs, max_profiles=args.max_oracle_profiles)
    lines = render.oracle_lines(doc.arena, result)
    rows = render.oracle_rows(result)
    body = {"command": "oracle", **render.oracle_json(doc.arena, result)}
    _emit(args, lines, body)
    if args.out:
        render.write_artifacts(args.out, lines, rows)
    return 0


# ---------------------------------------------------------------------------
# gen


def _cmd_gen(args) -> int:
    config = GeneratorConfig(
        seed=args.seed,
        num_players=args.players,
        num_states=args.states,
        max_actions=args.max_actions,
        family=args.family,
        denominator_bound=args.denominator_bound,
        deterministic=args.deterministic,
        discount=Fraction(args.discount),
        horizon=args.horizon,
        num_labels=args.labels,
        cap=args.cap,
    )
    text = serialize_document(generate_document(config))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    return 0


# ---------------------------------------------------------------------------
# parser plumbing


def _add_io_flags(sub, out_help: str) -> None:
    sub.add_argument("file", help="game document to read")
    sub.add_argument(
        "--format",
        choices=("text", "structured"),
        default="text",
        help="plain text (default) or a JSON report",
    )
    sub.add_argument("--out", help=out_help)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="securegames",
        description="Construct and verify secure equilibria in turn-based"
        " games on finite graphs, with exact rational arithmetic.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser(
        "solve", help="construct a secure equilibrium and re-verify it"
    )
    _add_io_flags(solve, "directory for report files, charts, and the solved document")
    solve.add_argument(
        "--engine",
        choices=("auto", "thm1", "thm2"),
        default="auto",
        help="thm1 eliminates controller-suboptimal actions and adds"
        " punishment; thm2 skews finite-range payoffs; auto picks by family",
    )
    solve.add_argument(
        "--weights",
        help="comma-separated PLAYER=VALUE positive weights for the"
        " minimized payoff sum (thm1 only)",
    )
    solve.set_defaults(run=_cmd_solve)

    verify = commands.add_parser(
        "verify", help="re-check the profile bundled with a game document"
    )
    _add_io_flags(verify, "directory for report files and charts")
    verify.set_defaults(run=_cmd_verify)

    eliminate = commands.add_parser(
        "eliminate", help="dump the iterated-elimination trace of a game"
    )
    _add_io_flags(eliminate, "directory for report files and charts")
    eliminate.set_defaults(run=_cmd_eliminate)

    transform = commands.add_parser(
        "transform", help="print the payoff skewing for finite-range games"
    )
    _add_io_flags(transform, "directory for report files")
    transform.set_defaults(run=_cmd_transform)

    oracle = commands.add_parser(
        "oracle", help="enumerate every secure equilibrium of a finite class"
    )
    _add_io_flags(oracle, "directory for report files")
    oracle.add_argument(
        "--max-oracle-profiles",
        type=int,
        default=1_000_000,
        help="refuse classes with more joint profiles than this",
    )
    oracle.set_defaults(run=_cmd_oracle)

    gen = commands.add_parser("gen", help="write a seeded random game document")
    gen.add_argument("--seed", type=int, required=True, help="64-bit generator seed")
    gen.add_argument("--players", type=int, default=2)
    gen.add_argument("--states", type=int, default=5)
    gen.add_argument("--max-actions", type=int, default=3)
    gen.add_argument("--family", choices=FAMILIES, default="discounted")
    gen.add_argument(
        "--denominator-bound",
        type=int,
        default=4,
        help="largest denominator for rewards and transition probabilities",
    )
    gen.add_argument(
        "--deterministic", action="store_true", help="single-target transitions only"
    )
    gen.add_argument("--discount", default="1/2", help="shared discount factor")
    gen.add_argument("--horizon", type=int, default=3, help="shared horizon length")
    gen.add_argument("--labels", type=int, default=2, help="number of target labels")
    gen.add_argument("--cap", type=int, default=None, help="hitting-time cap")
    gen.add_argument("--out", help="file to write (default: standard output)")
    gen.set_defaults(run=_cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.run(args)
    except CommandError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (DocumentError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
