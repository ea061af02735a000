"""Rendering of solver output: plain-text reports, tab-separated tables,
JSON documents, and chart files.

Everything destined for a terminal or a JSON document keeps numbers as
exact rational strings. The charts are the single place where values are
converted to floats, and they are written to files, never printed.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from .arena import UNREACHED, Arena, StrategyProfile
from .gamefile import GameDocument, _serialize_strategy, _subset_text, _text, serialize_document

CHECK_ORDER = ("nash", "secure", "sum_secure", "strongly_secure")


def rational(value) -> str:
    return _text(Fraction(value))


def verdict(holds: bool | None) -> str:
    if holds is True:
        return "pass"
    if holds is False:
        return "FAIL"
    return "undecided"


def state_text(state) -> str:
    # clocked unrollings use (state, period) pairs plus a one-slot sink
    if isinstance(state, tuple) and len(state) == 2 and isinstance(state[1], int):
        return f"{state_text(state[0])}@{state[1]}"
    if isinstance(state, tuple) and len(state) == 1:
        return str(state[0])
    return str(state)


# ---------------------------------------------------------------------------
# text blocks


def payoff_lines(values, heading: str, indent: str = "") -> list[str]:
    lines = [f"{indent}{heading}:"]
    for p in sorted(values):
        lines.append(f"{indent}  player {p}: {_text(values[p])}")
    return lines


def strategy_lines(arena: Arena, strategy, indent: str = "") -> list[str]:
    table = _serialize_strategy(arena, strategy)
    lines = [f"{indent}initial: {table['initial']}"]
    for node, choices in table["choices"].items():
        for state, action in choices.items():
            lines.append(f"{indent}at {node}: {state} -> {action}")
    for node, per_state in table["updates"].items():
        for state, per_action in per_state.items():
            for action, per_successor in per_action.items():
                for successor, nxt in per_successor.items():
                    lines.append(
                        f"{indent}via {node}: {state}/{action}/{successor} -> {nxt}"
                    )
    return lines


def profile_lines(arena: Arena, profile: StrategyProfile, indent: str = "") -> list[str]:
    lines = [f"{indent}profile:"]
    for p in sorted(profile.strategies):
        lines.append(f"{indent}  player {p}:")
        lines.extend(strategy_lines(arena, profile.strategies[p], indent + "    "))
    return lines


def check_lines(arena: Arena, report, indent: str = "") -> list[str]:
    lines = [f"{indent}checks:"]
    for name in CHECK_ORDER:
        if name not in report.checks:
            continue
        result = report.checks[name]
        lines.append(f"{indent}  {name}: {verdict(result.holds)}")
        if result.note:
            lines.append(f"{indent}    note: {result.note}")
        if result.witness is not None:
            w = result.witness
            lines.append(f"{indent}    witness deviation by player {w.player}:")
            lines.extend(payoff_lines(w.payoffs, "resulting payoffs", indent + "      "))
            lines.append(f"{indent}      strategy:")
            lines.extend(strategy_lines(arena, w.deviation, indent + "        "))
    return lines


def delta_lines(params, transformed=None, indent: str = "") -> list[str]:
    lines = [
        f"{indent}payoff range: " + " ".join(_text(v) for v in params.range_values),
        f"{indent}largest magnitude: {_text(params.magnitude)}",
        f"{indent}smallest gap: {_text(params.gap)}",
        f"{indent}delta: {_text(params.delta)}",
    ]
    if transformed is None:
        return lines
    lines.append(f"{indent}transformed value maps:")
    structure = transformed.structure
    for p in sorted(transformed.objectives):
        objective = transformed.objectives[p]
        lines.append(f"{indent}  player {p}:")
        if structure.labels:
            lines.append(f"{indent}    reached-set values:")
            for sub in sorted(objective.reach_value, key=lambda s: (len(s), sorted(s))):
                key = "{" + _subset_text(sub) + "}"
                lines.append(f"{indent}      {key}: {_text(objective.reach_value[sub])}")
        for k, (target, cap) in enumerate(structure.parts):
            owner = transformed.part_owners[k]
            where = ",".join(sorted(state_text(s) for s in target))
            lines.append(
                f"{indent}    hitting part {k} (owner: player {owner},"
                f" target: {where}, cap: {cap}):"
            )
            for outcome, value in _ordered_outcomes(objective.hit_values[k]):
                lines.append(f"{indent}      {outcome}: {_text(value)}")
    return lines


def _ordered_outcomes(value_map) -> list[tuple[str, Fraction]]:
    times = sorted(t for t in value_map if t is not UNREACHED)
    ordered = [(str(t), value_map[t]) for t in times]
    if UNREACHED in value_map:
        ordered.append(("inf", value_map[UNREACHED]))
    return ordered


def elimination_lines(trace, indent: str = "") -> list[str]:
    lines = [
        f"{indent}elimination levels: {len(trace.levels)}",
        f"{indent}removed actions: {len(trace.removed)}",
        f"{indent}level bound: {trace.round_bound()}",
    ]
    for level in trace.levels:
        lines.append(f"{indent}level {level.index}: {len(level.arena.states)} states")
        for p in sorted(level.arena.players):
            values = level.solutions[p].values
            cells = ", ".join(
                f"{state_text(s)} = {_text(values[s])}" for s in level.arena.states
            )
            lines.append(f"{indent}  player {p} values: {cells}")
        cut = [(s, a) for lv, s, a in trace.removed if lv == level.index]
        if cut:
            shown = ", ".join(f"{state_text(s)}/{a}" for s, a in cut)
            lines.append(f"{indent}  removed from this level: {shown}")
    gone = {s: lv for s, lv in trace.departure_level.items() if lv is not None}
    for s in sorted(gone, key=state_text):
        lines.append(f"{indent}state {state_text(s)} last present at level {gone[s]}")
    return lines


def oracle_lines(arena: Arena, result, indent: str = "") -> list[str]:
    lines = [
        f"{indent}strategy class: {result.strategy_class}",
        f"{indent}secure equilibria found: {len(result.entries)}",
    ]
    for n, entry in enumerate(result.entries, start=1):
        lines.append(f"{indent}equilibrium {n}:")
        lines.extend(payoff_lines(entry.payoffs, "payoffs", indent + "  "))
        lines.append(f"{indent}  joint choices:")
        for slot, action in entry.table.items():
            lines.append(f"{indent}    {_slot_text(slot)} -> {action}")
    return lines


def _slot_text(slot) -> str:
    # positional oracle slots are states; tree oracle slots are
    # (history, state) pairs with (state, action, successor) steps
    if isinstance(slot, tuple) and len(slot) == 2 and isinstance(slot[0], tuple):
        history, state = slot
        if not history:
            return f"start {state_text(state)}"
        steps = " ".join(f"{state_text(s)}/{a}" for s, a, _ in history)
        return f"after {steps} at {state_text(state)}"
    return state_text(slot)


# ---------------------------------------------------------------------------
# tab-separated rows: (section, key, value) triples


def payoff_rows(values, section: str) -> list[tuple[str, str, str]]:
    return [(section, f"player {p}", _text(values[p])) for p in sorted(values)]


def check_rows(report) -> list[tuple[str, str, str]]:
    rows = []
    for name in CHECK_ORDER:
        if name in report.checks:
            rows.append(("checks", name, verdict(report.checks[name].holds)))
    return rows


def delta_rows(params) -> list[tuple[str, str, str]]:
    return [
        ("delta", "range", " ".join(_text(v) for v in params.range_values)),
        ("delta", "magnitude", _text(params.magnitude)),
        ("delta", "gap", _text(params.gap)),
        ("delta", "delta", _text(params.delta)),
    ]


def elimination_rows(trace) -> list[tuple[str, str, str]]:
    rows = [
        ("elimination", "levels", str(len(trace.levels))),
        ("elimination", "removed", str(len(trace.removed))),
        ("elimination", "level bound", str(trace.round_bound())),
    ]
    for level in trace.levels:
        section = f"level {level.index} values"
        for p in sorted(level.arena.players):
            for s in level.arena.states:
                value = level.solutions[p].values[s]
                rows.append((section, f"player {p} at {state_text(s)}", _text(value)))
    for lv, s, a in trace.removed:
        rows.append(("removed actions", f"level {lv}", f"{state_text(s)}/{a}"))
    return rows


def oracle_rows(result) -> list[tuple[str, str, str]]:
    rows = [
        ("oracle", "strategy class", result.strategy_class),
        ("oracle", "secure equilibria", str(len(result.entries))),
    ]
    for n, entry in enumerate(result.entries, start=1):
        for p in sorted(entry.payoffs):
            rows.append((f"equilibrium {n}", f"player {p}", _text(entry.payoffs[p])))
    return rows


# ---------------------------------------------------------------------------
# JSON documents (the --format structured mode)


def payoff_json(values) -> dict:
    return {str(p): _text(values[p]) for p in sorted(values)}



def check_json(arena: Arena, report) -> dict:
    checks = {}
    for name in CHECK_ORDER:
        if name not in report.checks:
            continue
        result = report.checks[name]
        entry: dict = {"holds": result.holds}
        if result.note:
            entry["note"] = result.note
        if result.witness is not None:
            entry["witness"] = {
                "player": result.witness.player,
                "payoffs": payoff_json(result.witness.payoffs),
                "strategy": _serialize_strategy(arena, result.witness.deviation),
            }
        checks[name] = entry
    return checks


def delta_json(params, transformed=None) -> dict:
    body: dict = {
        "range": [_text(v) for v in params.range_values],
        "magnitude": _text(params.magnitude),
        "gap": _text(params.gap),
        "delta": _text(params.delta),
    }
    if transformed is None:
        return body
    structure = transformed.structure
    maps: dict = {}
    for p in sorted(transformed.objectives):
        objective = transformed.objectives[p]
        entry: dict = {}
        if structure.labels:
            entry["reachedSet"] = {
                _subset_text(sub): _text(value)
                for sub, value in sorted(
                    objective.reach_value.items(), key=lambda kv: (len(kv[0]), sorted(kv[0]))
                )
            }
        parts = []
        for k, (target, cap) in enumerate(structure.parts):
            parts.append(
                {
                    "owner": transformed.part_owners[k],
                    "target": sorted(state_text(s) for s in target),
                    "cap": cap,
                    "values": dict(_ordered_outcomes_text(objective.hit_values[k])),
                }
            )
        if parts:
            entry["parts"] = parts
        maps[str(p)] = entry
    body["valueMaps"] = maps
    return body


def _ordered_outcomes_text(value_map) -> list[tuple[str, str]]:
    return [(key, _text(value)) for key, value in _ordered_outcomes(value_map)]


def elimination_json(trace) -> dict:
    levels = []
    for level in trace.levels:
        levels.append(
            {
                "index": level.index,
                "states": [state_text(s) for s in level.arena.states],
                "values": {
                    str(p): {
                        state_text(s): _text(level.solutions[p].values[s])
                        for s in level.arena.states
                    }
                    for p in sorted(level.arena.players)
                },
                "removed": [
                    [state_text(s), a] for lv, s, a in trace.removed if lv == level.index
                ],
            }
        )
    departures = {
        state_text(s): lv for s, lv in trace.departure_level.items() if lv is not None
    }
    return {
        "levels": levels,
        "departures": departures,
        "levelBound": trace.round_bound(),
    }


def oracle_json(arena: Arena, result) -> dict:
    return {
        "strategyClass": result.strategy_class,
        "count": len(result.entries),
        "equilibria": [
            {
                "payoffs": payoff_json(entry.payoffs),
                "choices": [
                    {"at": _slot_text(slot), "action": action}
                    for slot, action in entry.table.items()
                ],
            }
            for entry in result.entries
        ],
    }


def render_json(body: dict) -> str:
    return json.dumps(body, indent=2)


# ---------------------------------------------------------------------------
# artifact files: text report, delimited table, charts, solved document


def write_artifacts(
    out_dir,
    lines: list[str],
    rows: list[tuple[str, str, str]],
    *,
    payoffs=None,
    guarantees=None,
    trace=None,
    document: GameDocument | None = None,
) -> list[Path]:
    """Write the report bundle into `out_dir` and return the paths written:
    report.txt, report.tsv, charts for whatever data is present, and the
    solved game document when one is supplied."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    text_path = out / "report.txt"
    text_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    written.append(text_path)

    tsv_path = out / "report.tsv"
    with open(tsv_path, "w", encoding="utf-8") as fh:
        fh.write("section\tkey\tvalue\n")
        for section, key, value in rows:
            fh.write(f"{section}\t{key}\t{value}\n")
    written.append(tsv_path)

    if payoffs:
        chart = out / "payoffs.png"
        write_payoff_figure(chart, payoffs, guarantees)
        written.append(chart)
    if trace is not None:
        chart = out / "elimination.png"
        write_elimination_figure(chart, trace)
        written.append(chart)
    if document is not None:
        doc_path = out / "solved.json"
        doc_path.write_text(serialize_document(document), encoding="utf-8")
        written.append(doc_path)
    return written


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def write_payoff_figure(path, payoffs, guarantees=None) -> None:
    """Bar chart of expected payoffs per player, with guarantee levels
    alongside when available."""
    plt = _pyplot()
    players = sorted(payoffs)
    xs = list(range(len(players)))
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    if guarantees:
        width = 0.38
        ax.bar(
            [x - width / 2 for x in xs],
            [float(payoffs[p]) for p in players],
            width,
            label="expected payoff",
        )
        ax.bar(
            [x + width / 2 for x in xs],
            [float(guarantees[p]) for p in players],
            width,
            label="guarantee",
        )
        ax.legend()
    else:
        ax.bar(xs, [float(payoffs[p]) for p in players], 0.6, label="expected payoff")
    ax.set_xticks(xs)
    ax.set_xticklabels([f"player {p}" for p in players])
    ax.axhline(0, color="black", linewidth=0.8)
    ax.set_ylabel("payoff at the start state")
    ax.set_title("equilibrium payoffs")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def write_elimination_figure(path, trace) -> None:
    """One panel per player: each state's zero-sum value across the
    elimination levels in which the state is still present."""
    plt = _pyplot()
    first = trace.levels[0].arena
    players = sorted(first.players)
    fig, axes = plt.subplots(
        len(players), 1, sharex=True, figsize=(6.4, 2.4 * len(players)), squeeze=False
    )
    for ax, p in zip(axes[:, 0], players):
        for s in first.states:
            xs = []
            ys = []
            for level in trace.levels:
                if s in level.solutions[p].values:
                    xs.append(level.index)
                    ys.append(float(level.solutions[p].values[s]))
            ax.plot(xs, ys, marker="o", linewidth=1.2, label=state_text(s))
        ax.set_ylabel(f"player {p}")
        ax.legend(fontsize="x-small", ncols=4, frameon=False)
    axes[-1, 0].set_xlabel("elimination level")
    fig.suptitle("state values across elimination levels")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
