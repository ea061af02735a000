"""Reading and writing whole games as JSON text documents.

A document carries the arena (players, states, initial, controller, actions,
transitions), one tagged payoff spec per player, and optionally a full
strategy profile. Every number is an exact rational written as a string like
"3/4" (or "2" for integers); nothing in a document is a float.

Profiles are stored as explicit transducers: named memory nodes, an initial
node, a choice table over (node, state), and an update table over
(node, state, action, successor). `serialize_document` exports any
finite-memory profile in that form by walking the reachable part of the
state-times-memory product, so constructed equilibria round-trip through
text just like hand-written positional profiles.

Serialization is canonical: parsing a document and serializing the result
always yields the same bytes, with entries ordered by the declared state and
action order. `normalize_document` exposes that as a one-step function.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction

from .arena import (
    UNREACHED,
    Arena,
    CappedHitting,
    Discounted,
    FiniteHorizon,
    FiniteMemoryStrategy,
    Player,
    ReachedSet,
    StrategyProfile,
    TableMemory,
    table_strategy,
    validate_arena,
    validate_payoffs,
)


class DocumentError(ValueError):
    """A document that cannot be understood: bad syntax (with line/column in
    the message) or structurally invalid content."""


@dataclass
class GameDocument:
    """Parsed document content: the arena, one payoff spec per player, and
    an optional strategy profile."""

    arena: Arena
    specs: dict[Player, object]
    profile: StrategyProfile | None = None


# ---------------------------------------------------------------------------
# reading


def _fail(message: str) -> None:
    raise DocumentError(message)


def _rational(text, where: str) -> Fraction:
    if isinstance(text, str):
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError):
            pass
    _fail(f"{where}: expected a rational string like \"3/4\", got {text!r}")


def _string(value, where: str) -> str:
    if not isinstance(value, str):
        _fail(f"{where}: expected a string, got {value!r}")
    return value


def _section(doc: dict, key: str, kind: type):
    if key not in doc:
        _fail(f"missing section {key!r}")
    if not isinstance(doc[key], kind):
        _fail(f"section {key!r} must be a {kind.__name__}")
    return doc[key]


def _parse_arena(doc: dict) -> Arena:
    players = tuple(_section(doc, "players", list))
    if not all(isinstance(p, int) for p in players):
        _fail("players must be integers")
    states = tuple(
        _string(s, "states") for s in _section(doc, "states", list)
    )
    initial = _string(doc.get("initial"), "initial")
    controller_doc = _section(doc, "controller", dict)
    actions_doc = _section(doc, "actions", dict)
    controller = {}
    actions = {}
    for s in states:
        if s not in controller_doc:
            _fail(f"controller missing for state {s!r}")
        controller[s] = controller_doc[s]
        if s not in actions_doc or not isinstance(actions_doc[s], list):
            _fail(f"actions missing for state {s!r}")
        actions[s] = tuple(_string(a, f"actions[{s!r}]") for a in actions_doc[s])
    transitions = {}
    for entry in _section(doc, "transitions", list):
        if not isinstance(entry, dict):
            _fail("each transition entry must be an object")
        s = _string(entry.get("state"), "transition state")
        a = _string(entry.get("action"), "transition action")
        support = entry.get("support")
        if not isinstance(support, list) or not support:
            _fail(f"transition ({s!r}, {a!r}) needs a nonempty support list")
        dist = {}
        for item in support:
            target = _string(item.get("target"), f"transition ({s!r}, {a!r}) target")
            dist[target] = _rational(item.get("prob"), f"transition ({s!r}, {a!r})")
        if (s, a) in transitions:
            _fail(f"duplicate transition entry for ({s!r}, {a!r})")
        transitions[(s, a)] = dist
    return Arena(
        players=players,
        states=states,
        initial=initial,
        controller=controller,
        actions=actions,
        transitions=transitions,
    )


def _subset_key(key: str, label_count: int, who: str) -> frozenset[int]:
    if key == "":
        return frozenset()
    try:
        indices = frozenset(int(piece) for piece in key.split(","))
    except ValueError:
        indices = None
    if not indices or not all(1 <= i <= label_count for i in indices):
        _fail(f"{who}: bad label subset key {key!r}")
    return indices


def _parse_spec(p: Player, body, arena: Arena):
    who = f"payoffs of player {p!r}"
    if not isinstance(body, dict):
        _fail(f"{who}: expected an object")
    family = body.get("family")
    if family == "discounted":
        rewards = {}
        for item in body.get("rewards", ()):
            key = (item.get("state"), item.get("action"))
            rewards[key] = _rational(item.get("value"), who)
        return Discounted(rewards=rewards, discount=_rational(body.get("discount"), who))
    if family == "finite-horizon":
        horizon = body.get("horizon")
        if not isinstance(horizon, int):
            _fail(f"{who}: horizon must be an integer")
        rewards = {}
        for item in body.get("rewards", ()):
            period = item.get("period")
            if not isinstance(period, int):
                _fail(f"{who}: reward period must be an integer")
            rewards[(period, item.get("state"), item.get("action"))] = _rational(
                item.get("value"), who
            )
        return FiniteHorizon(horizon=horizon, step_rewards=rewards)
    if family == "reached-set":
        labels_doc = body.get("labels")
        if not isinstance(labels_doc, list):
            _fail(f"{who}: labels must be a list of state lists")
        labels = tuple(frozenset(members) for members in labels_doc)
        values_doc = _section(body, "values", dict)
        value_map = {
            _subset_key(key, len(labels), who): _rational(text, who)
            for key, text in values_doc.items()
        }
        return ReachedSet(target_labels=labels, value_map=value_map)
    if family == "capped-hitting":
        target_doc = body.get("target")
        if not isinstance(target_doc, list):
            _fail(f"{who}: target must be a list of states")
        cap = body.get("cap")
        if not isinstance(cap, int):
            _fail(f"{who}: cap must be an integer")
        values_doc = body.get("values")
        if not isinstance(values_doc, dict):
            _fail(f"{who}: missing values")
        value_map = {}
        for key, text in values_doc.items():
            if key == "inf":
                outcome = UNREACHED
            elif key.isdigit():
                outcome = int(key)
            else:
                _fail(f"{who}: bad hitting-time key {key!r}")
            value_map[outcome] = _rational(text, who)
        return CappedHitting(target=frozenset(target_doc), cap=cap, value_map=value_map)
    _fail(f"{who}: unknown payoff family {family!r}")


def _parse_strategy(p: Player, body, arena: Arena) -> FiniteMemoryStrategy:
    who = f"profile of player {p!r}"
    if not isinstance(body, dict):
        _fail(f"{who}: expected an object")
    initial = _string(body.get("initial"), f"{who} initial node")
    choices_doc = body.get("choices")
    updates_doc = body.get("updates")
    if not isinstance(choices_doc, dict) or not isinstance(updates_doc, dict):
        _fail(f"{who}: needs choice and update tables")
    choices = {}
    for node, row in choices_doc.items():
        if not isinstance(row, dict):
            _fail(f"{who}: choice row of node {node!r} must be an object")
        for s, a in row.items():
            choices[(node, s)] = a
    updates = {}
    for node, by_state in updates_doc.items():
        if not isinstance(by_state, dict):
            _fail(f"{who}: update rows must be nested objects")
        for s, by_action in by_state.items():
            if not isinstance(by_action, dict):
                _fail(f"{who}: update rows must be nested objects")
            for a, by_successor in by_action.items():
                if not isinstance(by_successor, dict):
                    _fail(f"{who}: update rows must be nested objects")
                for z, node2 in by_successor.items():
                    updates[(node, s, a, z)] = _string(node2, f"{who} update target")
    memory = TableMemory(initial_value=initial, updates=updates)
    return table_strategy(p, memory, choices)


def parse_document(text: str) -> GameDocument:
    """Parse and validate a JSON game document.

    Syntax errors surface as DocumentError with the offending line and
    column; semantic problems (bad arena, inconsistent payoffs) carry the
    validator's explanation."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise DocumentError(
            f"syntax error at line {err.lineno} column {err.colno}: {err.msg}"
        ) from None
    if not isinstance(doc, dict):
        _fail("document must be a JSON object")
    arena = _parse_arena(doc)
    report = validate_arena(arena)
    if not report.ok:
        _fail("invalid arena: " + "; ".join(report.violations))
    payoffs_doc = _section(doc, "payoffs", dict)
    specs = {}
    for p in arena.players:
        if str(p) not in payoffs_doc:
            _fail(f"missing payoffs for player {p!r}")
        specs[p] = _parse_spec(p, payoffs_doc[str(p)], arena)
    report = validate_payoffs(arena, specs)
    if not report.ok:
        _fail("invalid payoffs: " + "; ".join(report.violations))
    profile = None
    if "profile" in doc:
        profile_doc = _section(doc, "profile", dict)
        strategies = {}
        for p in arena.players:
            if str(p) not in profile_doc:
                _fail(f"profile is missing player {p!r}")
            strategies[p] = _parse_strategy(p, profile_doc[str(p)], arena)
        profile = StrategyProfile(strategies)
    return GameDocument(arena=arena, specs=specs, profile=profile)


# ---------------------------------------------------------------------------
# writing


def _text(q: Fraction) -> str:
    return str(q)


def _subset_text(subset: frozenset[int]) -> str:
    return ",".join(str(i) for i in sorted(subset))


def _ordered_states(arena: Arena, members) -> list:
    index = {s: k for k, s in enumerate(arena.states)}
    return sorted(members, key=index.__getitem__)


def _serialize_spec(spec, arena: Arena) -> dict:
    if isinstance(spec, Discounted):
        rows = [
            {"state": s, "action": a, "value": _text(v)}
            for (s, a), v in spec.rewards.items()
        ]
        rows.sort(key=lambda r: (arena.states.index(r["state"]), r["action"]))
        return {"family": "discounted", "discount": _text(spec.discount), "rewards": rows}
    if isinstance(spec, FiniteHorizon):
        rows = [
            {"period": t, "state": s, "action": a, "value": _text(v)}
            for (t, s, a), v in spec.step_rewards.items()
        ]
        rows.sort(key=lambda r: (r["period"], arena.states.index(r["state"]), r["action"]))
        return {"family": "finite-horizon", "horizon": spec.horizon, "rewards": rows}
    if isinstance(spec, ReachedSet):
        count = len(spec.target_labels)
        ordered_subsets = [
            frozenset(combo)
            for size in range(count + 1)
            for combo in itertools.combinations(range(1, count + 1), size)
        ]
        return {
            "family": "reached-set",
            "labels": [_ordered_states(arena, members) for members in spec.target_labels],
            "values": {
                _subset_text(sub): _text(spec.value_map[sub]) for sub in ordered_subsets
            },
        }
    if isinstance(spec, CappedHitting):
        values = {str(t): _text(spec.value_map[t]) for t in range(spec.cap + 1)}
        values["inf"] = _text(spec.value_map[UNREACHED])
        return {
            "family": "capped-hitting",
            "target": _ordered_states(arena, spec.target),
            "cap": spec.cap,
            "values": values,
        }
    raise DocumentError(f"cannot serialize payoff spec {type(spec).__name__}")


def _serialize_strategy(arena: Arena, strategy: FiniteMemoryStrategy) -> dict:
    """Walk the reachable (state, memory) product and export the strategy as
    named memory nodes with explicit choice and update tables."""
    names: dict = {}

    def name_of(value):
        if value not in names:
            names[value] = f"m{len(names)}"
        return names[value]

    start = (arena.initial, strategy.memory.initial(arena.initial))
    name_of(start[1])
    seen = {start}
    queue = [start]
    choices: dict = {}
    updates: dict = {}
    while queue:
        s, mem = queue.pop(0)
        node = name_of(mem)
        if arena.controller[s] == strategy.owner:
            choices.setdefault(node, {})[s] = strategy.choice(mem, s)
        for a in arena.actions[s]:
            for z in arena.transitions[(s, a)]:
                mem2 = strategy.memory.update(mem, s, a, z)
                updates.setdefault(node, {}).setdefault(s, {}).setdefault(a, {})[z] = name_of(mem2)
                if (z, mem2) not in seen:
                    seen.add((z, mem2))
                    queue.append((z, mem2))

    def ordered_rows(table):
        state_index = {s: k for k, s in enumerate(arena.states)}
        return {
            node: {s: table[node][s] for s in sorted(table[node], key=state_index.__getitem__)}
            for node in sorted(table, key=lambda n: int(n[1:]))
        }

    return {
        "initial": name_of(start[1]),
        "choices": ordered_rows(choices),
        "updates": ordered_rows(updates),
    }


def serialize_document(doc: GameDocument) -> str:
    """Render a document canonically; see the module docstring."""
    arena = doc.arena
    out = {
        "players": list(arena.players),
        "states": list(arena.states),
        "initial": arena.initial,
        "controller": {s: arena.controller[s] for s in arena.states},
        "actions": {s: list(arena.actions[s]) for s in arena.states},
        "transitions": [
            {
                "state": s,
                "action": a,
                "support": [
                    {"target": z, "prob": _text(q)}
                    for z, q in sorted(
                        arena.transitions[(s, a)].items(),
                        key=lambda item: arena.states.index(item[0]),
                    )
                ],
            }
            for s in arena.states
            for a in arena.actions[s]
        ],
        "payoffs": {str(p): _serialize_spec(doc.specs[p], arena) for p in arena.players},
    }
    if doc.profile is not None:
        out["profile"] = {
            str(p): _serialize_strategy(arena, doc.profile.strategy(p))
            for p in arena.players
        }
    return json.dumps(out, indent=2) + "\n"


def normalize_document(text: str) -> str:
    """Parse then re-serialize: the canonical form of any valid document."""
    return serialize_document(parse_document(text))
