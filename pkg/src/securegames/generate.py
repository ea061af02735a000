"""Seeded random games for property tests and the command line.

Identical configurations produce identical games: all sampling goes through
one random.Random stream seeded from the config, and every draw is an
integer draw, so document output is reproducible byte for byte.

Generated arenas keep two non-vacuity guarantees. Every state is reachable
from the start state (a random spanning tree is planted into the transition
supports before the remaining targets are sampled), and for reached-set
games at least one labelled state lies on a cycle, so plays exist that keep
a target in their limit behavior. Finite-range value maps are nudged, when
a sample happens to be constant, until the pooled payoff range has at least
two values; the payoff-skewing engine then always has a real gap to work
with.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .arena import (
    Arena,
    CappedHitting,
    Discounted,
    FiniteHorizon,
    ReachedSet,
    UNREACHED,
    default_cap,
)
from .gamefile import GameDocument

ONE = Fraction(1)

FAMILIES = ("discounted", "finite-horizon", "reached-set", "capped-hitting")


@dataclass(frozen=True)
class GeneratorConfig:
    """Knobs for one random game; equal configs generate equal games."""

    seed: int
    num_players: int = 2
    num_states: int = 5
    max_actions: int = 3
    family: str = "discounted"
    denominator_bound: int = 4
    deterministic: bool = False
    discount: Fraction = Fraction(1, 2)
    horizon: int = 3
    num_labels: int = 2
    cap: int | None = None


def _spanning_slots(rng: random.Random, states, actions) -> dict:
    """Pick one (state, action) slot per non-initial state whose transition
    will be forced to enter it; slots come from already-connected states, so
    the forced edges form a spanning tree."""
    forced = {}
    for i in range(1, len(states)):
        free = [
            (states[j], a)
            for j in range(i)
            for a in actions[states[j]]
            if (states[j], a) not in forced
        ]
        forced[free[rng.randrange(len(free))]] = states[i]
    return forced


def _random_arena(cfg: GeneratorConfig, rng: random.Random) -> Arena:
    states = tuple(f"s{i}" for i in range(cfg.num_states))
    players = tuple(range(1, cfg.num_players + 1))
    controller = {s: players[rng.randrange(len(players))] for s in states}
    actions = {
        s: tuple(f"a{k}" for k in range(rng.randrange(1, cfg.max_actions + 1)))
        for s in states
    }
    forced = _spanning_slots(rng, states, actions)
    transitions = {}
    for s in states:
        for a in actions[s]:
            main = forced.get((s, a), states[rng.randrange(len(states))])
            if cfg.deterministic or rng.randrange(3):
                transitions[(s, a)] = {main: ONE}
                continue
            other = states[rng.randrange(len(states))]
            if other == main:
                transitions[(s, a)] = {main: ONE}
                continue
            weight = Fraction(
                rng.randrange(1, cfg.denominator_bound), cfg.denominator_bound
            )
            transitions[(s, a)] = {main: weight, other: ONE - weight}
    return Arena(
        players=players,
        states=states,
        initial=states[0],
        controller=controller,
        actions=actions,
        transitions=transitions,
    )


def _random_reward(cfg: GeneratorConfig, rng: random.Random) -> Fraction:
    return Fraction(rng.randrange(-8, 9), rng.randrange(1, cfg.denominator_bound + 1))


def _sparse_rewards(cfg, rng, pairs) -> dict:
    return {key: _random_reward(cfg, rng) for key in pairs if rng.randrange(2)}


def _random_labels(cfg: GeneratorConfig, rng: random.Random, states) -> tuple:
    width = max(2, len(states) // 2 + 1)
    return tuple(
        frozenset(rng.sample(states, rng.randrange(1, width)))
        for _ in range(cfg.num_labels)
    )


def _subsets(count: int):
    out = [frozenset()]
    for i in range(1, count + 1):
        out.extend(sub | {i} for sub in list(out))
    return sorted(out, key=lambda sub: (len(sub), sorted(sub)))


def _on_cycle(arena: Arena, state) -> bool:
    seen = set()
    stack = [z for (s, _), dist in arena.transitions.items() if s == state for z in dist]
    while stack:
        s = stack.pop()
        if s == state:
            return True
        if s in seen:
            continue
        seen.add(s)
        for a in arena.actions[s]:
            stack.extend(arena.transitions[(s, a)])
    return False


def _ensure_labelled_cycle(arena: Arena, labels: tuple) -> tuple[Arena, tuple]:
    """Make sure some labelled state lies on a cycle. If none does, the last
    state gets a self-loop on its first action and joins the first label;
    its slots never carry spanning-tree edges, so reachability survives."""
    if any(_on_cycle(arena, s) for members in labels for s in members):
        return arena, labels
    loop_state = arena.states[-1]
    transitions = dict(arena.transitions)
    transitions[(loop_state, arena.actions[loop_state][0])] = {loop_state: ONE}
    patched = Arena(
        players=arena.players,
        states=arena.states,
        initial=arena.initial,
        controller=arena.controller,
        actions=arena.actions,
        transitions=transitions,
    )
    return patched, (labels[0] | {loop_state},) + labels[1:]


def _widen_constant_range(specs: dict) -> None:
    """Nudge player 1's value map if every value of every player is equal."""
    pooled = set()
    for spec in specs.values():
        pooled.update(spec.value_map.values())
    if len(pooled) >= 2:
        return
    first = specs[min(specs)]
    if isinstance(first, ReachedSet):
        full = frozenset(range(1, len(first.target_labels) + 1))
        first.value_map[full] += 1
    else:
        first.value_map[0] += 1


def generate_game(config: GeneratorConfig) -> tuple[Arena, dict]:
    """One seeded random arena plus a payoff spec per player."""
    if config.family not in FAMILIES:
        raise ValueError(f"unknown family {config.family!r}; pick one of {FAMILIES}")
    if config.num_players < 1 or config.num_states < 1 or config.max_actions < 1:
        raise ValueError("players, states, and actions counts must be positive")
    if not config.deterministic and config.denominator_bound < 2:
        raise ValueError("stochastic transitions need a denominator bound of at least 2")
    rng = random.Random(config.seed)
    arena = _random_arena(config, rng)
    pairs = [(s, a) for s in arena.states for a in arena.actions[s]]

    if config.family == "discounted":
        specs = {
            p: Discounted(rewards=_sparse_rewards(config, rng, pairs), discount=config.discount)
            for p in arena.players
        }
        return arena, specs

    if config.family == "finite-horizon":
        step_pairs = [(t, s, a) for t in range(config.horizon) for (s, a) in pairs]
        specs = {
            p: FiniteHorizon(
                horizon=config.horizon, step_rewards=_sparse_rewards(config, rng, step_pairs)
            )
            for p in arena.players
        }
        return arena, specs

    if config.family == "reached-set":
        labels = _random_labels(config, rng, arena.states)
        arena, labels = _ensure_labelled_cycle(arena, labels)
        subsets = _subsets(len(labels))
        specs = {
            p: ReachedSet(
                target_labels=labels,
                value_map={sub: Fraction(rng.randrange(-3, 4)) for sub in subsets},
            )
            for p in arena.players
        }
        _widen_constant_range(specs)
        return arena, specs

    cap = config.cap if config.cap is not None else default_cap(arena)
    width = max(2, len(arena.states) // 2 + 1)
    specs = {}
    for p in arena.players:
        target = frozenset(rng.sample(arena.states, rng.randrange(1, width)))
        draws = sorted((rng.randrange(-3, 6) for _ in range(cap + 2)), reverse=True)
        value_map = {t: Fraction(draws[t]) for t in range(cap + 1)}
        value_map[UNREACHED] = Fraction(draws[-1])
        specs[p] = CappedHitting(target=target, cap=cap, value_map=value_map)
    _widen_constant_range(specs)
    return arena, specs


def generate_document(config: GeneratorConfig) -> GameDocument:
    arena, specs = generate_game(config)
    return GameDocument(arena=arena, specs=specs, profile=None)
