"""Secure-profile construction for discounted and horizon-bounded payoffs.

The recipe: repeatedly eliminate actions that are not optimal for their
controller (every player's guaranteed value only rises), then pick, inside
the fixpoint arena, the joint plan that minimizes the weighted sum of all
payoffs. Everyone follows that plan; the first player to deviate gets
punished by all others with coalition-optimal strategies, and the punishment
hardens (switches from fixpoint-arena-optimal to full-arena-optimal) the
moment the deviator steps outside the fixpoint arena. The resulting profile
is a Nash equilibrium in which any payoff-preserving deviation by one player
can only raise the weighted sum of what the others get.

Finite-horizon games run the same machinery on a clocked unrolling of the
arena and carry the resulting strategies back via a clock-tracking memory.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .arena import (
    ONE,
    ZERO,
    Action,
    Arena,
    Discounted,
    FiniteHorizon,
    FiniteMemoryStrategy,
    Player,
    State,
    StrategyProfile,
    UnitMemory,
    expected_payoffs,
    positional_strategy,
    validate_arena,
    validate_payoffs,
)
from .eliminate import EliminationTrace, eliminate_fixpoint
from .zerosum import solve_discounted, solve_total_dag

#: Absorbing sink appended to a clocked unrolling once the horizon is spent.
HORIZON_END = ("end-of-horizon",)
IDLE = "idle"


class LeftRestrictedFlag:
    """Boolean memory: has the play ever stepped outside a restricted arena.

    Membership of the current state alone cannot answer that on a graph (a
    state inside the restriction can be re-entered after leaving), so the
    flag latches on the first action taken outside the allowed sets."""

    def __init__(self, allowed_actions: Mapping[State, tuple], allowed_states: frozenset):
        self.allowed_actions = allowed_actions
        self.allowed_states = allowed_states

    def initial(self, state: State):
        return state not in self.allowed_states

    def update(self, memory, state, action, successor):
        if memory:
            return True
        if state not in self.allowed_states:
            return True
        if action not in self.allowed_actions[state]:
            return True
        return successor not in self.allowed_states


class FirstDeviatorMemory:
    """Product memory (base value, first deviator label).

    The label is None while every move so far matched the prescription; it
    latches to the controller of the first state where someone played
    something else, and never changes afterwards. The prescription may read
    the base memory, which updates alongside."""

    def __init__(self, base, prescription, controller: Mapping[State, Player]):
        self.base = base
        self.prescription = prescription
        self.controller = controller

    def initial(self, state: State):
        return (self.base.initial(state), None)

    def update(self, memory, state, action, successor):
        base_mem, label = memory
        if label is None and self.prescription(base_mem, state) != action:
            label = self.controller[state]
        return (self.base.update(base_mem, state, action, successor), label)


@dataclass
class SecureConstruction:
    """Everything the construction produced: the profile itself, its exact
    payoffs, the per-player guarantee levels (as full value tables before and
    after elimination, plus their values at the start state), the elimination
    trace, and a checker report re-verifying the equilibrium properties."""

    arena: Arena
    specs: dict[Player, object]
    weights: dict[Player, Fraction]
    engine: str
    profile: StrategyProfile
    payoffs: dict[Player, Fraction]
    guarantees: dict[Player, Fraction]
    initial_values: dict[Player, dict[State, Fraction]]
    final_values: dict[Player, dict[State, Fraction]]
    trace: EliminationTrace
    base_table: dict[State, Action]
    base_objective: Fraction
    report: object


def _require_valid(arena: Arena, specs: Mapping[Player, object]) -> None:
    report = validate_arena(arena)
    if not report.ok:
        raise ValueError("invalid arena: " + "; ".join(report.violations))
    report = validate_payoffs(arena, specs)
    if not report.ok:
        raise ValueError("invalid payoffs: " + "; ".join(report.violations))


def _normalize_weights(arena: Arena, weights, allow_zero=False) -> dict[Player, Fraction]:
    if weights is None:
        return {p: ONE for p in arena.players}
    out = {}
    for p in arena.players:
        if p not in weights:
            raise ValueError(f"missing weight for player {p!r}")
        w = Fraction(weights[p])
        if w < 0 or (w == 0 and not allow_zero):
            bound = "nonnegative" if allow_zero else "positive"
            raise ValueError(f"weight for player {p!r} must be {bound}")
        out[p] = w
    return out


def _combined_rewards(arena: Arena, specs, weights) -> dict[tuple[State, Action], Fraction]:
    combined: dict[tuple[State, Action], Fraction] = {}
    for s in arena.states:
        for a in arena.actions[s]:
            total = sum((weights[i] * specs[i].reward(s, a) for i in arena.players), ZERO)
            if total:
                combined[(s, a)] = total
    return combined


@dataclass
class WeightedMinimumPlan:
    """A joint positional plan minimizing the weighted sum of all payoffs,
    with the per-player payoffs it produces and the minimal weighted value
    from every state."""

    weights: dict[Player, Fraction]
    table: dict[State, Action]
    payoffs: dict[Player, Fraction]
    objective: Fraction
    values: dict[State, Fraction]


def minimize_sum_profile(arena: Arena, specs, weights=None) -> WeightedMinimumPlan:
    """Minimize the weighted sum of every player's discounted payoff over all
    joint plans, treating the whole arena as one cooperating controller.

    Ties are broken by action declaration order at each state. Weights must
    be nonnegative and default to all ones."""
    _require_valid(arena, specs)
    if {type(specs[p]) for p in arena.players} != {Discounted}:
        raise ValueError("weighted-minimum plans need all-discounted payoffs")
    weight_map = _normalize_weights(arena, weights, allow_zero=True)
    beta = specs[arena.players[0]].discount
    combined = _combined_rewards(arena, specs, weight_map)
    base = solve_discounted(arena, combined, beta, maximizer=None)
    table = dict(base.policy)
    profile = StrategyProfile(
        {
            p: positional_strategy(
                p, {s: table[s] for s in arena.states if arena.controller[s] == p}
            )
            for p in arena.players
        }
    )
    payoffs = expected_payoffs(arena, specs, profile)
    objective = base.values[arena.initial]
    assert sum((weight_map[p] * payoffs[p] for p in arena.players), ZERO) == objective
    return WeightedMinimumPlan(
        weights=weight_map,
        table=table,
        payoffs=payoffs,
        objective=objective,
        values=dict(base.values),
    )


def build_label_automaton(arena: Arena, table: Mapping[State, Action]) -> FirstDeviatorMemory:
    """Memory whose value ((), label) records the first player who moved off
    the positional plan `table`; the label is None until then and absorbing
    afterwards."""
    plan = dict(table)
    return FirstDeviatorMemory(
        base=UnitMemory(),
        prescription=lambda _mem, state: plan[state],
        controller=arena.controller,
    )


def _punishment_profile(work_arena: Arena, trace: EliminationTrace, base_table):
    """Memory and per-player choice functions of the punished profile on the
    arena the elimination ran on."""
    final = trace.final
    final_states = frozenset(final.arena.states)
    final_actions = {s: final.arena.actions[s] for s in final.arena.states}
    flag = LeftRestrictedFlag(final_actions, final_states)
    memory = FirstDeviatorMemory(
        base=flag,
        prescription=lambda base_mem, state: base_table[state],
        controller=work_arena.controller,
    )
    full = trace.levels[0].solutions
    restricted = final.solutions

    def make_choice(j: Player):
        def choose(mem, state):
            left, label = mem
            if label is None:
                return base_table[state]
            if label == j:
                # the punished player; any action does, stay inside the
                # fixpoint arena while the play has not left it
                if not left and state in final_states:
                    return final_actions[state][0]
                return work_arena.actions[state][0]
            if not left and state in final_states:
                return restricted[label].policy[state]
            return full[label].policy[state]

        return choose

    return memory, {j: make_choice(j) for j in work_arena.players}


def assemble_secure_profile(
    arena: Arena, trace: EliminationTrace, base_table: Mapping[State, Action]
) -> StrategyProfile:
    """Combine a joint base plan with the punishment strategies recorded in an
    elimination trace: everyone follows the plan until someone leaves it, then
    the others play their coalition strategies against the first deviator."""
    fixpoint_states = set(trace.final.arena.states)
    for s, a in base_table.items():
        if s not in fixpoint_states or a not in trace.final.arena.actions[s]:
            raise ValueError(f"base plan entry ({s!r}, {a!r}) is outside the fixpoint arena")
    memory, choices = _punishment_profile(arena, trace, dict(base_table))
    return StrategyProfile(
        {j: FiniteMemoryStrategy(owner=j, memory=memory, choice=choices[j]) for j in arena.players}
    )


def construct_secure_equilibrium(
    arena: Arena, specs: Mapping[Player, object], weights=None
) -> SecureConstruction:
    """Build a profile that is a Nash equilibrium and under which no player
    can keep their own payoff while lowering the weighted sum of the others'.

    Handles discounted payoffs (shared discount factor) and horizon-bounded
    payoffs (shared horizon). Reached-set and capped-hitting payoffs go
    through the deterministic payoff-transformation engine instead."""
    _require_valid(arena, specs)
    weight_map = _normalize_weights(arena, weights)
    families = {type(specs[p]) for p in arena.players}
    if families == {Discounted}:
        return _construct_discounted(arena, specs, weight_map)
    if families == {FiniteHorizon}:
        return _construct_finite_horizon(arena, specs, weight_map)
    raise ValueError(
        "elimination-based construction needs all-discounted or all-finite-horizon payoffs"
    )


def _check_report(arena, specs, profile):
    # imported here: the checker module builds on the unrolling helpers below
    from .verify import verify_profile

    report = verify_profile(arena, specs, profile)
    for name in ("nash", "sum_secure"):
        if report.checks[name].holds is not True:
            raise AssertionError(f"constructed profile failed the {name} check")
    return report


def _value_tables(level, players):
    return {i: dict(level.solutions[i].values) for i in players}


def _construct_discounted(arena, specs, weights) -> SecureConstruction:
    beta = specs[arena.players[0]].discount
    reward_tables = {i: specs[i].rewards for i in arena.players}

    def views(work: Arena):
        return {
            i: solve_discounted(work, reward_tables[i], beta, maximizer=i)
            for i in work.players
        }

    trace = eliminate_fixpoint(arena, views)
    final = trace.final
    combined = _combined_rewards(final.arena, specs, weights)
    base = solve_discounted(final.arena, combined, beta, maximizer=None)
    profile = assemble_secure_profile(arena, trace, base.policy)
    return SecureConstruction(
        arena=arena,
        specs=dict(specs),
        weights=weights,
        engine="thm1",
        profile=profile,
        payoffs=expected_payoffs(arena, specs, profile),
        guarantees={i: final.solutions[i].values[arena.initial] for i in arena.players},
        initial_values=_value_tables(trace.levels[0], arena.players),
        final_values=_value_tables(final, arena.players),
        trace=trace,
        base_table=dict(base.policy),
        base_objective=base.values[arena.initial],
        report=_check_report(arena, specs, profile),
    )


# ---------------------------------------------------------------------------
# horizon-bounded payoffs: clocked unrolling


def clocked_expansion(arena: Arena, horizon: int) -> Arena:
    """Unroll the arena for `horizon` periods into layered (state, period)
    states ending in an absorbing idle sink. Total reward on the unrolling
    equals the horizon-bounded sum on the original arena."""
    root = (arena.initial, 0)
    nodes = [root]
    seen = {root}
    controller: dict[State, Player] = {}
    actions: dict[State, tuple] = {}
    transitions: dict = {}
    i = 0
    while i < len(nodes):
        s, t = nodes[i]
        i += 1
        controller[(s, t)] = arena.controller[s]
        actions[(s, t)] = arena.actions[s]
        for a in arena.actions[s]:
            dist: dict = {}
            for z, prob in arena.transitions[(s, a)].items():
                target = (z, t + 1) if t + 1 < horizon else HORIZON_END
                dist[target] = dist.get(target, ZERO) + prob
                if target != HORIZON_END and target not in seen:
                    seen.add(target)
                    nodes.append(target)
            transitions[((s, t), a)] = dist
    controller[HORIZON_END] = arena.players[0]
    actions[HORIZON_END] = (IDLE,)
    transitions[(HORIZON_END, IDLE)] = {HORIZON_END: ONE}
    return Arena(
        players=arena.players,
        states=tuple(nodes) + (HORIZON_END,),
        initial=root,
        controller=controller,
        actions=actions,
        transitions=transitions,
    )


def _expanded_rewards(spec: FiniteHorizon) -> dict:
    return {((s, t), a): r for (t, s, a), r in spec.step_rewards.items()}


class HorizonLiftedMemory:
    """Runs a memory meant for the clocked unrolling on plays of the original
    arena, by keeping the period counter alongside. Once the horizon is spent
    the memory freezes; nothing after that can affect any payoff."""

    def __init__(self, inner, horizon: int):
        self.inner = inner
        self.horizon = horizon

    def initial(self, state: State):
        return (0, self.inner.initial((state, 0)))

    def update(self, memory, state, action, successor):
        t, m = memory
        if t >= self.horizon:
            return memory
        here = (state, t)
        there = (successor, t + 1) if t + 1 < self.horizon else HORIZON_END
        return (t + 1, self.inner.update(m, here, action, there))


def _construct_finite_horizon(arena, specs, weights) -> SecureConstruction:
    horizon = specs[arena.players[0]].horizon
    expansion = clocked_expansion(arena, horizon)
    reward_tables = {i: _expanded_rewards(specs[i]) for i in arena.players}

    def views(work: Arena):
        return {
            i: solve_total_dag(work, reward_tables[i], maximizer=i) for i in work.players
        }

    trace = eliminate_fixpoint(expansion, views)
    final = trace.final
    combined: dict = {}
    for s in final.arena.states:
        for a in final.arena.actions[s]:
            total = sum(
                (weights[i] * reward_tables[i].get((s, a), ZERO) for i in arena.players), ZERO
            )
            if total:
                combined[(s, a)] = total
    base = solve_total_dag(final.arena, combined, maximizer=None)
    inner_memory, inner_choices = _punishment_profile(expansion, trace, base.policy)
    memory = HorizonLiftedMemory(inner_memory, horizon)
    strategies = {}
    for j in arena.players:
        def choose(mem, state, _inner=inner_choices[j]):
            t, m = mem
            if t >= horizon:
                return arena.actions[state][0]
            return _inner(m, (state, t))

        strategies[j] = FiniteMemoryStrategy(owner=j, memory=memory, choice=choose)
    profile = StrategyProfile(strategies)
    return SecureConstruction(
        arena=arena,
        specs=dict(specs),
        weights=weights,
        engine="thm1",
        profile=profile,
        payoffs=expected_payoffs(arena, specs, profile),
        guarantees={
            i: final.solutions[i].values[(arena.initial, 0)] for i in arena.players
        },
        initial_values=_value_tables(trace.levels[0], arena.players),
        final_values=_value_tables(final, arena.players),
        trace=trace,
        base_table=dict(base.policy),
        base_objective=base.values[(arena.initial, 0)],
        report=_check_report(arena, specs, profile),
    )
