"""Payoff-skewing construction for deterministic games with finite-range payoffs.

This engine never eliminates actions. Instead it replaces every player's
payoff with a skewed copy that subtracts a small multiple of the opponents'
combined payoff,

    skewed_i(play) = u_i(play) - delta * sum of u_j(play) over j != i,

with delta = gap / (2 * players * magnitude), where gap is the smallest
distance between distinct values of the pooled payoff range and magnitude is
the largest absolute value in it. The factor is small enough that the skew
can never bridge the gap between two genuinely different own payoffs, so the
skewed order refines the original one: a deviation that improves the skewed
payoff must either improve the original own payoff, or keep it while
lowering the opponents' sum. A Nash profile of the skewed game is therefore
a Nash profile of the original game under which every own-payoff-preserving
deviation weakly raises the opponents' combined payoff.

The skewed game is solved with threat strategies. On the plan, each player
follows their own optimal policy for their skewed payoff, positional on the
product of game states with the shared outcome tracker (reached label
subsets plus capped hitting clocks). The first off-plan move latches its
mover into the shared memory; from then on everyone else follows the policy
holding that player to their zero-sum value. Only deterministic arenas are
supported: averaging skewed payoffs over random transitions would not
preserve the per-play order the argument rests on.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .arena import (
    Arena,
    CappedHitting,
    FiniteMemoryStrategy,
    Player,
    ReachedSet,
    StrategyProfile,
    expected_payoffs,
    positional_strategy,
)
from .construct import FirstDeviatorMemory, _check_report, _require_valid
from .zerosum import (
    OutcomeObjective,
    OutcomeSolution,
    OutcomeStructure,
    solve_outcome_game,
)

ZERO = Fraction(0)
ONE = Fraction(1)

#: Payoff families with finitely many possible values per play.
FINITE_RANGE = (ReachedSet, CappedHitting)


@dataclass(frozen=True)
class DeltaParams:
    """Skew parameters derived from the pooled payoff range: the range
    itself (sorted), its largest magnitude, the smallest gap between two
    distinct values, and the skew factor delta."""

    range_values: tuple[Fraction, ...]
    magnitude: Fraction
    gap: Fraction
    delta: Fraction


def payoff_range(spec) -> frozenset[Fraction]:
    """All payoff values a finite-range spec can assign to a play."""
    if isinstance(spec, FINITE_RANGE):
        return frozenset(spec.value_map.values())
    raise ValueError(
        "finite payoff ranges exist only for reached-set and capped-hitting specs"
    )


def compute_delta(specs: Mapping[Player, object]) -> DeltaParams:
    """Derive the skew factor from the pooled payoff range of all players.

    delta = gap / (2 * n * magnitude) for an n-player game, which leaves
    gap - delta * (n - 1) * 2 * magnitude = gap / n strictly positive: the
    skew terms can never close a gap between distinct own payoffs. Raises
    for a pooled range with fewer than two values; such a game pays every
    player the same constant on every play and needs no construction."""
    pooled = sorted(set().union(*(payoff_range(spec) for spec in specs.values())))
    if len(pooled) < 2:
        raise ValueError("all payoffs equal one constant; any profile is already secure")
    magnitude = max(abs(m) for m in pooled)
    gap = min(b - a for a, b in zip(pooled, pooled[1:]))
    count = len(specs)
    delta = gap / (2 * count * magnitude)
    assert gap - delta * (count - 1) * 2 * magnitude > 0
    return DeltaParams(
        range_values=tuple(pooled), magnitude=magnitude, gap=gap, delta=delta
    )


def transform_vector(
    params: DeltaParams, vector: Mapping[Player, Fraction]
) -> dict[Player, Fraction]:
    """Skew one payoff vector: each entry loses delta times the others' sum."""
    total = sum(vector.values())
    return {i: v - params.delta * (total - v) for i, v in vector.items()}


@dataclass(frozen=True)
class TransformedPayoffs:
    """Skewed payoffs as one additive objective per player over the shared
    outcome structure, plus who owns each capped hitting part."""

    params: DeltaParams
    structure: OutcomeStructure
    part_owners: tuple[Player, ...]
    objectives: dict[Player, OutcomeObjective]


def transform_payoffs(
    specs: Mapping[Player, object], params: DeltaParams
) -> TransformedPayoffs:
    """Skew every player's payoff over the shared outcome memory.

    Reached-set specs must already agree on their target labels; each
    capped-hitting spec contributes one tracked part, in player order. The
    per-player objective assigns every reached-label subset the skewed
    combination of the reach-based payoffs and every hitting part the
    correspondingly signed copy of its owner's value map, so play by play
    the objective equals u_i - delta * sum of the opponents' payoffs."""
    players = list(specs)
    labels: tuple[frozenset, ...] = ()
    for spec in specs.values():
        if isinstance(spec, ReachedSet):
            labels = spec.target_labels
            break
    parts = []
    owners = []
    for p in players:
        if isinstance(specs[p], CappedHitting):
            parts.append((specs[p].target, specs[p].cap))
            owners.append(p)
    structure = OutcomeStructure(labels=tuple(labels), parts=tuple(parts))

    subsets = [
        frozenset(keys)
        for size in range(len(labels) + 1)
        for keys in itertools.combinations(range(1, len(labels) + 1), size)
    ]
    objectives = {}
    for i in players:
        reach_value = {}
        for sub in subsets:
            total = ZERO
            for j in players:
                if isinstance(specs[j], ReachedSet):
                    total += (ONE if j == i else -params.delta) * specs[j].value(sub)
            reach_value[sub] = total
        hit_values = {}
        for k, owner in enumerate(owners):
            coefficient = ONE if owner == i else -params.delta
            hit_values[k] = {
                outcome: coefficient * value
                for outcome, value in specs[owner].value_map.items()
            }
        objectives[i] = OutcomeObjective(reach_value=reach_value, hit_values=hit_values)
    return TransformedPayoffs(
        params=params,
        structure=structure,
        part_owners=tuple(owners),
        objectives=objectives,
    )


def _skewed_solutions(
    arena: Arena, transformed: TransformedPayoffs
) -> dict[Player, OutcomeSolution]:
    return {
        i: solve_outcome_game(arena, transformed.structure, transformed.objectives[i], i)
        for i in arena.players
    }


class _EvasionTracker:
    """Outcome tracker extended with the set of parts that capped out, which
    the plain tracker forgets once its clock stops."""

    def __init__(self, structure: OutcomeStructure):
        self.inner = structure.tracker()
        self.parts = structure.parts

    def initial(self, state):
        return (self.inner.initial(state), frozenset())

    def update(self, memory, state, action, successor):
        mem, out = memory
        reached, clock, pending = mem
        if pending:
            nxt = clock + 1
            out = out | frozenset(j for j in pending if nxt > self.parts[j][1])
        return (self.inner.update(mem, state, action, successor), out)


def _evasive_region(arena: Arena, blocked: frozenset) -> dict:
    """First action, per state, of a walk that never enters `blocked` again,
    on the largest region from which such a walk exists."""
    region = set(arena.states) - set(blocked)
    while True:
        staying = {}
        for s in arena.states:
            if s not in region:
                continue
            for a in arena.actions[s]:
                if arena.det_successor(s, a) in region:
                    staying[s] = a
                    break
        if len(staying) == len(region):
            return staying
        region = set(staying)


def _steps_to(arena: Arena, target: frozenset) -> dict:
    """Fewest moves needed to enter `target`, per state; absent if impossible."""
    back: dict = {s: [] for s in arena.states}
    for (s, _), dist in arena.transitions.items():
        for t in dist:
            back[t].append(s)
    steps = {s: 0 for s in arena.states if s in target}
    frontier = list(steps)
    while frontier:
        nxt = []
        for t in frontier:
            for s in back[t]:
                if s not in steps:
                    steps[s] = steps[t] + 1
                    nxt.append(s)
        frontier = nxt
    return steps


def _threat_profile(
    arena: Arena, solutions: Mapping[Player, OutcomeSolution]
) -> StrategyProfile:
    structure = next(iter(solutions.values())).structure
    evade = arena.is_deterministic and structure.parts and not structure.labels
    regions: dict[frozenset, dict] = {}
    reach_steps = (
        [_steps_to(arena, target) for target, _ in structure.parts] if evade else []
    )

    def hopeless(state, clock, pending):
        # no pending part can still be entered within its remaining budget
        for j in pending:
            d = reach_steps[j].get(state)
            if d is not None and clock + d <= structure.parts[j][1]:
                return False
        return True

    def plan(base_mem, state):
        tracked, out = base_mem
        reached, clock, pending = tracked
        # Once no pending part can be hit in time, and no labels are tracked,
        # every continuation pays every player the same. Steering clear of
        # the unhit targets there keeps them physically unvisited, so any
        # target the conforming play ever enters is entered within its cap.
        if evade and hopeless(state, clock, pending):
            avoid = frozenset(out | pending)
            if avoid:
                if avoid not in regions:
                    blocked = frozenset().union(
                        *(structure.parts[j][0] for j in avoid)
                    )
                    regions[avoid] = _evasive_region(arena, blocked)
                safe = regions[avoid]
                if state in safe:
                    return safe[state]
        return solutions[arena.controller[state]].max_policy[(state, tracked)]

    memory = FirstDeviatorMemory(
        base=_EvasionTracker(structure),
        prescription=plan,
        controller=arena.controller,
    )

    def choice_of(j):
        def choose(mem, state):
            base_mem, label = mem
            tracked, _ = base_mem
            if label is None and arena.controller[state] == j:
                return plan(base_mem, state)
            if label is None or label == j:
                # off their plan turn, or the labelled player: own optimum
                return solutions[j].max_policy[(state, tracked)]
            return solutions[label].min_policy[(state, tracked)]

        return choose

    return StrategyProfile(
        {
            j: FiniteMemoryStrategy(owner=j, memory=memory, choice=choice_of(j))
            for j in arena.players
        }
    )


def construct_nash_in_Gdelta(
    arena: Arena, transformed: TransformedPayoffs
) -> StrategyProfile:
    """Threat-backed Nash profile of the skewed game.

    Each player's on-plan move comes from their own exact optimal policy for
    their skewed payoff; the shared memory watches for the first off-plan
    move, latches the mover, and from then on everyone else follows the
    policy that pins the deviator to their zero-sum value. Conforming play
    yields each player at least that value from every position, while any
    deviation is worth at most the value at the point of departure."""
    return _threat_profile(arena, _skewed_solutions(arena, transformed))


@dataclass
class DeltaConstruction:
    """Everything the skewing route produced: the parameters and skewed
    payoffs (absent when every play pays one constant), each player's
    skewed-game value at the start state, the profile, its exact payoffs in
    the original game, and a checker report re-verifying the equilibrium
    properties there."""

    arena: Arena
    specs: dict[Player, object]
    engine: str
    params: DeltaParams | None
    transformed: TransformedPayoffs | None
    guarantees: dict[Player, Fraction]
    profile: StrategyProfile
    payoffs: dict[Player, Fraction]
    report: object


def _first_action_profile(arena: Arena) -> StrategyProfile:
    return StrategyProfile(
        {
            j: positional_strategy(
                j,
                {
                    s: arena.actions[s][0]
                    for s in arena.states
                    if arena.controller[s] == j
                },
            )
            for j in arena.players
        }
    )


def construct_secure_equilibrium_det(
    arena: Arena, specs: Mapping[Player, object]
) -> DeltaConstruction:
    """Build a secure equilibrium of a deterministic game with finite-range
    payoffs: pool the payoff range, derive the skew factor, skew every
    payoff, then assemble the threat-backed Nash profile of the skewed game.

    The attached report re-verifies in the original game that the profile is
    a Nash equilibrium and that no own-payoff-preserving deviation lowers
    the opponents' combined payoff (which makes it secure). A game whose
    pooled range is a single constant skips the machinery: any profile
    works, and the first-action profile is returned.

    When every payoff is a capped hitting time, the conforming play steers
    clear of all targets once the caps have expired (where possible), so a
    target it ever enters is entered within that part's cap."""
    _require_valid(arena, specs)
    if not arena.is_deterministic:
        raise ValueError("the payoff-skewing engine needs a deterministic arena")
    if any(not isinstance(specs[p], FINITE_RANGE) for p in arena.players):
        raise ValueError(
            "the payoff-skewing engine needs reached-set or capped-hitting payoffs"
        )
    pooled = set().union(*(payoff_range(specs[p]) for p in arena.players))
    if len(pooled) < 2:
        profile = _first_action_profile(arena)
        payoffs = expected_payoffs(arena, specs, profile)
        return DeltaConstruction(
            arena=arena,
            specs=dict(specs),
            engine="transform",
            params=None,
            transformed=None,
            guarantees=dict(payoffs),
            profile=profile,
            payoffs=payoffs,
            report=_check_report(arena, specs, profile),
        )

    params = compute_delta(specs)
    transformed = transform_payoffs(specs, params)
    solutions = _skewed_solutions(arena, transformed)
    profile = _threat_profile(arena, solutions)
    payoffs = expected_payoffs(arena, specs, profile)
    return DeltaConstruction(
        arena=arena,
        specs=dict(specs),
        engine="transform",
        params=params,
        transformed=transformed,
        guarantees={i: solutions[i].value for i in arena.players},
        profile=profile,
        payoffs=payoffs,
        report=_check_report(arena, specs, profile),
    )
