"""Exact solvers for two-coalition zero-sum views of a finite arena.

Construction and verification both reduce, over and over, to questions of the
form "how much can this player guarantee when everyone else plays against
them". This module answers those questions exactly per payoff family and
returns canonical deterministic optimal policies, so repeated solves of the
same input produce identical output (ties break by declaration order).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping

from .arena import (
    ONE,
    UNREACHED,
    ZERO,
    Action,
    Arena,
    FiniteMemoryStrategy,
    OutcomeTracker,
    Player,
    State,
    _strongly_connected_components,
    positional_strategy,
)
from .linsolve import solve_single


@dataclass
class ZeroSumSolution:
    """Optimal values of one zero-sum view plus a canonical optimal policy.

    The policy is total over states: it maximizes where `maximizer` moves and
    minimizes everywhere else (everywhere, if maximizer is None). Among
    optimal actions the first in declaration order is chosen."""

    maximizer: Player | None
    values: dict[State, Fraction]
    action_values: dict[tuple[State, Action], Fraction]
    policy: dict[State, Action]

    def strategy_for(self, owner: Player, arena: Arena) -> FiniteMemoryStrategy:
        table = {s: self.policy[s] for s in arena.states if arena.controller[s] == owner}
        return positional_strategy(owner, table)


# ---------------------------------------------------------------------------
# discounted games: exact strategy iteration


def _joint_policy_values(
    arena: Arena,
    rewards: Mapping[tuple[State, Action], Fraction],
    discount: Fraction,
    policy: dict[State, Action],
) -> dict[State, Fraction]:
    states = arena.states
    index = {s: i for i, s in enumerate(states)}
    n = len(states)
    matrix = [[ONE if r == c else ZERO for c in range(n)] for r in range(n)]
    rhs = []
    for i, s in enumerate(states):
        a = policy[s]
        for z, prob in arena.transitions[(s, a)].items():
            matrix[i][index[z]] -= discount * prob
        rhs.append(rewards.get((s, a), ZERO))
    vals = solve_single(matrix, rhs)
    return {s: vals[i] for i, s in enumerate(states)}


def _discounted_q(
    arena: Arena,
    rewards: Mapping[tuple[State, Action], Fraction],
    discount: Fraction,
    values: dict[State, Fraction],
    state: State,
    action: Action,
) -> Fraction:
    total = rewards.get((state, action), ZERO)
    for z, prob in arena.transitions[(state, action)].items():
        total += discount * prob * values[z]
    return total


def solve_discounted(
    arena: Arena,
    rewards: Mapping[tuple[State, Action], Fraction],
    discount: Fraction,
    maximizer: Player | None,
) -> ZeroSumSolution:
    """Exact values of the discounted zero-sum game where `maximizer` plays
    against the coalition of everyone else.

    Strategy iteration: the minimizing coalition's policy is held fixed while
    the maximizer's policy is improved to an exact best response (an MDP
    solved by policy iteration with exact linear solves), then the coalition
    switches to strictly improving actions; repeat to the fixpoint. All
    comparisons are exact, so convergence is to the true value, not an
    epsilon-approximation."""
    if not (ZERO < discount < ONE):
        raise ValueError(f"discount factor {discount} outside (0, 1)")
    max_states = [
        s for s in arena.states if maximizer is not None and arena.controller[s] == maximizer
    ]
    max_set = set(max_states)
    min_states = [s for s in arena.states if s not in max_set]
    policy = {s: arena.actions[s][0] for s in arena.states}
    values = _joint_policy_values(arena, rewards, discount, policy)
    while True:
        # exact best response of the maximizer against the frozen coalition
        while True:
            improved = False
            for s in max_states:
                best_a = None
                best_q = None
                for a in arena.actions[s]:
                    q = _discounted_q(arena, rewards, discount, values, s, a)
                    if best_q is None or q > best_q:
                        best_a, best_q = a, q
                if best_q > values[s]:
                    policy[s] = best_a
                    improved = True
            if not improved:
                break
            values = _joint_policy_values(arena, rewards, discount, policy)
        changed = False
        for s in min_states:
            best_a = None
            best_q = None
            for a in arena.actions[s]:
                q = _discounted_q(arena, rewards, discount, values, s, a)
                if best_q is None or q < best_q:
                    best_a, best_q = a, q
            if best_q < values[s]:
                policy[s] = best_a
                changed = True
        if not changed:
            break
        values = _joint_policy_values(arena, rewards, discount, policy)
    action_values = {
        (s, a): _discounted_q(arena, rewards, discount, values, s, a)
        for s in arena.states
        for a in arena.actions[s]
    }
    canonical = {}
    for s in arena.states:
        canonical[s] = next(a for a in arena.actions[s] if action_values[(s, a)] == values[s])
    return ZeroSumSolution(
        maximizer=maximizer, values=values, action_values=action_values, policy=canonical
    )


# ---------------------------------------------------------------------------
# total-reward games on layered arenas (used for finite-horizon play)


def solve_total_dag(
    arena: Arena,
    rewards: Mapping[tuple[State, Action], Fraction],
    maximizer: Player | None,
) -> ZeroSumSolution:
    """Zero-sum total reward on an arena whose only cycles are closed
    zero-reward clusters (absorbing sinks). Everything else must be acyclic,
    which makes backward induction exact."""
    states = arena.states
    index = {s: i for i, s in enumerate(states)}
    out_edges = [
        sorted(
            {index[z] for a in arena.actions[s] for z in arena.transitions[(s, a)]}
        )
        for s in states
    ]
    components = _strongly_connected_components(len(states), out_edges)
    comp_sets = [set(comp) for comp in components]
    values: dict[State, Fraction] = {}

    def q_of(s: State, a: Action) -> Fraction:
        total = rewards.get((s, a), ZERO)
        for z, prob in arena.transitions[(s, a)].items():
            total += prob * values[z]
        return total

    # Tarjan emits components with all successors already emitted
    for comp, comp_set in zip(components, comp_sets):
        nontrivial = len(comp) > 1 or any(i in out_edges[i] for i in comp)
        if nontrivial:
            for i in comp:
                s = states[i]
                for a in arena.actions[s]:
                    if rewards.get((s, a), ZERO) != 0:
                        raise ValueError(f"cycle through {s!r} carries nonzero reward")
                    for z in arena.transitions[(s, a)]:
                        if index[z] not in comp_set:
                            raise ValueError(f"cycle through {s!r} is not closed")
            for i in comp:
                values[states[i]] = ZERO
        else:
            s = states[comp[0]]
            maximize = maximizer is not None and arena.controller[s] == maximizer
            qs = [q_of(s, a) for a in arena.actions[s]]
            values[s] = max(qs) if maximize else min(qs)
    action_values = {
        (s, a): q_of(s, a) for s in arena.states for a in arena.actions[s]
    }
    canonical = {
        s: next(a for a in arena.actions[s] if action_values[(s, a)] == values[s])
        for s in arena.states
    }
    return ZeroSumSolution(
        maximizer=maximizer, values=values, action_values=action_values, policy=canonical
    )


# ---------------------------------------------------------------------------
# outcome games: reached labels plus capped hitting parts, deterministic


@dataclass(frozen=True)
class OutcomeStructure:
    """Shared tracking skeleton of an outcome game: which label sets and
    which (target, cap) hitting parts the strategies need to remember."""

    labels: tuple[frozenset, ...]
    parts: tuple[tuple[frozenset, int], ...]

    def tracker(self) -> OutcomeTracker:
        return OutcomeTracker(self.labels, self.parts)


@dataclass
class OutcomeObjective:
    """Additive payoff over an OutcomeStructure: a value for the limit set of
    reached labels plus, per tracked hitting part, a value of its outcome.
    Parts without an entry in hit_values contribute nothing."""

    reach_value: dict[frozenset, Fraction]
    hit_values: dict[int, dict]

    def stay_value(self, reached: frozenset) -> Fraction:
        return self.reach_value.get(reached, ZERO)

    def play_value(self, reached: frozenset, outcomes: dict) -> Fraction:
        total = self.stay_value(reached)
        for j, vals in self.hit_values.items():
            total += vals[outcomes[j]]
        return total


@dataclass
class OutcomeSolution:
    maximizer: Player
    structure: OutcomeStructure
    nodes: list
    node_values: dict
    action_values: dict
    constant: Fraction
    max_policy: dict
    min_policy: dict

    @property
    def value(self) -> Fraction:
        return self.constant + self.node_values[self.nodes[0]]

    def max_strategy(self) -> FiniteMemoryStrategy:
        policy = self.max_policy

        def choose(memory, state):
            return policy[(state, memory)]

        return FiniteMemoryStrategy(
            owner=self.maximizer, memory=self.structure.tracker(), choice=choose
        )

    def min_strategy(self, owner: Player) -> FiniteMemoryStrategy:
        policy = self.min_policy

        def choose(memory, state):
            return policy[(state, memory)]

        return FiniteMemoryStrategy(owner=owner, memory=self.structure.tracker(), choice=choose)


def _phase2_values(
    nodes: list,
    edges: list,
    done: list[int],
    stay_of: Callable[[frozenset], Fraction],
    is_max: Callable[[int], bool],
) -> tuple[dict[int, Fraction], dict[int, Action]]:
    """Solve the all-parts-resolved part of an outcome game, stratum by
    stratum over the lattice of reached label sets (largest sets first; a
    play can only move to a strictly larger set, whose value is then already
    known). Within a stratum the value is either the stay value of its label
    set or one of the exit values; thresholds are decided by fixpoint
    iteration, with a ranked attractor when leaving the stratum is the only
    way to secure the threshold."""
    groups: dict[frozenset, list[int]] = {}
    for i in done:
        groups.setdefault(nodes[i][1][0], []).append(i)
    values: dict[int, Fraction] = {}
    policy: dict[int, Action] = {}
    for reached in sorted(groups, key=lambda r: (-len(r), sorted(r))):
        stratum = groups[reached]
        in_stratum = set(stratum)
        stay = stay_of(reached)
        thresholds = {stay}
        for x in stratum:
            for _, target, _ in edges[x]:
                if target not in in_stratum:
                    thresholds.add(values[target])
        win: dict[Fraction, frozenset] = {}
        ranks: dict[Fraction, dict[int, int]] = {}
        for t in sorted(thresholds):
            if t <= stay:
                # safe set: stay inside it forever (worth stay >= t) or leave
                # through an exit worth at least t
                live = set(stratum)
                while True:
                    dropped = []
                    for x in live:
                        ok = [
                            a
                            for a, target, _ in edges[x]
                            if (target not in in_stratum and values[target] >= t)
                            or (target in live)
                        ]
                        good = bool(ok) if is_max(x) else len(ok) == len(edges[x])
                        if not good:
                            dropped.append(x)
                    if not dropped:
                        break
                    live.difference_update(dropped)
                win[t] = frozenset(live)
            else:
                # staying forever is not enough: attract to exits worth >= t
                attracted: set[int] = set()
                rank: dict[int, int] = {}
                sweep = 0
                while True:
                    sweep += 1
                    newly = []
                    for x in stratum:
                        if x in attracted:
                            continue
                        def good(target):
                            if target not in in_stratum:
                                return values[target] >= t
                            return target in attracted
                        oks = [good(target) for _, target, _ in edges[x]]
                        if any(oks) if is_max(x) else all(oks):
                            newly.append(x)
                    if not newly:
                        break
                    for x in newly:
                        attracted.add(x)
                        rank[x] = sweep
                win[t] = frozenset(attracted)
                ranks[t] = rank
        for x in stratum:
            values[x] = max(t for t in thresholds if x in win[t])
        for x in stratum:
            if not is_max(x):
                continue
            t = values[x]
            if t > stay:
                rank = ranks[t]
                chosen = next(
                    a
                    for a, target, _ in edges[x]
                    if (target not in in_stratum and values[target] >= t)
                    or (target in win[t] and rank[target] < rank[x])
                )
            else:
                chosen = next(
                    a
                    for a, target, _ in edges[x]
                    if (target not in in_stratum and values[target] >= t)
                    or (target in in_stratum and values[target] >= t)
                )
            policy[x] = chosen
    return values, policy


def solve_outcome_game(
    arena: Arena,
    structure: OutcomeStructure,
    objective: OutcomeObjective,
    maximizer: Player,
) -> OutcomeSolution:
    """Exact value and canonical optimal policies of the zero-sum game where
    `maximizer` maximizes the outcome objective against everyone else.

    Only deterministic arenas are supported. Both sides' policies are
    positional on the (state, tracker memory) product; determinacy is checked
    by solving the game once from each side."""
    if not arena.is_deterministic:
        raise ValueError("outcome games are solved on deterministic arenas only")
    tracker = structure.tracker()
    hit_values = objective.hit_values

    def edge_value(memory, successor) -> Fraction:
        total = ZERO
        for j, outcome in tracker.resolutions(memory, successor):
            vals = hit_values.get(j)
            if vals is not None:
                total += vals[outcome]
        return total

    root = (arena.initial, tracker.initial(arena.initial))
    nodes = [root]
    index = {root: 0}
    edges: list[list[tuple[Action, int, Fraction]]] = []
    i = 0
    while i < len(nodes):
        s, mem = nodes[i]
        i += 1
        row = []
        for a in arena.actions[s]:
            z = arena.det_successor(s, a)
            mem2 = tracker.update(mem, s, a, z)
            nxt = (z, mem2)
            if nxt not in index:
                index[nxt] = len(nodes)
                nodes.append(nxt)
            row.append((a, index[nxt], edge_value(mem, z)))
        edges.append(row)

    pending = [i for i in range(len(nodes)) if nodes[i][1][2]]
    done = [i for i in range(len(nodes)) if not nodes[i][1][2]]
    max_nodes = {i for i in range(len(nodes)) if arena.controller[nodes[i][0]] == maximizer}

    vals_a, policy_a = _phase2_values(
        nodes, edges, done, objective.stay_value, lambda i: i in max_nodes
    )
    vals_b, policy_b = _phase2_values(
        nodes,
        edges,
        done,
        lambda r: -objective.stay_value(r),
        lambda i: i not in max_nodes,
    )
    for x in done:
        assert vals_b[x] == -vals_a[x], "outcome game is not determined; solver bug"

    node_values: dict[int, Fraction] = dict(vals_a)
    # parts still pending: the clock strictly increases, so this is a DAG
    for x in sorted(pending, key=lambda i: -nodes[i][1][1]):
        best = None
        if x in max_nodes:
            for _, target, ev in edges[x]:
                q = ev + node_values[target]
                if best is None or q > best:
                    best = q
        else:
            for _, target, ev in edges[x]:
                q = ev + node_values[target]
                if best is None or q < best:
                    best = q
        node_values[x] = best

    action_values = {}
    for x in range(len(nodes)):
        for a, target, ev in edges[x]:
            action_values[(nodes[x], a)] = ev + node_values[target]

    max_policy: dict = {}
    min_policy: dict = {}
    done_set = set(done)
    for x in range(len(nodes)):
        node = nodes[x]
        if x in done_set:
            if x in max_nodes:
                max_policy[node] = policy_a[x]
            else:
                min_policy[node] = policy_b[x]
        else:
            chosen = next(
                a for a, target, ev in edges[x] if ev + node_values[target] == node_values[x]
            )
            if x in max_nodes:
                max_policy[node] = chosen
            else:
                min_policy[node] = chosen

    constant = ZERO
    for j, outcome in tracker.initial_resolutions(arena.initial):
        vals = hit_values.get(j)
        if vals is not None:
            constant += vals[outcome]
    return OutcomeSolution(
        maximizer=maximizer,
        structure=structure,
        nodes=[nodes[i] for i in range(len(nodes))],
        node_values={nodes[i]: v for i, v in node_values.items()},
        action_values=action_values,
        constant=constant,
        max_policy=max_policy,
        min_policy=min_policy,
    )


def solve_reached_set(
    arena: Arena, target_labels, value_map: Mapping, maximizer: Player
) -> OutcomeSolution:
    """Zero-sum value of a deterministic reached-label-set game: `maximizer`
    steers the play toward limit label subsets with high value while everyone
    else steers away. Instantiates solve_outcome_game with no hitting parts,
    so strategies carry the reached-subset memory and nothing else."""
    structure = OutcomeStructure(labels=tuple(target_labels), parts=())
    objective = OutcomeObjective(reach_value=dict(value_map), hit_values={})
    return solve_outcome_game(arena, structure, objective, maximizer)
