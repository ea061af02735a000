"""Finite turn-based game arenas with exact rational payoffs.

An Arena is a finite directed game graph: every state is controlled by one
player, actions move the token along (possibly probabilistic) transitions,
and plays are infinite. Payoffs are attached separately as one PayoffSpec per
player. Strategies are finite-memory transducers so that a whole profile
induces a finite Markov chain, which keeps every evaluation exact.

All numeric quantities are fractions.Fraction; nothing in this module touches
floating point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Mapping, Sequence

from .linsolve import solve_single

Scalar = Fraction
ZERO = Fraction(0)
ONE = Fraction(1)

Player = Hashable
State = Hashable
Action = Hashable


def as_scalar(value) -> Fraction:
    """Coerce ints, strings like '3/4', and Fractions to an exact Scalar."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"not an exact scalar: {value!r}")


# ---------------------------------------------------------------------------
# Arena


@dataclass
class Arena:
    """A finite turn-based arena.

    players     ordered tuple of player identities
    states      ordered tuple of states (hashable; products use tuples)
    initial     the start state
    controller  state -> player who moves there
    actions     state -> ordered tuple of available actions (nonempty)
    transitions (state, action) -> {successor: probability}, mass exactly 1

    Treated as immutable after construction; operations that need a variant
    build a new Arena.
    """

    players: tuple[Player, ...]
    states: tuple[State, ...]
    initial: State
    controller: dict[State, Player]
    actions: dict[State, tuple[Action, ...]]
    transitions: dict[tuple[State, Action], dict[State, Fraction]]

    def actions_of(self, state: State) -> tuple[Action, ...]:
        return self.actions[state]

    def successors(self, state: State, action: Action) -> dict[State, Fraction]:
        return self.transitions[(state, action)]

    def support(self, state: State, action: Action) -> tuple[State, ...]:
        return tuple(self.transitions[(state, action)].keys())

    @property
    def is_deterministic(self) -> bool:
        return all(len(dist) == 1 for dist in self.transitions.values())

    def det_successor(self, state: State, action: Action) -> State:
        dist = self.transitions[(state, action)]
        if len(dist) != 1:
            raise ValueError(f"transition ({state!r}, {action!r}) is not deterministic")
        return next(iter(dist))

    def reachable_from(self, start: State) -> set[State]:
        seen = {start}
        stack = [start]
        while stack:
            s = stack.pop()
            for a in self.actions[s]:
                for z in self.transitions[(s, a)]:
                    if z not in seen:
                        seen.add(z)
                        stack.append(z)
        return seen

    def restricted(self, allowed: Mapping[State, Sequence[Action]]) -> "Arena":
        """Arena with action sets cut down to `allowed`, pruned to the states
        still reachable from the initial state. States absent from `allowed`
        keep their full action set."""
        kept: dict[State, tuple[Action, ...]] = {}
        for s in self.states:
            if s in allowed:
                acts = tuple(a for a in self.actions[s] if a in set(allowed[s]))
                if not acts:
                    raise ValueError(f"restriction empties the action set at {s!r}")
                kept[s] = acts
            else:
                kept[s] = self.actions[s]
        seen = {self.initial}
        stack = [self.initial]
        while stack:
            s = stack.pop()
            for a in kept[s]:
                for z in self.transitions[(s, a)]:
                    if z not in seen:
                        seen.add(z)
                        stack.append(z)
        states = tuple(s for s in self.states if s in seen)
        return Arena(
            players=self.players,
            states=states,
            initial=self.initial,
            controller={s: self.controller[s] for s in states},
            actions={s: kept[s] for s in states},
            transitions={
                (s, a): dict(self.transitions[(s, a)]) for s in states for a in kept[s]
            },
        )

    def rerooted(self, start: State) -> "Arena":
        """Same game, started at `start`, pruned to what is reachable."""
        seen = self.reachable_from(start)
        states = tuple(s for s in self.states if s in seen)
        return Arena(
            players=self.players,
            states=states,
            initial=start,
            controller={s: self.controller[s] for s in states},
            actions={s: self.actions[s] for s in states},
            transitions={
                (s, a): dict(self.transitions[(s, a)])
                for s in states
                for a in self.actions[s]
            },
        )


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, message: str) -> None:
        self.violations.append(message)


def validate_arena(arena: Arena) -> ValidationReport:
    """Structural checks: total controller/action/transition maps, exact
    probability mass, no dangling targets. Returns all violations found."""
    rep = ValidationReport()
    if not arena.players:
        rep.add("player set is empty")
    if len(set(arena.players)) != len(arena.players):
        rep.add("duplicate players")
    if not arena.states:
        rep.add("state set is empty")
        return rep
    state_set = set(arena.states)
    if len(state_set) != len(arena.states):
        rep.add("duplicate states")
    if arena.initial not in state_set:
        rep.add(f"initial state {arena.initial!r} is not a state")
    players = set(arena.players)
    for s in arena.states:
        if s not in arena.controller:
            rep.add(f"state {s!r} has no controller")
        elif arena.controller[s] not in players:
            rep.add(f"state {s!r} controlled by unknown player {arena.controller[s]!r}")
        acts = arena.actions.get(s)
        if not acts:
            rep.add(f"state {s!r} has an empty action set")
            continue
        if len(set(acts)) != len(acts):
            rep.add(f"state {s!r} has duplicate actions")
        for a in acts:
            dist = arena.transitions.get((s, a))
            if dist is None:
                rep.add(f"missing transition for ({s!r}, {a!r})")
                continue
            if not dist:
                rep.add(f"empty transition distribution at ({s!r}, {a!r})")
                continue
            mass = ZERO
            for target, prob in dist.items():
                if target not in state_set:
                    rep.add(f"transition ({s!r}, {a!r}) targets unknown state {target!r}")
                if not isinstance(prob, Fraction):
                    rep.add(f"probability at ({s!r}, {a!r}) -> {target!r} is not exact")
                    continue
                if prob <= 0 or prob > 1:
                    rep.add(
                        f"probability {prob} at ({s!r}, {a!r}) -> {target!r} outside (0, 1]"
                    )
                mass += prob
            if mass != 1:
                rep.add(f"distribution mass {mass} != 1 at ({s!r}, {a!r})")
    known = {(s, a) for s in arena.states for a in arena.actions.get(s, ())}
    for key in arena.transitions:
        if key not in known:
            rep.add(f"transition for undeclared pair {key!r}")
    return rep


# ---------------------------------------------------------------------------
# Payoff families


@dataclass
class Discounted:
    """Discounted reward sum: u = sum_t discount^t * reward(s_t, a_t).

    The discount factor is shared across all players of a game; this is what
    lets best-response and tie-breaking computations stay within one product
    chain."""

    rewards: dict[tuple[State, Action], Fraction]
    discount: Fraction

    def reward(self, state: State, action: Action) -> Fraction:
        return self.rewards.get((state, action), ZERO)


@dataclass
class FiniteHorizon:
    """Total reward over the first `horizon` periods; sparse reward table."""

    horizon: int
    step_rewards: dict[tuple[int, State, Action], Fraction]

    def reward(self, period: int, state: State, action: Action) -> Fraction:
        return self.step_rewards.get((period, state, action), ZERO)


@dataclass
class ReachedSet:
    """Payoff determined by which target labels the play ever visits.

    target_labels is an ordered tuple of state sets T_1..T_m (1-based indices,
    shared by every player of the game); value_map must be total over all
    subsets of {1..m}."""

    target_labels: tuple[frozenset[State], ...]
    value_map: dict[frozenset[int], Fraction]

    def labels_of(self, state: State) -> frozenset[int]:
        return frozenset(
            i + 1 for i, members in enumerate(self.target_labels) if state in members
        )

    def value(self, reached: frozenset[int]) -> Fraction:
        return self.value_map[reached]


#: Outcome key for a play that never reaches the target within the cap.
UNREACHED = None


@dataclass
class CappedHitting:
    """Payoff of the first hitting time of `target`, with times beyond `cap`
    collapsed into the unreached bucket (key None in value_map)."""

    target: frozenset[State]
    cap: int
    value_map: dict[object, Fraction]

    def value(self, outcome) -> Fraction:
        return self.value_map[outcome]

    def outcomes(self) -> tuple:
        return tuple(range(self.cap + 1)) + (UNREACHED,)


PayoffSpec = Discounted | FiniteHorizon | ReachedSet | CappedHitting


def default_cap(arena: Arena) -> int:
    """Default hitting-time cap: twice players times states."""
    return 2 * len(arena.players) * len(arena.states)


def validate_payoffs(arena: Arena, specs: Mapping[Player, PayoffSpec]) -> ValidationReport:
    """Family-level checks on a full payoff assignment."""
    rep = ValidationReport()
    state_set = set(arena.states)
    for p in arena.players:
        if p not in specs:
            rep.add(f"player {p!r} has no payoff spec")
    for p in specs:
        if p not in set(arena.players):
            rep.add(f"payoff spec for unknown player {p!r}")
    families = {type(spec) for spec in specs.values()}
    if Discounted in families and len(families) > 1:
        rep.add("discounted payoffs cannot be mixed with other families")
    if FiniteHorizon in families and len(families) > 1:
        rep.add("finite-horizon payoffs cannot be mixed with other families")

    discounts = {spec.discount for spec in specs.values() if isinstance(spec, Discounted)}
    if len(discounts) > 1:
        rep.add(f"discount factor must be shared, found {sorted(discounts)}")
    for beta in discounts:
        if not (ZERO < beta < ONE):
            rep.add(f"discount factor {beta} outside (0, 1)")
    horizons = {spec.horizon for spec in specs.values() if isinstance(spec, FiniteHorizon)}
    if len(horizons) > 1:
        rep.add(f"horizon must be shared, found {sorted(horizons)}")
    for t in horizons:
        if t < 1:
            rep.add(f"horizon {t} must be positive")

    reach_label_sets = [
        spec.target_labels for spec in specs.values() if isinstance(spec, ReachedSet)
    ]
    if reach_label_sets and any(ls != reach_label_sets[0] for ls in reach_label_sets):
        rep.add("reached-set target labels must agree across players")
    for p, spec in specs.items():
        if isinstance(spec, Discounted):
            for (s, a) in spec.rewards:
                if s not in state_set or a not in arena.actions.get(s, ()):
                    rep.add(f"reward for unknown pair ({s!r}, {a!r}) (player {p!r})")
        elif isinstance(spec, FiniteHorizon):
            for (t, s, a) in spec.step_rewards:
                if not (0 <= t < spec.horizon):
                    rep.add(f"step reward at period {t} outside horizon (player {p!r})")
                if s not in state_set or a not in arena.actions.get(s, ()):
                    rep.add(f"step reward for unknown pair ({s!r}, {a!r}) (player {p!r})")
        elif isinstance(spec, ReachedSet):
            m = len(spec.target_labels)
            for members in spec.target_labels:
                for s in members:
                    if s not in state_set:
                        rep.add(f"target label contains unknown state {s!r} (player {p!r})")
            want = 1 << m
            if len(spec.value_map) != want or any(
                not key <= frozenset(range(1, m + 1)) for key in spec.value_map
            ):
                rep.add(f"value map must be total over subsets of 1..{m} (player {p!r})")
        elif isinstance(spec, CappedHitting):
            if spec.cap < 1:
                rep.add(f"cap {spec.cap} must be positive (player {p!r})")
            for s in spec.target:
                if s not in state_set:
                    rep.add(f"hitting target contains unknown state {s!r} (player {p!r})")
            want_keys = set(range(spec.cap + 1)) | {UNREACHED}
            if set(spec.value_map) != want_keys:
                rep.add(
                    f"hitting value map must cover 0..{spec.cap} and the unreached bucket"
                    f" (player {p!r})"
                )
    return rep


# ---------------------------------------------------------------------------
# Finite-memory strategies


class UnitMemory:
    """The trivial single-state memory; positional strategies use this."""

    def initial(self, state: State):
        return ()

    def update(self, memory, state: State, action: Action, successor: State):
        return ()


class TableMemory:
    """Explicit transducer: an initial value plus a total update table over
    the (memory, state, action, successor) combinations that can occur."""

    def __init__(self, initial_value, updates: dict):
        self.initial_value = initial_value
        self.updates = updates

    def initial(self, state: State):
        return self.initial_value

    def update(self, memory, state, action, successor):
        try:
            return self.updates[(memory, state, action, successor)]
        except KeyError:
            raise KeyError(
                f"memory table has no entry for {(memory, state, action, successor)!r}"
            ) from None


class ReachTracker:
    """Monotone tracker of which target labels the play has visited so far.

    The memory value is the frozenset of 1-based label indices reached,
    including the labels of the current state."""

    def __init__(self, target_labels: tuple[frozenset[State], ...]):
        self.target_labels = target_labels

    def labels_of(self, state: State) -> frozenset[int]:
        return frozenset(
            i + 1 for i, members in enumerate(self.target_labels) if state in members
        )

    def initial(self, state: State):
        return self.labels_of(state)

    def update(self, memory, state, action, successor):
        return memory | self.labels_of(successor)


class ClockTracker:
    """Counts periods up to `limit` and then saturates."""

    def __init__(self, limit: int):
        self.limit = limit

    def initial(self, state: State):
        return 0

    def update(self, memory, state, action, successor):
        return memory if memory >= self.limit else memory + 1


class HitTracker:
    """Tracks the capped hitting status of one target set.

    Values: ('pending', k) after k periods without a hit, ('hit', t) once the
    target was first entered at period t <= cap, ('out',) once the cap has
    passed. The last two are absorbing."""

    def __init__(self, target: frozenset[State], cap: int):
        self.target = target
        self.cap = cap

    def initial(self, state: State):
        return ("hit", 0) if state in self.target else ("pending", 0)

    def update(self, memory, state, action, successor):
        if memory[0] != "pending":
            return memory
        k = memory[1] + 1
        if k > self.cap:
            return ("out",)
        if successor in self.target:
            return ("hit", k)
        return ("pending", k)

    @staticmethod
    def outcome(memory):
        """Final payoff key once resolved; 'pending' while undecided."""
        if memory[0] == "hit":
            return memory[1]
        if memory[0] == "out":
            return UNREACHED
        return "pending"


class OutcomeTracker:
    """Joint tracker for reached target labels plus capped hitting parts.

    Memory value: (reached, clock, pending) where reached is the frozenset of
    1-based label indices visited so far, pending is the frozenset of 0-based
    part indices not yet resolved, and clock counts periods while anything is
    pending (None afterwards, so the memory space stays finite)."""

    def __init__(self, labels: tuple[frozenset[State], ...], parts: tuple[tuple[frozenset[State], int], ...]):
        self.labels = labels
        self.parts = parts

    def labels_of(self, state: State) -> frozenset[int]:
        return frozenset(i + 1 for i, members in enumerate(self.labels) if state in members)

    def initial(self, state: State):
        pending = frozenset(
            j for j, (target, _) in enumerate(self.parts) if state not in target
        )
        return (self.labels_of(state), 0 if pending else None, pending)

    def update(self, memory, state, action, successor):
        reached, clock, pending = memory
        reached = reached | self.labels_of(successor)
        if not pending:
            return (reached, None, pending)
        nxt = clock + 1
        keep = []
        for j in pending:
            target, cap = self.parts[j]
            if nxt > cap or successor in target:
                continue  # resolved: past the cap counts as unreached
            keep.append(j)
        still = frozenset(keep)
        return (reached, nxt if still else None, still)

    def initial_resolutions(self, state: State) -> list[tuple[int, object]]:
        """Parts resolved immediately at the start state, as hits at time 0."""
        return [(j, 0) for j, (target, _) in enumerate(self.parts) if state in target]

    def resolutions(self, memory, successor) -> list[tuple[int, object]]:
        """Parts resolved by stepping from `memory` to `successor`, with the
        outcome each resolves to (a hit time, or None past the cap)."""
        reached, clock, pending = memory
        if not pending:
            return []
        nxt = clock + 1
        out = []
        for j in sorted(pending):
            target, cap = self.parts[j]
            if nxt > cap:
                out.append((j, UNREACHED))
            elif successor in target:
                out.append((j, nxt))
        return out


class TupleMemory:
    """Product of independent memory structures, updated componentwise."""

    def __init__(self, parts: Sequence):
        self.parts = tuple(parts)

    def initial(self, state: State):
        return tuple(part.initial(state) for part in self.parts)

    def update(self, memory, state, action, successor):
        return tuple(
            part.update(m, state, action, successor)
            for part, m in zip(self.parts, memory)
        )


@dataclass
class FiniteMemoryStrategy:
    """A strategy as transducer plus choice function.

    `choice` maps (memory value, state) to an action and must be defined
    wherever `owner` controls the state and the pair is reachable."""

    owner: Player
    memory: object
    choice: Callable[[object, State], Action]


def positional_strategy(owner: Player, table: Mapping[State, Action]) -> FiniteMemoryStrategy:
    table = dict(table)

    def choose(memory, state):
        try:
            return table[state]
        except KeyError:
            raise KeyError(f"positional strategy of {owner!r} undefined at {state!r}") from None

    return FiniteMemoryStrategy(owner=owner, memory=UnitMemory(), choice=choose)


def table_strategy(
    owner: Player, memory, table: Mapping[tuple[object, State], Action]
) -> FiniteMemoryStrategy:
    table = dict(table)

    def choose(mem, state):
        try:
            return table[(mem, state)]
        except KeyError:
            raise KeyError(
                f"strategy of {owner!r} undefined at memory {mem!r}, state {state!r}"
            ) from None

    return FiniteMemoryStrategy(owner=owner, memory=memory, choice=choose)


class _ScriptClock:
    """Counter memory for lasso-following strategies: counts up through the
    prefix and then cycles."""

    def __init__(self, prefix_len: int, cycle_len: int):
        self.prefix_len = prefix_len
        self.cycle_len = cycle_len

    def initial(self, state: State):
        return 0

    def update(self, memory, state, action, successor):
        nxt = memory + 1
        if nxt >= self.prefix_len + self.cycle_len:
            return self.prefix_len
        return nxt


def scripted_strategy(
    owner: Player, prefix_actions: Sequence[Action], cycle_actions: Sequence[Action]
) -> FiniteMemoryStrategy:
    """Strategy that plays a fixed action script indexed by global time:
    prefix once, then the cycle forever. Entries at steps where `owner` does
    not move are ignored but must be present to keep the clock aligned."""
    plan = list(prefix_actions) + list(cycle_actions)
    clock = _ScriptClock(len(prefix_actions), len(cycle_actions))

    def choose(memory, state):
        return plan[memory]

    return FiniteMemoryStrategy(owner=owner, memory=clock, choice=choose)


@dataclass
class StrategyProfile:
    """One strategy per player; strategies may share memory structure."""

    strategies: dict[Player, FiniteMemoryStrategy]

    def strategy(self, player: Player) -> FiniteMemoryStrategy:
        return self.strategies[player]

    def with_swapped(self, player: Player, strategy: FiniteMemoryStrategy) -> "StrategyProfile":
        out = dict(self.strategies)
        out[player] = strategy
        return StrategyProfile(out)


# ---------------------------------------------------------------------------
# Lassos


@dataclass
class Lasso:
    """An ultimately periodic play: a finite prefix followed by a repeated
    cycle, both lists of (state, action) steps. The cycle must be nonempty."""

    prefix: tuple[tuple[State, Action], ...]
    cycle: tuple[tuple[State, Action], ...]

    def validate(self, arena: Arena) -> ValidationReport:
        rep = ValidationReport()
        if not self.cycle:
            rep.add("lasso cycle is empty")
            return rep
        steps = list(self.prefix) + list(self.cycle)
        for s, a in steps:
            if s not in set(arena.states):
                rep.add(f"lasso visits unknown state {s!r}")
                return rep
            if a not in arena.actions[s]:
                rep.add(f"lasso uses unavailable action {a!r} at {s!r}")
                return rep
        def connects(step, nxt):
            s, a = step
            return arena.transitions[(s, a)].get(nxt[0], ZERO) > 0
        for i in range(len(steps) - 1):
            if not connects(steps[i], steps[i + 1]):
                rep.add(
                    f"lasso step {steps[i]!r} cannot reach {steps[i + 1][0]!r}"
                )
        if not connects(steps[-1], self.cycle[0]):
            rep.add("lasso cycle does not close")
        return rep

    def states(self) -> list[State]:
        return [s for s, _ in list(self.prefix) + list(self.cycle)]

    def step_at(self, t: int) -> tuple[State, Action]:
        """The (state, action) pair at period t of the unrolled play."""
        if t < len(self.prefix):
            return self.prefix[t]
        return self.cycle[(t - len(self.prefix)) % len(self.cycle)]


def evaluate_payoff_on_lasso(spec: PayoffSpec, lasso: Lasso) -> Fraction:
    """Exact payoff of the unrolled play described by `lasso`."""
    if isinstance(spec, Discounted):
        beta = spec.discount
        total = ZERO
        factor = ONE
        for s, a in lasso.prefix:
            total += factor * spec.reward(s, a)
            factor *= beta
        cycle_sum = ZERO
        inner = ONE
        for s, a in lasso.cycle:
            cycle_sum += inner * spec.reward(s, a)
            inner *= beta
        # factor is beta^len(prefix); inner is beta^len(cycle)
        total += factor * cycle_sum / (ONE - inner)
        return total
    if isinstance(spec, FiniteHorizon):
        total = ZERO
        for t in range(spec.horizon):
            s, a = lasso.step_at(t)
            total += spec.reward(t, s, a)
        return total
    if isinstance(spec, ReachedSet):
        reached: frozenset[int] = frozenset()
        for s in lasso.states():
            reached |= spec.labels_of(s)
        return spec.value(reached)
    if isinstance(spec, CappedHitting):
        hit_time = None
        horizon = len(lasso.prefix) + len(lasso.cycle)
        for t in range(horizon):
            s, _ = lasso.step_at(t)
            if s in spec.target:
                hit_time = t
                break
        if hit_time is None or hit_time > spec.cap:
            return spec.value(UNREACHED)
        return spec.value(hit_time)
    raise TypeError(f"unknown payoff spec {spec!r}")


# ---------------------------------------------------------------------------
# Product constructions and profile evaluation


def product_arena(arena: Arena, memory) -> tuple[Arena, dict]:
    """Synchronous product of an arena with a memory structure.

    Product states are (state, memory value) pairs reachable from the initial
    state under arbitrary play. Returns the product arena and the projection
    map back to (state, memory) pairs."""
    root = (arena.initial, memory.initial(arena.initial))
    nodes = [root]
    seen = {root}
    transitions: dict[tuple[State, Action], dict[State, Fraction]] = {}
    idx = 0
    while idx < len(nodes):
        node = nodes[idx]
        idx += 1
        s, m = node
        for a in arena.actions[s]:
            dist: dict[State, Fraction] = {}
            for z, prob in arena.transitions[(s, a)].items():
                m2 = memory.update(m, s, a, z)
                nxt = (z, m2)
                dist[nxt] = dist.get(nxt, ZERO) + prob
                if nxt not in seen:
                    seen.add(nxt)
                    nodes.append(nxt)
            transitions[(node, a)] = dist
    product = Arena(
        players=arena.players,
        states=tuple(nodes),
        initial=root,
        controller={(s, m): arena.controller[s] for (s, m) in nodes},
        actions={(s, m): arena.actions[s] for (s, m) in nodes},
        transitions=transitions,
    )
    projection = {node: node for node in nodes}
    return product, projection


@dataclass
class _Chain:
    """Markov chain induced by a full profile: one action per node."""

    nodes: list
    index: dict
    state_of: list[State]
    action_of: list[Action]
    edges: list[list[tuple[int, Fraction]]]  # per node: (target index, prob)


def _build_chain(arena: Arena, profile: StrategyProfile) -> _Chain:
    order = arena.players
    mems0 = tuple(profile.strategy(p).memory.initial(arena.initial) for p in order)
    root = (arena.initial, mems0)
    nodes = [root]
    index = {root: 0}
    state_of: list[State] = []
    action_of: list[Action] = []
    edges: list[list[tuple[int, Fraction]]] = []
    i = 0
    while i < len(nodes):
        s, mems = nodes[i]
        i += 1
        mover = arena.controller[s]
        k = order.index(mover)
        strat = profile.strategy(mover)
        a = strat.choice(mems[k], s)
        if a not in arena.actions[s]:
            raise ValueError(f"profile picked unavailable action {a!r} at {s!r}")
        state_of.append(s)
        action_of.append(a)
        out: list[tuple[int, Fraction]] = []
        for z, prob in arena.transitions[(s, a)].items():
            mems2 = tuple(
                profile.strategy(p).memory.update(mems[j], s, a, z)
                for j, p in enumerate(order)
            )
            nxt = (z, mems2)
            if nxt not in index:
                index[nxt] = len(nodes)
                nodes.append(nxt)
            out.append((index[nxt], prob))
        edges.append(out)
    return _Chain(nodes=nodes, index=index, state_of=state_of, action_of=action_of, edges=edges)


def _chain_discounted(chain: _Chain, spec: Discounted) -> Fraction:
    n = len(chain.nodes)
    beta = spec.discount
    matrix = [[ONE if r == c else ZERO for c in range(n)] for r in range(n)]
    rhs = []
    for r in range(n):
        for target, prob in chain.edges[r]:
            matrix[r][target] -= beta * prob
        rhs.append(spec.reward(chain.state_of[r], chain.action_of[r]))
    values = solve_single(matrix, rhs)
    return values[0]


def _chain_finite_horizon(chain: _Chain, spec: FiniteHorizon) -> Fraction:
    dist = {0: ONE}
    total = ZERO
    for t in range(spec.horizon):
        nxt: dict[int, Fraction] = {}
        for node, mass in dist.items():
            total += mass * spec.reward(t, chain.state_of[node], chain.action_of[node])
            for target, prob in chain.edges[node]:
                nxt[target] = nxt.get(target, ZERO) + mass * prob
        dist = nxt
    return total


def _chain_capped_hitting(chain: _Chain, spec: CappedHitting) -> Fraction:
    total = ZERO
    if chain.state_of[0] in spec.target:
        return spec.value(0)
    alive = {0: ONE}
    for t in range(1, spec.cap + 1):
        nxt: dict[int, Fraction] = {}
        for node, mass in alive.items():
            for target, prob in chain.edges[node]:
                nxt[target] = nxt.get(target, ZERO) + mass * prob
        alive = {}
        for node, mass in nxt.items():
            if chain.state_of[node] in spec.target:
                total += mass * spec.value(t)
            else:
                alive[node] = mass
        if not alive:
            return total
    remaining = sum(alive.values(), ZERO)
    return total + remaining * spec.value(UNREACHED)


def _strongly_connected_components(n: int, out_edges: list[list[int]]) -> list[list[int]]:
    """Tarjan, iterative. Returns components in reverse topological order."""
    index_counter = [0]
    stack: list[int] = []
    lowlink = [0] * n
    number = [-1] * n
    on_stack = [False] * n
    components: list[list[int]] = []
    for root in range(n):
        if number[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            node, pi = work[-1]
            if pi == 0:
                number[node] = lowlink[node] = index_counter[0]
                index_counter[0] += 1
                stack.append(node)
                on_stack[node] = True
            advanced = False
            for j in range(pi, len(out_edges[node])):
                succ = out_edges[node][j]
                if number[succ] == -1:
                    work[-1] = (node, j + 1)
                    work.append((succ, 0))
                    advanced = True
                    break
                if on_stack[succ]:
                    lowlink[node] = min(lowlink[node], number[succ])
            if advanced:
                continue
            if lowlink[node] == number[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == node:
                        break
                components.append(comp)
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])
    return components


def _chain_reached_set(chain: _Chain, spec: ReachedSet) -> Fraction:
    # augment the chain with the reached-label tracker, find the recurrent
    # classes (where the tracker is necessarily constant) and solve for the
    # expected terminal value
    labels_of = spec.labels_of
    root = (0, labels_of(chain.state_of[0]))
    nodes = [root]
    index = {root: 0}
    edges: list[list[tuple[int, Fraction]]] = []
    i = 0
    while i < len(nodes):
        node, reached = nodes[i]
        i += 1
        out: list[tuple[int, Fraction]] = []
        for target, prob in chain.edges[node]:
            nxt = (target, reached | labels_of(chain.state_of[target]))
            if nxt not in index:
                index[nxt] = len(nodes)
                nodes.append(nxt)
            out.append((index[nxt], prob))
        edges.append(out)
    n = len(nodes)
    plain = [[t for t, _ in edges[r]] for r in range(n)]
    comps = _strongly_connected_components(n, plain)
    comp_of = [0] * n
    for ci, comp in enumerate(comps):
        for node in comp:
            comp_of[node] = ci
    closed = [True] * len(comps)
    for r in range(n):
        for t in plain[r]:
            if comp_of[t] != comp_of[r]:
                closed[comp_of[r]] = False
    value = [None] * n
    for ci, comp in enumerate(comps):
        if closed[ci]:
            reached_values = {nodes[node][1] for node in comp}
            assert len(reached_values) == 1, "tracker must be constant on a closed class"
            v = spec.value(next(iter(reached_values)))
            for node in comp:
                value[node] = v
    transient = [r for r in range(n) if value[r] is None]
    if not transient:
        return value[0]
    pos = {node: j for j, node in enumerate(transient)}
    size = len(transient)
    matrix = [[ONE if r == c else ZERO for c in range(size)] for r in range(size)]
    rhs = [ZERO] * size
    for node in transient:
        r = pos[node]
        for target, prob in edges[node]:
            if value[target] is None:
                matrix[r][pos[target]] -= prob
            else:
                rhs[r] += prob * value[target]
    solved = solve_single(matrix, rhs)
    for node in transient:
        value[node] = solved[pos[node]]
    return value[0]


def expected_payoffs(
    arena: Arena, specs: Mapping[Player, PayoffSpec], profile: StrategyProfile
) -> dict[Player, Fraction]:
    """Exact expected payoff of every player under a full profile.

    The profile induces a finite Markov chain on (state, memories) nodes;
    each family is then evaluated on that chain with exact arithmetic."""
    chain = _build_chain(arena, profile)
    out: dict[Player, Fraction] = {}
    for p in arena.players:
        spec = specs[p]
        if isinstance(spec, Discounted):
            out[p] = _chain_discounted(chain, spec)
        elif isinstance(spec, FiniteHorizon):
            out[p] = _chain_finite_horizon(chain, spec)
        elif isinstance(spec, ReachedSet):
            out[p] = _chain_reached_set(chain, spec)
        elif isinstance(spec, CappedHitting):
            out[p] = _chain_capped_hitting(chain, spec)
        else:
            raise TypeError(f"unknown payoff spec {spec!r}")
    return out


def induced_lasso(arena: Arena, profile: StrategyProfile) -> Lasso:
    """The unique play of a profile on a deterministic arena, as a lasso."""
    if not arena.is_deterministic:
        raise ValueError("induced lasso requires a deterministic arena")
    order = arena.players
    mems = tuple(profile.strategy(p).memory.initial(arena.initial) for p in order)
    node = (arena.initial, mems)
    seen = {node: 0}
    steps: list[tuple[State, Action]] = []
    while True:
        s, ms = node
        mover = arena.controller[s]
        k = order.index(mover)
        a = profile.strategy(mover).choice(ms[k], s)
        steps.append((s, a))
        z = arena.det_successor(s, a)
        mems2 = tuple(
            profile.strategy(p).memory.update(ms[j], s, a, z) for j, p in enumerate(order)
        )
        node = (z, mems2)
        if node in seen:
            cut = seen[node]
            return Lasso(prefix=tuple(steps[:cut]), cycle=tuple(steps[cut:]))
        seen[node] = len(steps)
