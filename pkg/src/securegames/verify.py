"""Exact equilibrium checkers and enumeration oracles.

Everything here reduces deviation questions to finite single-agent problems:
fix everyone except one player, build the product of the arena with the fixed
players' strategy memories (their moves become forced), and analyze what the
free player can achieve on that product. Per payoff family:

- discounted: exact policy iteration on the product; payoff-preserving
  deviations are exactly the plays confined to value-conserving actions, so
  second-level questions (opponent sums, per-opponent minima) become solves
  on the conserving restriction;
- finite horizon: the product unrolled to the horizon; on deterministic
  arenas every deviation is payoff-equivalent to one of finitely many action
  scripts, which are enumerated outright;
- reached-set / capped hitting (deterministic): every infinite play settles
  into a cycle of the product graph, so the achievable payoff vectors are
  exactly those of reachable product cycles ("configurations"), enumerated
  exactly.

All comparisons are exact rationals; every reported violation carries a
deviation strategy whose replay through expected_payoffs reproduces the
claimed payoff vector.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .arena import (
    ONE,
    ZERO,
    Action,
    Arena,
    CappedHitting,
    Discounted,
    FiniteHorizon,
    FiniteMemoryStrategy,
    OutcomeTracker,
    Player,
    ReachedSet,
    State,
    StrategyProfile,
    _strongly_connected_components,
    expected_payoffs,
    positional_strategy,
    scripted_strategy,
    validate_arena,
    validate_payoffs,
)
from .construct import HORIZON_END, clocked_expansion
from .zerosum import solve_discounted, solve_total_dag


class UnsupportedCheckError(ValueError):
    """The requested property cannot be decided exactly for this input."""


class BoundsExceededError(ValueError):
    """The enumeration oracle would exceed its configured size limit."""


# ---------------------------------------------------------------------------
# report types


@dataclass
class Violation:
    """A concrete counterexample: who deviates, how, and what everyone gets."""

    player: Player
    deviation: FiniteMemoryStrategy
    payoffs: dict[Player, Fraction]


@dataclass
class CheckResult:
    """Outcome of one property check. holds is None when the property could
    not be decided for this input (see note)."""

    name: str
    holds: bool | None
    witness: Violation | None = None
    note: str = ""


@dataclass
class EquilibriumReport:
    payoffs: dict[Player, Fraction]
    checks: dict[str, CheckResult]

    def check(self, name: str) -> CheckResult:
        return self.checks[name]


# ---------------------------------------------------------------------------
# the deviation product: one player free, everyone else forced


class _OpponentsMemory:
    """Joint memory vector of the fixed players, updated componentwise."""

    def __init__(self, order: tuple[Player, ...], strategies: Mapping[Player, FiniteMemoryStrategy]):
        self.order = order
        self.parts = tuple(strategies[p].memory for p in order)

    def initial(self, state: State):
        return tuple(m.initial(state) for m in self.parts)

    def update(self, memory, state, action, successor):
        return tuple(
            m.update(v, state, action, successor) for m, v in zip(self.parts, memory)
        )


@dataclass
class DeviationProduct:
    """Product arena whose states are (base state, opponents' memory vector).

    The deviator keeps every available action; at everyone else's states the
    single forced action is the fixed strategy's choice."""

    deviator: Player
    base: Arena
    arena: Arena
    memory: _OpponentsMemory


def deviation_product(arena: Arena, profile: StrategyProfile, deviator: Player) -> DeviationProduct:
    order = tuple(p for p in arena.players if p != deviator)
    strategies = {p: profile.strategy(p) for p in order}
    joint = _OpponentsMemory(order, strategies)
    slot = {p: k for k, p in enumerate(order)}

    root = (arena.initial, joint.initial(arena.initial))
    nodes = [root]
    index = {root: 0}
    controller: dict = {}
    actions: dict = {}
    transitions: dict = {}
    i = 0
    while i < len(nodes):
        node = nodes[i]
        s, vec = node
        i += 1
        who = arena.controller[s]
        controller[node] = who
        if who == deviator:
            avail = arena.actions[s]
        else:
            forced = strategies[who].choice(vec[slot[who]], s)
            if forced not in arena.actions[s]:
                raise ValueError(
                    f"profile picked unavailable action {forced!r} at {s!r}"
                )
            avail = (forced,)
        actions[node] = tuple(avail)
        for a in avail:
            dist: dict = {}
            for z, prob in arena.transitions[(s, a)].items():
                vec2 = joint.update(vec, s, a, z)
                nxt = (z, vec2)
                if nxt not in index:
                    index[nxt] = len(nodes)
                    nodes.append(nxt)
                dist[nxt] = dist.get(nxt, ZERO) + prob
            transitions[(node, a)] = dist
    product = Arena(
        players=arena.players,
        states=tuple(nodes),
        initial=root,
        controller=controller,
        actions=actions,
        transitions=transitions,
    )
    return DeviationProduct(deviator=deviator, base=arena, arena=product, memory=joint)


def _product_witness(dp: DeviationProduct, policy: Mapping) -> FiniteMemoryStrategy:
    def choose(vec, state):
        return policy[(state, vec)]

    return FiniteMemoryStrategy(owner=dp.deviator, memory=dp.memory, choice=choose)


# ---------------------------------------------------------------------------
# discounted analysis


class _DiscountedAnalysis:
    def __init__(self, arena: Arena, specs, profile: StrategyProfile):
        self.arena = arena
        self.specs = specs
        self.profile = profile
        self.players = arena.players
        self.beta = specs[arena.players[0]].discount
        self.payoffs = expected_payoffs(arena, specs, profile)
        self._entries: dict[Player, dict] = {}

    @staticmethod
    def _lift(product: Arena, rewards: Mapping) -> dict:
        out = {}
        for node in product.states:
            s = node[0]
            for a in product.actions[node]:
                r = rewards.get((s, a), ZERO)
                if r:
                    out[(node, a)] = r
        return out

    def _entry(self, i: Player) -> dict:
        if i not in self._entries:
            dp = deviation_product(self.arena, self.profile, i)
            sol = solve_discounted(
                dp.arena, self._lift(dp.arena, self.specs[i].rewards), self.beta, maximizer=i
            )
            # payoff-preserving deviations live exactly on the actions whose
            # one-step value matches the state value
            keep = {
                n: tuple(
                    a for a in dp.arena.actions[n] if sol.action_values[(n, a)] == sol.values[n]
                )
                for n in dp.arena.states
            }
            self._entries[i] = {
                "dp": dp,
                "sol": sol,
                "value": sol.values[dp.arena.initial],
                "restricted": dp.arena.restricted(keep),
            }
        return self._entries[i]

    def best(self, i: Player):
        e = self._entry(i)
        return e["value"], _product_witness(e["dp"], e["sol"].policy)

    def _summed_rewards(self, players) -> dict:
        out: dict = {}
        for j in players:
            for key, r in self.specs[j].rewards.items():
                out[key] = out.get(key, ZERO) + r
        return out

    def _min_over_preserving(self, i: Player, rewards: Mapping):
        e = self._entry(i)
        sol = solve_discounted(
            e["restricted"], self._lift(e["restricted"], rewards), self.beta, maximizer=None
        )
        return sol.values[e["restricted"].initial], _product_witness(e["dp"], sol.policy)

    def lexi(self, i: Player):
        others = [j for j in self.players if j != i]
        low, witness = self._min_over_preserving(i, self._summed_rewards(others))
        return self._entry(i)["value"], low, witness

    def secure_violation(self, i: Player):
        others = [j for j in self.players if j != i]
        if not others:
            return None
        if len(others) == 1:
            j = others[0]
            low, witness = self._min_over_preserving(i, self.specs[j].rewards)
            if low < self.payoffs[j]:
                return witness
            return None
        # with two or more opponents the weakly-worse-for-all question couples
        # their payoffs; a dropped opponent sum proves nothing either way, so
        # decide through the sum bound and the min-sum witness when possible
        _, low_sum, witness = self.lexi(i)
        if low_sum >= sum(self.payoffs[j] for j in others):
            return None
        vec = _replayed(self, i, witness)
        if all(vec[j] <= self.payoffs[j] for j in others) and any(
            vec[j] < self.payoffs[j] for j in others
        ):
            return witness
        raise UnsupportedCheckError(
            "plain security under discounting with several opponents is decided "
            "only when the opponent-sum bound settles it; use check_sum_secure"
        )

    def strongly_violation(self, i: Player):
        for j in self.players:
            if j == i:
                continue
            low, witness = self._min_over_preserving(i, self.specs[j].rewards)
            if low < self.payoffs[j]:
                return witness
        return None


# ---------------------------------------------------------------------------
# finite-horizon analysis


class _PlanClock:
    """Counts periods up to the horizon, then freezes."""

    def __init__(self, horizon: int):
        self.horizon = horizon

    def initial(self, state: State):
        return 0

    def update(self, memory, state, action, successor):
        return memory if memory >= self.horizon else memory + 1


def _plan_strategy(owner: Player, base: Arena, plan: list[Action], horizon: int) -> FiniteMemoryStrategy:
    def choose(t, state):
        if t < horizon:
            return plan[t]
        return base.actions[state][0]

    return FiniteMemoryStrategy(owner=owner, memory=_PlanClock(horizon), choice=choose)


class _HorizonAnalysis:
    def __init__(self, arena: Arena, specs, profile: StrategyProfile):
        self.arena = arena
        self.specs = specs
        self.profile = profile
        self.players = arena.players
        self.horizon = specs[arena.players[0]].horizon
        self.payoffs = expected_payoffs(arena, specs, profile)
        self._vectors: dict[Player, list] = {}
        self._solves: dict[Player, dict] = {}

    # --- deterministic path: enumerate action scripts outright

    def vectors(self, i: Player):
        """Distinct payoff vectors of i's deviations, with witnesses."""
        if not self.arena.is_deterministic:
            raise UnsupportedCheckError(
                "finite-horizon security checks need a deterministic arena"
            )
        if i in self._vectors:
            return self._vectors[i]
        dp = deviation_product(self.arena, self.profile, i)
        out = []
        seen = {}

        def walk(node, t, totals, plan):
            if t == self.horizon:
                vec = dict(totals)
                key = tuple(vec[p] for p in self.players)
                if key not in seen:
                    witness = _plan_strategy(i, self.arena, list(plan), self.horizon)
                    seen[key] = True
                    out.append((vec, witness))
                return
            s = node[0]
            for a in dp.arena.actions[node]:
                z = dp.arena.det_successor(node, a)
                for p in self.players:
                    totals[p] += self.specs[p].reward(t, s, a)
                plan.append(a)
                walk(z, t + 1, totals, plan)
                plan.pop()
                for p in self.players:
                    totals[p] -= self.specs[p].reward(t, s, a)

        walk(dp.arena.initial, 0, {p: ZERO for p in self.players}, [])
        self._vectors[i] = out
        return out

    # --- stochastic path: exact solves on the unrolled product

    def _solve_entry(self, i: Player) -> dict:
        if i not in self._solves:
            dp = deviation_product(self.arena, self.profile, i)
            unrolled = clocked_expansion(dp.arena, self.horizon)

            def lift(players) -> dict:
                out: dict = {}
                for st in unrolled.states:
                    if st == HORIZON_END:
                        continue
                    (s, _vec), t = st[0], st[1]
                    for a in unrolled.actions[st]:
                        r = sum((self.specs[p].reward(t, s, a) for p in players), ZERO)
                        if r:
                            out[(st, a)] = r
                return out

            sol = solve_total_dag(unrolled, lift([i]), maximizer=i)
            keep = {
                n: tuple(
                    a for a in unrolled.actions[n] if sol.action_values[(n, a)] == sol.values[n]
                )
                for n in unrolled.states
            }
            self._solves[i] = {
                "dp": dp,
                "unrolled": unrolled,
                "lift": lift,
                "sol": sol,
                "restricted": unrolled.restricted(keep),
            }
        return self._solves[i]

    def _clocked_witness(self, dp: DeviationProduct, policy: Mapping) -> FiniteMemoryStrategy:
        horizon = self.horizon
        inner = dp.memory

        class _ClockedOpponents:
            def initial(self, state):
                return (0, inner.initial(state))

            def update(self, memory, state, action, successor):
                t, vec = memory
                if t >= horizon:
                    return memory
                return (t + 1, inner.update(vec, state, action, successor))

        base = self.arena

        def choose(memory, state):
            t, vec = memory
            if t >= horizon:
                return base.actions[state][0]
            return policy[((state, vec), t)]

        return FiniteMemoryStrategy(owner=dp.deviator, memory=_ClockedOpponents(), choice=choose)

    def best(self, i: Player):
        if self.arena.is_deterministic:
            vecs = self.vectors(i)
            vec, witness = max(vecs, key=lambda entry: entry[0][i])
            return vec[i], witness
        e = self._solve_entry(i)
        return e["sol"].values[e["unrolled"].initial], self._clocked_witness(e["dp"], e["sol"].policy)

    def lexi(self, i: Player):
        others = [j for j in self.players if j != i]
        if self.arena.is_deterministic:
            vecs = self.vectors(i)
            value = max(entry[0][i] for entry in vecs)
            best = None
            for vec, witness in vecs:
                if vec[i] != value:
                    continue
                opp = sum(vec[j] for j in others)
                if best is None or opp < best[0]:
                    best = (opp, witness)
            return value, best[0], best[1]
        e = self._solve_entry(i)
        value = e["sol"].values[e["unrolled"].initial]
        sol2 = solve_total_dag(e["restricted"], e["lift"](others), maximizer=None)
        return value, sol2.values[e["restricted"].initial], self._clocked_witness(e["dp"], sol2.policy)

    def secure_violation(self, i: Player):
        return _enumerated_secure_violation(self, i)

    def strongly_violation(self, i: Player):
        return _enumerated_strongly_violation(self, i)


# ---------------------------------------------------------------------------
# reached-set / capped-hitting analysis (deterministic)

_CONFIG_NODE_LIMIT = 500_000


class _OutcomeAnalysis:
    def __init__(self, arena: Arena, specs, profile: StrategyProfile):
        self.arena = arena
        self.specs = specs
        self.profile = profile
        self.players = arena.players
        self.payoffs = expected_payoffs(arena, specs, profile)
        labels: tuple = ()
        for p in arena.players:
            if isinstance(specs[p], ReachedSet):
                labels = specs[p].target_labels
                break
        self.labels = labels
        self.part_owner: list[Player] = []
        parts = []
        for p in arena.players:
            if isinstance(specs[p], CappedHitting):
                self.part_owner.append(p)
                parts.append((specs[p].target, specs[p].cap))
        self.parts = tuple(parts)
        self._vector_cache: dict[Player, list] = {}

    def _config_value(self, reached: frozenset, outcomes: tuple) -> dict[Player, Fraction]:
        vec = {}
        for p in self.players:
            spec = self.specs[p]
            if isinstance(spec, ReachedSet):
                vec[p] = spec.value_map[reached]
            else:
                vec[p] = spec.value_map[outcomes[self.part_owner.index(p)]]
        return vec

    def vectors(self, i: Player):
        """Payoff vectors of all reachable stable cycles of i's deviation
        product, one witness lasso per distinct configuration."""
        if not self.arena.is_deterministic:
            raise UnsupportedCheckError(
                "reached-set and capped-hitting checks need a deterministic arena"
            )
        if i in self._vector_cache:
            return self._vector_cache[i]
        dp = deviation_product(self.arena, self.profile, i)
        tracker = OutcomeTracker(self.labels, self.parts)

        s0 = self.arena.initial
        out0: list = [None] * len(self.parts)
        for j, outcome in tracker.initial_resolutions(s0):
            out0[j] = outcome
        root = (dp.arena.initial, tracker.initial(s0), tuple(out0))
        nodes = [root]
        index = {root: 0}
        edges: list[list[tuple[Action, int]]] = []
        parent: list = [None]
        k = 0
        while k < len(nodes):
            pnode, tm, outs = nodes[k]
            row = []
            for a in dp.arena.actions[pnode]:
                z = dp.arena.det_successor(pnode, a)
                tm2 = tracker.update(tm, pnode[0], a, z[0])
                outs2 = list(outs)
                for j, outcome in tracker.resolutions(tm, z[0]):
                    outs2[j] = outcome
                nxt = (z, tm2, tuple(outs2))
                if nxt not in index:
                    if len(nodes) >= _CONFIG_NODE_LIMIT:
                        raise UnsupportedCheckError(
                            "deviation analysis exceeds the configuration limit"
                        )
                    index[nxt] = len(nodes)
                    nodes.append(nxt)
                    parent.append((k, a))
                row.append((a, index[nxt]))
            edges.append(row)
            k += 1

        plain = [[t for _, t in row] for row in edges]
        comps = _strongly_connected_components(len(nodes), plain)
        cyclic = set()
        for comp in comps:
            if len(comp) > 1 or comp[0] in plain[comp[0]]:
                cyclic.update(comp)
        comp_of = [0] * len(nodes)
        for ci, comp in enumerate(comps):
            for n in comp:
                comp_of[n] = ci

        def path_actions(node: int) -> list[Action]:
            acts = []
            while parent[node] is not None:
                prev, a = parent[node]
                acts.append(a)
                node = prev
            acts.reverse()
            return acts

        def cycle_actions(y: int) -> list[Action]:
            # shortest loop through y staying inside y's component
            comp = comp_of[y]
            frontier = [(t, [a]) for a, t in edges[y] if comp_of[t] == comp]
            seen = set()
            while frontier:
                nxt = []
                for node, acts in frontier:
                    if node == y:
                        return acts
                    if node in seen:
                        continue
                    seen.add(node)
                    for a, t in edges[node]:
                        if comp_of[t] == comp:
                            nxt.append((t, acts + [a]))
                frontier = nxt
            raise AssertionError("cyclic component without a loop")

        configs: dict = {}
        for n in range(len(nodes)):
            if n not in cyclic:
                continue
            _, tm, outs = nodes[n]
            key = (tm[0], outs)
            if key not in configs:
                configs[key] = n
        out = []
        for (reached, outs), n in configs.items():
            vec = self._config_value(reached, outs)
            witness = scripted_strategy(i, path_actions(n), cycle_actions(n))
            out.append((vec, witness))
        self._vector_cache[i] = out
        return out

    def best(self, i: Player):
        vecs = self.vectors(i)
        vec, witness = max(vecs, key=lambda entry: entry[0][i])
        return vec[i], witness

    def lexi(self, i: Player):
        vecs = self.vectors(i)
        others = [j for j in self.players if j != i]
        value = max(entry[0][i] for entry in vecs)
        best = None
        for vec, witness in vecs:
            if vec[i] != value:
                continue
            opp = sum(vec[j] for j in others)
            if best is None or opp < best[0]:
                best = (opp, witness)
        return value, best[0], best[1]

    def secure_violation(self, i: Player):
        return _enumerated_secure_violation(self, i)

    def strongly_violation(self, i: Player):
        return _enumerated_strongly_violation(self, i)


def _enumerated_secure_violation(analysis, i: Player):
    """Equal-value deviation, every opponent weakly worse, someone strictly
    worse. Decided from the finite vector set; the two equivalent phrasings
    of the property are evaluated independently and must agree."""
    c = analysis.payoffs
    others = [j for j in analysis.players if j != i]
    harmful = None
    unanswered = None
    for vec, witness in analysis.vectors(i):
        if vec[i] != c[i]:
            continue
        if all(vec[j] <= c[j] for j in others) and any(vec[j] < c[j] for j in others):
            if harmful is None:
                harmful = witness
        if any(vec[j] < c[j] for j in analysis.players) and not any(
            vec[j] > c[j] for j in analysis.players
        ):
            if unanswered is None:
                unanswered = witness
    assert (harmful is None) == (unanswered is None), "security phrasings disagree"
    return harmful


def _enumerated_strongly_violation(analysis, i: Player):
    c = analysis.payoffs
    for vec, witness in analysis.vectors(i):
        if vec[i] != c[i]:
            continue
        if any(vec[j] < c[j] for j in analysis.players if j != i):
            return witness
    return None


# ---------------------------------------------------------------------------
# public checkers


def _analysis(arena: Arena, specs, profile: StrategyProfile):
    report = validate_arena(arena)
    if not report.ok:
        raise ValueError("invalid arena: " + "; ".join(report.violations))
    report = validate_payoffs(arena, specs)
    if not report.ok:
        raise ValueError("invalid payoffs: " + "; ".join(report.violations))
    family = type(specs[arena.players[0]])
    if family is Discounted:
        return _DiscountedAnalysis(arena, specs, profile)
    if family is FiniteHorizon:
        return _HorizonAnalysis(arena, specs, profile)
    return _OutcomeAnalysis(arena, specs, profile)


def best_response(arena: Arena, specs, profile: StrategyProfile, player: Player):
    """Highest payoff `player` can get against the rest of the profile, with
    an optimal deviation as witness."""
    return _analysis(arena, specs, profile).best(player)


def lexi_best_response(arena: Arena, specs, profile: StrategyProfile, player: Player):
    """Best own payoff, then the least opponents' sum among deviations that
    attain it; the witness attains both levels."""
    return _analysis(arena, specs, profile).lexi(player)


def _replayed(analysis, i: Player, witness: FiniteMemoryStrategy) -> dict[Player, Fraction]:
    return expected_payoffs(
        analysis.arena, analysis.specs, analysis.profile.with_swapped(i, witness)
    )


def _nash_result(analysis) -> CheckResult:
    for i in analysis.players:
        value, witness = analysis.best(i)
        assert value >= analysis.payoffs[i], "own strategy beats the best response"
        if value > analysis.payoffs[i]:
            vec = _replayed(analysis, i, witness)
            assert vec[i] == value, "witness replay does not attain the claimed value"
            return CheckResult("nash", False, Violation(i, witness, vec))
    return CheckResult("nash", True)


def _secure_result(analysis) -> CheckResult:
    nash = _nash_result(analysis)
    if not nash.holds:
        return CheckResult("secure", False, nash.witness, note="not a Nash equilibrium")
    for i in analysis.players:
        witness = analysis.secure_violation(i)
        if witness is not None:
            vec = _replayed(analysis, i, witness)
            assert vec[i] == analysis.payoffs[i]
            return CheckResult("secure", False, Violation(i, witness, vec))
    return CheckResult("secure", True)


def _sum_secure_result(analysis) -> CheckResult:
    nash = _nash_result(analysis)
    if not nash.holds:
        return CheckResult("sum_secure", False, nash.witness, note="not a Nash equilibrium")
    for i in analysis.players:
        value, low, witness = analysis.lexi(i)
        assert value == analysis.payoffs[i]
        current = sum(analysis.payoffs[j] for j in analysis.players if j != i)
        if low < current:
            vec = _replayed(analysis, i, witness)
            assert sum(vec[j] for j in analysis.players if j != i) == low
            return CheckResult("sum_secure", False, Violation(i, witness, vec))
    return CheckResult("sum_secure", True)


def _strongly_secure_result(analysis) -> CheckResult:
    nash = _nash_result(analysis)
    if not nash.holds:
        return CheckResult(
            "strongly_secure", False, nash.witness, note="not a Nash equilibrium"
        )
    for i in analysis.players:
        witness = analysis.strongly_violation(i)
        if witness is not None:
            vec = _replayed(analysis, i, witness)
            assert vec[i] == analysis.payoffs[i]
            return CheckResult("strongly_secure", False, Violation(i, witness, vec))
    return CheckResult("strongly_secure", True)


def check_nash(arena: Arena, specs, profile: StrategyProfile) -> CheckResult:
    """No player gains by a unilateral deviation."""
    return _nash_result(_analysis(arena, specs, profile))


def check_secure(arena: Arena, specs, profile: StrategyProfile) -> CheckResult:
    """Nash, and no player can keep their own payoff while leaving every
    opponent weakly worse off and some opponent strictly worse off."""
    return _secure_result(_analysis(arena, specs, profile))


def check_sum_secure(arena: Arena, specs, profile: StrategyProfile) -> CheckResult:
    """Nash, and no payoff-preserving deviation lowers the sum of the
    opponents' payoffs."""
    return _sum_secure_result(_analysis(arena, specs, profile))


def check_strongly_secure(arena: Arena, specs, profile: StrategyProfile) -> CheckResult:
    """Nash, and every payoff-preserving deviation leaves every single
    opponent weakly better off."""
    return _strongly_secure_result(_analysis(arena, specs, profile))


_ALL_CHECKS = ("nash", "secure", "sum_secure", "strongly_secure")


def verify_profile(
    arena: Arena, specs, profile: StrategyProfile, include: tuple[str, ...] = _ALL_CHECKS
) -> EquilibriumReport:
    """Run the requested property checks, sharing one analysis, and bundle
    the results. Properties that cannot be decided for this input are
    reported with holds=None and an explanatory note."""
    analysis = _analysis(arena, specs, profile)
    runners = {
        "nash": _nash_result,
        "secure": _secure_result,
        "sum_secure": _sum_secure_result,
        "strongly_secure": _strongly_secure_result,
    }
    checks: dict[str, CheckResult] = {}
    for name in include:
        try:
            checks[name] = runners[name](analysis)
        except UnsupportedCheckError as err:
            checks[name] = CheckResult(name, None, note=str(err))

    def holds(name):
        return checks[name].holds if name in checks else None

    # the four properties form a chain; verify it on whatever was decided
    chain = ["strongly_secure", "sum_secure", "secure", "nash"]
    for stronger, weaker in itertools.combinations(chain, 2):
        if holds(stronger) is True and holds(weaker) is False:
            raise AssertionError(f"{stronger} holds but {weaker} fails; checker bug")
    return EquilibriumReport(payoffs=analysis.payoffs, checks=checks)


# ---------------------------------------------------------------------------
# enumeration oracles


@dataclass
class OracleEntry:
    table: dict
    payoffs: dict[Player, Fraction]


@dataclass
class OracleResult:
    strategy_class: str
    entries: list[OracleEntry] = field(default_factory=list)

    def payoff_vectors(self) -> list[dict[Player, Fraction]]:
        return [e.payoffs for e in self.entries]

    def contains_table(self, table: Mapping) -> bool:
        return any(e.table == dict(table) for e in self.entries)


def _positional_oracle(arena: Arena, specs, max_profiles: int) -> OracleResult:
    states = list(arena.states)
    pools = [arena.actions[s] for s in states]
    total = 1
    for pool in pools:
        total *= len(pool)
    if total > max_profiles:
        raise BoundsExceededError(f"{total} profiles exceed the limit {max_profiles}")

    cache: dict[tuple, dict] = {}

    def payoff_of(key: tuple) -> dict:
        if key not in cache:
            table = dict(zip(states, key))
            strategies = {}
            for p in arena.players:
                own = {s: table[s] for s in states if arena.controller[s] == p}
                strategies[p] = positional_strategy(p, own)
            cache[key] = expected_payoffs(arena, specs, StrategyProfile(strategies))
        return cache[key]

    own_slots = {
        p: [k for k, s in enumerate(states) if arena.controller[s] == p]
        for p in arena.players
    }

    def deviations(key: tuple, p: Player):
        slots = own_slots[p]
        for combo in itertools.product(*[pools[k] for k in slots]):
            dev = list(key)
            for k, a in zip(slots, combo):
                dev[k] = a
            yield tuple(dev)

    result = OracleResult(strategy_class="positional")
    for key in itertools.product(*pools):
        c = payoff_of(key)
        secure = True
        for p in arena.players:
            others = [j for j in arena.players if j != p]
            for dev in deviations(key, p):
                vec = payoff_of(dev)
                if vec[p] > c[p]:
                    secure = False
                    break
                if (
                    vec[p] == c[p]
                    and all(vec[j] <= c[j] for j in others)
                    and any(vec[j] < c[j] for j in others)
                ):
                    secure = False
                    break
            if not secure:
                break
        if secure:
            result.entries.append(OracleEntry(table=dict(zip(states, key)), payoffs=c))
    return result


def _horizon_histories(arena: Arena, horizon: int):
    """All play prefixes shorter than the horizon, as (history, state) pairs;
    a history is the tuple of (state, action, successor) steps so far."""
    frontier = [((), arena.initial, 0)]
    while frontier:
        history, s, t = frontier.pop()
        yield history, s
        if t + 1 >= horizon:
            continue
        for a in arena.actions[s]:
            for z in arena.transitions[(s, a)]:
                frontier.append((history + ((s, a, z),), z, t + 1))


class _HistoryMemory:
    """Remembers the full play prefix up to the horizon."""

    def __init__(self, horizon: int):
        self.horizon = horizon

    def initial(self, state: State):
        return ()

    def update(self, memory, state, action, successor):
        if len(memory) >= self.horizon:
            return memory
        return memory + ((state, action, successor),)


def _tree_oracle(arena: Arena, specs, max_profiles: int) -> OracleResult:
    horizon = specs[arena.players[0]].horizon
    slots = list(_horizon_histories(arena, horizon))
    pools = [arena.actions[s] for _, s in slots]
    total = 1
    for pool in pools:
        total *= len(pool)
    if total > max_profiles:
        raise BoundsExceededError(f"{total} profiles exceed the limit {max_profiles}")

    slot_index = {hs: k for k, hs in enumerate(slots)}
    own_slots = {
        p: [k for k, (_, s) in enumerate(slots) if arena.controller[s] == p]
        for p in arena.players
    }

    def payoff_of(key: tuple) -> dict[Player, Fraction]:
        def walk(history, s, t, weight):
            if t == horizon:
                return {p: ZERO for p in arena.players}
            a = key[slot_index[(history, s)]]
            totals = {p: weight * specs[p].reward(t, s, a) for p in arena.players}
            for z, prob in arena.transitions[(s, a)].items():
                sub = walk(history + ((s, a, z),), z, t + 1, weight * prob)
                for p in arena.players:
                    totals[p] += sub[p]
            return totals

        return walk((), arena.initial, 0, ONE)

    cache: dict[tuple, dict] = {}

    def cached_payoff(key: tuple) -> dict:
        if key not in cache:
            cache[key] = payoff_of(key)
        return cache[key]

    def deviations(key: tuple, p: Player):
        mine = own_slots[p]
        for combo in itertools.product(*[pools[k] for k in mine]):
            dev = list(key)
            for k, a in zip(mine, combo):
                dev[k] = a
            yield tuple(dev)

    result = OracleResult(strategy_class="horizon-tree")
    for key in itertools.product(*pools):
        c = cached_payoff(key)
        secure = True
        for p in arena.players:
            others = [j for j in arena.players if j != p]
            for dev in deviations(key, p):
                vec = cached_payoff(dev)
                if vec[p] > c[p]:
                    secure = False
                    break
                if (
                    vec[p] == c[p]
                    and all(vec[j] <= c[j] for j in others)
                    and any(vec[j] < c[j] for j in others)
                ):
                    secure = False
                    break
            if not secure:
                break
        if secure:
            table = {hs: key[k] for k, hs in enumerate(slots)}
            result.entries.append(OracleEntry(table=table, payoffs=c))
    return result


def oracle_enumerate(arena: Arena, specs, max_profiles: int = 1_000_000) -> OracleResult:
    """Exhaustively enumerate a finite strategy class, apply the security
    definition literally (deviations quantified within the class), and return
    every secure equilibrium with its payoff vector.

    Finite-horizon payoffs use full action trees up to the horizon, where the
    class is payoff-exhaustive; other families use positional profiles."""
    report = validate_arena(arena)
    if not report.ok:
        raise ValueError("invalid arena: " + "; ".join(report.violations))
    report = validate_payoffs(arena, specs)
    if not report.ok:
        raise ValueError("invalid payoffs: " + "; ".join(report.violations))
    family = type(specs[arena.players[0]])
    if family is FiniteHorizon:
        return _tree_oracle(arena, specs, max_profiles)
    return _positional_oracle(arena, specs, max_profiles)


def project_to_tree_table(arena: Arena, horizon: int, profile: StrategyProfile) -> dict:
    """The choices a profile makes at every history of length < horizon, in
    the same table format the tree oracle uses."""
    table = {}
    for history, s in _horizon_histories(arena, horizon):
        strat = profile.strategy(arena.controller[s])
        mem = strat.memory.initial(history[0][0] if history else s)
        for step_state, action, successor in history:
            mem = strat.memory.update(mem, step_state, action, successor)
        table[(history, s)] = strat.choice(mem, s)
    return table
