"""Zero-sum solvers: hand-frozen values, brute-force agreement, determinism."""

import random
from fractions import Fraction

import pytest

from oracles import (
    brute_discounted,
    brute_outcome,
    iter_tables,
    outcome_play_value,
)
from securegames.arena import Arena, UNREACHED
from securegames.zerosum import (
    OutcomeObjective,
    OutcomeStructure,
    solve_discounted,
    solve_outcome_game,
    solve_reached_set,
    solve_total_dag,
)

F = Fraction


def det(target):
    return {target: F(1)}


def arena_of(players, initial, rows):
    states = tuple(s for s, _, _ in rows)
    return Arena(
        players=tuple(players),
        states=states,
        initial=initial,
        controller={s: p for s, p, _ in rows},
        actions={s: tuple(moves) for s, _, moves in rows},
        transitions={(s, a): dict(moves[a]) for s, _, moves in rows for a in moves},
    )


def golden_chain():
    # s0 (player 1) can enter via s1 (player 2) a rewarding sink, or bail out
    return arena_of(
        [1, 2],
        "s0",
        [
            ("s0", 1, {"x": det("s1"), "y": det("sink_y")}),
            ("s1", 2, {"p": det("sink_p"), "q": det("sink_y")}),
            ("sink_p", 1, {"loop": det("sink_p")}),
            ("sink_y", 1, {"loop": det("sink_y")}),
        ],
    )


R1 = {("sink_p", "loop"): F(1)}
R2 = {("sink_p", "loop"): F(1)}
BETA = F(1, 2)


def test_discounted_hand_values_for_player_one_view():
    arena = golden_chain()
    sol = solve_discounted(arena, R1, BETA, maximizer=1)
    assert sol.values == {"s0": F(0), "s1": F(0), "sink_p": F(2), "sink_y": F(0)}
    # player 2 blocks at s1; both of player 1's openings are then worthless
    assert sol.policy["s1"] == "q"
    assert sol.action_values[("s1", "p")] == F(1)
    assert sol.action_values[("s0", "x")] == F(0)
    assert sol.action_values[("s0", "y")] == F(0)
    # canonical tie break: first optimal action in declaration order
    assert sol.policy["s0"] == "x"


def test_discounted_hand_values_for_player_two_view():
    arena = golden_chain()
    sol = solve_discounted(arena, R2, BETA, maximizer=2)
    assert sol.values == {"s0": F(0), "s1": F(1), "sink_p": F(2), "sink_y": F(0)}
    assert sol.policy["s1"] == "p"
    assert sol.policy["s0"] == "y"  # player 1 denies: 0 beats 1/2
    assert sol.action_values[("s0", "x")] == F(1, 2)


def test_discounted_minimize_everywhere():
    arena = golden_chain()
    sol = solve_discounted(arena, R1, BETA, maximizer=None)
    assert sol.values["s0"] == F(0)
    assert sol.values["sink_p"] == F(2)
    assert sol.policy["s1"] == "q"


def random_discounted_instance(rng):
    n = rng.randrange(2, 5)
    states = tuple(f"s{i}" for i in range(n))
    rows = []
    for s in states:
        moves = {}
        for k in range(rng.randrange(1, 3)):
            if rng.randrange(3) == 0 and n > 1:
                pair = rng.sample(range(n), 2)
                moves[f"a{k}"] = {states[pair[0]]: F(1, 2), states[pair[1]]: F(1, 2)}
            else:
                moves[f"a{k}"] = det(states[rng.randrange(n)])
        rows.append((s, (1, 2)[rng.randrange(2)], moves))
    arena = arena_of((1, 2), states[0], rows)
    rewards = {
        (s, a): F(rng.randrange(-4, 5), rng.randrange(1, 5))
        for s in arena.states
        for a in arena.actions[s]
        if rng.randrange(2) == 0
    }
    return arena, rewards


def test_discounted_matches_brute_force_on_random_games():
    for seed in range(25):
        rng = random.Random(1000 + seed)
        arena, rewards = random_discounted_instance(rng)
        sol = solve_discounted(arena, rewards, BETA, maximizer=1)
        maxmin, minmax = brute_discounted(arena, rewards, BETA, maximizer=1)
        assert maxmin == minmax == sol.values[arena.initial], f"seed {seed}"


def test_discounted_is_deterministic_across_repeat_solves():
    arena, rewards = random_discounted_instance(random.Random(4242))
    a = solve_discounted(arena, rewards, BETA, maximizer=1)
    b = solve_discounted(arena, rewards, BETA, maximizer=1)
    assert a.values == b.values
    assert a.policy == b.policy
    assert a.action_values == b.action_values


# ---------------------------------------------------------------------------
# layered total-reward games


def test_total_dag_hand_values():
    arena = arena_of(
        [1, 2],
        "s0",
        [
            ("s0", 1, {"a": det("m1"), "b": det("m2")}),
            ("m1", 2, {"c": det("end"), "d": det("end")}),
            ("m2", 2, {"e": det("end")}),
            ("end", 1, {"stay": det("end")}),
        ],
    )
    rewards = {("m1", "c"): F(3), ("m2", "e"): F(1)}
    sol = solve_total_dag(arena, rewards, maximizer=1)
    assert sol.values == {"s0": F(1), "m1": F(0), "m2": F(1), "end": F(0)}
    assert sol.policy["s0"] == "b"
    assert sol.policy["m1"] == "d"


def test_total_dag_rejects_rewarded_cycles():
    arena = arena_of(
        [1],
        "s0",
        [("s0", 1, {"a": det("s0")})],
    )
    with pytest.raises(ValueError, match="reward"):
        solve_total_dag(arena, {("s0", "a"): F(1)}, maximizer=1)


def test_total_dag_rejects_open_cycles():
    arena = arena_of(
        [1],
        "s0",
        [
            ("s0", 1, {"a": det("s0"), "b": det("s1")}),
            ("s1", 1, {"c": det("end")}),
            ("end", 1, {"stay": det("end")}),
        ],
    )
    with pytest.raises(ValueError, match="closed"):
        solve_total_dag(arena, {("s1", "c"): F(1)}, maximizer=1)


# ---------------------------------------------------------------------------
# outcome games


def reach_objective(value_one=F(1), value_none=F(0)):
    return OutcomeObjective(
        reach_value={frozenset(): value_none, frozenset({1}): value_one},
        hit_values={},
    )


def test_outcome_hand_values_blocker_game():
    arena = arena_of(
        [1, 2],
        "s0",
        [
            ("s0", 2, {"a": det("s1"), "b": det("s2")}),
            ("s1", 1, {"c": det("t"), "d": det("s1")}),
            ("s2", 1, {"e": det("s2")}),
            ("t", 1, {"f": det("t")}),
        ],
    )
    structure = OutcomeStructure(labels=(frozenset({"t"}),), parts=())
    sol = solve_outcome_game(arena, structure, reach_objective(), maximizer=1)
    empty = frozenset()
    assert sol.node_values[("s0", (empty, None, empty))] == F(0)
    assert sol.node_values[("s1", (empty, None, empty))] == F(1)
    assert sol.node_values[("s2", (empty, None, empty))] == F(0)
    assert sol.value == F(0)
    assert sol.max_policy[("s1", (empty, None, empty))] == "c"
    assert sol.min_policy[("s0", (empty, None, empty))] == "b"


def test_outcome_hand_values_with_hit_part():
    arena = arena_of(
        [1],
        "s0",
        [
            ("s0", 1, {"go": det("s1"), "wait": det("s0")}),
            ("s1", 1, {"go": det("t"), "wait": det("s1")}),
            ("t", 1, {"stay": det("t")}),
        ],
    )
    structure = OutcomeStructure(labels=(), parts=((frozenset({"t"}), 3),))
    objective = OutcomeObjective(
        reach_value={},
        hit_values={0: {0: F(9), 1: F(7), 2: F(5), 3: F(2), UNREACHED: F(0)}},
    )
    sol = solve_outcome_game(arena, structure, objective, maximizer=1)
    # fastest hit is at time 2, worth 5
    assert sol.value == F(5)
    empty = frozenset()
    assert sol.max_policy[("s0", (empty, 0, frozenset({0})))] == "go"


def test_outcome_initial_resolution_collects_time_zero_hit():
    arena = arena_of(
        [1],
        "t",
        [("t", 1, {"stay": det("t")})],
    )
    structure = OutcomeStructure(labels=(), parts=((frozenset({"t"}), 2),))
    objective = OutcomeObjective(reach_value={}, hit_values={0: {0: F(8), 1: F(1), 2: F(1), UNREACHED: F(0)}})
    sol = solve_outcome_game(arena, structure, objective, maximizer=1)
    assert sol.constant == F(8)
    assert sol.value == F(8)


def random_deterministic_instance(rng, players=(1, 2)):
    n = rng.randrange(2, 5)
    states = tuple(f"s{i}" for i in range(n))
    rows = []
    for s in states:
        moves = {}
        for k in range(rng.randrange(1, 3)):
            moves[f"a{k}"] = det(states[rng.randrange(n)])
        rows.append((s, players[rng.randrange(len(players))], moves))
    return arena_of(players, states[0], rows)


def test_outcome_reached_set_matches_brute_force():
    for seed in range(30):
        rng = random.Random(2000 + seed)
        arena = random_deterministic_instance(rng)
        label = frozenset(s for s in arena.states if rng.randrange(2) == 0)
        structure = OutcomeStructure(labels=(label,), parts=())
        values = sorted(F(rng.randrange(-3, 4)) for _ in range(2))
        objective = OutcomeObjective(
            reach_value={frozenset(): values[0], frozenset({1}): values[1]},
            hit_values={},
        )
        sol = solve_outcome_game(arena, structure, objective, maximizer=1)
        maxmin, minmax = brute_outcome(arena, structure, objective, maximizer=1)
        assert maxmin == minmax == sol.value, f"seed {seed}"


def test_solve_reached_set_instantiates_the_outcome_solver():
    rng = random.Random(77)
    arena = random_deterministic_instance(rng)
    labels = (frozenset({arena.states[-1]}), frozenset({arena.states[0]}))
    value_map = {
        frozenset(): F(0),
        frozenset({1}): F(2),
        frozenset({2}): F(-1),
        frozenset({1, 2}): F(1),
    }
    sol = solve_reached_set(arena, labels, value_map, maximizer=2)
    structure = OutcomeStructure(labels=labels, parts=())
    objective = OutcomeObjective(reach_value=value_map, hit_values={})
    direct = solve_outcome_game(arena, structure, objective, maximizer=2)
    assert sol.value == direct.value
    assert sol.node_values == direct.node_values
    assert sol.max_policy == direct.max_policy


def test_outcome_capped_hitting_matches_brute_force():
    for seed in range(12):
        rng = random.Random(3000 + seed)
        arena = random_deterministic_instance(rng)
        target = frozenset(
            s for s in arena.states if rng.randrange(3) == 0
        ) or frozenset({arena.states[-1]})
        cap = 2
        structure = OutcomeStructure(labels=(), parts=((target, cap),))
        outcome_values = {t: F(cap + 1 - t) for t in range(cap + 1)}
        outcome_values[UNREACHED] = F(-1)
        objective = OutcomeObjective(reach_value={}, hit_values={0: outcome_values})
        sol = solve_outcome_game(arena, structure, objective, maximizer=1)
        maxmin, minmax = brute_outcome(arena, structure, objective, maximizer=1)
        assert maxmin == minmax == sol.value, f"seed {seed}"


def test_outcome_mixed_objective_matches_brute_force():
    for seed in range(8):
        rng = random.Random(4000 + seed)
        arena = random_deterministic_instance(rng)
        label = frozenset({arena.states[-1]})
        target = frozenset({arena.states[rng.randrange(len(arena.states))]})
        structure = OutcomeStructure(labels=(label,), parts=((target, 1),))
        objective = OutcomeObjective(
            reach_value={frozenset(): F(0), frozenset({1}): F(2)},
            hit_values={0: {0: F(3), 1: F(1), UNREACHED: F(0)}},
        )
        sol = solve_outcome_game(arena, structure, objective, maximizer=1)
        maxmin, minmax = brute_outcome(arena, structure, objective, maximizer=1)
        assert maxmin == minmax == sol.value, f"seed {seed}"


def outcome_walk_from(arena, structure, objective, start_node, choose):
    # like outcome_play_value but from an arbitrary product node, counting
    # only what the future of the play contributes
    tracker = structure.tracker()
    node = start_node
    total = F(0)
    seen = set()
    while node not in seen:
        seen.add(node)
        s, m = node
        a = choose(node)
        z = arena.det_successor(s, a)
        for j, out in tracker.resolutions(m, z):
            vals = objective.hit_values.get(j)
            if vals is not None:
                total += vals[out]
        node = (z, tracker.update(m, s, a, z))
    return total + objective.stay_value(node[1][0])


def test_outcome_policies_are_optimal_from_every_node():
    # punishment strategies get invoked mid-play, so the guarantees have to
    # hold from every reachable product node, not just the root
    from securegames.arena import product_arena

    for seed in range(6):
        rng = random.Random(6000 + seed)
        arena = random_deterministic_instance(rng)
        label = frozenset(s for s in arena.states if rng.randrange(2) == 0)
        target = frozenset({arena.states[-1]})
        structure = OutcomeStructure(labels=(label,), parts=((target, 1),))
        objective = OutcomeObjective(
            reach_value={frozenset(): F(0), frozenset({1}): F(2)},
            hit_values={0: {0: F(3), 1: F(1), UNREACHED: F(0)}},
        )
        sol = solve_outcome_game(arena, structure, objective, maximizer=1)
        product, _ = product_arena(arena, structure.tracker())
        max_side = [n for n in product.states if arena.controller[n[0]] == 1]
        min_side = [n for n in product.states if arena.controller[n[0]] != 1]

        def actions_of(node):
            return arena.actions[node[0]]

        for start in product.states:
            v = sol.node_values[start]
            for tau in iter_tables(min_side, actions_of):
                got = outcome_walk_from(
                    arena, structure, objective, start,
                    lambda n: sol.max_policy[n] if n in sol.max_policy else tau[n],
                )
                assert got >= v, f"seed {seed}: max policy leaks from {start}"
            for sigma in iter_tables(max_side, actions_of):
                got = outcome_walk_from(
                    arena, structure, objective, start,
                    lambda n: sol.min_policy[n] if n in sol.min_policy else sigma[n],
                )
                assert got <= v, f"seed {seed}: min policy leaks from {start}"


def test_outcome_policies_actually_guarantee_the_value():
    # play the solved policies against every opposing product table
    for seed in range(10):
        rng = random.Random(5000 + seed)
        arena = random_deterministic_instance(rng)
        label = frozenset(s for s in arena.states if rng.randrange(2) == 0)
        structure = OutcomeStructure(labels=(label,), parts=())
        objective = OutcomeObjective(
            reach_value={frozenset(): F(0), frozenset({1}): F(1)},
            hit_values={},
        )
        sol = solve_outcome_game(arena, structure, objective, maximizer=1)
        from securegames.arena import product_arena

        product, _ = product_arena(arena, structure.tracker())
        max_side = [n for n in product.states if arena.controller[n[0]] == 1]
        min_side = [n for n in product.states if arena.controller[n[0]] != 1]

        def actions_of(node):
            return arena.actions[node[0]]

        for tau in iter_tables(min_side, actions_of):
            got = outcome_play_value(
                arena, structure, objective,
                lambda n: sol.max_policy[n] if n in sol.max_policy else tau[n],
            )
            assert got >= sol.value, f"seed {seed}: max policy leaks"
        for sigma in iter_tables(max_side, actions_of):
            got = outcome_play_value(
                arena, structure, objective,
                lambda n: sol.min_policy[n] if n in sol.min_policy else sigma[n],
            )
            assert got <= sol.value, f"seed {seed}: min policy leaks"
