"""Iterative elimination of actions that are not optimal for their controller.

Round k solves, for every player, the zero-sum view "that player against the
coalition of everyone else" on the current restricted arena. An action
survives the round when its one-step value equals the controller's optimal
value at that state (exact equality; everything is rational arithmetic). The
restricted arena is then pruned to what is still reachable, and the rounds
repeat until nothing changes.

Values can only go up for everyone as rounds proceed, each non-final round
removes at least one action, and the fixpoint arena has the property that
every remaining action is optimal for its controller.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .arena import Action, Arena, Player, State
from .zerosum import ZeroSumSolution

#: Solves all per-player zero-sum views of one restricted arena.
ViewSolver = Callable[[Arena], dict[Player, ZeroSumSolution]]


@dataclass
class EliminationLevel:
    """One restricted arena in the elimination sequence plus its per-player
    zero-sum solutions."""

    index: int
    arena: Arena
    solutions: dict[Player, ZeroSumSolution]

    def optimal_actions(self, state: State) -> tuple[Action, ...]:
        """Actions at `state` that are optimal for the controlling player."""
        sol = self.solutions[self.arena.controller[state]]
        target = sol.values[state]
        return tuple(
            a for a in self.arena.actions[state] if sol.action_values[(state, a)] == target
        )


@dataclass
class EliminationTrace:
    """Full record of an elimination run.

    levels[k] is the game after k rounds; levels[-1] is the fixpoint, where
    every action is optimal for its controller. departure_level[s] is the
    last round whose arena still contains s (None if s survives), and
    `removed` lists every deleted action with the round it was deleted from."""

    levels: list[EliminationLevel]
    removed: list[tuple[int, State, Action]]
    departure_level: dict[State, int | None]

    @property
    def final(self) -> EliminationLevel:
        return self.levels[-1]

    @property
    def surviving_states(self) -> frozenset:
        return frozenset(self.final.arena.states)

    def surviving_actions(self, state: State) -> tuple[Action, ...]:
        return self.final.arena.actions[state]

    def round_bound(self) -> int:
        """Upper bound on the number of levels: one plus the total number of
        deletable actions in the starting arena."""
        first = self.levels[0].arena
        return 1 + sum(len(first.actions[s]) - 1 for s in first.states)


def eliminate_fixpoint(arena: Arena, solve_views: ViewSolver) -> EliminationTrace:
    levels: list[EliminationLevel] = []
    removed: list[tuple[int, State, Action]] = []
    departure: dict[State, int | None] = {s: None for s in arena.states}
    current = arena
    while True:
        k = len(levels)
        level = EliminationLevel(index=k, arena=current, solutions=solve_views(current))
        levels.append(level)
        keep: dict[State, tuple[Action, ...]] = {}
        dropped: list[tuple[int, State, Action]] = []
        for s in current.states:
            kept = level.optimal_actions(s)
            assert kept, f"no optimal action at {s!r}; solver inconsistency"
            keep[s] = kept
            dropped.extend((k, s, a) for a in current.actions[s] if a not in set(kept))
        if not dropped:
            trace = EliminationTrace(levels=levels, removed=removed, departure_level=departure)
            assert len(levels) <= trace.round_bound(), "elimination ran too long"
            return trace
        removed.extend(dropped)
        nxt = current.restricted(keep)
        surviving = set(nxt.states)
        for s in current.states:
            if s not in surviving:
                departure[s] = k
        current = nxt
