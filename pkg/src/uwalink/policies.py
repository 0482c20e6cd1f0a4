"""Per-link control policies.

Every transmitter owns one controller for its uplink.  A controller does
two jobs: pick a (modulation, power) action each slot given the current
context, and pick the next feedback interval each time an interval
completes.  The bilevel controller learns both; the others pin one or
both choices and exist as baselines and test fixtures.
"""

from __future__ import annotations

import numpy as np

from .bandit import (
    ACTIONS,
    Action,
    Context,
    ContextualUcb,
    IntervalUcb,
    SnrClass,
)


class BilevelController:
    """Learning controller: contextual UCB actions + UCB feedback schedule.

    Passing ``fixed_interval_min`` keeps the learning inner bandit but
    replaces the outer bandit with a constant schedule.
    """

    def __init__(
        self,
        intervals_min: tuple[int, ...],
        theta: float,
        feedback_cost: float,
        exploration_c: float,
        fixed_interval_min: int | None = None,
    ) -> None:
        self.inner = ContextualUcb(exploration_c=exploration_c)
        self.fixed_interval_min = fixed_interval_min
        if fixed_interval_min is None:
            self.outer: IntervalUcb | None = IntervalUcb(
                intervals_min=intervals_min,
                theta=theta,
                feedback_cost=feedback_cost,
                exploration_c=exploration_c,
            )
        else:
            self.outer = None

    def initial_interval(self) -> int:
        if self.outer is None:
            return int(self.fixed_interval_min)
        return self.outer.select_interval()

    def select_action(self, context: Context, slot: int) -> Action:
        return self.inner.select_action(context, slot)

    def complete_interval(self, r_norm: float, interval_min: int) -> int:
        if len(self.inner.pending):
            self.inner.apply_delayed_reward(r_norm)
        if self.outer is None:
            return int(self.fixed_interval_min)
        self.outer.update(interval_min, self.outer.reward(r_norm, interval_min))
        return self.outer.select_interval()


class FixedController:
    """Constant action, constant feedback interval."""

    def __init__(self, action: Action, interval_min: int) -> None:
        self.action = action
        self.interval_min = int(interval_min)

    def initial_interval(self) -> int:
        return self.interval_min

    def select_action(self, context: Context, slot: int) -> Action:
        return self.action

    def complete_interval(self, r_norm: float, interval_min: int) -> int:
        return self.interval_min


class RandomController:
    """Uniform random action each slot, constant feedback interval."""

    def __init__(self, rng: np.random.Generator, interval_min: int) -> None:
        self.rng = rng
        self.interval_min = int(interval_min)

    def initial_interval(self) -> int:
        return self.interval_min

    def select_action(self, context: Context, slot: int) -> Action:
        return ACTIONS[int(self.rng.integers(len(ACTIONS)))]

    def complete_interval(self, r_norm: float, interval_min: int) -> int:
        return self.interval_min


class OracleController:
    """Plays the precomputed best action for the current SNR class."""

    def __init__(self, best_action: dict[SnrClass, Action], interval_min: int) -> None:
        self.best_action = dict(best_action)
        self.interval_min = int(interval_min)

    def initial_interval(self) -> int:
        return self.interval_min

    def select_action(self, context: Context, slot: int) -> Action:
        return self.best_action[context.snr]

    def complete_interval(self, r_norm: float, interval_min: int) -> int:
        return self.interval_min
