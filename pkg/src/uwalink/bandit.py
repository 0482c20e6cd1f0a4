"""Bilevel bandit controllers for adaptive acoustic links.

Two cooperating UCB learners drive each transmitter.  The inner learner
picks a (modulation, power) pair per context, where the context combines
a quantized SNR class with a quantized age-of-information class.  Its
reward arrives late: every action taken between two feedback events is
written to a pending ledger, and when feedback finally lands the interval
reward is split equally over the ledger entries.  The outer learner picks
how long to wait until the next feedback event, trading reward freshness
against the energy cost of control traffic.

Both learners are deterministic: exploration comes from the UCB bonus and
fixed tie-breaking, never from random draws, so a replayed call sequence
reproduces the exact same decisions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np


class Modulation(IntEnum):
    BPSK = 0
    PSK8 = 1
    PSK16 = 2

    @property
    def bits_per_symbol(self) -> int:
        return (1, 3, 4)[self.value]

    @property
    def points(self) -> int:
        """Constellation size M."""
        return (2, 8, 16)[self.value]


class PowerLevel(IntEnum):
    LOW = 0
    MEDIUM = 1
    HIGH = 2


class SnrClass(IntEnum):
    LOW = 0
    MEDIUM = 1
    HIGH = 2


class AoiClass(IntEnum):
    FRESH = 0
    STALE = 1
    VERY_STALE = 2


@dataclass(frozen=True)
class Action:
    """One arm of the inner bandit: a modulation scheme plus a power level."""

    modulation: Modulation
    power: PowerLevel

    @property
    def index(self) -> int:
        return 3 * self.modulation.value + self.power.value

    @classmethod
    def from_index(cls, index: int) -> "Action":
        if not 0 <= index < 9:
            raise ValueError(f"action index out of range: {index}")
        return cls(Modulation(index // 3), PowerLevel(index % 3))


@dataclass(frozen=True)
class Context:
    """Inner-bandit context: quantized SNR crossed with quantized AoI."""

    snr: SnrClass
    aoi: AoiClass

    @property
    def index(self) -> int:
        return 3 * self.snr.value + self.aoi.value

    @classmethod
    def from_index(cls, index: int) -> "Context":
        if not 0 <= index < 9:
            raise ValueError(f"context index out of range: {index}")
        return cls(SnrClass(index // 3), AoiClass(index % 3))


ACTIONS: tuple[Action, ...] = tuple(Action.from_index(i) for i in range(9))
CONTEXTS: tuple[Context, ...] = tuple(Context.from_index(i) for i in range(9))

SNR_LOW_MAX_DB = 18.0
SNR_MEDIUM_MAX_DB = 30.0
AOI_FRESH_MAX = 4
AOI_STALE_MAX = 7


def quantize_snr(snr_db: float) -> SnrClass:
    """Map an SNR estimate in dB to its class.

    Values below the low band clamp to LOW, values above the high band
    clamp to HIGH.  Non-finite input is rejected.
    """
    if not math.isfinite(snr_db):
        raise ValueError(f"SNR estimate must be finite, got {snr_db!r}")
    if snr_db <= SNR_LOW_MAX_DB:
        return SnrClass.LOW
    if snr_db <= SNR_MEDIUM_MAX_DB:
        return SnrClass.MEDIUM
    return SnrClass.HIGH


def quantize_aoi(age_slots: int) -> AoiClass:
    """Map an age-of-information value in whole slots to its class."""
    if age_slots < 0:
        raise ValueError(f"age must be nonnegative, got {age_slots}")
    if age_slots <= AOI_FRESH_MAX:
        return AoiClass.FRESH
    if age_slots <= AOI_STALE_MAX:
        return AoiClass.STALE
    return AoiClass.VERY_STALE


@dataclass
class AoiClock:
    """Slot-resolution age-of-information counter.

    The age is the number of slots elapsed since the last feedback was
    received; it grows by one per slot and drops to zero on reset.
    """

    last_feedback_slot: int = 0
    current_slot: int = 0

    def age(self) -> int:
        return self.current_slot - self.last_feedback_slot

    def advance(self, slot: int) -> None:
        if slot < self.current_slot:
            raise ValueError(
                f"slot clock cannot run backwards: {slot} < {self.current_slot}"
            )
        self.current_slot = slot

    def reset(self) -> None:
        self.last_feedback_slot = self.current_slot


@dataclass(frozen=True)
class PendingEntry:
    """One ledger row: an action taken while its reward is still unknown.

    ``pull_count`` is the cumulative number of times the (context, action)
    pair had been selected up to and including this selection; the delayed
    correction divides by it so the stored mean stays an exact running
    mean of everything ever credited to the pair.
    """

    slot: int
    context_index: int
    action_index: int
    pull_count: int


@dataclass
class PendingInterval:
    """Ledger of actions awaiting the next delayed reward."""

    interval_index: int = 0
    entries: list[PendingEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)


class ContextualUcb:
    """Contextual UCB bandit with delayed, equally-split batch rewards.

    Parameters
    ----------
    exploration_c : float
        Exploration constant in the bonus ``sqrt(c * ln(n) / pulls)``.

    Notes
    -----
    Counts are a two-stage affair: ``pulls`` and ``total_decisions`` move
    at selection time, while the value estimates move only when the
    delayed reward arrives.  Ties go to the lowest action index and any
    untried pair in the current context scores infinity.
    """

    def __init__(self, exploration_c: float = 2.0) -> None:
        if exploration_c <= 0:
            raise ValueError(f"exploration_c must be positive, got {exploration_c}")
        self.exploration_c = float(exploration_c)
        self.means = np.zeros((9, 9), dtype=np.float64)
        self.pulls = np.zeros((9, 9), dtype=np.int64)
        self.total_decisions = 0
        self.pending = PendingInterval()

    def ucb_scores(self, context: Context) -> np.ndarray:
        """UCB score per action for ``context``; untried actions are +inf."""
        row_pulls = self.pulls[context.index]
        scores = np.full(9, np.inf, dtype=np.float64)
        tried = row_pulls > 0
        if self.total_decisions > 0 and tried.any():
            bonus = np.sqrt(
                self.exploration_c * math.log(self.total_decisions) / row_pulls[tried]
            )
            scores[tried] = self.means[context.index, tried] + bonus
        return scores

    def select_action(self, context: Context, slot: int) -> Action:
        """Pick the UCB-maximizing action and log it in the pending ledger."""
        scores = self.ucb_scores(context)
        action_index = int(np.argmax(scores))
        self.pulls[context.index, action_index] += 1
        self.total_decisions += 1
        self.pending.entries.append(
            PendingEntry(
                slot=slot,
                context_index=context.index,
                action_index=action_index,
                pull_count=int(self.pulls[context.index, action_index]),
            )
        )
        return ACTIONS[action_index]

    def apply_delayed_reward(self, reward: float) -> float:
        """Credit ``reward`` equally across the pending ledger and clear it.

        Each entry receives ``g = reward / len(ledger)`` and the entry's
        stored mean is nudged by ``(g - mean) / pull_count`` with the pull
        count recorded at selection time.  Returns the per-entry share.
        """
        if not math.isfinite(reward) or reward < 0:
            raise ValueError(f"reward must be finite and nonnegative, got {reward!r}")
        entries = self.pending.entries
        if not entries:
            raise ValueError("cannot apply a delayed reward to an empty ledger")
        share = reward / len(entries)
        for entry in entries:
            ci, ai = entry.context_index, entry.action_index
            self.means[ci, ai] += (share - self.means[ci, ai]) / entry.pull_count
        self.pending = PendingInterval(interval_index=self.pending.interval_index + 1)
        return share

    def state_dict(self) -> dict:
        return {
            "exploration_c": self.exploration_c,
            "means": self.means.tolist(),
            "pulls": self.pulls.tolist(),
            "total_decisions": self.total_decisions,
            "interval_index": self.pending.interval_index,
        }


class IntervalUcb:
    """UCB bandit over a menu of feedback intervals.

    Parameters
    ----------
    intervals_min : sequence of int
        Menu of feedback intervals in minutes, e.g. ``(4, 7, 10)``.
    theta : float
        Weight on throughput in the scheduling reward; ``1 - theta``
        weighs the normalized feedback cost.
    feedback_cost : float
        Normalized energy cost of one feedback packet, in [0, 1].
    exploration_c : float
        Exploration constant, as in the inner bandit.

    Notes
    -----
    Ties break toward the shortest interval.  Like the inner bandit the
    pull count moves at selection time and the mean at update time, so a
    strict select/update alternation keeps exact running means.
    """

    def __init__(
        self,
        intervals_min: tuple[int, ...] = (4, 7, 10),
        theta: float = 0.7,
        feedback_cost: float = 0.1,
        exploration_c: float = 2.0,
    ) -> None:
        menu = tuple(int(q) for q in intervals_min)
        if not menu:
            raise ValueError("interval menu must not be empty")
        if any(q <= 0 for q in menu):
            raise ValueError(f"intervals must be positive whole minutes: {menu}")
        if len(set(menu)) != len(menu):
            raise ValueError(f"interval menu has duplicates: {menu}")
        if not 0.0 <= theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {theta}")
        if not 0.0 <= feedback_cost <= 1.0:
            raise ValueError(f"feedback_cost must lie in [0, 1], got {feedback_cost}")
        if exploration_c <= 0:
            raise ValueError(f"exploration_c must be positive, got {exploration_c}")
        self.intervals = tuple(sorted(menu))
        self.theta = float(theta)
        self.feedback_cost = float(feedback_cost)
        self.exploration_c = float(exploration_c)
        self.means = np.zeros(len(self.intervals), dtype=np.float64)
        self.pulls = np.zeros(len(self.intervals), dtype=np.int64)
        self.round = 0

    def _arm(self, interval_min: int) -> int:
        try:
            return self.intervals.index(interval_min)
        except ValueError:
            raise ValueError(
                f"interval {interval_min} is not on the menu {self.intervals}"
            ) from None

    def reward(self, r_k: float, interval_min: int) -> float:
        """Scheduling reward: theta * r_k - (1 - theta) * cost / interval."""
        self._arm(interval_min)
        if not math.isfinite(r_k):
            raise ValueError(f"interval reward must be finite, got {r_k!r}")
        return self.theta * r_k - (1.0 - self.theta) * self.feedback_cost / interval_min

    def scores(self) -> np.ndarray:
        out = np.full(len(self.intervals), np.inf, dtype=np.float64)
        tried = self.pulls > 0
        if self.round > 0 and tried.any():
            bonus = np.sqrt(
                self.exploration_c * math.log(self.round) / self.pulls[tried]
            )
            out[tried] = self.means[tried] + bonus
        return out

    def select_interval(self) -> int:
        """Pick the UCB-maximizing interval; the menu is sorted so argmax
        ties resolve toward the shortest duration."""
        arm = int(np.argmax(self.scores()))
        self.pulls[arm] += 1
        self.round += 1
        return self.intervals[arm]

    def update(self, interval_min: int, reward: float) -> None:
        """Fold one observed scheduling reward into the chosen arm's mean."""
        if not math.isfinite(reward):
            raise ValueError(f"reward must be finite, got {reward!r}")
        arm = self._arm(interval_min)
        if self.pulls[arm] == 0:
            raise ValueError(f"interval {interval_min} was never selected")
        self.means[arm] += (reward - self.means[arm]) / self.pulls[arm]

    def state_dict(self) -> dict:
        return {
            "intervals": list(self.intervals),
            "theta": self.theta,
            "feedback_cost": self.feedback_cost,
            "exploration_c": self.exploration_c,
            "means": self.means.tolist(),
            "pulls": self.pulls.tolist(),
            "round": self.round,
        }
