"""Adventurer: drive right across rough terrain to dig up a treasure of uncertain value."""
from __future__ import annotations

from typing import Sequence

from ..core import Model, StepOutcome

LEFT, RIGHT, STAY = 0, 1, 2


class AdventurerModel(Model):
    """1 x 5 corridor, treasure in the rightmost cell.

    States are integers: ``pos * n + v`` while the adventure is running and
    ``5 * n + v`` once it has ended (vehicle wrecked or treasure dug), where
    ``v`` indexes the treasure value. The value survives termination so that
    the sensor model stays a function of the successor state.

    Each move is wrecked with probability ``damage_prob`` (reward
    ``damage_cost``, terminal). Staying in the rightmost cell digs the
    treasure (reward = its value, terminal). Every step emits a sensor
    reading of the value, correct with probability ``accuracy`` and otherwise
    uniform over the other values. Rewards returned by ``step`` are the
    realised ones; ``reward(s, a)`` is their expectation.
    """

    name = "adventurer"
    num_actions = 3
    action_names = ("left", "right", "stay")
    width = 5
    default_policy_name = "fixed:stay"
    default_ubound = "ho-tight"

    def __init__(
        self,
        values: Sequence[float],
        discount: float = 0.95,
        accuracy: float = 0.7,
        damage_prob: float = 0.5,
        damage_cost: float = -10.0,
    ):
        if len(values) < 1:
            raise ValueError("need at least one treasure value")
        self.values = tuple(float(v) for v in values)
        self.n = len(self.values)
        self.discount = discount
        self.accuracy = accuracy
        self.damage_prob = damage_prob
        self.damage_cost = damage_cost
        self.max_reward = max(max(self.values), 0.0)
        self.min_reward = min(damage_cost, min(self.values), 0.0)
        self.num_states = self.width * self.n
        self._ended = self.width * self.n
        self._damage_cum = (damage_prob, 1.0)
        self._wrong = (1.0 - accuracy) / (self.n - 1) if self.n > 1 else 0.0

    @property
    def tabular(self) -> bool:
        return True

    def decode(self, s) -> tuple[int | None, int]:
        """(position or None when ended, value index)."""
        if s >= self._ended:
            return None, s - self._ended
        return divmod(s, self.n)

    def encode(self, pos: int, v: int) -> int:
        return pos * self.n + v

    def ended(self, v: int) -> int:
        return self._ended + v

    def is_terminal(self, s) -> bool:
        return s >= self._ended

    def reward(self, s, a: int) -> float:
        if s >= self._ended:
            return 0.0
        pos, v = divmod(s, self.n)
        if a == STAY:
            return self.values[v] if pos == self.width - 1 else 0.0
        return self.damage_prob * self.damage_cost

    def _observe(self, v: int, u: float) -> int:
        if self.n == 1 or u < self.accuracy:
            return v
        k = int((u - self.accuracy) / (1.0 - self.accuracy) * (self.n - 1))
        k = min(k, self.n - 2)
        return k if k < v else k + 1

    def step(self, s, a, phi):
        pos, v = divmod(s, self.n)
        if a == STAY:
            if pos == self.width - 1:
                return StepOutcome(self._ended + v, self._observe(v, phi), self.values[v])
            return StepOutcome(s, self._observe(v, phi), 0.0)
        if phi < self.damage_prob:
            u = phi / self.damage_prob
            return StepOutcome(self._ended + v, self._observe(v, u), self.damage_cost)
        u = (phi - self.damage_prob) / (1.0 - self.damage_prob)
        if a == LEFT:
            pos = pos - 1 if pos > 0 else 0
        else:
            pos = pos + 1 if pos < self.width - 1 else pos
        return StepOutcome(pos * self.n + v, self._observe(v, u), 0.0)

    def obs_prob(self, s_next, a, z) -> float:
        v = s_next - self._ended if s_next >= self._ended else s_next % self.n
        return self.accuracy if z == v else self._wrong

    def states(self):
        return list(range(self._ended + self.n))

    def observations(self):
        return list(range(self.n))

    def transition(self, s, a):
        if s >= self._ended:
            return [(s, 1.0)]
        pos, v = divmod(s, self.n)
        if a == STAY:
            if pos == self.width - 1:
                return [(self._ended + v, 1.0)]
            return [(s, 1.0)]
        moved = max(pos - 1, 0) if a == LEFT else min(pos + 1, self.width - 1)
        return [(self._ended + v, self.damage_prob), (moved * self.n + v, 1.0 - self.damage_prob)]

    def sample_initial_state(self, rng):
        return int(rng.integers(self.n))

    def initial_belief(self, start):
        p = 1.0 / self.n
        return [(v, p) for v in range(self.n)]


def make_adventurer(values: Sequence[float] = (101, 150), discount: float = 0.95) -> AdventurerModel:
    return AdventurerModel(values, discount)
