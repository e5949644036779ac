"""RockSample(n, k): sense rocks from afar, sample the good ones, exit east."""
from __future__ import annotations

import numpy as np

from ..core import Model, StepOutcome

NORTH, SOUTH, EAST, WEST, SAMPLE = 0, 1, 2, 3, 4
NULL, GOOD, BAD = 0, 1, 2

CANONICAL_LAYOUTS = {
    (7, 8): ((0, 3), ((2, 0), (0, 1), (3, 1), (6, 3), (2, 4), (3, 4), (5, 5), (1, 6))),
    (11, 11): (
        (0, 5),
        ((0, 3), (0, 7), (1, 8), (2, 4), (3, 3), (3, 8), (4, 3), (5, 8), (6, 1), (9, 3), (9, 9)),
    ),
}


class RockSampleModel(Model):
    """Grid coordinates are ``(x, y)``; east increases ``x``.

    State ``(cell << k) | mask`` with ``cell = y * n + x`` and bit ``i`` of
    ``mask`` set when rock ``i`` is good; ``terminal`` once the robot has
    exited east. Moves off the other edges are no-ops. Sampling a good rock
    gives +10 and turns it bad; sampling a bad rock or empty ground gives -10.
    Sensing rock ``i`` is correct with probability
    ``0.5 + 0.5 * 2 ** (-dist / half_efficiency)``.
    """

    name = "rocksample"
    num_actions: int
    default_policy_name = "fixed:east"
    default_ubound = "mdp"

    def __init__(self, n: int, k: int, start, rocks, discount: float = 0.95, half_efficiency: float = 20.0):
        if n < 1 or k < 0 or len(rocks) != k:
            raise ValueError(f"invalid RockSample parameters n={n}, k={k}, rocks={len(rocks)}")
        if len(set(map(tuple, rocks))) != k or any(not (0 <= x < n and 0 <= y < n) for x, y in rocks):
            raise ValueError("rocks must be distinct cells inside the grid")
        self.n, self.k = n, k
        self.start = tuple(start)
        self.rocks = [tuple(r) for r in rocks]
        self.discount = discount
        self.half_efficiency = half_efficiency
        self.num_actions = 5 + k
        self.action_names = ("north", "south", "east", "west", "sample") + tuple(f"check{i}" for i in range(k))
        self.num_states = n * n * (1 << k)
        self.terminal = self.num_states
        self.max_reward = 10.0
        self.min_reward = -10.0
        self.rock_at = {r: i for i, r in enumerate(self.rocks)}
        self._full = (1 << k) - 1
        cells = [(x, y) for y in range(n) for x in range(n)]
        # sensor accuracy per (cell, rock)
        self._acc = [
            [0.5 + 0.5 * 2.0 ** (-np.hypot(x - rx, y - ry) / half_efficiency) for rx, ry in self.rocks]
            for x, y in cells
        ]

    @property
    def tabular(self) -> bool:
        return True

    def encode(self, x: int, y: int, mask: int) -> int:
        return ((y * self.n + x) << self.k) | mask

    def decode(self, s) -> tuple[int, int, int]:
        cell, mask = s >> self.k, s & self._full
        y, x = divmod(cell, self.n)
        return x, y, mask

    def is_terminal(self, s) -> bool:
        return s == self.terminal

    def _transition(self, s, a) -> tuple[int, float]:
        cell, mask = s >> self.k, s & self._full
        y, x = divmod(cell, self.n)
        if a == EAST:
            if x == self.n - 1:
                return self.terminal, 10.0
            return s + (1 << self.k), 0.0
        if a == WEST:
            return (s - (1 << self.k) if x > 0 else s), 0.0
        if a == NORTH:
            return (s + (self.n << self.k) if y < self.n - 1 else s), 0.0
        if a == SOUTH:
            return (s - (self.n << self.k) if y > 0 else s), 0.0
        if a == SAMPLE:
            i = self.rock_at.get((x, y))
            if i is None:
                return s, -10.0
            if mask >> i & 1:
                return s & ~(1 << i), 10.0
            return s, -10.0
        return s, 0.0

    def reward(self, s, a: int) -> float:
        if s == self.terminal:
            return 0.0
        return self._transition(s, a)[1]

    def step(self, s, a, phi):
        ns, r = self._transition(s, a)
        if a < 5 or ns == self.terminal:
            return StepOutcome(ns, NULL, r)
        i = a - 5
        good = (s >> i) & 1
        correct = phi < self._acc[s >> self.k][i]
        z = (GOOD if good else BAD) if correct else (BAD if good else GOOD)
        return StepOutcome(ns, z, r)

    def obs_prob(self, s_next, a, z) -> float:
        if a < 5 or s_next == self.terminal:
            return 1.0 if z == NULL else 0.0
        if z == NULL:
            return 0.0
        i = a - 5
        acc = self._acc[s_next >> self.k][i]
        truth = GOOD if (s_next >> i) & 1 else BAD
        return acc if z == truth else 1.0 - acc

    def states(self):
        return list(range(self.num_states + 1))

    def observations(self):
        return [NULL, GOOD, BAD]

    def transition(self, s, a):
        if s == self.terminal:
            return [(s, 1.0)]
        return [(self._transition(s, a)[0], 1.0)]

    def sample_initial_state(self, rng):
        mask = int(rng.integers(1 << self.k))
        return self.encode(*self.start, mask)

    def initial_belief(self, start):
        """Uniform over rock masks at the rover cell of ``start``."""
        base = (start >> self.k) << self.k
        p = 1.0 / (1 << self.k)
        return [(base | m, p) for m in range(1 << self.k)]


def make_rocksample(n: int = 7, k: int = 8, rock_seed: int = 0, discount: float = 0.95) -> RockSampleModel:
    """Canonical layouts for (7, 8) and (11, 11); others are drawn from ``rock_seed``."""
    if (n, k) in CANONICAL_LAYOUTS:
        start, rocks = CANONICAL_LAYOUTS[(n, k)]
    else:
        if n < 1 or k < 0 or k > n * n:
            raise ValueError(f"invalid RockSample parameters n={n}, k={k}")
        rng = np.random.default_rng(rock_seed)
        flat = rng.choice(n * n, size=k, replace=False)
        rocks = [(int(c % n), int(c // n)) for c in flat]
        start = (0, n // 2)
    return RockSampleModel(n, k, start, rocks, discount)
