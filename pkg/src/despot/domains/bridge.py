"""Bridge Crossing: open-loop walk across a dark bridge."""
from __future__ import annotations

from ..core import Model, StepOutcome

FORWARD, BACKWARD, RESCUE = 0, 1, 2
NULL_OBS = 0


class BridgeModel(Model):
    """Positions 0..9, no observations, deterministic motion.

    Moving costs -1 except forward at x=9, which crosses the bridge for 0.
    Calling for rescue costs -x-20. Both crossing and rescue terminate.
    """

    name = "bridge"
    num_actions = 3
    action_names = ("forward", "backward", "rescue")
    length = 10
    default_policy_name = "fixed:rescue"
    default_ubound = "uninformed"
    deterministic = True

    def __init__(self, discount: float = 0.95, start_uncertainty: int = 1):
        self.discount = discount
        self.terminal = self.length
        self.num_states = self.length
        self.max_reward = 0.0
        self.min_reward = -(self.length - 1) - 20.0
        self.start_uncertainty = start_uncertainty

    @property
    def tabular(self) -> bool:
        return True

    def is_terminal(self, s) -> bool:
        return s == self.terminal

    def reward(self, s, a: int) -> float:
        if s == self.terminal:
            return 0.0
        if a == RESCUE:
            return -s - 20.0
        if a == FORWARD and s == self.length - 1:
            return 0.0
        return -1.0

    def _next(self, s, a):
        if a == RESCUE:
            return self.terminal
        if a == FORWARD:
            return self.terminal if s == self.length - 1 else s + 1
        return max(s - 1, 0)

    def step(self, s, a, phi):
        return StepOutcome(self._next(s, a), NULL_OBS, self.reward(s, a))

    def obs_prob(self, s_next, a, z) -> float:
        return 1.0 if z == NULL_OBS else 0.0

    def states(self):
        return list(range(self.length + 1))

    def observations(self):
        return [NULL_OBS]

    def transition(self, s, a):
        if s == self.terminal:
            return [(s, 1.0)]
        return [(self._next(s, a), 1.0)]

    def sample_initial_state(self, rng):
        return 0

    def initial_belief(self, start):
        span = range(0, self.start_uncertainty + 1)
        p = 1.0 / len(span)
        return [(x, p) for x in span]


def make_bridge(discount: float = 0.95) -> BridgeModel:
    return BridgeModel(discount)
