"""Explicit-matrix POMDPs, including random micro-domains for bound checks."""
from __future__ import annotations

import numpy as np

from ..core import Model, StepOutcome, choose


class TabularModel(Model):
    """POMDP given by arrays ``T[s, a, s']``, ``O[s', a, z]`` and ``R[s, a]``.

    States listed in ``terminals`` are absorbing with zero reward.
    """

    name = "tabular"

    def __init__(self, T, O, R, discount=0.95, terminals=(), initial=None):
        self.T = np.asarray(T, dtype=float)
        self.O = np.asarray(O, dtype=float)
        self.R = np.asarray(R, dtype=float)
        nS, nA, _ = self.T.shape
        self.num_states = nS
        self.num_actions = nA
        self.num_obs = self.O.shape[2]
        self.discount = discount
        self.terminals = frozenset(terminals)
        live = [s for s in range(nS) if s not in self.terminals]
        self.max_reward = float(self.R[live].max()) if live else 0.0
        self.min_reward = float(self.R[live].min()) if live else 0.0
        self.initial = np.full(nS, 1.0 / nS) if initial is None else np.asarray(initial, dtype=float)
        self._tcum = np.cumsum(self.T, axis=2).tolist()
        self._ocum = np.cumsum(self.O, axis=2).tolist()
        self._R = self.R.tolist()

    @property
    def tabular(self) -> bool:
        return True

    def is_terminal(self, s) -> bool:
        return s in self.terminals

    def reward(self, s, a: int) -> float:
        return 0.0 if s in self.terminals else self._R[s][a]

    def step(self, s, a, phi):
        s2, u = choose(self._tcum[s][a], phi)
        z, _ = choose(self._ocum[s2][a], u)
        return StepOutcome(s2, z, self._R[s][a])

    def obs_prob(self, s_next, a, z) -> float:
        return float(self.O[s_next, a, z])

    def states(self):
        return list(range(self.num_states))

    def observations(self):
        return list(range(self.num_obs))

    def transition(self, s, a):
        if s in self.terminals:
            return [(s, 1.0)]
        row = self.T[s, a]
        return [(int(j), float(p)) for j in np.flatnonzero(row) for p in (row[j],)]

    def sample_initial_state(self, rng):
        return int(rng.choice(self.num_states, p=self.initial))

    def initial_belief(self, start):
        return [(int(s), float(p)) for s, p in enumerate(self.initial) if p > 0]


def make_random_tabular(
    seed: int, num_states: int = 5, num_actions: int = 3, num_obs: int = 3, discount: float = 0.9, sparsity: float = 0.4
) -> TabularModel:
    """Random micro-POMDP with one absorbing terminal state (the last index)."""
    rng = np.random.default_rng(seed)
    T = rng.random((num_states, num_actions, num_states))
    T[T < sparsity] = 0.0
    T[:, :, 0] += 1e-3
    T /= T.sum(axis=2, keepdims=True)
    O = rng.random((num_states, num_actions, num_obs)) ** 2
    O /= O.sum(axis=2, keepdims=True)
    R = np.round(rng.uniform(-5, 5, size=(num_states, num_actions)), 2)
    term = num_states - 1
    T[term] = 0.0
    T[term, :, term] = 1.0
    R[term] = 0.0
    initial = np.zeros(num_states)
    initial[: num_states - 1] = 1.0 / (num_states - 1)
    model = TabularModel(T, O, R, discount, terminals=(term,), initial=initial)
    model.name = f"random-tabular-{seed}"
    return model
