"""POMDP model interface, scenario streams and the deterministic simulative model.

A model exposes ``step(s, a, phi)``, a pure function mapping a state, an action
and a single uniform number to ``(next_state, observation, reward)``. When
``phi`` is drawn uniformly from [0, 1) the pair ``(next_state, observation)``
is distributed according to T(s, a, .) O(., a, .).

Scenario randomness comes from a counter-based generator: the value used at
depth ``t`` of scenario ``i`` under master seed ``seed`` is

    splitmix64(splitmix64(seed ^ MIX_ID * (i + 1)) ^ MIX_T * t) >> 11  / 2**53

so streams are lazy, reproducible and independent of evaluation order. The
generator is fixed for this release; changing it changes every frozen
regression value in the test-suite.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Hashable, NamedTuple, Sequence

State = Hashable
Observation = Hashable

_MASK64 = (1 << 64) - 1
_MIX_ID = 0xD1B54A32D192ED03
_MIX_T = 0x9E3779B97F4A7C15
_INV_2_53 = 1.0 / (1 << 53)


class ContractViolation(RuntimeError):
    """A documented precondition of an operation was not met."""


class UnsupportedCapability(RuntimeError):
    """The model lacks a capability (e.g. enumerable states) the caller needs."""


class StepOutcome(NamedTuple):
    next_state: Any
    observation: Any
    reward: float


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def uniform_from_key(seed: int, scenario_id: int, t: int) -> float:
    """Counter-based U[0,1) draw for ``(seed, scenario_id, t)``."""
    h = splitmix64((seed & _MASK64) ^ ((_MIX_ID * (scenario_id + 1)) & _MASK64))
    h = splitmix64(h ^ ((_MIX_T * t) & _MASK64))
    return (h >> 11) * _INV_2_53


def choose(cumulative: Sequence[float], u: float) -> tuple[int, float]:
    """Inverse-CDF pick from a cumulative table, returning the leftover uniform.

    The leftover is ``(u - lo) / (hi - lo)`` for the chosen interval, which is
    again uniform on [0, 1) and independent of the choice; domains use it to
    drive a second random decision from the same ``phi``.
    """
    lo = 0.0
    last = len(cumulative) - 1
    for i, hi in enumerate(cumulative):
        if u < hi or i == last:
            width = hi - lo
            rest = (u - lo) / width if width > 0 else 0.0
            return i, min(max(rest, 0.0), 0.9999999999999999)
        lo = hi
    raise AssertionError("unreachable")


@dataclass
class ScenarioStream:
    """A start state plus a lazily generated stream of uniform numbers."""

    start_state: Any
    scenario_id: int
    seed: int
    cursor: int = 0
    _cache: list = field(default_factory=list, repr=False, compare=False)

    def phi(self, t: int) -> float:
        cache = self._cache
        if t <= len(cache):
            return cache[t - 1]
        for k in range(len(cache) + 1, t + 1):
            cache.append(uniform_from_key(self.seed, self.scenario_id, k))
        return cache[t - 1]

    def next(self) -> float:
        self.cursor += 1
        return self.phi(self.cursor)


def next_random(stream: ScenarioStream, t: int) -> float:
    if t < 1:
        raise ValueError(f"scenario depth index must be >= 1, got {t}")
    return stream.phi(t)


class Model(ABC):
    """Abstract POMDP.

    Subclasses set ``num_actions``, ``discount``, ``max_reward`` and
    ``min_reward`` and implement ``step``, ``obs_prob``, ``is_terminal`` and
    ``reward``. Tabular models additionally provide ``states``,
    ``observations`` and ``transition``.
    """

    name: str = "model"
    num_actions: int
    discount: float
    max_reward: float
    min_reward: float
    num_states: int | None = None
    action_names: Sequence[str] = ()
    # step() ignores phi; solvers may share work across scenarios in the same state
    deterministic: bool = False

    @abstractmethod
    def step(self, s, a: int, phi: float) -> StepOutcome:
        """Unchecked deterministic simulative model; hot path for the solvers."""

    @abstractmethod
    def obs_prob(self, s_next, a: int, z) -> float: ...

    @abstractmethod
    def is_terminal(self, s) -> bool: ...

    @abstractmethod
    def reward(self, s, a: int) -> float: ...

    @property
    def tabular(self) -> bool:
        return False

    def states(self) -> list:
        raise UnsupportedCapability(f"{self.name} does not enumerate its states")

    def observations(self) -> list:
        raise UnsupportedCapability(f"{self.name} does not enumerate its observations")

    def transition(self, s, a: int) -> list[tuple[Any, float]]:
        raise UnsupportedCapability(f"{self.name} has no analytic transition model")

    def sample_initial_state(self, rng) -> Any:
        """True world start for an evaluation episode."""
        raise NotImplementedError

    def initial_belief(self, start) -> list[tuple[Any, float]]:
        """What the agent knows at the start of an episode whose true start is ``start``."""
        raise NotImplementedError

    @property
    def reward_range(self) -> float:
        """Width of the reward interval after shifting rewards to be non-negative.

        Terminal absorption yields reward 0, so 0 is always inside the range.
        """
        return max(self.max_reward, 0.0) - min(self.min_reward, 0.0)

    def check_action(self, a: int) -> None:
        if not isinstance(a, (int,)) or not 0 <= a < self.num_actions:
            raise ValueError(f"invalid action {a!r} for {self.name} ({self.num_actions} actions)")


def step(model: Model, s, a: int, phi: float) -> StepOutcome:
    """Checked wrapper around ``model.step``."""
    model.check_action(a)
    if model.is_terminal(s):
        raise ContractViolation(f"step called on terminal state {s!r}")
    if not 0.0 <= phi < 1.0:
        raise ValueError(f"phi must lie in [0, 1), got {phi}")
    return model.step(s, a, phi)


def obs_prob(model: Model, s_next, a: int, z) -> float:
    model.check_action(a)
    return model.obs_prob(s_next, a, z)
