"""Diagnostics for the performance bounds: penalty, regularized score, policy counts.

None of this drives the solver; lambda stays a tuned parameter.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from .belief import ExactBelief, exact_update
from .core import Model, ScenarioStream


@dataclass(frozen=True)
class TheoremParams:
    tau: float
    alpha: float
    K: int
    D: int
    num_actions: int
    num_obs: int
    R_max: float
    gamma: float

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if min(self.K, self.D, self.num_actions, self.num_obs) < 1:
            raise ValueError("K, D, |A| and |Z| must be positive")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if self.R_max < 0:
            raise ValueError("R_max must be non-negative (rewards are assumed shifted into [0, R_max])")

    @property
    def log_branching(self) -> float:
        return math.log(self.K * self.D * self.num_actions * self.num_obs)

    @property
    def scale(self) -> float:
        return self.R_max / ((1.0 + self.alpha) * (1.0 - self.gamma))


def theorem1_penalty(p: TheoremParams, policy_size: int) -> float:
    if policy_size < 0:
        raise ValueError("policy size must be >= 0")
    return p.scale * (math.log(4.0 / p.tau) + policy_size * p.log_branching) / (p.alpha * p.K)


def regularized_score(v_hat: float, policy_size: int, p: TheoremParams) -> float:
    factor = (1.0 - p.alpha) / (1.0 + p.alpha)
    return factor * v_hat - p.scale * policy_size * p.log_branching / (p.alpha * p.K)


def induced_lambda(p: TheoremParams) -> float:
    """lambda for which ``v_hat - lambda * size`` ranks policies like ``regularized_score``."""
    factor = (1.0 - p.alpha) / (1.0 + p.alpha)
    return p.scale * p.log_branching / (p.alpha * p.K) / factor


def policy_count_bound(size: int, num_actions: int, num_obs: int) -> int:
    """Upper bound on the number of policy trees with ``size`` nodes."""
    if size < 1:
        raise ValueError("size must be >= 1")
    shapes = size ** (size - 2) if size >= 2 else 1
    return shapes * (num_actions * num_obs) ** size


def enumerate_policy_trees(size: int, num_actions: int, num_obs: int):
    """Every policy tree with exactly ``size`` nodes as ``(action, ((z, subtree), ...))``.

    Observations without a subtree fall back to the default policy.
    """
    if size < 1:
        return
    for a in range(num_actions):
        for rest in _forests(size - 1, tuple(range(num_obs)), num_actions):
            yield (a, rest)


def _forests(n: int, slots: tuple, num_actions: int):
    if n == 0:
        yield ()
        return
    for k in range(1, min(n, len(slots)) + 1):
        for chosen in combinations(slots, k):
            for sizes in _compositions(n, k):
                subtrees = [list(enumerate_policy_trees(m, num_actions, len(slots))) for m in sizes]
                for combo in product(*subtrees):
                    yield tuple(zip(chosen, combo))


def _compositions(n: int, k: int):
    if k == 1:
        yield (n,)
        return
    for first in range(1, n - k + 2):
        for rest in _compositions(n - first, k - 1):
            yield (first,) + rest


def count_policy_trees(size: int, num_actions: int, num_obs: int) -> int:
    return sum(1 for _ in enumerate_policy_trees(size, num_actions, num_obs))


# ------------------------------------------------------------ coverage experiment


def fixed_action_values(model: Model, action: int, tol: float = 1e-12) -> dict:
    """Exact infinite-horizon value of always playing ``action``, per state."""
    states = model.states()
    idx = {s: i for i, s in enumerate(states)}
    n = len(states)
    P = np.zeros((n, n))
    r = np.zeros(n)
    for s in states:
        if model.is_terminal(s):
            continue
        r[idx[s]] = model.reward(s, action)
        for s2, p in model.transition(s, action):
            P[idx[s], idx[s2]] += p
    V = np.linalg.solve(np.eye(n) - model.discount * P, r)
    return {s: float(V[idx[s]]) for s in states}


def exact_one_step_value(model: Model, b0: ExactBelief, first_action: int, default_action: int) -> float:
    """True value of the size-1 policy: ``first_action``, then ``default_action`` forever."""
    tail = fixed_action_values(model, default_action)
    gamma = model.discount
    total = sum(p * model.reward(s, first_action) for s, p in b0.probabilities.items())
    for z in model.observations():
        like = sum(
            p * t * model.obs_prob(s2, first_action, z)
            for s, p in b0.probabilities.items()
            for s2, t in model.transition(s, first_action)
        )
        if like <= 0:
            continue
        post, _ = exact_update(b0, first_action, z, model)
        total += gamma * like * sum(p * tail[s] for s, p in post.probabilities.items())
    return total


def empirical_one_step_value(model: Model, streams, first_action: int, default_action: int, horizon: int = 400) -> float:
    gamma = model.discount
    total = 0.0
    for st in streams:
        s, ret = st.start_state, 0.0
        for t in range(horizon):
            if model.is_terminal(s):
                break
            a = first_action if t == 0 else default_action
            o = model.step(s, a, st.phi(t + 1))
            ret += gamma**t * o.reward
            s = o.next_state
        total += ret
    return total / len(streams)


@dataclass
class CoverageResult:
    violations: int
    trials: int
    allowed: float
    true_value: float
    mean_empirical: float
    penalty: float

    @property
    def passed(self) -> bool:
        return self.violations <= self.allowed


def theorem1_coverage(
    model: Model,
    first_action: int,
    default_action: int,
    tau: float = 0.1,
    alpha: float = 0.5,
    K: int = 20,
    D: int = 90,
    trials: int = 500,
    seed: int = 0,
) -> CoverageResult:
    """Count resamples where the true value falls below the high-probability bound.

    Rewards are shifted by ``-min_reward`` on every step (also after
    termination) so they lie in ``[0, reward_range]``, which moves every
    value by the same constant ``shift / (1 - gamma)``.
    """
    shift = -min(model.min_reward, 0.0)
    offset = shift / (1.0 - model.discount)
    params = TheoremParams(
        tau, alpha, K, D, model.num_actions, len(model.observations()), model.reward_range, model.discount
    )
    penalty = theorem1_penalty(params, 1)
    factor = (1.0 - alpha) / (1.0 + alpha)
    rng = np.random.default_rng(seed)
    start = model.sample_initial_state(rng)
    b0 = ExactBelief.from_pairs(model.initial_belief(start))
    true_v = exact_one_step_value(model, b0, first_action, default_action) + offset
    states = list(b0.probabilities)
    probs = np.array([b0.probabilities[s] for s in states])
    violations = 0
    emp = []
    for trial in range(trials):
        idx = rng.choice(len(states), size=K, p=probs / probs.sum())
        streams = [ScenarioStream(states[i], k, seed * 1_000_003 + trial) for k, i in enumerate(idx)]
        v_hat = empirical_one_step_value(model, streams, first_action, default_action) + offset
        emp.append(v_hat)
        if true_v < factor * v_hat - penalty:
            violations += 1
    allowed = tau * trials + 3.0 * math.sqrt(trials * tau * (1.0 - tau))
    return CoverageResult(violations, trials, allowed, true_v, float(np.mean(emp)), penalty)


def penalty_table(p: TheoremParams, sizes=(0, 1, 2, 5, 10, 20, 50)) -> list[tuple[int, float]]:
    return [(n, theorem1_penalty(p, n)) for n in sizes]
