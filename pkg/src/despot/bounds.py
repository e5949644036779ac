"""Initial bounds for DESPOT nodes and default policies.

Every bound object is called as ``bound(streams, states, depth, history)`` on
the scenarios of one node and returns the *average* value over those
scenarios; scenarios already in a terminal state contribute 0. Per-scenario
results are memoised on ``(scenario_id, depth, state)``; call ``reset()``
whenever a fresh scenario set is sampled.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .core import Model, ScenarioStream, UnsupportedCapability

ROLLOUT_CAP = 90


# --------------------------------------------------------------------------- MDP


@dataclass(frozen=True)
class MdpSolution:
    states: list
    values: np.ndarray
    policy: np.ndarray
    residual: float
    index: dict

    def value(self, s) -> float:
        return float(self.values[self.index[s]])

    def action(self, s) -> int:
        return int(self.policy[self.index[s]])


def _mdp_arrays(model: Model):
    states = model.states()
    index = {s: i for i, s in enumerate(states)}
    n, nA = len(states), model.num_actions
    R = np.zeros((n, nA))
    P = []
    for a in range(nA):
        rows, cols, vals = [], [], []
        for i, s in enumerate(states):
            if model.is_terminal(s):
                continue
            R[i, a] = model.reward(s, a)
            for s2, p in model.transition(s, a):
                rows.append(i)
                cols.append(index[s2])
                vals.append(p)
        P.append(sp.csr_matrix((vals, (rows, cols)), shape=(n, n)))
    return states, index, R, P


def mdp_value_iteration(model: Model, tol: float = 1e-6, max_iter: int = 100_000) -> MdpSolution:
    """Fully observable value iteration to sup-norm Bellman residual ``tol``."""
    if not model.tabular:
        raise UnsupportedCapability(f"{model.name} is not tabular; MDP value iteration needs enumerable states")
    states, index, R, P = _mdp_arrays(model)
    gamma = model.discount
    V = np.zeros(len(states))
    residual = np.inf
    for _ in range(max_iter):
        Q = np.stack([R[:, a] + gamma * (P[a] @ V) for a in range(model.num_actions)], axis=1)
        V_new = Q.max(axis=1)
        residual = float(np.max(np.abs(V_new - V))) if len(V) else 0.0
        V = V_new
        if residual <= tol * (1 - gamma):
            break
    Q = np.stack([R[:, a] + gamma * (P[a] @ V) for a in range(model.num_actions)], axis=1)
    V_final = Q.max(axis=1)
    residual = float(np.max(np.abs(V_final - V))) if len(V) else 0.0
    return MdpSolution(states, V, Q.argmax(axis=1), residual, index)


def mdp_solution(model: Model) -> MdpSolution:
    """Value iteration result cached on the model instance."""
    sol = getattr(model, "_mdp_solution", None)
    if sol is None:
        sol = mdp_value_iteration(model)
        model._mdp_solution = sol
    return sol


# ------------------------------------------------------------------ upper bounds


class UpperBound:
    admissible = False

    def reset(self) -> None:
        pass

    def __call__(self, streams: Sequence[ScenarioStream], states: Sequence, depth: int, history=()) -> float:
        raise NotImplementedError


class UninformedUpper(UpperBound):
    """``R_max / (1 - gamma)`` everywhere."""

    admissible = True

    def __init__(self, model: Model):
        self.bound = uninformed_upper(model)

    def __call__(self, streams, states, depth, history=()):
        return self.bound


def uninformed_upper(model: Model) -> float:
    if not model.discount < 1.0:
        raise ValueError("uninformed bound needs discount < 1")
    return model.max_reward / (1.0 - model.discount)


class MdpUpper(UpperBound):
    """Average fully observable MDP value of the scenarios' current states."""

    def __init__(self, model: Model, solution: MdpSolution | None = None):
        self.model = model
        self.solution = solution or mdp_solution(model)

    def __call__(self, streams, states, depth, history=()):
        return mdp_upper(states, self.solution)


def mdp_upper(states: Sequence, sol: MdpSolution) -> float:
    vals, idx = sol.values, sol.index
    return sum(float(vals[idx[s]]) for s in states) / len(states)


class HindsightUpper(UpperBound):
    """Hindsight optimisation: per-scenario deterministic DP over a trellis.

    ``u(t, s) = max_a { r + gamma * u(t + 1, s') }`` with ``(s', ., r)`` from the
    scenario's own random number at depth ``t + 1``, and
    ``u(end, s) = terminal_bound(s)``. The trellis ends at absolute depth
    ``end = min(D + 1, horizon)`` so it covers every action a policy inside a
    depth-``D`` tree can take.
    """

    def __init__(
        self,
        model: Model,
        D: int,
        terminal_bound: Callable[[object], float] | None = None,
        horizon: int | None = None,
        max_evaluations: int = 50_000_000,
    ):
        self.model = model
        self.end = D + 1 if horizon is None else min(D + 1, horizon)
        if terminal_bound is None:
            ub = uninformed_upper(model)
            terminal_bound = lambda s: ub  # noqa: E731
        self.terminal_bound = terminal_bound
        self.max_evaluations = max_evaluations
        self.evaluations = 0
        self._memo: dict = {}

    def reset(self):
        self._memo = {}
        self.evaluations = 0

    def scenario_value(self, stream: ScenarioStream, t: int, s) -> float:
        memo = self._memo.setdefault(stream.scenario_id, {})
        return self._u(stream, memo, t, s)

    def _u(self, stream, memo, t, s):
        key = (t, s)
        hit = memo.get(key)
        if hit is not None:
            return hit
        model = self.model
        if model.is_terminal(s):
            val = 0.0
        elif t >= self.end:
            val = self.terminal_bound(s)
        else:
            self.evaluations += 1
            if self.evaluations > self.max_evaluations:
                raise RuntimeError(
                    f"hindsight trellis exceeded {self.max_evaluations} evaluations; lower the trellis horizon"
                )
            phi = stream.phi(t + 1)
            gamma = model.discount
            val = -np.inf
            for a in range(model.num_actions):
                o = model.step(s, a, phi)
                v = o.reward + gamma * self._u(stream, memo, t + 1, o.next_state)
                if v > val:
                    val = v
        memo[key] = val
        return val

    def __call__(self, streams, states, depth, history=()):
        total = 0.0
        for st, s in zip(streams, states):
            total += self.scenario_value(st, depth, s)
        return total / len(states)


def ho_upper(
    streams: Sequence[ScenarioStream], states: Sequence, depth: int, model: Model, D: int, terminal_bound=None
) -> float:
    """One-shot hindsight bound over a trellis of ``D`` slices below ``depth``."""
    return HindsightUpper(model, depth + D, terminal_bound, horizon=depth + D)(streams, states, depth)


# ------------------------------------------------------------- default policies


class DefaultPolicy:
    """Maps the states of a group of scenarios (and the history) to an action.

    ``state_based`` policies choose per state, so rollouts decompose over
    scenarios and are memoised per scenario.
    """

    kind = "abstract"
    state_based = False

    def action(self, states: Sequence, history=()) -> int:
        raise NotImplementedError

    def state_action(self, s) -> int:
        raise NotImplementedError


class FixedAction(DefaultPolicy):
    kind = "fixed-action"
    state_based = True

    def __init__(self, a: int):
        self.a = a

    def action(self, states, history=()):
        return self.a

    def state_action(self, s):
        return self.a

    def __repr__(self):
        return f"FixedAction({self.a})"


def mode_state(states: Sequence, model: Model | None = None):
    """Most frequent non-terminal state; ties go to the smallest state."""
    live = [s for s in states if model is None or not model.is_terminal(s)]
    if not live:
        live = list(states)
    counts = Counter(live)
    top = max(counts.values())
    return min(s for s, c in counts.items() if c == top)


class ModeMdpPolicy(DefaultPolicy):
    """MDP-greedy action at the mode of the group's states."""

    kind = "mode-mdp"

    def __init__(self, model: Model, solution: MdpSolution | None = None):
        self.model = model
        self.solution = solution or mdp_solution(model)

    def action(self, states, history=()):
        return self.solution.action(mode_state(states, self.model))


def default_action(policy: DefaultPolicy, states: Sequence, history=()) -> int:
    return policy.action(states, history)


def best_fixed_action(model: Model, states: Sequence, streams: Sequence[ScenarioStream], horizon: int) -> int:
    """Fixed action with the highest average rollout value on the given scenarios."""
    best, best_v = 0, -np.inf
    for a in range(model.num_actions):
        v = RolloutLower(model, FixedAction(a), horizon)(streams, states, 0)
        if v > best_v:
            best, best_v = a, v
    return best


# ------------------------------------------------------------------ lower bound


class RolloutLower:
    """Average discounted return of the default policy over a node's scenarios.

    A node at depth ``d`` rolls out ``min(D - d, cap)`` steps (never fewer
    than zero), truncating at terminal states.
    """

    def __init__(self, model: Model, policy: DefaultPolicy, D: int, cap: int = ROLLOUT_CAP):
        self.model = model
        self.policy = policy
        self.D = D
        self.cap = cap
        self._memo: dict = {}

    def reset(self):
        self._memo = {}

    def horizon(self, depth: int) -> int:
        return max(0, min(self.D - depth, self.cap))

    def __call__(self, streams, states, depth, history=()):
        return self.total(streams, states, depth, history) / len(states)

    def total(self, streams, states, depth, history=()) -> float:
        h = self.horizon(depth)
        if h == 0:
            return 0.0
        if self.policy.state_based:
            return sum(self._scenario(st, depth, s, h) for st, s in zip(streams, states))
        return self._group(list(streams), list(states), depth, h, tuple(history))

    def _scenario(self, stream, t, s, h) -> float:
        model, policy, gamma = self.model, self.policy, self.model.discount
        det = model.deterministic
        # without randomness the value depends on (s, h) only, shared by all scenarios
        memo = self._memo.setdefault(None if det else stream.scenario_id, {})
        key = (0 if det else t, s, h)
        hit = memo.get(key)
        if hit is not None:
            return hit
        path = []
        tail = 0.0
        while h > 0 and not model.is_terminal(s):
            k = (0 if det else t, s, h)
            if k in memo:
                tail = memo[k]
                break
            o = model.step(s, policy.state_action(s), 0.0 if det else stream.phi(t + 1))
            path.append((k, o.reward))
            s, t, h = o.next_state, t + 1, h - 1
        for k, r in reversed(path):
            tail = r + gamma * tail
            memo[k] = tail
        return memo.get(key, tail)

    def _group(self, streams, states, t, h, history) -> float:
        model = self.model
        live = [(st, s) for st, s in zip(streams, states) if not model.is_terminal(s)]
        if h == 0 or not live:
            return 0.0
        a = self.policy.action([s for _, s in live], history)
        total = 0.0
        groups: dict = {}
        for st, s in live:
            o = model.step(s, a, st.phi(t + 1))
            total += o.reward
            g = groups.get(o.observation)
            if g is None:
                groups[o.observation] = g = ([], [])
            g[0].append(st)
            g[1].append(o.next_state)
        gamma = model.discount
        for z, (gs, ss) in groups.items():
            total += gamma * self._group(gs, ss, t + 1, h - 1, history + ((a, z),))
        return total


def rollout_lower(
    streams: Sequence[ScenarioStream], states: Sequence, policy: DefaultPolicy, model: Model, horizon: int, depth: int = 0
) -> float:
    """``horizon``-step default-policy value averaged over the given scenarios."""
    return RolloutLower(model, policy, depth + horizon, cap=horizon)(streams, states, depth)


# --------------------------------------------------------------------- factories

UBOUND_NAMES = ("uninformed", "mdp", "ho", "ho-mdp", "ho-tight", "domain")


def make_upper_bound(name: str, model: Model, D: int, ho_horizon: int | None = None) -> UpperBound:
    if name == "domain":
        name = getattr(model, "default_ubound", "uninformed")
    if name == "uninformed":
        return UninformedUpper(model)
    if name == "mdp":
        return MdpUpper(model)
    if name == "ho":
        return HindsightUpper(model, D, horizon=ho_horizon)
    if name == "ho-mdp":
        sol = mdp_solution(model)
        return HindsightUpper(model, D, terminal_bound=sol.value, horizon=ho_horizon)
    if name == "ho-tight":
        # leaves below depth D roll out zero steps, so 0 is their exact value
        return HindsightUpper(model, D, terminal_bound=lambda s: 0.0, horizon=ho_horizon)
    raise KeyError(f"unknown upper bound {name!r}; known: {', '.join(UBOUND_NAMES)}")


def make_default_policy(name: str, model: Model) -> DefaultPolicy:
    if name == "domain":
        name = getattr(model, "default_policy_name", "fixed:0")
    if name == "mode-mdp":
        return ModeMdpPolicy(model)
    if name.startswith("fixed:"):
        arg = name.split(":", 1)[1]
        names = list(model.action_names)
        if arg in names:
            return FixedAction(names.index(arg))
        try:
            a = int(arg)
        except ValueError:
            raise KeyError(f"unknown action {arg!r} for {model.name}; known: {names}") from None
        model.check_action(a)
        return FixedAction(a)
    raise KeyError(f"unknown default policy {name!r}; use fixed:<action>, mode-mdp or domain")
