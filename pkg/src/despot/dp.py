"""Exact bottom-up dynamic programming over a fully constructed DESPOT.

Two nodes whose live scenarios sit in the same states at the same depth root
identical subtrees, so the recursion is memoised on
``(depth, ((scenario_id, state), ...))``. The result is the same optimum as
on the explicit tree; ``DpResult.tree_nodes`` still reports the explicit
tree's size.
"""
from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass
from typing import Sequence

from .belief import ParticleBelief, sample_scenarios
from .bounds import RolloutLower
from .core import Model, ScenarioStream
from .tree import DespotTree, PolicyTree


class CapacityError(RuntimeError):
    def __init__(self, count: int, limit: int):
        super().__init__(f"full DESPOT needs more than {limit} distinct nodes (reached {count}); raise node_limit or shrink K/D")
        self.count = count
        self.limit = limit


def truncation_depth(R_max: float, lam: float, gamma: float) -> int | None:
    """Depth beyond which no optimal regularized policy can reach; None when lam <= 0."""
    if lam <= 0:
        return None
    if not gamma < 1:
        raise ValueError("truncation needs gamma < 1")
    return math.ceil(R_max / (lam * (1.0 - gamma))) + 1


@dataclass
class DpResult:
    value: float
    root_action: int | None
    policy: PolicyTree
    tree_nodes: int
    distinct_nodes: int
    default_value: float

    @property
    def uses_default(self) -> bool:
        return self.root_action is None


class _Solver:
    def __init__(self, model, lower, K, D, depth_limit, lam, node_limit, with_history):
        self.model = model
        self.lower = lower
        self.K = K
        self.D = D
        self.depth_limit = depth_limit
        self.lam = lam
        self.node_limit = node_limit
        self.with_history = with_history
        self.memo: dict = {}

    def key(self, depth, streams, states, history):
        live = tuple((st.scenario_id, s) for st, s in zip(streams, states))
        return (depth, live, history) if self.with_history else (depth, live)

    def solve(self, depth, streams, states, history):
        """Returns the memo entry [value, action, default, children_by_action, size].

        ``streams``/``states`` hold live scenarios only; terminal ones add nothing.
        """
        key = self.key(depth, streams, states, history)
        entry = self.memo.get(key)
        if entry is not None:
            return entry
        if not states:
            entry = [0.0, None, 0.0, None, 1]
            self._store(key, entry)
            return entry
        model = self.model
        is_term = model.is_terminal
        scale = model.discount**depth / self.K
        default = scale * self.lower.total(streams, states, depth, history)
        best, best_a, kids_by_action, size = default, None, None, 1
        if depth <= self.depth_limit:
            kids_by_action = []
            t = depth + 1
            phis = [st.phi(t) for st in streams]
            step = model.step
            for a in range(model.num_actions):
                groups: dict = {}
                rsum = 0.0
                for st, s, phi in zip(streams, states, phis):
                    o = step(s, a, phi)
                    rsum += o.reward
                    g = groups.get(o.observation)
                    if g is None:
                        groups[o.observation] = g = ([], [])
                    if not is_term(o.next_state):
                        g[0].append(st)
                        g[1].append(o.next_state)
                val = scale * rsum - self.lam
                kids = []
                for z, (gs, ss) in groups.items():
                    h = history + ((a, z),) if self.with_history else history
                    child = self.solve(t, gs, ss, h)
                    val += child[0]
                    size += child[4]
                    kids.append((z, gs, ss, h))
                kids_by_action.append(kids)
                if val > best:
                    best, best_a = val, a
        entry = [best, best_a, default, kids_by_action, size]
        self._store(key, entry)
        return entry

    def _store(self, key, entry):
        self.memo[key] = entry
        if len(self.memo) > self.node_limit:
            raise CapacityError(len(self.memo), self.node_limit)

    def policy(self, streams, states, history, policy_fn) -> PolicyTree:
        nodes = []

        def visit(depth, streams, states, history):
            entry = self.solve(depth, streams, states, history)
            idx = len(nodes)
            node = {"id": idx, "action": None, "depth": depth, "edges": {}, "default": True}
            nodes.append(node)
            if entry[1] is None:
                node["action"] = policy_fn(states, history) if states else None
                return idx
            node["action"] = entry[1]
            node["default"] = False
            for z, gs, ss, h in entry[3][entry[1]]:
                node["edges"][str(z)] = visit(depth + 1, gs, ss, h)
            return idx

        visit(0, streams, states, history)
        return PolicyTree(nodes)


def solve_full(
    b0: ParticleBelief | Sequence[ScenarioStream],
    model: Model,
    policy,
    K: int,
    D: int,
    lam: float,
    seed: int = 0,
    node_limit: int = 10_000_000,
    lower=None,
) -> DpResult:
    """Optimal regularized weighted utility at the root of the full DESPOT."""
    streams = list(b0) if not isinstance(b0, ParticleBelief) else sample_scenarios(b0, K, seed)
    if len(streams) != K:
        raise ValueError(f"expected {K} scenarios, got {len(streams)}")
    lower = lower or RolloutLower(model, policy, D)
    lower.reset()
    trunc = truncation_depth(model.reward_range, lam, model.discount)
    depth_limit = D if trunc is None else min(D, trunc)
    solver = _Solver(model, lower, K, D, depth_limit, lam, node_limit, getattr(policy, "uses_history", False))
    live = [st for st in streams if not model.is_terminal(st.start_state)]
    streams, states = live, [st.start_state for st in live]
    limit = sys.getrecursionlimit()
    if limit < 4 * depth_limit + 200:
        sys.setrecursionlimit(4 * depth_limit + 200)
    root = solver.solve(0, streams, states, ())
    tree = solver.policy(streams, states, (), policy.action)
    return DpResult(root[0], root[1], tree, root[4], len(solver.memo), root[2])


def solve_tree(tree: DespotTree) -> float:
    """Optimal regularized utility restricted to the nodes materialised in ``tree``."""

    def nu(b):
        if not b.expanded:
            return b.nu_lower0
        best = b.nu_lower0
        for a, kids in enumerate(b.children):
            v = tree.rho(b, a) + sum(nu(c) for c in kids.values())
            if v > best:
                best = v
        return best

    return nu(tree.root)


def dump_full_tree(streams: Sequence[ScenarioStream], model: Model, policy, K: int, D: int, lam: float) -> str:
    """JSON dump of every full-DESPOT node with its optimal utility (small instances only)."""
    res_nodes = []
    lower = RolloutLower(model, policy, D)
    solver = _Solver(model, lower, K, D, D, lam, 10_000_000, False)

    def visit(depth, streams, states, path):
        entry = solver.solve(depth, streams, states, ())
        res_nodes.append({"path": path, "depth": depth, "scenarios": len(states), "nu": entry[0], "action": entry[1]})
        if entry[3] is None:
            return
        for a, kids in enumerate(entry[3]):
            for z, gs, ss, _ in kids:
                visit(depth + 1, gs, ss, path + [[a, z]])

    live = [st for st in streams if not model.is_terminal(st.start_state)]
    visit(0, live, [st.start_state for st in live], [])
    return json.dumps({"schema": 1, "nodes": res_nodes})


def evaluate_policy_tree(
    policy: PolicyTree, streams: Sequence[ScenarioStream], model: Model, default_policy, D: int, lower=None
) -> float:
    """Empirical value of ``policy`` on the given scenarios.

    Scenarios follow the tree while it has an edge for their observation and
    fall back to the default policy (rolled out with the usual horizon) after.
    """
    lower = lower or RolloutLower(model, default_policy, D)
    gamma = model.discount
    K = len(streams)

    def value(node_id, group, states, depth, history):
        live = [(st, s) for st, s in zip(group, states) if not model.is_terminal(s)]
        if not live:
            return 0.0
        node = policy.nodes[node_id] if node_id is not None else None
        if node is None or node["default"]:
            return gamma**depth * lower.total([st for st, _ in live], [s for _, s in live], depth, history)
        a = node["action"]
        total = 0.0
        groups: dict = {}
        for st, s in live:
            o = model.step(s, a, st.phi(depth + 1))
            total += gamma**depth * o.reward
            g = groups.setdefault(o.observation, ([], []))
            g[0].append(st)
            g[1].append(o.next_state)
        for z, (gs, ss) in groups.items():
            total += value(node["edges"].get(str(z)), gs, ss, depth + 1, history + ((a, z),))
        return total

    streams = list(streams)
    return value(0, streams, [st.start_state for st in streams], 0, ()) / K
