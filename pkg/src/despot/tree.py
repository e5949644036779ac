"""The sparse belief tree grown under K sampled scenarios.

Nodes live in a flat arena (``tree.nodes``) and refer to each other by
object reference; every node keeps its parent, so backups walk straight up.
Each node stores four bounds:

* ``U``        upper bound on the empirical value of the best policy at the node
* ``L0``       default-policy value (initial lower bound on the same quantity)
* ``nu_upper`` upper bound on the optimal regularized weighted utility
* ``nu_lower`` lower bound on it

plus the initial values ``U0``, ``nu_upper0`` and ``nu_lower0``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

from .core import ContractViolation, Model, ScenarioStream


class DespotNode:
    __slots__ = (
        "id",
        "parent",
        "action",
        "obs",
        "depth",
        "streams",
        "states",
        "children",
        "reward_sums",
        "U",
        "U0",
        "L0",
        "nu_upper",
        "nu_lower",
        "nu_upper0",
        "nu_lower0",
        "expanded",
        "frozen",
        "live",
    )

    def __init__(self, node_id, parent, action, obs, depth, streams, states, live):
        self.id = node_id
        self.parent = parent
        self.action = action
        self.obs = obs
        self.depth = depth
        self.streams = streams
        self.states = states
        self.live = live
        self.children: list[dict] | None = None
        self.reward_sums: list[float] | None = None
        self.expanded = False
        self.frozen = False

    @property
    def num_scenarios(self) -> int:
        return len(self.states)

    @property
    def gap(self) -> float:
        return self.nu_upper - self.nu_lower

    def mean_reward(self, a: int) -> float:
        return self.reward_sums[a] / len(self.states)

    def __repr__(self):
        return (
            f"DespotNode(id={self.id}, depth={self.depth}, |phi|={len(self.states)}, "
            f"U={self.U:.4g}, L0={self.L0:.4g}, nu=[{self.nu_lower:.4g}, {self.nu_upper:.4g}])"
        )


def init_node_bounds(
    num_scenarios: int, depth: int, U0: float, L0: float, lam: float, K: int, gamma: float
) -> tuple[float, float]:
    """Initial (upper, lower) regularized-utility bounds from empirical-value bounds."""
    w = num_scenarios / K * gamma**depth
    lower0 = w * L0
    upper0 = max(lower0, w * U0 - lam)
    return upper0, lower0


def rho(b: DespotNode, a: int, lam: float, K: int, gamma: float) -> float:
    """Weighted immediate reward of action ``a`` at ``b`` minus the size penalty."""
    return gamma**b.depth * b.reward_sums[a] / K - lam


def excess_uncertainty(b: DespotNode, eps_root: float, K: int, xi: float) -> float:
    return b.nu_upper - b.nu_lower - len(b.states) / K * xi * eps_root


def is_blocked(b: DespotNode, ancestor: DespotNode, lam: float, K: int, gamma: float) -> bool:
    """Blocking test; the path length counts both endpoints."""
    path_len = b.depth - ancestor.depth + 1
    lhs = len(ancestor.states) / K * gamma**ancestor.depth * (ancestor.U - ancestor.L0)
    return lhs <= lam * path_len


@dataclass
class TreeStats:
    trials: int = 0
    expansions: int = 0
    prunes: int = 0
    lemma_checks: int = 0
    lemma_violations: int = 0
    max_expanded_depth: int = -1


class DespotTree:
    def __init__(
        self,
        model: Model,
        streams: Sequence[ScenarioStream],
        upper,
        lower,
        policy,
        K: int | None = None,
        D: int = 90,
        lam: float = 0.0,
        xi: float = 0.95,
    ):
        self.model = model
        self.upper = upper
        self.lower = lower
        self.policy = policy
        self.K = len(streams) if K is None else K
        self.D = D
        self.lam = lam
        self.xi = xi
        self.gamma = model.discount
        self.stats = TreeStats()
        self.nodes: list[DespotNode] = []
        streams = list(streams)
        states = [st.start_state for st in streams]
        self.root = self._new_node(None, None, None, 0, streams, states)

    # ------------------------------------------------------------- construction

    def _new_node(self, parent, action, obs, depth, streams, states) -> DespotNode:
        is_term = self.model.is_terminal
        live = sum(1 for s in states if not is_term(s))
        node = DespotNode(len(self.nodes), parent, action, obs, depth, streams, states, live)
        self.nodes.append(node)
        if live == 0:
            U0 = L0 = 0.0
        else:
            hist = self.history(node)
            U0 = self.upper(streams, states, depth, hist)
            L0 = self.lower(streams, states, depth, hist)
        node.U = node.U0 = U0
        node.L0 = L0
        node.nu_upper0, node.nu_lower0 = init_node_bounds(
            len(states), depth, U0, L0, self.lam, self.K, self.gamma
        )
        node.nu_upper = node.nu_upper0
        node.nu_lower = node.nu_lower0
        return node

    def history(self, node: DespotNode) -> tuple:
        h = []
        while node is not None and node.parent is not None:
            h.append((node.action, node.obs))
            node = node.parent
        return tuple(reversed(h))

    def expand(self, b: DespotNode) -> list[DespotNode]:
        """Create every child reached by some live scenario, for every action."""
        if b.expanded:
            raise ContractViolation(f"node {b.id} is already expanded")
        model = self.model
        is_term = model.is_terminal
        live = [(st, s) for st, s in zip(b.streams, b.states) if not is_term(s)]
        t = b.depth + 1
        det = model.deterministic
        phis = [0.0] * len(live) if det else [st.phi(t) for st, _ in live]
        children: list[dict] = []
        reward_sums: list[float] = []
        created: list[DespotNode] = []
        for a in range(model.num_actions):
            groups: dict = {}
            seen: dict = {}
            rsum = 0.0
            for (st, s), phi in zip(live, phis):
                if det:
                    o = seen.get(s)
                    if o is None:
                        o = seen[s] = model.step(s, a, phi)
                else:
                    o = model.step(s, a, phi)
                rsum += o.reward
                g = groups.get(o.observation)
                if g is None:
                    groups[o.observation] = g = ([], [])
                g[0].append(st)
                g[1].append(o.next_state)
            reward_sums.append(rsum)
            kids = {}
            for z, (gs, ss) in groups.items():
                kids[z] = self._new_node(b, a, z, t, gs, ss)
                created.append(kids[z])
            children.append(kids)
        b.children = children
        b.reward_sums = reward_sums
        b.expanded = True
        self.stats.expansions += 1
        if b.depth > self.stats.max_expanded_depth:
            self.stats.max_expanded_depth = b.depth
        return created

    # ------------------------------------------------------------------ bounds

    def rho(self, b: DespotNode, a: int) -> float:
        return rho(b, a, self.lam, self.K, self.gamma)

    def nu_upper_a(self, b: DespotNode, a: int) -> float:
        return self.rho(b, a) + sum(c.nu_upper for c in b.children[a].values())

    def nu_lower_a(self, b: DespotNode, a: int) -> float:
        return self.rho(b, a) + sum(c.nu_lower for c in b.children[a].values())

    def backed_up(self, b: DespotNode) -> tuple[float, float, float]:
        """(nu_upper, nu_lower, U) recomputed from the children of ``b``."""
        gamma = self.gamma
        scale = gamma**b.depth / self.K
        n = len(b.states)
        best_u = best_l = best_U = float("-inf")
        for a, kids in enumerate(b.children):
            r = b.reward_sums[a]
            rh = scale * r - self.lam
            su = sl = sU = 0.0
            for c in kids.values():
                su += c.nu_upper
                sl += c.nu_lower
                sU += len(c.states) * c.U
            if rh + su > best_u:
                best_u = rh + su
            if rh + sl > best_l:
                best_l = rh + sl
            u = (r + gamma * sU) / n
            if u > best_U:
                best_U = u
        lower0 = b.nu_lower0
        return max(lower0, best_u), max(lower0, best_l), best_U

    def backup_node(self, b: DespotNode) -> None:
        if not b.expanded or b.frozen:
            return
        b.nu_upper, b.nu_lower, b.U = self.backed_up(b)

    def backup_path(self, b: DespotNode) -> None:
        """Re-apply the backup equations from the parent of ``b`` up to the root."""
        x = b.parent
        while x is not None:
            self.backup_node(x)
            x = x.parent

    def make_default(self, b: DespotNode) -> None:
        b.U = b.L0
        b.nu_upper = b.nu_lower0
        b.nu_lower = b.nu_lower0
        b.frozen = True

    def excess_uncertainty(self, b: DespotNode, eps_root: float) -> float:
        return excess_uncertainty(b, eps_root, self.K, self.xi)

    def is_blocked(self, b: DespotNode, ancestor: DespotNode) -> bool:
        return is_blocked(b, ancestor, self.lam, self.K, self.gamma)

    def blocked_by_any(self, b: DespotNode) -> bool:
        x = b
        while x is not None:
            if self.is_blocked(b, x):
                return True
            x = x.parent
        return False

    # -------------------------------------------------------------- extraction

    def best_lower_action(self, b: DespotNode) -> tuple[int, float]:
        best_a, best = 0, float("-inf")
        for a in range(len(b.children)):
            v = self.nu_lower_a(b, a)
            if v > best:
                best_a, best = a, v
        return best_a, best

    def default_action(self, b: DespotNode) -> int:
        return self.policy.action(b.states, self.history(b))

    def policy_tree(self) -> "PolicyTree":
        """Policy maximising the lower bound; leaves run the default policy."""
        nodes = []

        def visit(b: DespotNode) -> int:
            idx = len(nodes)
            entry = {"id": idx, "action": None, "depth": b.depth, "edges": {}, "default": True}
            nodes.append(entry)
            if b.expanded and not b.frozen and b.live:
                a, v = self.best_lower_action(b)
                if v > b.nu_lower0:
                    entry["action"] = a
                    entry["default"] = False
                    for z, c in b.children[a].items():
                        entry["edges"][str(z)] = visit(c)
                    return idx
            entry["action"] = self.default_action(b) if b.live else None
            return idx

        visit(self.root)
        return PolicyTree(nodes)

    def size(self) -> int:
        return len(self.nodes)


def extract_root_action(tree: DespotTree, policy=None) -> int:
    """Action maximising the root's per-action lower bound, unless the default is better."""
    policy = policy or tree.policy
    root = tree.root
    if not root.expanded or not root.children:
        return policy.action(root.states, ())
    a, v = tree.best_lower_action(root)
    if root.nu_lower0 > v:
        return policy.action(root.states, ())
    return a


@dataclass
class PolicyTree:
    """Exported policy: one action per internal node, observation-labelled edges."""

    nodes: list = field(default_factory=list)

    @property
    def size(self) -> int:
        return sum(1 for n in self.nodes if not n["default"])

    def root_action(self):
        return self.nodes[0]["action"] if self.nodes else None

    def to_json(self) -> str:
        return json.dumps({"schema": 1, "size": self.size, "nodes": self.nodes})

    @classmethod
    def from_json(cls, text: str) -> "PolicyTree":
        return cls(json.loads(text)["nodes"])

    def act(self, node_id: int, obs) -> int | None:
        """Next node after observing ``obs`` at ``node_id``; None means fall back to the default policy."""
        return self.nodes[node_id]["edges"].get(str(obs))
