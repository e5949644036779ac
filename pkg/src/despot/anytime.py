"""Anytime forward search over an incrementally built DESPOT."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass

from .belief import ParticleBelief, sample_scenarios
from .core import Model
from .tree import DespotNode, DespotTree, extract_root_action


@dataclass
class AnytimeConfig:
    K: int = 500
    D: int = 90
    lam: float = 0.0
    xi: float = 0.95
    eps0: float = 0.0
    tmax_ms: float | None = 1000.0
    trial_budget: int | None = None
    seed: int = 0
    debug_checks: bool = False

    def __post_init__(self):
        if not 0.0 < self.xi < 1.0:
            raise ValueError(f"xi must lie in (0, 1), got {self.xi}")
        if self.K < 1 or self.D < 1:
            raise ValueError("K and D must be >= 1")
        if self.lam < 0 or self.eps0 < 0:
            raise ValueError("lambda and eps0 must be non-negative")


@dataclass
class SearchStats:
    trials: int = 0
    expansions: int = 0
    prunes: int = 0
    final_gap: float = 0.0
    elapsed_ms: float = 0.0
    nodes: int = 0
    lemma_checks: int = 0
    lemma_violations: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


def prune(tree: DespotTree, b: DespotNode) -> bool:
    """Collapse blocked nodes on the path from ``b`` upward; stop at the first unblocked one."""
    blocked = False
    x = b
    while x is not None:
        if tree.blocked_by_any(x):
            tree.make_default(x)
            tree.backup_path(x)
            tree.stats.prunes += 1
            blocked = True
            x = x.parent
        else:
            break
    return blocked


def _check_forward_lemma(tree: DespotTree, b: DespotNode, eps_root: float, a_star: int) -> None:
    """Excess uncertainty at ``b`` never exceeds the sum over its ``a_star`` children."""
    if b.frozen:
        return
    upper, lower, _ = tree.backed_up(b)
    e_b = upper - lower - len(b.states) / tree.K * tree.xi * eps_root
    if e_b <= 0:
        return
    total = sum(tree.excess_uncertainty(c, eps_root) for c in b.children[a_star].values())
    tree.stats.lemma_checks += 1
    if e_b > total + 1e-9 * max(1.0, abs(e_b)):
        tree.stats.lemma_violations += 1


def explore(tree: DespotTree, eps_root: float, debug_checks: bool = False) -> DespotNode:
    """One trial: descend by optimistic action and largest excess uncertainty."""
    b = tree.root
    D = tree.D
    while b.depth <= D and tree.excess_uncertainty(b, eps_root) > 0 and not prune(tree, b):
        if not b.expanded:
            tree.expand(b)
        if b.live == 0:
            break
        a_star, best = 0, float("-inf")
        for a in range(len(b.children)):
            v = tree.nu_upper_a(b, a)
            if v > best:
                a_star, best = a, v
        if debug_checks:
            _check_forward_lemma(tree, b, eps_root, a_star)
        kids = b.children[a_star]
        nxt, best_e = None, float("-inf")
        for c in kids.values():
            e = tree.excess_uncertainty(c, eps_root)
            if e > best_e:
                nxt, best_e = c, e
        if nxt is None:
            break
        b = nxt
    if b.depth > D:
        tree.make_default(b)
    return b


def search(tree: DespotTree, cfg: AnytimeConfig) -> SearchStats:
    """Run trials on an existing tree until the root gap or the budget is exhausted."""
    start = time.monotonic()
    deadline = None if cfg.tmax_ms is None else start + cfg.tmax_ms / 1000.0
    root = tree.root
    trials = 0
    while root.nu_upper - root.nu_lower > cfg.eps0:
        if cfg.trial_budget is not None and trials >= cfg.trial_budget:
            break
        if deadline is not None and time.monotonic() >= deadline:
            break
        eps_root = root.nu_upper - root.nu_lower
        b = explore(tree, eps_root, cfg.debug_checks)
        tree.backup_path(b)
        trials += 1
    tree.stats.trials += trials
    s = tree.stats
    return SearchStats(
        trials=s.trials,
        expansions=s.expansions,
        prunes=s.prunes,
        final_gap=root.nu_upper - root.nu_lower,
        elapsed_ms=(time.monotonic() - start) * 1000.0,
        nodes=tree.size(),
        lemma_checks=s.lemma_checks,
        lemma_violations=s.lemma_violations,
    )


def build_despot(
    b0: ParticleBelief | None,
    model: Model,
    upper,
    lower,
    policy,
    cfg: AnytimeConfig,
    streams=None,
) -> tuple[DespotTree, SearchStats]:
    """Sample K scenarios from ``b0`` (unless ``streams`` is given) and search."""
    if streams is None:
        streams = sample_scenarios(b0, cfg.K, cfg.seed)
    for bound in (upper, lower):
        reset = getattr(bound, "reset", None)
        if reset is not None:
            reset()
    tree = DespotTree(model, streams, upper, lower, policy, K=cfg.K, D=cfg.D, lam=cfg.lam, xi=cfg.xi)
    stats = search(tree, cfg)
    return tree, stats


def plan_step(b: ParticleBelief, model: Model, upper, lower, policy, cfg: AnytimeConfig) -> int:
    tree, _ = build_despot(b, model, upper, lower, policy, cfg)
    return extract_root_action(tree, policy)
