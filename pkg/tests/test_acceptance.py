"""Acceptance criteria C1-C9, one report line each.

The long runs (C3, C4) are marked ``slow``; ``pytest -m "not slow"`` skips them.
"""
import time
from itertools import product

import numpy as np
import pytest

from despot.anytime import AnytimeConfig, build_despot
from despot.belief import ParticleBelief, sample_scenarios
from despot.bounds import RolloutLower, ho_upper, make_default_policy, make_upper_bound
from despot.cli import LAMBDA_GRID
from despot.domains import make_domain, make_random_tabular
from despot.domains.adventurer import RIGHT, STAY
from despot.dp import evaluate_policy_tree, solve_full
from despot.harness import RunConfig, evaluate
from despot.theory import theorem1_coverage
from despot.tree import PolicyTree, extract_root_action

from test_belief import mean_tv

# shared by C3 and C4: shortest horizon that reaches the treasure (four moves, then dig)
ADV_D = 4
ADV_PARTICLES = 2000
ADV_MAX_STEPS = 30


def initial_streams(model, K, seed, particles=5000):
    b0 = ParticleBelief.from_distribution(model.initial_belief(model.sample_initial_state(np.random.default_rng(0))), particles, 12345)
    return sample_scenarios(b0, K, seed)


def test_c1_bridge_exactness(report):
    t0 = time.monotonic()
    means = {}
    for lam in (0.0, 0.1):
        cfg = RunConfig(domain="bridge", K=500, D=90, lam=lam, trial_budget=10, tmax_ms=None, episodes=10, seed=0)
        summary, _ = evaluate(cfg)
        means[lam] = summary.mean
    wall = time.monotonic() - t0
    ok = all(abs(m - (-7.395)) <= 0.01 for m in means.values()) and wall < 30
    report("C1", ok, f"bridge means {', '.join(f'lam={k:g}: {v:.4f}' for k, v in means.items())}; {wall:.1f}s (< 30s)")
    assert ok


def test_c2_dp_anytime_equivalence(report):
    t0 = time.monotonic()
    mismatches = []
    for name, K, D, ub in (("bridge", 10, 10, "uninformed"), ("adventurer-2", 50, 6, "ho-tight")):
        m = make_domain(name)
        pol = make_default_policy("domain", m)
        for seed in range(20):
            streams = initial_streams(m, K, seed)
            dp = solve_full(streams, m, pol, K, D, 0.1)
            cfg = AnytimeConfig(K=K, D=D, lam=0.1, eps0=0.0, tmax_ms=None)
            tree, _ = build_despot(None, m, make_upper_bound(ub, m, D), RolloutLower(m, pol, D), pol, cfg, streams=streams)
            dp_action = dp.root_action if dp.root_action is not None else pol.action([st.start_state for st in streams])
            if abs(tree.root.nu_lower - dp.value) > 1e-9 or extract_root_action(tree) != dp_action:
                mismatches.append((name, seed, tree.root.nu_lower, dp.value))
    wall = time.monotonic() - t0
    ok = not mismatches and wall < 60
    report("C2", ok, f"{40 - len(mismatches)}/40 seeds agree within 1e-9; {wall:.1f}s (< 60s)")
    assert ok, mismatches


@pytest.mark.slow
def test_c3_regularization_study(report):
    t0 = time.monotonic()
    m = make_domain("adventurer-50")
    pol = make_default_policy("domain", m)
    b0 = ParticleBelief.from_distribution(m.initial_belief(0), 5000, 12345)
    lower = RolloutLower(m, pol, ADV_D)
    moves = sum(solve_full(b0, m, pol, 500, ADV_D, 0.0, seed=s, lower=lower).root_action not in (None, STAY) for s in range(1000))
    frac = moves / 1000
    t_a = time.monotonic() - t0

    base = dict(domain="adventurer-50", K=500, D=ADV_D, trial_budget=50, tmax_ms=None,
                particles=ADV_PARTICLES, max_steps=ADV_MAX_STEPS, seed=3)
    unreg, _ = evaluate(RunConfig(lam=0.0, episodes=300, **base))
    t_b = time.monotonic() - t0 - t_a

    sweep = {lam: evaluate(RunConfig(lam=lam, episodes=20, **base))[0].mean for lam in LAMBDA_GRID}
    best = max(sweep, key=sweep.get)
    wall = time.monotonic() - t0
    ok_a, ok_b, ok_c = frac >= 0.30, unreg.mean < -3.0, sweep[best] >= -0.5
    ok = ok_a and ok_b and ok_c and wall < 1200
    report(
        "C3", ok,
        f"(a) move fraction {frac:.3f} (>= 0.30, {t_a:.0f}s); (b) lam=0 mean {unreg.mean:.3f} +- {unreg.stderr:.3f} "
        f"(< -3.0, {t_b:.0f}s); (c) best lam={best:g} mean {sweep[best]:.3f} (>= -0.5); {wall:.0f}s (< 1200s)",
    )
    assert ok, (frac, unreg.mean, sweep, wall)


@pytest.mark.slow
def test_c4_two_values_always_stay(report):
    m = make_domain("adventurer-2")
    pol = make_default_policy("domain", m)
    b0 = ParticleBelief.from_distribution(m.initial_belief(0), 5000, 12345)
    lower = RolloutLower(m, pol, ADV_D)
    stays = 0
    for s in range(1000):
        a = solve_full(b0, m, pol, 500, ADV_D, 0.0, seed=s, lower=lower).root_action
        stays += a in (None, STAY)
    report("C4", stays == 1000, f"stay chosen in {stays}/1000 full DESPOTs (D={ADV_D})")
    assert stays == 1000


def test_c5_lemma_assertions(report):
    runs = [
        ("bridge", 10, 10, 0.1, "uninformed", range(5), None),
        ("adventurer-2", 50, 6, 0.1, "ho-tight", range(10), None),
        ("adventurer-50", 100, 5, 0.0, "ho-tight", range(5), 300),
        ("tag", 20, 6, 0.0, "ho-mdp", range(5), 150),
    ]
    per_domain = {}
    violations = 0
    for name, K, D, lam, ub, seeds, budget in runs:
        m = make_domain(name)
        pol = make_default_policy("domain", m)
        for seed in seeds:
            streams = initial_streams(m, K, seed, particles=2000)
            cfg = AnytimeConfig(K=K, D=D, lam=lam, tmax_ms=None, trial_budget=budget, debug_checks=True)
            _, st = build_despot(None, m, make_upper_bound(ub, m, D), RolloutLower(m, pol, D), pol, cfg, streams=streams)
            per_domain[name] = per_domain.get(name, 0) + st.lemma_checks
            violations += st.lemma_violations
    total = sum(per_domain.values())
    ok = violations == 0 and total >= 10_000 and all(per_domain.values())
    report("C5", ok, f"{violations} violations over {total} sites ({', '.join(f'{k}: {v}' for k, v in per_domain.items())})")
    assert ok


def test_c6_theorem1_coverage(report):
    t0 = time.monotonic()
    res = theorem1_coverage(make_domain("adventurer-2"), RIGHT, STAY, tau=0.1, alpha=0.5)
    wall = time.monotonic() - t0
    ok = res.passed and wall < 300
    report("C6", ok, f"{res.violations}/{res.trials} violations (allowed {res.allowed:.1f}); {wall:.1f}s (< 300s)")
    assert ok


def _all_policies(depth, num_actions, num_obs):
    """Nested ``(action, children)`` trees up to ``depth`` action levels; None is the default policy."""
    yield None
    if depth == 0:
        return
    subs = list(_all_policies(depth - 1, num_actions, num_obs))
    for a in range(num_actions):
        for kids in product(subs, repeat=num_obs):
            yield (a, kids)


def _to_policy_tree(shape, observations) -> PolicyTree:
    nodes = []

    def visit(shape, depth):
        idx = len(nodes)
        if shape is None:
            nodes.append({"id": idx, "action": None, "depth": depth, "edges": {}, "default": True})
            return idx
        a, kids = shape
        node = {"id": idx, "action": a, "depth": depth, "edges": {}, "default": False}
        nodes.append(node)
        for z, k in zip(observations, kids):
            node["edges"][str(z)] = visit(k, depth + 1)
        return idx

    visit(shape, 0)
    return PolicyTree(nodes)


def test_c7_bound_sanity(report):
    D, K = 2, 8  # expansion at depths 0..D gives three action levels
    details, ok = [], True
    for seed in (11, 22, 33):
        m = make_random_tabular(seed, num_actions=2, num_obs=2)
        pol = make_default_policy("fixed:0", m)
        streams = initial_streams(m, K, seed, particles=400)
        states = [st.start_state for st in streams]
        lower = RolloutLower(m, pol, D)
        v_star = solve_full(streams, m, pol, K, D, 0.0, lower=lower).value
        enum = max(
            evaluate_policy_tree(_to_policy_tree(p, m.observations()), streams, m, pol, D, lower=lower)
            for p in _all_policies(D + 1, m.num_actions, len(m.observations()))
        )
        upper = ho_upper(streams, states, 0, m, D + 1)
        roll = lower(streams, states, 0)
        good = abs(enum - v_star) < 1e-9 and upper >= v_star - 1e-9 and roll <= v_star + 1e-9
        ok &= good
        details.append(f"seed {seed}: ho {upper:.3f} >= V* {v_star:.3f} >= rollout {roll:.3f}, enum {enum:.3f}")
    report("C7", ok, "; ".join(details))
    assert ok


def test_c8_particle_filter_oracle(report):
    tv = mean_tv(make_domain("adventurer-2"), 10_000, runs=100, length=5)
    report("C8", tv < 0.03, f"mean TV {tv:.4f} at 1e4 particles over 100 sequences (< 0.03)")
    assert tv < 0.03


def test_c9_extended_benchmarks(report):
    report("C9", None, "Tag and RockSample(7,8) full-scale runs; reproduce with scripts/extended_benchmarks.py")
    pytest.skip("extended benchmark; documented reproduction, not run in CI")
