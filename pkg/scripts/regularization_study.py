"""Adventurer overfitting study: root choices of full DESPOTs and online returns per lambda."""
import argparse
import json
import time

from despot.belief import ParticleBelief
from despot.bounds import RolloutLower, make_default_policy
from despot.cli import LAMBDA_GRID
from despot.domains import make_domain
from despot.domains.adventurer import STAY
from despot.dp import solve_full
from despot.harness import RunConfig, evaluate


def move_fraction(domain, trees, K, D, lam):
    m = make_domain(domain)
    pol = make_default_policy("domain", m)
    b0 = ParticleBelief.from_distribution(m.initial_belief(0), 5000, 12345)
    lower = RolloutLower(m, pol, D)
    moves = sum(solve_full(b0, m, pol, K, D, lam, seed=s, lower=lower).root_action not in (None, STAY) for s in range(trees))
    return moves / trees


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trees", type=int, default=1000, help="full DESPOTs per (domain, D)")
    ap.add_argument("--depths", default="3,4,5", help="comma-separated D values for the root-choice table")
    ap.add_argument("--episodes", type=int, default=20, help="episodes per lambda in the online sweep")
    ap.add_argument("--K", type=int, default=500)
    ap.add_argument("--D", type=int, default=4, help="depth for the online sweep")
    ap.add_argument("--trial-budget", type=int, default=50)
    ap.add_argument("--max-steps", type=int, default=30)
    ap.add_argument("--particles", type=int, default=2000)
    ap.add_argument("--skip-online", action="store_true")
    args = ap.parse_args()

    results = {"root_moves": {}, "online": {}}
    for domain in ("adventurer-2", "adventurer-50"):
        for D in (int(x) for x in args.depths.split(",")):
            t0 = time.monotonic()
            frac = move_fraction(domain, args.trees, args.K, D, 0.0)
            results["root_moves"][f"{domain} D={D}"] = frac
            print(f"{domain} D={D}: move at root in {frac:.1%} of {args.trees} trees ({time.monotonic() - t0:.0f}s)", flush=True)
    if not args.skip_online:
        for lam in LAMBDA_GRID:
            cfg = RunConfig(
                domain="adventurer-50", K=args.K, D=args.D, lam=lam, trial_budget=args.trial_budget, tmax_ms=None,
                episodes=args.episodes, max_steps=args.max_steps, particles=args.particles, seed=3,
            )
            summary, _ = evaluate(cfg)
            results["online"][f"{lam:g}"] = [summary.mean, summary.stderr]
            print(f"lambda={lam:g}: {summary.line()}", flush=True)
    print(json.dumps(results, indent=2))


if __name__ == "__main__":
    main()
