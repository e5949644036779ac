"""Command line: ``python -m despot {run,sweep,theory,dump-policy}``."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .domains import REGISTRY, make_domain
from .harness import RunConfig, config_upper_bound, evaluate

LAMBDA_GRID = (0.0, 0.01, 0.1, 1.0, 10.0)

# flag dest -> RunConfig field
_FIELDS = {
    "domain": "domain",
    "solver": "solver",
    "K": "K",
    "D": "D",
    "lambda": "lam",
    "xi": "xi",
    "eps0": "eps0",
    "tmax_ms": "tmax_ms",
    "trial_budget": "trial_budget",
    "discount": "discount",
    "seed": "seed",
    "episodes": "episodes",
    "max_steps": "max_steps",
    "ubound": "ubound",
    "default_policy": "default_policy",
    "out": "out",
    "undiscounted": "undiscounted",
    "particles": "particles",
    "debug_checks": "debug_checks",
    "ho_horizon": "ho_horizon",
}


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    # defaults stay None so that only explicit flags override the config file
    p.add_argument("--config", help="JSON file with the same keys as the flags (dashes -> underscores)")
    p.add_argument("--domain")
    p.add_argument("--solver", choices=("anytime", "dp"))
    p.add_argument("-K", type=int, dest="K")
    p.add_argument("-D", type=int, dest="D")
    p.add_argument("--lambda", type=float, dest="lambda")
    p.add_argument("--xi", type=float)
    p.add_argument("--eps0", type=float)
    p.add_argument("--tmax-ms", type=float)
    p.add_argument("--trial-budget", type=int)
    p.add_argument("--discount", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--episodes", type=int)
    p.add_argument("--max-steps", type=int)
    p.add_argument("--ubound")
    p.add_argument("--default-policy")
    p.add_argument("--out")
    p.add_argument("--particles", type=int, help="belief particles (default 10*K)")
    p.add_argument("--ho-horizon", type=int, help="trellis end depth for hindsight bounds (default: per domain)")
    p.add_argument("--undiscounted", action="store_const", const=True, default=None)
    p.add_argument("--debug-checks", action="store_const", const=True, default=None)
    p.add_argument("--progress", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="despot", description="Regularized DESPOT planner and benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="evaluate one configuration")
    _add_run_flags(run)
    sweep = sub.add_parser("sweep", help="evaluate every lambda in the tuning grid")
    _add_run_flags(sweep)
    dump = sub.add_parser("dump-policy", help="plan once from the initial belief and export the policy tree")
    _add_run_flags(dump)

    th = sub.add_parser("theory", help="print penalty tables")
    th.add_argument("--domain", help="take |A|, |Z|, R_max and gamma from a domain")
    th.add_argument("--tau", type=float, default=0.1)
    th.add_argument("--alpha", type=float, default=0.5)
    th.add_argument("-K", type=int, dest="K", default=500)
    th.add_argument("-D", type=int, dest="D", default=90)
    th.add_argument("--num-actions", type=int, default=2)
    th.add_argument("--num-obs", type=int, default=2)
    th.add_argument("--rmax", type=float, default=10.0)
    th.add_argument("--discount", type=float, default=0.95)
    th.add_argument("--sizes", default="0,1,2,5,10,20,50")
    return parser


def resolve_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> RunConfig:
    values: dict = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, ValueError) as e:
            parser.error(f"cannot read config {args.config}: {e}")
        for k, v in raw.items():
            if k not in _FIELDS:
                parser.error(f"unknown config key {k!r}")
            values[_FIELDS[k]] = v
    for dest, name in _FIELDS.items():
        v = getattr(args, dest, None)
        if v is not None:
            values[name] = v
    domain = values.get("domain", RunConfig.domain)
    if domain not in REGISTRY:
        parser.error(f"unknown domain {domain!r}; known: {', '.join(sorted(REGISTRY))}")
    try:
        return RunConfig(**values)
    except (TypeError, ValueError) as e:
        parser.error(str(e))


def _summary_json(summary) -> str:
    return json.dumps({"mean": summary.mean, "stderr": summary.stderr, "ci95": list(summary.ci95), "episodes": summary.episodes})


def cmd_run(cfg: RunConfig, progress: bool) -> int:
    summary, _ = evaluate(cfg, progress)
    print(summary.line())
    print(_summary_json(summary))
    return 0


def cmd_sweep(cfg: RunConfig, progress: bool) -> int:
    best = None
    for lam in LAMBDA_GRID:
        out = None if cfg.out is None else str(Path(cfg.out) / f"lambda_{lam:g}")
        summary, _ = evaluate(replace(cfg, lam=lam, out=out), progress)
        print(f"lambda={lam:g}: {summary.line()}")
        if best is None or summary.mean > best[1].mean:
            best = (lam, summary)
    print(f"best lambda={best[0]:g}: mean {best[1].mean:.4f} +- {best[1].stderr:.4f}")
    return 0


def cmd_dump(cfg: RunConfig) -> int:
    from .anytime import build_despot
    from .belief import ParticleBelief, sample_scenarios
    from .bounds import RolloutLower, make_default_policy
    from .dp import solve_full

    model = make_domain(cfg.domain, cfg.discount)
    rng = np.random.default_rng(cfg.seed)
    start = model.sample_initial_state(rng)
    belief = ParticleBelief.from_distribution(model.initial_belief(start), cfg.num_particles, cfg.seed)
    policy = make_default_policy(cfg.default_policy, model)
    if cfg.solver == "dp":
        streams = sample_scenarios(belief, cfg.K, cfg.seed)
        tree = solve_full(streams, model, policy, cfg.K, cfg.D, cfg.lam).policy
    else:
        upper = config_upper_bound(cfg, model)
        lower = RolloutLower(model, policy, cfg.D)
        despot, _ = build_despot(belief, model, upper, lower, policy, cfg.anytime_config())
        tree = despot.policy_tree()
    text = tree.to_json()
    if cfg.out:
        Path(cfg.out).write_text(text)
        print(f"wrote policy tree with {tree.size} internal nodes to {cfg.out}")
    else:
        print(text)
    return 0


def cmd_theory(args) -> int:
    from .theory import TheoremParams, induced_lambda, penalty_table

    A, Z, rmax, gamma = args.num_actions, args.num_obs, args.rmax, args.discount
    if args.domain:
        if args.domain not in REGISTRY:
            raise KeyError(args.domain)
        model = make_domain(args.domain, args.discount)
        A, Z, rmax = model.num_actions, len(model.observations()), model.reward_range
    p = TheoremParams(args.tau, args.alpha, args.K, args.D, A, Z, rmax, gamma)
    sizes = [int(x) for x in args.sizes.split(",") if x]
    print(f"tau={p.tau} alpha={p.alpha} K={p.K} D={p.D} |A|={A} |Z|={Z} R_max={rmax:g} gamma={gamma}")
    print(f"{'|pi|':>6}  penalty")
    for n, pen in penalty_table(p, sizes):
        print(f"{n:>6}  {pen:.6g}")
    print(f"induced lambda: {induced_lambda(p):.6g}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "theory":
        if args.domain and args.domain not in REGISTRY:
            parser.error(f"unknown domain {args.domain!r}")
        try:
            return cmd_theory(args)
        except Exception as e:  # noqa: BLE001
            print(f"error: {e}", file=sys.stderr)
            return 1
    cfg = resolve_config(args, parser)
    try:
        if args.command == "run":
            return cmd_run(cfg, args.progress)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.progress)
        return cmd_dump(cfg)
    except KeyboardInterrupt:
        return 130
    except Exception as e:  # noqa: BLE001
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
