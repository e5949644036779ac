"""Bridge Crossing: anytime search with the uninformed bound and the call-rescue default."""
import argparse
import time

from despot.harness import RunConfig, evaluate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--episodes", type=int, default=10)
    ap.add_argument("--trial-budget", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None, help="directory for per-lambda logs")
    args = ap.parse_args()
    for lam in (0.0, 0.1):
        t0 = time.monotonic()
        cfg = RunConfig(
            domain="bridge", K=500, D=90, lam=lam, trial_budget=args.trial_budget, tmax_ms=None,
            episodes=args.episodes, seed=args.seed, out=None if args.out is None else f"{args.out}/lambda_{lam:g}",
        )
        summary, records = evaluate(cfg)
        steps = sorted({r.steps for r in records})
        print(f"lambda={lam:g}: {summary.line()}; steps {steps}; {time.monotonic() - t0:.1f}s")


if __name__ == "__main__":
    main()
