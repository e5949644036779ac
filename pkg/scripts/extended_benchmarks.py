"""Tag and RockSample(7,8) at full scale; hours of CPU time, not part of the test suite."""
import argparse

from despot.harness import RunConfig, evaluate

TARGETS = {"tag": -7.5, "rocksample-7-8": 18.0}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--domain", choices=sorted(TARGETS), action="append")
    ap.add_argument("--episodes", type=int, default=None, help="default: 200 for Tag, 100 for RockSample")
    ap.add_argument("--tmax-ms", type=float, default=1000.0)
    ap.add_argument("--lambda", type=float, dest="lam", default=0.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None)
    ap.add_argument("--progress", action="store_true")
    args = ap.parse_args()
    for domain in args.domain or sorted(TARGETS):
        episodes = args.episodes or (200 if domain == "tag" else 100)
        cfg = RunConfig(
            domain=domain, K=500, D=90, lam=args.lam, tmax_ms=args.tmax_ms, episodes=episodes, seed=args.seed,
            out=None if args.out is None else f"{args.out}/{domain}",
        )
        summary, _ = evaluate(cfg, progress=args.progress)
        verdict = "PASS" if summary.mean >= TARGETS[domain] else "FAIL"
        print(f"{domain}: {summary.line()} -> {verdict} (target >= {TARGETS[domain]})")


if __name__ == "__main__":
    main()
