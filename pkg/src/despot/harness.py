"""Episode runner: plan, act in a separately seeded world, filter, repeat."""
from __future__ import annotations

import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy import stats as sps

from .anytime import AnytimeConfig, build_despot
from .belief import ParticleBelief, ParticleDepletion, sample_scenarios, sir_update
from .bounds import RolloutLower, make_default_policy, make_upper_bound
from .core import Model
from .domains import make_domain
from .dp import solve_full
from .tree import extract_root_action

SCHEMA = 1
SOLVERS = ("anytime", "dp")


@dataclass
class RunConfig:
    domain: str = "bridge"
    solver: str = "anytime"
    K: int = 500
    D: int = 90
    lam: float = 0.0
    xi: float = 0.95
    eps0: float = 0.0
    tmax_ms: float | None = 1000.0
    trial_budget: int | None = None
    discount: float = 0.95
    seed: int = 0
    episodes: int = 1
    max_steps: int = 90
    ubound: str = "domain"
    default_policy: str = "domain"
    out: str | None = None
    undiscounted: bool = False
    particles: int | None = None  # belief particles; None means 10 * K
    ho_horizon: int | None = None  # absolute trellis end for hindsight bounds; None means the domain default
    debug_checks: bool = False

    def __post_init__(self):
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")
        if self.max_steps < 0:
            raise ValueError("max_steps must be >= 0")
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}; use one of {SOLVERS}")
        # fail fast on bad ranges
        self.anytime_config()

    def anytime_config(self, seed: int | None = None) -> AnytimeConfig:
        return AnytimeConfig(
            K=self.K,
            D=self.D,
            lam=self.lam,
            xi=self.xi,
            eps0=self.eps0,
            tmax_ms=self.tmax_ms,
            trial_budget=self.trial_budget,
            seed=self.seed if seed is None else seed,
            debug_checks=self.debug_checks,
        )

    @property
    def num_particles(self) -> int:
        return self.particles if self.particles is not None else 10 * self.K

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise KeyError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class StepRecord:
    action: int
    observation: object
    reward: float
    planning_ms: float
    trials: int
    gap: float


@dataclass
class EpisodeRecord:
    episode: int
    seed: list
    discounted_return: float
    undiscounted_return: float
    steps: int
    trajectory: list = field(default_factory=list)
    depletions: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps({"schema": SCHEMA, **asdict(self)})


@dataclass
class Summary:
    mean: float
    stderr: float
    ci95: tuple
    episodes: int
    wall_time_s: float
    single_episode: bool = False
    metric: str = "discounted"

    def line(self) -> str:
        flag = " (n=1, stderr undefined)" if self.single_episode else ""
        return f"mean {self.metric} return {self.mean:.4f} +- {self.stderr:.4f} over {self.episodes} episodes{flag}"


def config_upper_bound(cfg: RunConfig, model: Model):
    horizon = cfg.ho_horizon if cfg.ho_horizon is not None else getattr(model, "default_ho_horizon", None)
    return make_upper_bound(cfg.ubound, model, cfg.D, horizon)


class Planner:
    """Builds the bounds once and picks an action for a belief."""

    def __init__(self, cfg: RunConfig, model: Model):
        self.cfg = cfg
        self.model = model
        self.policy = make_default_policy(cfg.default_policy, model)
        self.lower = RolloutLower(model, self.policy, cfg.D)
        self.upper = config_upper_bound(cfg, model) if cfg.solver == "anytime" else None

    def act(self, belief: ParticleBelief, seed: int) -> tuple[int, int, float]:
        """Returns (action, trials, final root gap)."""
        cfg = self.cfg
        if cfg.solver == "dp":
            streams = sample_scenarios(belief, cfg.K, seed)
            res = solve_full(streams, self.model, self.policy, cfg.K, cfg.D, cfg.lam, lower=self.lower)
            a = res.root_action
            if a is None:
                a = self.policy.action([st.start_state for st in streams], ())
            return a, 0, 0.0
        tree, st = build_despot(belief, self.model, self.upper, self.lower, self.policy, cfg.anytime_config(seed))
        return extract_root_action(tree), st.trials, st.final_gap


def _sub_seeds(master: int, episode: int) -> tuple[int, int, int]:
    world, filt, plan = np.random.SeedSequence([master, episode]).spawn(3)
    return tuple(int(s.generate_state(1, dtype=np.uint64)[0] >> 1) for s in (world, filt, plan))


def run_episode(cfg: RunConfig, episode: int, model: Model | None = None, planner: Planner | None = None) -> EpisodeRecord:
    model = model or make_domain(cfg.domain, cfg.discount)
    planner = planner or Planner(cfg, model)
    world_seed, filter_seed, plan_seed = _sub_seeds(cfg.seed, episode)
    world = np.random.default_rng(world_seed)
    state = model.sample_initial_state(world)
    belief = ParticleBelief.from_distribution(model.initial_belief(state), cfg.num_particles, filter_seed)
    gamma = model.discount
    disc = undisc = 0.0
    traj: list[StepRecord] = []
    depletions = []
    step = 0
    while step < cfg.max_steps and not model.is_terminal(state):
        t0 = time.perf_counter()
        a, trials, gap = planner.act(belief, plan_seed + step)
        ms = (time.perf_counter() - t0) * 1000.0
        o = model.step(state, a, float(world.random()))
        disc += gamma**step * o.reward
        undisc += o.reward
        traj.append(StepRecord(a, o.observation, o.reward, ms, trials, gap))
        state = o.next_state
        step += 1
        if model.is_terminal(state):
            break
        try:
            belief = sir_update(belief, a, o.observation, model)
        except ParticleDepletion:
            depletions.append({"step": step, "action": a, "observation": o.observation})
            # initial_belief only reads the fully observed part of the state
            belief = ParticleBelief.from_distribution(
                model.initial_belief(state), cfg.num_particles, filter_seed + step
            )
    return EpisodeRecord(
        episode, [cfg.seed, episode], disc, undisc, step, [asdict(s) for s in traj], depletions
    )


def summarize(records, wall_time_s: float = 0.0, undiscounted: bool = False) -> Summary:
    key = "undiscounted_return" if undiscounted else "discounted_return"
    vals = np.array([r[key] if isinstance(r, dict) else getattr(r, key) for r in records], dtype=float)
    n = len(vals)
    mean = float(vals.mean())
    if n > 1:
        se = float(vals.std(ddof=1) / math.sqrt(n))
        half = float(sps.t.ppf(0.975, n - 1)) * se
    else:
        se = half = 0.0
    return Summary(mean, se, (mean - half, mean + half), n, wall_time_s, n == 1, "undiscounted" if undiscounted else "discounted")


def _output_paths(out: str) -> tuple[Path, Path]:
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    probe = d / ".write_probe"
    probe.write_text("")
    probe.unlink()
    return d / "episodes.jsonl", d / "summary.json"


def evaluate(cfg: RunConfig, progress: bool = False) -> tuple[Summary, list[EpisodeRecord]]:
    paths = _output_paths(cfg.out) if cfg.out else None
    model = make_domain(cfg.domain, cfg.discount)
    planner = Planner(cfg, model)
    start = time.monotonic()
    records = []
    for ep in range(cfg.episodes):
        rec = run_episode(cfg, ep, model, planner)
        records.append(rec)
        if progress:
            print(f"episode {ep}: return {rec.discounted_return:.4f} in {rec.steps} steps", file=sys.stderr)
    records.sort(key=lambda r: r.episode)
    summary = summarize(records, time.monotonic() - start, cfg.undiscounted)
    if paths:
        log, summ = paths
        with open(log, "w") as fh:
            for r in records:
                fh.write(r.to_json() + "\n")
        payload = {"schema": SCHEMA, "config": asdict(cfg), **asdict(summary)}
        summ.write_text(json.dumps(payload, indent=2))
    return summary, records


def load_records(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]
