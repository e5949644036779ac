"""Belief tracking: exact Bayes filter for tabular models and an SIR particle filter."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .core import Model, ScenarioStream


class ImpossibleObservation(ValueError):
    def __init__(self, likelihood: float, action, observation):
        super().__init__(f"observation {observation!r} after action {action} has P(z|b,a)={likelihood}")
        self.likelihood = likelihood


class ParticleDepletion(RuntimeError):
    """Every propagated particle is inconsistent with the observation."""


@dataclass
class ExactBelief:
    """Sparse probability vector over the model's states."""

    probabilities: dict

    @classmethod
    def from_pairs(cls, pairs) -> "ExactBelief":
        probs: dict = defaultdict(float)
        for s, p in pairs:
            probs[s] += p
        return cls(dict(probs))

    def __getitem__(self, s) -> float:
        return self.probabilities.get(s, 0.0)

    def mass(self) -> float:
        return sum(self.probabilities.values())


def exact_update(b: ExactBelief, a: int, z, model: Model, live_only: bool = False) -> tuple[ExactBelief, float]:
    """Bayes filter step. Returns the posterior and the normaliser eta.

    ``live_only`` also conditions on the episode still running, which is what
    an agent that keeps acting has observed; ``sir_update`` always does this.
    """
    predicted: dict = defaultdict(float)
    for s, p in b.probabilities.items():
        if p == 0.0:
            continue
        for s2, t in model.transition(s, a):
            predicted[s2] += p * t
    post = {}
    for s2, p in predicted.items():
        if live_only and model.is_terminal(s2):
            continue
        w = p * model.obs_prob(s2, a, z)
        if w > 0.0:
            post[s2] = w
    total = sum(post.values())
    if total <= 0.0:
        raise ImpossibleObservation(0.0, a, z)
    eta = 1.0 / total
    return ExactBelief({s: w * eta for s, w in post.items()}), eta


def observation_likelihood(b: ExactBelief, a: int, z, model: Model) -> float:
    total = 0.0
    for s, p in b.probabilities.items():
        for s2, t in model.transition(s, a):
            total += p * t * model.obs_prob(s2, a, z)
    return total


def systematic_resample(weights: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    positions = (rng.random() + np.arange(n)) / n
    cum = np.cumsum(weights)
    cum[-1] = 1.0
    return np.searchsorted(cum, positions, side="right")


@dataclass
class ParticleBelief:
    particles: list
    weights: np.ndarray
    num_particles: int
    rng_seed: int
    _rng: np.random.Generator = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if len(self.particles) != self.num_particles or len(self.weights) != self.num_particles:
            raise ValueError("particle and weight counts must equal num_particles")
        if self._rng is None:
            self._rng = np.random.default_rng(self.rng_seed)

    @classmethod
    def from_distribution(cls, pairs, num_particles: int, seed: int) -> "ParticleBelief":
        """Draw ``num_particles`` equally weighted particles from ``(state, prob)`` pairs."""
        states = [s for s, _ in pairs]
        probs = np.array([p for _, p in pairs], dtype=float)
        probs /= probs.sum()
        rng = np.random.default_rng(seed)
        idx = systematic_resample(probs, num_particles, rng)
        return cls(
            [states[i] for i in idx], np.full(num_particles, 1.0 / num_particles), num_particles, seed, rng
        )

    @classmethod
    def point_mass(cls, state, num_particles: int = 1, seed: int = 0) -> "ParticleBelief":
        return cls([state] * num_particles, np.full(num_particles, 1.0 / num_particles), num_particles, seed)

    def histogram(self) -> dict:
        hist: dict = defaultdict(float)
        for s, w in zip(self.particles, self.weights):
            hist[s] += w
        return dict(hist)


def sir_update(b: ParticleBelief, a: int, z, model: Model) -> ParticleBelief:
    """Propagate, reweight by the observation likelihood, systematically resample.

    The filter only runs while the real episode is live, so particles that
    are or become terminal get weight zero.
    """
    rng = b._rng
    phis = rng.random(b.num_particles)
    propagated = []
    weights = np.empty(b.num_particles)
    for i, (s, w) in enumerate(zip(b.particles, b.weights)):
        if w == 0.0 or model.is_terminal(s):
            propagated.append(s)
            weights[i] = 0.0
            continue
        s2 = model.step(s, a, float(phis[i])).next_state
        propagated.append(s2)
        weights[i] = 0.0 if model.is_terminal(s2) else w * model.obs_prob(s2, a, z)
    total = weights.sum()
    if not total > 0.0:
        raise ParticleDepletion(f"all {b.num_particles} particles inconsistent with action {a}, observation {z!r}")
    weights /= total
    idx = systematic_resample(weights, b.num_particles, rng)
    n = b.num_particles
    return ParticleBelief([propagated[i] for i in idx], np.full(n, 1.0 / n), n, b.rng_seed, rng)


def sample_scenarios(b: ParticleBelief, K: int, seed: int) -> list[ScenarioStream]:
    """K scenarios with start states drawn i.i.d. from the weighted particles."""
    if K < 1:
        raise ValueError("K must be >= 1")
    rng = np.random.default_rng([seed, 0x5CE7A])
    p = b.weights / b.weights.sum()
    idx = rng.choice(b.num_particles, size=K, p=p)
    return [ScenarioStream(b.particles[i], k, seed) for k, i in enumerate(idx)]
