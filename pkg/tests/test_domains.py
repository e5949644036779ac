import numpy as np
import pytest

from despot.belief import ExactBelief, exact_update
from despot.domains import REGISTRY, make_domain, make_rocksample
from despot.domains.adventurer import LEFT, RIGHT, STAY
from despot.domains.rocksample import EAST, SAMPLE
from despot.domains.tag import TAG


def test_sizes(tag, rs78, bridge):
    assert tag.num_states == 870
    assert rs78.num_states == 12_544
    assert bridge.num_states == 10
    assert bridge.num_actions == 3 and len(bridge.observations()) == 1


def test_registry_names():
    assert {"tag", "rocksample-7-8", "rocksample-11-11", "bridge", "adventurer-2", "adventurer-50"} <= set(REGISTRY)
    with pytest.raises(KeyError):
        make_domain("nosuch")


def test_rocksample_layouts_deterministic():
    a = make_rocksample(5, 3, rock_seed=4)
    b = make_rocksample(5, 3, rock_seed=4)
    assert a.rocks == b.rocks and a.start == b.start
    with pytest.raises(ValueError):
        make_rocksample(0, 2)


def test_rocksample_rewards(rs78):
    x, y = rs78.rocks[2]
    s = rs78.encode(x, y, 0b100)
    o = rs78.step(s, SAMPLE, 0.3)
    assert o.reward == 10.0 and rs78.decode(o.next_state)[2] == 0
    assert rs78.step(o.next_state, SAMPLE, 0.3).reward == -10.0
    edge = rs78.encode(6, 0, 0)
    o = rs78.step(edge, EAST, 0.1)
    assert o.reward == 10.0 and rs78.is_terminal(o.next_state)
    assert rs78.reward(rs78.encode(0, 0, 0), 5) == 0.0


def test_rocksample_sensor_decays(rs78):
    x, y = rs78.rocks[0]
    near = rs78.obs_prob(rs78.encode(x, y, 1), 5, 1)
    far = rs78.obs_prob(rs78.encode(6, 6, 1), 5, 1)
    d = np.hypot(6 - x, 6 - y)
    assert near == pytest.approx(1.0)
    assert far == pytest.approx(0.5 + 0.5 * 2 ** (-d / 20))


def test_tag_failed_tag_and_moves(tag):
    s = 0 * tag.stride + 20
    o = tag.step(s, TAG, 0.5)
    assert o.reward == -10.0 and not tag.is_terminal(o.next_state)
    assert tag.step(s, 0, 0.5).reward == -1.0


def test_tag_target_flees(tag):
    robot, target = 0, 3
    succ = dict(tag.transition(robot * tag.stride + target, TAG))
    d0 = tag.distance(target, robot)
    stay = succ.pop(robot * tag.stride + target)
    assert stay == pytest.approx(0.2)
    assert sum(succ.values()) == pytest.approx(0.8)
    for s2 in succ:
        assert tag.distance(tag.decode(s2)[1], robot) > d0


def test_adventurer_dynamics(adv2):
    s = adv2.encode(4, 1)
    o = adv2.step(s, STAY, 0.1)
    assert o.reward == 150.0 and adv2.is_terminal(o.next_state)
    o = adv2.step(adv2.encode(1, 0), RIGHT, 0.2)
    assert o.reward == -10.0 and adv2.is_terminal(o.next_state)
    o = adv2.step(adv2.encode(1, 0), RIGHT, 0.7)
    assert o.next_state == adv2.encode(2, 0) and o.reward == 0.0
    assert adv2.step(adv2.encode(0, 0), LEFT, 0.9).next_state == adv2.encode(0, 0)
    assert adv2.reward(adv2.encode(2, 0), RIGHT) == -5.0


def test_adventurer_sensor_noise_is_even(adv50):
    v = 7
    s = adv50.encode(0, v)
    counts = np.zeros(adv50.n)
    for u in np.random.default_rng(0).random(50_000):
        counts[adv50.step(s, STAY, float(u)).observation] += 1
    freq = counts / counts.sum()
    assert freq[v] == pytest.approx(0.7, abs=0.01)
    others = np.delete(freq, v)
    assert others.max() < 0.3 / 49 + 0.003


def belief_tree_value(model, b: ExactBelief, depth: int, D: int) -> float:
    """Exact finite-horizon POMDP value by expectimax over beliefs."""
    if depth > D:
        return 0.0
    best = -np.inf
    for a in range(model.num_actions):
        v = sum(p * model.reward(s, a) for s, p in b.probabilities.items())
        for z in model.observations():
            like = sum(
                p * t * model.obs_prob(s2, a, z)
                for s, p in b.probabilities.items()
                for s2, t in model.transition(s, a)
            )
            if like > 1e-15:
                post, _ = exact_update(b, a, z, model)
                v += model.discount * like * belief_tree_value(model, post, depth + 1, D)
        best = max(best, v)
    return best


def test_adventurer_two_values_stay_is_optimal(adv2):
    b0 = ExactBelief.from_pairs(adv2.initial_belief(0))
    assert belief_tree_value(adv2, b0, 0, 6) == pytest.approx(0.0, abs=1e-12)


def test_bridge_optimal_return(bridge):
    s, ret = 0, 0.0
    for t in range(20):
        if bridge.is_terminal(s):
            break
        o = bridge.step(s, 0, 0.0)
        ret += 0.95**t * o.reward
        s = o.next_state
    assert ret == pytest.approx(-(1 - 0.95**9) / 0.05)
    assert ret == pytest.approx(-7.3950, abs=1e-4)
