import itertools

import numpy as np
import pytest

from despot.belief import ParticleBelief, sample_scenarios
from despot.bounds import (
    FixedAction,
    HindsightUpper,
    ModeMdpPolicy,
    MdpUpper,
    RolloutLower,
    best_fixed_action,
    ho_upper,
    make_default_policy,
    make_upper_bound,
    mdp_solution,
    mdp_upper,
    mdp_value_iteration,
    mode_state,
    rollout_lower,
    uninformed_upper,
)
from despot.core import ScenarioStream, UnsupportedCapability
from despot.domains import TabularModel
from despot.domains.bridge import FORWARD, RESCUE


def streams_at(states, seed=0):
    return [ScenarioStream(s, i, seed) for i, s in enumerate(states)]


def test_uninformed(tag, bridge):
    assert uninformed_upper(tag) == pytest.approx(200.0)
    assert uninformed_upper(bridge) == 0.0


def test_bridge_mdp_values(bridge):
    sol = mdp_value_iteration(bridge)
    for x in range(10):
        assert sol.value(x) == pytest.approx(-(1 - 0.95 ** (9 - x)) / 0.05, abs=1e-5)
    assert sol.value(0) == pytest.approx(-7.3950, abs=1e-4)
    assert sol.value(bridge.terminal) == 0.0
    assert sol.residual <= 1e-6


def test_mdp_bellman_consistency(tag):
    sol = mdp_solution(tag)
    gamma = tag.discount
    for s in tag.states()[::37]:
        if tag.is_terminal(s):
            continue
        q = [tag.reward(s, a) + gamma * sum(p * sol.value(s2) for s2, p in tag.transition(s, a)) for a in range(5)]
        assert max(q) == pytest.approx(sol.value(s), abs=1e-6)
        assert q[sol.action(s)] == pytest.approx(max(q), abs=1e-6)


def test_adventurer_mdp_by_hand(adv2):
    sol = mdp_solution(adv2)
    # hand DP along the corridor for the 150 treasure
    w = {4: 150.0}
    for pos in (3, 2, 1, 0):
        w[pos] = max(0.0, -5.0 + 0.95 * 0.5 * w[pos + 1])
    for pos in range(5):
        assert sol.value(adv2.encode(pos, 1)) == pytest.approx(w[pos], abs=1e-5)
    assert w[0] == 0.0 and w[1] > 0


def test_mdp_upper_examples(bridge):
    sol = mdp_solution(bridge)
    assert mdp_upper([0] * 5, sol) == pytest.approx(-7.3950, abs=1e-4)
    assert MdpUpper(bridge)(streams_at([3, 3]), [3, 3], 0) == pytest.approx(sol.value(3))


class _NoTable(TabularModel):
    @property
    def tabular(self):
        return False


def test_mdp_requires_tabular():
    m = _NoTable(np.ones((1, 1, 1)), np.ones((1, 1, 1)), np.zeros((1, 1)))
    with pytest.raises(UnsupportedCapability):
        mdp_value_iteration(m)


def chain():
    # two states; action 0 stays, action 1 flips; being in state 1 pays 1
    T = np.zeros((2, 2, 2))
    T[0, 0, 0] = T[1, 0, 1] = 1.0
    T[0, 1, 1] = T[1, 1, 0] = 1.0
    O = np.ones((2, 2, 1))
    R = np.array([[0.0, 0.0], [1.0, 1.0]])
    return TabularModel(T, O, R, discount=0.5)


def test_ho_two_state_chain():
    m = chain()
    tb = lambda s: 2.0  # noqa: E731
    assert ho_upper(streams_at([0]), [0], 0, m, 2, tb) == pytest.approx(1.0)
    assert ho_upper(streams_at([1]), [1], 0, m, 2, tb) == pytest.approx(2.0)
    assert ho_upper(streams_at([0, 1]), [0, 1], 0, m, 2, tb) == pytest.approx(1.5)
    assert ho_upper(streams_at([0, 1]), [0, 1], 0, m, 0, tb) == pytest.approx(2.0)


@pytest.mark.parametrize("seed", range(3))
def test_ho_dominates_every_action_sequence(seed):
    from despot.domains import make_random_tabular

    m = make_random_tabular(seed)
    streams = streams_at([0, 1, 2, 3], seed)
    D = 2
    for st in streams:
        u = ho_upper([st], [st.start_state], 0, m, D, lambda s: 0.0)
        for seq in itertools.product(range(m.num_actions), repeat=D):
            s, ret = st.start_state, 0.0
            for t, a in enumerate(seq):
                if m.is_terminal(s):
                    break
                o = m.step(s, a, st.phi(t + 1))
                ret += m.discount**t * o.reward
                s = o.next_state
            assert u >= ret - 1e-12


def test_hindsight_memo_reset(adv2):
    h = HindsightUpper(adv2, 4)
    st = streams_at([adv2.encode(0, 1)])
    v = h(st, [st[0].start_state], 0)
    assert h.evaluations > 0
    h.reset()
    assert h.evaluations == 0 and h(st, [st[0].start_state], 0) == v


def test_rollout_examples(bridge):
    st = streams_at([0] * 4)
    assert rollout_lower(st, [0] * 4, FixedAction(RESCUE), bridge, 0) == 0.0
    assert rollout_lower(st, [0] * 4, FixedAction(RESCUE), bridge, 5) == -20.0
    assert rollout_lower(st, [0] * 4, FixedAction(FORWARD), bridge, 10) == pytest.approx(-7.3950, abs=1e-4)
    assert rollout_lower(st, [0] * 4, FixedAction(FORWARD), bridge, 50) == pytest.approx(-7.3950, abs=1e-4)


def test_rollout_horizon_convention(bridge):
    lower = RolloutLower(bridge, FixedAction(FORWARD), D=12)
    assert lower.horizon(0) == 12 and lower.horizon(12) == 0 and lower.horizon(20) == 0
    assert RolloutLower(bridge, FixedAction(FORWARD), D=500).horizon(0) == 90


def test_default_policies(rs78, bridge, tag):
    assert make_default_policy("domain", rs78).action([]) == 2
    assert make_default_policy("domain", bridge).action([]) == RESCUE
    assert make_default_policy("fixed:forward", bridge).action([]) == FORWARD
    pol = make_default_policy("domain", tag)
    assert isinstance(pol, ModeMdpPolicy)
    s = 3 * tag.stride + 9
    assert pol.action([s]) == mdp_solution(tag).action(s)
    with pytest.raises(KeyError):
        make_default_policy("fixed:jump", bridge)
    with pytest.raises(KeyError):
        make_upper_bound("magic", bridge, 5)


def test_mode_state_ties_to_smallest():
    assert mode_state([5, 3, 5, 3, 9]) == 3
    assert mode_state([7]) == 7


def test_group_rollout_matches_state_rollout_for_fixed_actions(adv2):
    class Grouped(FixedAction):
        state_based = False

    b = ParticleBelief.from_distribution(adv2.initial_belief(0), 100, 0)
    st = sample_scenarios(b, 30, 2)
    states = [x.start_state for x in st]
    a = RolloutLower(adv2, FixedAction(1), 8)(st, states, 0)
    g = RolloutLower(adv2, Grouped(1), 8)(st, states, 0)
    assert a == pytest.approx(g, abs=1e-12)


def test_best_fixed_action(bridge):
    st = streams_at([0] * 3)
    assert best_fixed_action(bridge, [0] * 3, st, 20) == FORWARD
