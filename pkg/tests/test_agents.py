import random
from collections import Counter

import pytest
from scipy.stats import chisquare

from pbconsensus.agents import (
    AgentState,
    LearningConfig,
    aggregate_inbox,
    check_consensus,
    initialize_agents,
    q_update,
    run_simulation,
    select_action,
)
from pbconsensus.bundles import ActionSpace, Bundle, enumerate_valid_bundles, sample_action_space
from pbconsensus.errors import EmptyBallotPool
from pbconsensus.gossip import BundleMessage
from pbconsensus.model import Ballot, DistrictHistory, ElectionInstance, Project
from pbconsensus.rewards import attribute_frequencies, build_reward_table
from pbconsensus.synthetic import make_history


def agent(q, current=0):
    return AgentState(0, Ballot("v", frozenset({"1"})), Bundle(frozenset({"1"}), 1), list(q), current)


CFG = LearningConfig(alpha=0.1, delta=0.1)


def test_worked_update():
    got = q_update(agent([0.5]), 0.2, [BundleMessage(1, 0, 0.8)], CFG)
    assert abs(got.q_values[0] - 0.523) < 1e-12


def test_empty_inbox_zero_reward_unchanged():
    assert q_update(agent([0.5, 0.1]), 0.0, [], CFG).q_values == [0.5, 0.1]


def test_inbox_equal_to_q_reduces_to_reward_step():
    got = q_update(agent([0.5]), 0.3, [BundleMessage(1, 0, 0.5)], CFG)
    assert got.q_values[0] == pytest.approx(0.5 + 0.1 * 0.3, abs=1e-15)


def test_update_only_touches_current_selection_and_is_pure():
    a = agent([1.0, 2.0, 3.0], current=1)
    got = q_update(a, 1.0, [BundleMessage(5, 2, 9.0)], CFG)
    assert a.q_values == [1.0, 2.0, 3.0]
    assert got.q_values[0] == 1.0 and got.q_values[2] == 3.0
    assert got.q_values[1] == pytest.approx(2.0 + 0.1 * (1.0 + 0.1 * 7.0))


def test_aggregate_raises_to_best_heard():
    a = agent([1.0, 2.0, 3.0])
    msgs = [BundleMessage(1, 0, 1.5), BundleMessage(2, 0, 1.2), BundleMessage(3, 2, 2.0)]
    assert aggregate_inbox(a, msgs).q_values == [1.5, 2.0, 3.0]
    assert a.q_values == [1.0, 2.0, 3.0]
    assert aggregate_inbox(a, []) is a


def test_epsilon_schedule():
    cfg = LearningConfig(epsilon0=1.0, epsilon_decay=0.1, epsilon_min=0.01)
    assert cfg.epsilon(0) == 1.0
    assert cfg.epsilon(10) == pytest.approx(0.36787944117144233)
    assert cfg.epsilon(1000) == 0.01


@pytest.mark.parametrize(
    "kw", [{"gamma": 0.5}, {"alpha": 0}, {"delta": 1.5}, {"epsilon_min": 2.0}, {"aggregation": "mean"}]
)
def test_invalid_config(kw):
    with pytest.raises(ValueError):
        LearningConfig(**kw)


def test_select_greedy_at_zero_epsilon():
    a = agent([0.1, 0.9, 0.9, 0.3])
    assert select_action(a, 0.0, random.Random(0)) == 1
    assert a.current_selection == 1


def test_select_uniform_at_full_epsilon():
    a = agent([0.0] * 6)
    rng = random.Random(1)
    counts = Counter(select_action(a, 1.0, rng) for _ in range(6000))
    assert chisquare([counts[i] for i in range(6)]).pvalue > 0.001


def test_consensus_window():
    assert check_consensus([(2, 2, 2)] * 10, 10) == 2
    assert check_consensus([(2, 2, 2)] * 9 + [(2, 1, 2)], 10) is None
    assert check_consensus([(1, 2, 2)] + [(2, 2, 2)] * 9, 10) is None
    assert check_consensus([(2, 2, 2)] * 9, 10) is None
    assert check_consensus([(0, 0)] * 3 + [(2, 2)] * 10, 10) == 2


def small_setup(n_projects=6, seed=0):
    hist = make_history(seed=seed, n_projects=n_projects)
    inst = hist.latest
    pool = enumerate_valid_bundles(inst.projects, inst.budget)
    return hist, inst, pool


def test_initialize_bijection_and_initial_bundles():
    hist, inst, pool = small_setup()
    space = ActionSpace(tuple(pool))
    rewards = build_reward_table(space, attribute_frequencies(hist), inst)
    agents = initialize_agents(inst, space, rewards, len(inst.ballots), random.Random(0))
    assert sorted(a.ballot.voter_id for a in agents) == sorted(b.voter_id for b in inst.ballots)
    for a in agents:
        assert a.q_values == [rewards[b] for b in space]
        assert space[a.current_selection] == a.initial_bundle
        if a.ballot.approved in {b.project_ids for b in space}:
            assert a.initial_bundle.project_ids == a.ballot.approved


def test_initialize_with_replacement_when_short():
    hist, inst, pool = small_setup()
    space = ActionSpace(tuple(pool[:5]))
    rewards = build_reward_table(space, attribute_frequencies(hist), inst)
    for n in (50, 100, 500):
        assert len(initialize_agents(inst, space, rewards, n, random.Random(0))) == n


def test_initialize_without_ballots():
    inst = ElectionInstance("D", 2020, 10, (Project("1", 5),))
    space = ActionSpace((Bundle(frozenset({"1"}), 5),))
    rewards = build_reward_table(space, attribute_frequencies(DistrictHistory("D", (inst,))), inst)
    with pytest.raises(EmptyBallotPool):
        initialize_agents(inst, space, rewards, 2, random.Random(0))


def test_single_bundle_converges_at_window():
    hist, inst, pool = small_setup()
    cfg = LearningConfig(stability_window=10, seed=4)
    res = run_simulation(inst, hist, ActionSpace((pool[0],)), cfg, n_agents=2, in_degree=1)
    assert res.converged and res.iterations == 10
    assert res.consensus_bundle == pool[0]


def test_simulation_deterministic():
    hist, inst, pool = small_setup()
    space = sample_action_space(pool, 10, seed=1)
    cfg = LearningConfig(seed=11, record_trajectory=True)
    a = run_simulation(inst, hist, space, cfg, n_agents=20, in_degree=2)
    b = run_simulation(inst, hist, space, cfg, n_agents=20, in_degree=2)
    assert a == b
    assert a.trajectory == b.trajectory


def test_converged_result_is_sound():
    hist, inst, pool = small_setup()
    space = sample_action_space(pool, 10, seed=2)
    cfg = LearningConfig(seed=3)
    res = run_simulation(inst, hist, space, cfg, n_agents=20, in_degree=2)
    assert res.converged
    assert res.iterations <= cfg.max_iterations
    assert all(a.greedy == res.consensus_index for a in res.agents)
    assert all(set(row) == {res.consensus_index} for row in res.final_window)
    assert len(res.final_window) == cfg.stability_window


def test_non_convergence_is_a_result():
    hist, inst, pool = small_setup()
    space = sample_action_space(pool, 10, seed=2)
    cfg = LearningConfig(seed=3, max_iterations=5)
    res = run_simulation(inst, hist, space, cfg, n_agents=20, in_degree=2)
    assert not res.converged and res.consensus_bundle is None and res.iterations == 5
