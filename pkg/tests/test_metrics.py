import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_election
from pbconsensus.agents import AgentState
from pbconsensus.bundles import Bundle
from pbconsensus.metrics import (
    POPULARITY_NORMALIZATION,
    budget_utilization,
    compromise_cost,
    metrics_report,
    popularity,
    unfairness,
)
from pbconsensus.model import Ballot


def agent(i, initial, ballot=None):
    ids = frozenset(initial)
    return AgentState(i, Ballot(f"v{i}", frozenset(ballot or initial)), Bundle(ids, len(ids)), [0.0], 0)


def B(*ids, cost=1):
    return Bundle(frozenset(ids), cost)


def test_compromise_zero_when_everyone_gets_their_bundle():
    mean, per = compromise_cost([agent(0, {"1", "2"}), agent(1, {"1", "2"})], B("1", "2"))
    assert mean == 0.0 and per == {0: 0.0, 1: 0.0}


def test_compromise_jaccard_example():
    mean, _ = compromise_cost([agent(0, {"p1", "p2", "p3"})], B("p2", "p3", "p4"))
    assert mean == pytest.approx(0.5, abs=1e-9)


def test_compromise_mean_of_zero_and_one():
    mean, _ = compromise_cost([agent(0, {"a"}), agent(1, {"b"})], B("a"))
    assert mean == pytest.approx(0.5, abs=1e-9)


def test_compromise_can_use_ballot():
    a = agent(0, {"a"}, ballot={"a", "b"})
    assert compromise_cost([a], B("a"), use_ballot=True)[0] == pytest.approx(0.5)
    assert compromise_cost([a], B("a"))[0] == 0.0


def test_unfairness_examples():
    assert unfairness({0: 0.3, 1: 0.3, 2: 0.3}) == 0.0
    assert unfairness({0: 0.4, 1: 0.6}) == pytest.approx(0.2, abs=1e-9)
    assert unfairness({0: 0.0, 1: 0.0, 2: 1.0}) == pytest.approx(2**0.5, abs=1e-9)
    assert unfairness({0: 0.0, 1: 0.0}) == 0.0


def votes_instance(votes):
    costs = {str(i + 1): 10 for i in range(len(votes))}
    ballots = []
    for pid, v in zip(costs, votes):
        ballots += [{pid}] * v
    return make_election(costs, ballots, 20 * len(votes))


def test_popularity_examples():
    inst = votes_instance([10, 10, 10, 5, 5, 5])
    assert popularity(B("1", "2", "3"), inst) == 1.0
    assert popularity(B("4", "5", "6"), inst) == pytest.approx(0.5, abs=1e-9)
    flat = votes_instance([3, 3, 3, 3])
    assert popularity(B("2", "4"), flat) == 1.0


def test_budget_utilization_examples():
    inst = make_election({"1": 350, "2": 350}, [{"1"}], 700)
    assert budget_utilization(B("1", cost=350), inst) == pytest.approx(0.5, abs=1e-9)
    assert budget_utilization(B("1", "2", cost=700), inst) == 1.0


def test_report_records_conventions():
    inst = make_election({"1": 350, "2": 350}, [{"1"}, {"2"}], 700)
    agents = [agent(0, {"1"}), agent(1, {"2"})]
    r = metrics_report(agents, B("1", cost=350), inst, {"greedy": 1.0})
    assert r.summary()["popularity_normalization"] == POPULARITY_NORMALIZATION
    assert r.preference_source == "initial_bundle"
    assert r == metrics_report(agents, B("1", cost=350), inst, {"greedy": 1.0})


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=30), st.randoms(use_true_random=False))
def test_compromise_permutation_invariant(values, rnd):
    per = dict(enumerate(values))
    shuffled = list(values)
    rnd.shuffle(shuffled)
    assert unfairness(per) == pytest.approx(unfairness(dict(enumerate(shuffled))), abs=1e-12)


def test_popularity_scale_invariant():
    assert popularity(B("4", "1"), votes_instance([4, 2, 6, 1])) == pytest.approx(
        popularity(B("4", "1"), votes_instance([12, 6, 18, 3]))
    )
