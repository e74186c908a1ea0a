"""Legitimacy metrics for a consensus bundle."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .bundles import Bundle, jaccard
from .model import ElectionInstance

POPULARITY_NORMALIZATION = "top-k-vote-sum"


@dataclass(frozen=True)
class MetricsReport:
    compromise_cost: float
    unfairness: float
    popularity: float
    budget_utilization: float
    per_agent_compromise: dict[int, float] = field(repr=False)
    rule_overlaps: dict[str, float] = field(default_factory=dict)
    preference_source: str = "initial_bundle"
    popularity_normalization: str = POPULARITY_NORMALIZATION

    def summary(self) -> dict:
        return {
            "compromise_cost": self.compromise_cost,
            "unfairness": self.unfairness,
            "popularity": self.popularity,
            "budget_utilization": self.budget_utilization,
            "preference_source": self.preference_source,
            "popularity_normalization": self.popularity_normalization,
        }


def compromise_cost(
    agents: Sequence, consensus: Bundle, use_ballot: bool = False
) -> tuple[float, dict[int, float]]:
    """Mean of ``1 - Jaccard(preferred, consensus)`` over agents.

    The preferred bundle is the agent's initial bundle, or its raw approval
    set when ``use_ballot`` is true.
    """
    per_agent = {}
    for a in agents:
        preferred = a.ballot.approved if use_ballot else a.initial_bundle.project_ids
        per_agent[a.id] = float(1 - jaccard(preferred, consensus.project_ids))
    return math.fsum(per_agent.values()) / len(per_agent), per_agent


def unfairness(per_agent: Mapping[int, float]) -> float:
    """Coefficient of variation (population std / mean); 0 when the mean is 0."""
    values = list(per_agent.values())
    if not values:
        raise ValueError("no agents")
    mean = math.fsum(values) / len(values)
    if mean == 0:
        return 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / len(values)
    return math.sqrt(var) / mean


def popularity(consensus: Bundle, instance: ElectionInstance) -> float:
    """Votes of the consensus projects over the votes of the ``k`` most-voted projects."""
    votes = {p.id: p.vote_count for p in instance.projects}
    k = len(consensus)
    top = sum(sorted(votes.values(), reverse=True)[:k])
    got = sum(votes[pid] for pid in consensus.project_ids)
    if top == 0:
        return 1.0
    return got / top


def budget_utilization(consensus: Bundle, instance: ElectionInstance) -> float:
    return consensus.total_cost / instance.budget


def metrics_report(
    agents: Sequence,
    consensus: Bundle,
    instance: ElectionInstance,
    rule_overlaps: Mapping[str, float] | None = None,
    use_ballot: bool = False,
) -> MetricsReport:
    mean, per_agent = compromise_cost(agents, consensus, use_ballot)
    return MetricsReport(
        compromise_cost=mean,
        unfairness=unfairness(per_agent),
        popularity=popularity(consensus, instance),
        budget_utilization=budget_utilization(consensus, instance),
        per_agent_compromise=per_agent,
        rule_overlaps=dict(rule_overlaps or {}),
        preference_source="ballot" if use_ballot else "initial_bundle",
    )
