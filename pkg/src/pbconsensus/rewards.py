"""Deterministic project and bundle rewards from multi-year attribute frequencies.

For every year, each attribute's share among all attribute occurrences of
the listed projects is added to its share among the selected projects;
the attribute reward is the sum of both shares over all years.  A project
scores ``logistic(sum of its attribute rewards) + tanh(cost / budget)`` and
a bundle scores the sum of its projects.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .bundles import ActionSpace, Bundle
from .errors import EmptyHistory
from .model import DistrictHistory, ElectionInstance, Project


@dataclass(frozen=True)
class AttributeRewards:
    per_attribute: dict[str, float]
    years_used: int

    def __getitem__(self, attribute: str) -> float:
        return self.per_attribute.get(attribute, 0.0)


@dataclass(frozen=True)
class RewardTable:
    per_project: dict[str, float]
    per_bundle: dict[Bundle, float]

    def __getitem__(self, bundle: Bundle) -> float:
        return self.per_bundle[bundle]


def _shares(projects) -> dict[str, float]:
    counts = Counter(a for p in projects for a in p.attributes)
    total = sum(counts.values())
    if total == 0:
        return {}
    return {a: n / total for a, n in counts.items()}


def yearly_shares(instance: ElectionInstance) -> tuple[dict[str, float], dict[str, float]]:
    """Normalized attribute shares among listed and among selected projects of one year."""
    listed = _shares(instance.projects)
    selected = _shares(p for p in instance.projects if p.selected)
    return listed, selected


def attribute_frequencies(history: DistrictHistory) -> AttributeRewards:
    if history is None or len(history.instances) == 0:
        raise EmptyHistory("reward computation needs at least one year")
    rewards: dict[str, float] = {}
    for inst in history.instances:
        for p in inst.projects:
            for a in p.attributes:
                rewards.setdefault(a, 0.0)
    parts: dict[str, list[float]] = {a: [] for a in rewards}
    for inst in history.instances:
        listed, selected = yearly_shares(inst)
        for a, share in listed.items():
            parts[a].append(share)
        for a, share in selected.items():
            parts[a].append(share)
    per_attribute = {a: math.fsum(v) for a, v in sorted(parts.items())}
    return AttributeRewards(per_attribute=per_attribute, years_used=len(history.instances))


def logistic(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def project_reward(
    project: Project, attrs: AttributeRewards, budget: int, cost_sign: int = 1
) -> float:
    """``logistic(sum of attribute rewards) + cost_sign * tanh(cost / budget)``.

    ``cost_sign=-1`` turns the cost bonus into a penalty for sensitivity runs.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    attr_sum = math.fsum(attrs[a] for a in project.attributes)
    return logistic(attr_sum) + cost_sign * math.tanh(project.cost / budget)


def bundle_reward(bundle: Bundle, per_project: dict[str, float]) -> float:
    return math.fsum(per_project[p] for p in bundle.project_ids)


def build_reward_table(
    space: ActionSpace, attrs: AttributeRewards, instance: ElectionInstance, cost_sign: int = 1
) -> RewardTable:
    projects = instance.project_map
    needed = {pid for b in space for pid in b.project_ids}
    per_project = {
        pid: project_reward(projects[pid], attrs, instance.budget, cost_sign)
        for pid in sorted(needed)
    }
    per_bundle = {b: bundle_reward(b, per_project) for b in space}
    return RewardTable(per_project=per_project, per_bundle=per_bundle)
