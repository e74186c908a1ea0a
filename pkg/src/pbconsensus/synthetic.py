"""Seeded synthetic pabulib-style districts for tests and desk-scale experiments."""

from __future__ import annotations

import random

from .model import Ballot, DistrictHistory, ElectionInstance, Project
from .seeding import derive_rng

ATTRIBUTE_POOL = (
    "public space",
    "education",
    "environmental protection",
    "culture",
    "sport",
    "health",
    "urban greenery",
    "children",
    "seniors",
    "adults",
    "families with children",
    "youth",
)


def _greedy_winners(projects: list[Project], votes: dict[str, int], budget: int) -> set[str]:
    order = sorted(projects, key=lambda p: (-votes[p.id], p.cost, int(p.id)))
    left, won = budget, set()
    for p in order:
        if p.cost <= left:
            won.add(p.id)
            left -= p.cost
    return won


def make_instance(
    rng: random.Random,
    district: str,
    year: int,
    n_projects: int,
    n_voters: int,
    attribute_weights: dict[str, float],
    budget_share: float = 0.45,
    cost_range: tuple[int, int] = (50, 500),
) -> ElectionInstance:
    tags = list(attribute_weights)
    weights = [attribute_weights[a] for a in tags]
    raw = []
    for j in range(1, n_projects + 1):
        k = rng.choice((1, 1, 2, 2, 3))
        attrs = set()
        while len(attrs) < k:
            attrs.add(rng.choices(tags, weights)[0])
        raw.append(Project(str(j), rng.randint(*cost_range) * 100, frozenset(attrs)))
    budget = max(max(p.cost for p in raw) // 2, int(budget_share * sum(p.cost for p in raw)))
    budget = max(budget, min(p.cost for p in raw))

    # Voters favour projects whose attributes they care about.
    appeal = {p.id: sum(attribute_weights[a] for a in p.attributes) for p in raw}
    top = max(appeal.values())
    ballots = []
    for v in range(n_voters):
        taste = rng.uniform(0.15, 0.6)
        approved = {p.id for p in raw if rng.random() < taste * (0.4 + 0.6 * appeal[p.id] / top)}
        if not approved:
            approved = {rng.choice(raw).id}
        ballots.append(Ballot(f"v{v}", frozenset(approved)))
    votes = {p.id: sum(p.id in b.approved for b in ballots) for p in raw}
    winners = _greedy_winners(raw, votes, budget)
    projects = tuple(
        Project(p.id, p.cost, p.attributes, votes[p.id], p.id in winners) for p in raw
    )
    return ElectionInstance(district, year, budget, projects, tuple(ballots))


def make_history(
    seed: int = 0,
    district: str = "Synthetica",
    n_projects: int = 8,
    n_voters: int = 200,
    years: int = 4,
    first_year: int = 2020,
    **kwargs,
) -> DistrictHistory:
    """A district with ``years`` yearly elections sharing persistent attribute tastes."""
    rng = derive_rng(seed, "synthetic", district)
    pool = list(ATTRIBUTE_POOL)
    attribute_weights = {a: rng.uniform(0.2, 1.0) for a in pool}
    instances = [
        make_instance(rng, district, first_year + y, n_projects, n_voters, attribute_weights, **kwargs)
        for y in range(years)
    ]
    return DistrictHistory(district, tuple(instances))
