"""Domain model for participatory-budgeting elections."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import (
    DuplicateYear,
    EmptyHistory,
    MixedDistricts,
    NonPositiveBudget,
    UnknownProjectReference,
)


def id_key(project_id: str) -> tuple:
    """Canonical sort key for project ids.

    Purely numeric ids sort numerically and before any other id, so that
    ``"2" < "10"``; everything else sorts as plain strings.
    """
    if project_id.isdigit():
        return (0, int(project_id), project_id)
    return (1, 0, project_id)


def sorted_ids(ids) -> tuple[str, ...]:
    return tuple(sorted(ids, key=id_key))


@dataclass(frozen=True)
class Project:
    id: str
    cost: int
    attributes: frozenset[str] = frozenset()
    vote_count: int = 0
    selected: bool = False
    name: str = ""

    def __post_init__(self):
        if self.cost < 0:
            raise ValueError(f"project {self.id}: negative cost {self.cost}")


@dataclass(frozen=True)
class Ballot:
    voter_id: str
    approved: frozenset[str]

    def __post_init__(self):
        if not self.approved:
            raise ValueError(f"ballot {self.voter_id}: empty approval set")


@dataclass(frozen=True)
class ElectionInstance:
    district: str
    year: int
    budget: int
    projects: tuple[Project, ...]
    ballots: tuple[Ballot, ...] = ()
    meta: tuple[tuple[str, str], ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.budget <= 0:
            raise NonPositiveBudget(f"budget must be positive, got {self.budget}")
        ids = [p.id for p in self.projects]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate project ids")
        known = set(ids)
        for b in self.ballots:
            unknown = b.approved - known
            if unknown:
                raise UnknownProjectReference(
                    f"ballot {b.voter_id} approves unknown project(s) {sorted_ids(unknown)}"
                )

    @property
    def project_map(self) -> dict[str, Project]:
        return {p.id: p for p in self.projects}

    @property
    def cost_of(self) -> dict[str, int]:
        return {p.id: p.cost for p in self.projects}

    def with_vote_counts(self) -> ElectionInstance:
        """Return a copy whose project vote counts are recomputed from the ballots."""
        counts = {p.id: 0 for p in self.projects}
        for b in self.ballots:
            for pid in b.approved:
                counts[pid] += 1
        projects = tuple(replace(p, vote_count=counts[p.id]) for p in self.projects)
        return replace(self, projects=projects)


@dataclass(frozen=True)
class DistrictHistory:
    district: str
    instances: tuple[ElectionInstance, ...]

    def __post_init__(self):
        if not self.instances:
            raise EmptyHistory("a district history needs at least one election")
        for inst in self.instances:
            if inst.district != self.district:
                raise MixedDistricts(
                    f"election of {inst.district!r} in history of {self.district!r}"
                )
        years = [inst.year for inst in self.instances]
        if len(set(years)) != len(years):
            raise DuplicateYear(f"duplicate years in {years}")
        if years != sorted(years):
            raise ValueError("instances must be ordered by year")

    @property
    def latest(self) -> ElectionInstance:
        return self.instances[-1]

    def __len__(self) -> int:
        return len(self.instances)
