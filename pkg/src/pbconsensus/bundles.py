"""Knapsack-feasible project bundles: the action space of the bandit problem."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import SampleTooLarge, TooManyProjects
from .model import Ballot, Project, id_key, sorted_ids

DEFAULT_ENUMERATION_CAP = 2**22


@dataclass(frozen=True)
class Bundle:
    project_ids: frozenset[str]
    total_cost: int
    key: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.project_ids:
            raise ValueError("a bundle must contain at least one project")
        object.__setattr__(self, "key", tuple(id_key(p) for p in sorted_ids(self.project_ids)))

    @classmethod
    def of(cls, projects: Sequence[Project]) -> Bundle:
        return cls(frozenset(p.id for p in projects), sum(p.cost for p in projects))

    @property
    def ids(self) -> tuple[str, ...]:
        return sorted_ids(self.project_ids)

    def __len__(self) -> int:
        return len(self.project_ids)

    def __lt__(self, other: Bundle) -> bool:
        return self.key < other.key


@dataclass(frozen=True)
class ActionSpace:
    bundles: tuple[Bundle, ...]
    source_seed: int | None = None

    def __post_init__(self):
        if len(set(self.bundles)) != len(self.bundles):
            raise ValueError("duplicate bundles in action space")

    def __len__(self) -> int:
        return len(self.bundles)

    def __getitem__(self, i: int) -> Bundle:
        return self.bundles[i]

    def __iter__(self):
        return iter(self.bundles)

    def index(self, bundle: Bundle) -> int:
        return self.bundles.index(bundle)


def jaccard(a: frozenset | set, b: frozenset | set) -> Fraction:
    """Exact Jaccard index; two empty sets count as identical."""
    union = len(a | b)
    if union == 0:
        return Fraction(1)
    return Fraction(len(a & b), union)


def enumerate_valid_bundles(
    projects: Sequence[Project], budget: int, cap: int = DEFAULT_ENUMERATION_CAP
) -> list[Bundle]:
    """All non-empty project subsets with total cost ``<= budget``.

    Output is sorted lexicographically by the canonically ordered member ids.
    Projects costing more than the budget can never be part of a bundle and
    are dropped before the size check against ``cap``.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    fitting = [p for p in projects if p.cost <= budget]
    if 2 ** len(fitting) - 1 > cap:
        raise TooManyProjects(
            f"{len(fitting)} affordable projects give {2 ** len(fitting) - 1} subsets, "
            f"over the enumeration cap of {cap}; pre-filter the project list"
        )
    fitting.sort(key=lambda p: id_key(p.id))
    out: list[Bundle] = []

    # Depth-first in canonical order emits subsets already in lexicographic order.
    def extend(start: int, chosen: list[str], cost: int):
        for i in range(start, len(fitting)):
            p = fitting[i]
            c = cost + p.cost
            if c > budget:
                continue
            chosen.append(p.id)
            out.append(Bundle(frozenset(chosen), c))
            extend(i + 1, chosen, c)
            chosen.pop()

    extend(0, [], 0)
    return out


def sample_action_space(bundles: Sequence[Bundle], k: int, seed: int | None) -> ActionSpace:
    """Uniformly sample ``k`` distinct bundles, keeping their canonical order."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > len(bundles):
        raise SampleTooLarge(f"cannot sample {k} bundles out of {len(bundles)}")
    if k == len(bundles):
        return ActionSpace(tuple(bundles), None)
    picked = sorted(random.Random(seed).sample(range(len(bundles)), k))
    return ActionSpace(tuple(bundles[i] for i in picked), seed)


def best_overlap_bundle(ballot: Ballot, space: ActionSpace | Sequence[Bundle]) -> Bundle:
    """Bundle with the highest Jaccard overlap with the ballot's approvals.

    Ties go to the cheaper bundle, then to the earlier one in ``space``.
    """
    if len(space) == 0:
        raise ValueError("empty action space")
    best_i = min(
        range(len(space)),
        key=lambda i: (-jaccard(ballot.approved, space[i].project_ids), space[i].total_cost, i),
    )
    return space[best_i]
