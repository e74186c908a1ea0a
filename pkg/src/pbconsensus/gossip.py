"""Dynamic random communication graph and per-round message delivery.

Each round every agent draws a fresh uniform view of ``in_degree`` peers.
Views are treated as undirected edges: ``i`` hears from ``j`` whenever
``j`` is in the view of ``i`` or ``i`` is in the view of ``j``.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Sequence

from .errors import DegreeTooLarge


@dataclass(frozen=True)
class GossipView:
    agent_id: int
    neighbors: frozenset[int]


@dataclass(frozen=True)
class BundleMessage:
    sender: int
    bundle: int
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"non-finite message value from agent {self.sender}")


def argmax(values: Sequence[float]) -> int:
    """Index of the largest value; the lowest index wins ties."""
    best = 0
    for i in range(1, len(values)):
        if values[i] > values[best]:
            best = i
    return best


def resample_views(population: int, in_degree: int, rng: random.Random) -> list[GossipView]:
    if population < 2:
        raise ValueError("need at least two agents")
    if in_degree < 1:
        raise ValueError("in_degree must be at least 1")
    if in_degree > population - 1:
        raise DegreeTooLarge(f"in_degree {in_degree} needs more than {population} agents")
    views = []
    for i in range(population):
        # Sample from the population with i removed, then shift back.
        picks = rng.sample(range(population - 1), in_degree)
        views.append(GossipView(i, frozenset(j + 1 if j >= i else j for j in picks)))
    return views


def contacts(views: Sequence[GossipView]) -> dict[int, set[int]]:
    """Symmetric closure of the views: who talks to whom this round."""
    out: dict[int, set[int]] = {v.agent_id: set(v.neighbors) for v in views}
    for v in views:
        for j in v.neighbors:
            out.setdefault(j, set()).add(v.agent_id)
    return out


def outgoing_message(agent) -> BundleMessage:
    """The agent's best bundle and its Q-value."""
    best = argmax(agent.q_values)
    return BundleMessage(agent.id, best, agent.q_values[best])


def exchange(views: Sequence[GossipView], agents) -> dict[int, list[BundleMessage]]:
    """Deliver one message from every agent to each of its contacts.

    Inboxes are sorted by sender id so they do not depend on set iteration order.
    """
    outgoing = {a.id: outgoing_message(a) for a in agents}
    return {
        i: [outgoing[j] for j in sorted(peers)] for i, peers in sorted(contacts(views).items())
    }
