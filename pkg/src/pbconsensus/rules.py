"""Baseline multi-winner budgeting rules: greedy, sequential Phragmén, equal shares.

All selection arithmetic uses :class:`fractions.Fraction`, and every tie is
broken by canonical project id order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .bundles import jaccard
from .errors import NoBallots
from .model import ElectionInstance, id_key

GREEDY = "greedy"
PHRAGMEN = "phragmen"
EQUAL_SHARES = "equal_shares"
RULES = (GREEDY, PHRAGMEN, EQUAL_SHARES)

# Recorded in outputs so numbers are never compared across variants silently.
PHRAGMEN_VARIANT = "sequential-money-earning"
EQUAL_SHARES_VARIANT = "cost-utility-with-phragmen-completion"


@dataclass(frozen=True)
class Selection:
    project: str
    quantity: Fraction
    phase: str = ""


@dataclass(frozen=True)
class RuleOutcome:
    rule: str
    winners: frozenset[str]
    total_cost: int
    audit: tuple[Selection, ...] = ()
    payments: dict[str, dict[str, Fraction]] = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "rule": self.rule,
            "winners": sorted(self.winners, key=id_key),
            "total_cost": self.total_cost,
            "audit": [
                {"project": s.project, "quantity": str(s.quantity), "phase": s.phase}
                for s in self.audit
            ],
        }


def _approvers(instance: ElectionInstance) -> dict[str, list[int]]:
    out: dict[str, list[int]] = {p.id: [] for p in instance.projects}
    for v, ballot in enumerate(instance.ballots):
        for pid in ballot.approved:
            out[pid].append(v)
    return out


def utilitarian_greedy(instance: ElectionInstance) -> RuleOutcome:
    """Most-approved first; take every project that still fits."""
    votes = {pid: len(vs) for pid, vs in _approvers(instance).items()}
    order = sorted(instance.projects, key=lambda p: (-votes[p.id], p.cost, id_key(p.id)))
    left = instance.budget
    audit = []
    for p in order:
        if p.cost <= left:
            left -= p.cost
            audit.append(Selection(p.id, Fraction(votes[p.id])))
    winners = frozenset(s.project for s in audit)
    return RuleOutcome(GREEDY, winners, instance.budget - left, tuple(audit))


def sequential_phragmen(
    instance: ElectionInstance,
    budget_override: int | None = None,
    exclude: frozenset[str] | set[str] = frozenset(),
) -> RuleOutcome:
    """Money-earning sequential Phragmén.

    Voters earn virtual money at unit rate from time zero.  The project whose
    supporters can first afford it is bought and their balances reset; a
    project that no longer fits the remaining real budget is dropped.  The
    audit records the purchase time of each winner.
    """
    budget = instance.budget if budget_override is None else budget_override
    approvers = _approvers(instance)
    balance = [Fraction(0)] * len(instance.ballots)
    candidates = sorted(
        (p for p in instance.projects if p.id not in exclude and approvers[p.id]),
        key=lambda p: id_key(p.id),
    )
    now = Fraction(0)
    left = budget
    audit = []
    while True:
        candidates = [p for p in candidates if p.cost <= left]
        if not candidates:
            break
        best, best_wait = None, None
        for p in candidates:
            supporters = approvers[p.id]
            missing = p.cost - sum(balance[v] for v in supporters)
            wait = max(Fraction(0), missing / len(supporters))
            if best_wait is None or wait < best_wait:
                best, best_wait = p, wait
        now += best_wait
        for v in range(len(balance)):
            balance[v] += best_wait
        for v in approvers[best.id]:
            balance[v] = Fraction(0)
        left -= best.cost
        audit.append(Selection(best.id, now, "phragmen"))
        candidates.remove(best)
    winners = frozenset(s.project for s in audit)
    return RuleOutcome(PHRAGMEN, winners, budget - left, tuple(audit))


def _max_payment(balances: list[Fraction], cost: int) -> Fraction | None:
    """Smallest cap ``rho`` with ``sum(min(b, rho)) == cost``, or None if unaffordable."""
    if sum(balances) < cost:
        return None
    paid = Fraction(0)
    ordered = sorted(balances)
    for i, b in enumerate(ordered):
        rho = (cost - paid) / (len(ordered) - i)
        if rho <= b:
            return rho
        paid += b
    return None  # unreachable when the total suffices


def method_of_equal_shares(instance: ElectionInstance) -> RuleOutcome:
    """Method of equal shares (cost utilities) completed by sequential Phragmén.

    Each voter starts with ``budget / n``.  In each round the affordable
    project with the smallest per-unit-of-utility payment ``rho / cost`` is
    bought; supporters pay ``min(balance, rho)``.  Leftover money is then
    spent by sequential Phragmén on the projects not yet chosen.
    """
    n = len(instance.ballots)
    if n == 0:
        raise NoBallots("equal shares needs at least one ballot")
    approvers = _approvers(instance)
    share = Fraction(instance.budget, n)
    balance = [share] * n
    remaining = sorted(
        (p for p in instance.projects if approvers[p.id]), key=lambda p: id_key(p.id)
    )
    audit = []
    payments: dict[str, dict[str, Fraction]] = {}
    spent = 0
    while True:
        best, best_key, best_rho = None, None, None
        for p in remaining:
            rho = _max_payment([balance[v] for v in approvers[p.id]], p.cost)
            if rho is None:
                continue
            key = rho / p.cost if p.cost else Fraction(0)
            if best_key is None or key < best_key:
                best, best_key, best_rho = p, key, rho
        if best is None:
            break
        paid = {}
        for v in approvers[best.id]:
            amount = min(balance[v], best_rho)
            balance[v] -= amount
            paid[instance.ballots[v].voter_id] = amount
        payments[best.id] = paid
        spent += best.cost
        audit.append(Selection(best.id, best_key, "equal_shares"))
        remaining.remove(best)

    chosen = frozenset(s.project for s in audit)
    completion = sequential_phragmen(instance, instance.budget - spent, exclude=chosen)
    audit.extend(completion.audit)
    winners = chosen | completion.winners
    return RuleOutcome(
        EQUAL_SHARES, winners, spent + completion.total_cost, tuple(audit), payments
    )


def run_rule(rule: str, instance: ElectionInstance) -> RuleOutcome:
    if rule == GREEDY:
        return utilitarian_greedy(instance)
    if rule == PHRAGMEN:
        return sequential_phragmen(instance)
    if rule == EQUAL_SHARES:
        return method_of_equal_shares(instance)
    raise ValueError(f"unknown rule {rule!r}")


def overlap(a, b) -> float:
    """Jaccard index of two winner sets; two empty sets count as identical."""
    return float(jaccard(frozenset(a), frozenset(b)))
