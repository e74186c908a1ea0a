"""Stateless Q-learning voter agents that negotiate a consensus bundle.

Every agent starts from the bundle closest to its own ballot and from
Q-values equal to the deterministic bundle rewards.  Each synchronous round
the gossip graph is redrawn and agents swap their best bundle and its value.
A receiver first merges what it heard into its table, keeping the larger of
its own and the advertised value for each bundle, then updates the Q-value
of its current bundle with the deterministic reward plus a communication
term, and finally picks its next bundle epsilon-greedily.
The run stops once every agent's greedy choice has been the same bundle
for ``stability_window`` consecutive rounds.
"""

from __future__ import annotations

import math
import random
from collections import Counter, deque
from dataclasses import dataclass, field, replace
from typing import Sequence

from .bundles import ActionSpace, Bundle, best_overlap_bundle
from .errors import EmptyBallotPool
from .gossip import BundleMessage, argmax, exchange, resample_views
from .model import Ballot, DistrictHistory, ElectionInstance
from .rewards import RewardTable, attribute_frequencies, build_reward_table
from .seeding import derive_rng


# "none" skips the merge step: messages then only enter through the
# communication term of the current bundle, which never moves an agent
# towards the bundles its neighbours hold.
AGGREGATIONS = ("max", "none")


@dataclass
class AgentState:
    id: int
    ballot: Ballot
    initial_bundle: Bundle
    q_values: list[float]
    current_selection: int

    @property
    def greedy(self) -> int:
        return argmax(self.q_values)


@dataclass(frozen=True)
class LearningConfig:
    alpha: float = 0.1
    delta: float = 0.1
    gamma: float = 0.0
    epsilon0: float = 1.0
    epsilon_decay: float = 0.1
    epsilon_min: float = 0.01
    max_iterations: int = 2000
    stability_window: int = 10
    seed: int = 0
    cost_sign: int = 1
    aggregation: str = "max"
    record_trajectory: bool = False

    def __post_init__(self):
        if self.gamma != 0:
            raise ValueError("only the stateless variant (gamma = 0) is supported")
        if not 0 < self.alpha <= 1 or not 0 < self.delta <= 1:
            raise ValueError("alpha and delta must lie in (0, 1]")
        if not 0 < self.epsilon0 <= 1:
            raise ValueError("epsilon0 must lie in (0, 1]")
        if not 0 <= self.epsilon_min <= self.epsilon0:
            raise ValueError("need 0 <= epsilon_min <= epsilon0")
        if self.epsilon_decay < 0:
            raise ValueError("epsilon_decay must be non-negative")
        if self.max_iterations < 1 or self.stability_window < 1:
            raise ValueError("max_iterations and stability_window must be positive")
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"aggregation must be one of {AGGREGATIONS}")
        if self.cost_sign not in (1, -1):
            raise ValueError("cost_sign must be +1 or -1")

    def epsilon(self, t: int) -> float:
        return max(self.epsilon_min, self.epsilon0 * math.exp(-self.epsilon_decay * t))


@dataclass
class SimulationResult:
    consensus_bundle: Bundle | None
    consensus_index: int | None
    iterations: int
    converged: bool
    per_agent_initial: dict[int, Bundle]
    agents: list[AgentState] = field(repr=False)
    final_window: list[tuple[int, ...]] = field(default_factory=list, repr=False)
    trajectory: list[dict[int, int]] | None = field(default=None, repr=False)


def initialize_agents(
    instance: ElectionInstance,
    space: ActionSpace,
    rewards: RewardTable,
    n_agents: int,
    rng: random.Random,
) -> list[AgentState]:
    """Bind agents to ballots and seed them with their closest bundle.

    Ballots are drawn without replacement when there are enough of them,
    with replacement otherwise.
    """
    if n_agents < 2:
        raise ValueError("need at least two agents")
    if len(space) == 0:
        raise ValueError("empty action space")
    pool = list(instance.ballots)
    if not pool:
        raise EmptyBallotPool(f"{instance.district} {instance.year} has no ballots")
    if n_agents <= len(pool):
        ballots = rng.sample(pool, n_agents)
    else:
        ballots = rng.choices(pool, k=n_agents)
    q0 = [rewards[b] for b in space]
    index = {b: i for i, b in enumerate(space)}
    agents = []
    for i, ballot in enumerate(ballots):
        start = best_overlap_bundle(ballot, space)
        agents.append(AgentState(i, ballot, start, list(q0), index[start]))
    return agents


def aggregate_inbox(agent: AgentState, inbox: Sequence[BundleMessage]) -> AgentState:
    """Raise each advertised bundle's Q-value to the best value heard for it."""
    new_q = None
    for msg in inbox:
        current = agent.q_values if new_q is None else new_q
        if msg.value > current[msg.bundle]:
            if new_q is None:
                new_q = list(agent.q_values)
            new_q[msg.bundle] = msg.value
    return agent if new_q is None else replace(agent, q_values=new_q)


def q_update(
    agent: AgentState,
    deterministic_reward: float,
    inbox: Sequence[BundleMessage],
    cfg: LearningConfig,
) -> AgentState:
    """Update only the Q-value of the currently selected bundle.

    ``Q += alpha * (r + delta * (m - Q))`` with ``m`` the best value heard
    from neighbours; an empty inbox leaves the communication term at zero.
    """
    b = agent.current_selection
    q = agent.q_values[b]
    m = max((msg.value for msg in inbox), default=q)
    new_q = list(agent.q_values)
    new_q[b] = q + cfg.alpha * (deterministic_reward + cfg.delta * (m - q))
    return replace(agent, q_values=new_q)


def select_action(agent: AgentState, epsilon: float, rng: random.Random) -> int:
    if not 0 <= epsilon <= 1:
        raise ValueError("epsilon must lie in [0, 1]")
    if rng.random() < epsilon:
        choice = rng.randrange(len(agent.q_values))
    else:
        choice = argmax(agent.q_values)
    agent.current_selection = choice
    return choice


def check_consensus(greedy_history: Sequence[Sequence[int]], stability_window: int) -> int | None:
    """Bundle index every agent has held as greedy choice over the last window, if any."""
    if len(greedy_history) < stability_window:
        return None
    recent = list(greedy_history)[-stability_window:]
    first = recent[0][0]
    for row in recent:
        if any(choice != first for choice in row):
            return None
    return first


def run_simulation(
    instance: ElectionInstance,
    history: DistrictHistory,
    space: ActionSpace,
    cfg: LearningConfig,
    *,
    n_agents: int,
    in_degree: int,
) -> SimulationResult:
    """Run the consensus process to stability or ``cfg.max_iterations``.

    Randomness is split into independent streams (ballot binding, network,
    one per agent) derived from ``cfg.seed``.
    """
    attrs = attribute_frequencies(history)
    rewards = build_reward_table(space, attrs, instance, cfg.cost_sign)
    bundle_rewards = [rewards[b] for b in space]

    agents = initialize_agents(instance, space, rewards, n_agents, derive_rng(cfg.seed, "ballots"))
    net_rng = derive_rng(cfg.seed, "network")
    agent_rngs = [derive_rng(cfg.seed, "agent", a.id) for a in agents]

    window: deque[tuple[int, ...]] = deque(maxlen=cfg.stability_window)
    trajectory = [] if cfg.record_trajectory else None
    consensus = None
    t = 0
    while t < cfg.max_iterations:
        t += 1
        views = resample_views(n_agents, in_degree, net_rng)
        inboxes = exchange(views, agents)
        updated = []
        for a in agents:
            inbox = inboxes.get(a.id, [])
            if cfg.aggregation == "max":
                a = aggregate_inbox(a, inbox)
            updated.append(q_update(a, bundle_rewards[a.current_selection], inbox, cfg))
        agents = updated
        window.append(tuple(a.greedy for a in agents))
        consensus = check_consensus(window, cfg.stability_window)
        if consensus is not None:
            break
        eps = cfg.epsilon(t)
        for a, r in zip(agents, agent_rngs):
            select_action(a, eps, r)
        if trajectory is not None:
            trajectory.append(dict(sorted(Counter(a.current_selection for a in agents).items())))

    for a in agents:
        if not all(math.isfinite(q) for q in a.q_values):
            raise FloatingPointError(f"agent {a.id} has non-finite Q-values")
    return SimulationResult(
        consensus_bundle=space[consensus] if consensus is not None else None,
        consensus_index=consensus,
        iterations=t,
        converged=consensus is not None,
        per_agent_initial={a.id: a.initial_bundle for a in agents},
        agents=agents,
        final_window=list(window),
        trajectory=trajectory,
    )


def replay_is_sound(
    result: SimulationResult,
    instance: ElectionInstance,
    history: DistrictHistory,
    space: ActionSpace,
    cfg: LearningConfig,
    *,
    n_agents: int,
    in_degree: int,
) -> bool:
    """Re-run from the same seed and confirm the reported consensus.

    The replay must reproduce the result exactly, the consensus must be
    every agent's greedy bundle, and the last ``stability_window`` rounds
    must all be unanimous on it.
    """
    if not result.converged:
        return False
    replay = run_simulation(instance, history, space, cfg, n_agents=n_agents, in_degree=in_degree)
    if replay != result:
        return False
    c = result.consensus_index
    return (
        space[c] == result.consensus_bundle
        and all(a.greedy == c for a in result.agents)
        and len(result.final_window) == cfg.stability_window
        and all(set(row) == {c} for row in result.final_window)
    )
