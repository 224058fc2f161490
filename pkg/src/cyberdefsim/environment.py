"""Episodic attack/defense simulation with noisy one-hot observations.

Per-timestep order: defense block draw, attack skill draw, adversary update,
benign-interruption sampling, reward, observation, termination bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .adversary import (
    AdversaryProfile,
    AdversaryStatus,
    attempt,
    initial_status,
    next_target,
    record_outcome,
)
from .attack_graph import AttackGraph, AttackPath, AttackState, TERMINATED
from .defense import (
    DefenseCatalog,
    action_cost,
    block_probability,
    sample_interruptions,
)

ONGOING = "ongoing"
DEFENDER_WIN = "defender_win"
ADVERSARY_WIN = "adversary_win"
TRUNCATED = "truncated"

# Risk-term conditioning for the per-step reward. "residual" (default)
# evaluates the adversary's goal probability assuming the strongest available
# catalog defense against its next target — a state-intrinsic residual risk;
# "action_aware" conditions on the blocking odds of the action just executed;
# "inactive" evaluates it as if no defense were running.
RISK_RESIDUAL = "residual"
RISK_ACTION_AWARE = "action_aware"
RISK_INACTIVE = "inactive"


@dataclass(frozen=True)
class RewardModel:
    """Constants of the risk/win/cost payoff."""

    impact: float = 10.0
    # literal form keeps only the defender-win branch of the win/loss indicator
    literal_iv: bool = False

    def __post_init__(self):
        if self.impact <= 0:
            raise ValueError("impact must be positive")


@dataclass
class EnvConfig:
    graph: AttackGraph
    catalog: DefenseCatalog
    profile: AdversaryProfile
    reward_model: RewardModel = field(default_factory=RewardModel)
    horizon: int = 64
    seed: int = 0
    risk_mode: str = RISK_RESIDUAL

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be positive")
        if self.risk_mode not in (RISK_RESIDUAL, RISK_ACTION_AWARE, RISK_INACTIVE):
            raise ValueError(f"unknown risk_mode {self.risk_mode!r}")


@dataclass(frozen=True)
class StepOutcome:
    observation: np.ndarray
    reward: float
    done: bool
    info: dict


@lru_cache(maxsize=None)
def _p_goal(remaining: int, budget: int, rho: float) -> float:
    if remaining == 0:
        return 1.0
    if budget == 0:
        return 0.0
    return rho * _p_goal(remaining - 1, budget, rho) + (1 - rho) * _p_goal(
        remaining, budget - 1, rho
    )


def compute_p_goal(path: AttackPath, cursor: int, budget: int, rho: float) -> float:
    """Probability the adversary finishes the path suffix before its failure
    budget runs out, each attempt an independent Bernoulli(rho)."""
    if cursor > len(path):
        raise ValueError("cursor beyond path end")
    if budget < 0:
        raise ValueError("budget must be non-negative")
    return _p_goal(len(path) - cursor, budget, float(rho))


def reward_of_transition(model: RewardModel, p_goal: float, outcome: str,
                         cost: float) -> float:
    """Risk/win/cost payoff for one transition."""
    if not 0 <= p_goal <= 1:
        raise ValueError("p_goal out of [0,1]")
    if cost < 0:
        raise ValueError("cost must be non-negative")
    if outcome == DEFENDER_WIN:
        iv = -1.0
    elif outcome == ADVERSARY_WIN and not model.literal_iv:
        iv = 1.0
    else:
        iv = 0.0
    return -p_goal * model.impact - iv * model.impact - cost


def one_hot(index: int, size: int) -> np.ndarray:
    v = np.zeros(size)
    v[index] = 1.0
    return v


def observe(true_state: AttackState, profile: AdversaryProfile, rng,
            graph: AttackGraph) -> np.ndarray:
    """Noisy one-hot observation of the attack position.

    With probability obs_accuracy the true state is reported; otherwise a
    uniformly random other live state. Terminated is always reported exactly
    so episode boundaries stay unambiguous.
    """
    n = graph.state_count
    if true_state.kind == TERMINATED:
        return one_hot(true_state.index, n)
    if rng.random() < profile.obs_accuracy:
        return one_hot(true_state.index, n)
    # live states are indices 0..n-2; skip the true one
    idx = int(rng.integers(n - 2))
    if idx >= true_state.index:
        idx += 1
    return one_hot(idx, n)


class CyberDefenseEnv:
    """Single-owner episodic simulator; clone with distinct seeds to parallelize."""

    def __init__(self, config: EnvConfig, log_trajectory: bool = False):
        self.config = config
        self.graph = config.graph
        self.catalog = config.catalog
        self.profile = config.profile
        self.rng = np.random.default_rng(config.seed)
        self.log_trajectory = log_trajectory
        self.trajectory: list[dict] = []
        self._path: AttackPath | None = None
        self._status: AdversaryStatus | None = None
        self._t = 0
        self._done = True
        # strongest block the catalog can field against each technique,
        # for the residual risk term
        self._best_block = best_block_table(self.catalog, self.graph)

    @property
    def observation_dim(self) -> int:
        return self.graph.state_count

    @property
    def action_count(self) -> int:
        return len(self.catalog)

    def reset(self, path: AttackPath) -> np.ndarray:
        self.graph.validate_path(path)
        self._path = path
        self._status = initial_status(self.graph)
        self._t = 0
        self._done = False
        self.trajectory = []
        # the pre-attack position is observed exactly
        return one_hot(self.graph.initiated.index, self.observation_dim)

    def step(self, action_id: int) -> StepOutcome:
        if self._done:
            raise RuntimeError("step() after episode end; call reset()")
        action = self.catalog.actions[action_id]
        status = self._status
        pre_depth = self.graph.tactic_depth(status.position)

        target = self.graph.techniques[next_target(status, self._path)]
        beta = block_probability(self.catalog, action, target)
        blocked = self.rng.random() < beta
        succeeded = False if blocked else attempt(self.profile, self.rng)
        status = record_outcome(status, self.profile, succeeded, self._path, self.graph)

        interrupted = sample_interruptions(self.catalog, action, pre_depth, self.rng)
        cost = action_cost(self.catalog, action, interrupted)

        self._t += 1
        if status.path_cursor >= len(self._path):
            outcome = ADVERSARY_WIN
        elif status.terminated:
            outcome = DEFENDER_WIN
        elif self._t >= self.config.horizon:
            outcome = TRUNCATED
        else:
            outcome = ONGOING

        if outcome == ADVERSARY_WIN:
            p_goal = 1.0
        elif outcome == DEFENDER_WIN:
            p_goal = 0.0
        else:
            rho = self.profile.rho
            if self.config.risk_mode == RISK_RESIDUAL:
                next_tid = self._path.steps[status.path_cursor]
                rho = (1.0 - self._best_block[next_tid]) * rho
            elif self.config.risk_mode == RISK_ACTION_AWARE:
                rho = (1.0 - beta) * rho
            p_goal = compute_p_goal(
                self._path, status.path_cursor,
                self.profile.tau - status.failures, rho,
            )

        reward = reward_of_transition(self.config.reward_model, p_goal, outcome, cost)
        obs = observe(status.position, self.profile, self.rng, self.graph)

        self._status = status
        self._done = outcome != ONGOING
        info = {
            "true_state": status.position.index,
            "defense_blocked": blocked,
            "attack_succeeded": succeeded,
            "interrupted": interrupted,
            "outcome": outcome,
            "p_goal": p_goal,
            "cost": cost,
            # stage the attack halted at, for stop-tactic reporting: the final
            # pre-termination position for defender wins, the current position
            # otherwise (truncation buckets where the attacker sits)
            "stop_depth": pre_depth if outcome == DEFENDER_WIN
            else self.graph.tactic_depth(status.position),
        }
        if self.log_trajectory:
            self.trajectory.append(
                {
                    "t": self._t,
                    "action": action_id,
                    "blocked": blocked,
                    "attack_succeeded": succeeded,
                    "true_state": status.position.index,
                    "observed_state": int(np.argmax(obs)),
                    "reward": reward,
                    "outcome": outcome,
                }
            )
        return StepOutcome(obs, reward, self._done, info)


def scripted_best_return(path: AttackPath, profile: AdversaryProfile,
                         model: RewardModel, residual_rho: float = 0.0) -> float:
    """Return of the ideal episode: every attempt blocked with certainty and at
    zero cost until the adversary's budget is spent at the initial position.

    `residual_rho` is the effective skill used for the risk term of the
    intermediate steps (0 under the action-aware reading, the best-defense
    residual under the residual reading).
    """
    total = 0.0
    for failures in range(1, profile.tau):
        p = compute_p_goal(path, 0, profile.tau - failures, residual_rho)
        total += reward_of_transition(model, p, ONGOING, 0.0)
    total += reward_of_transition(model, 0.0, DEFENDER_WIN, 0.0)
    return total


def best_block_table(catalog: DefenseCatalog, graph: AttackGraph) -> dict[int, float]:
    """Strongest catalog block probability against each technique."""
    return {
        tid: max(block_probability(catalog, a, tech) for a in catalog.actions)
        for tid, tech in graph.techniques.items()
    }
