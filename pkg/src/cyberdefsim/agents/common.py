"""Shared agent machinery: hyperparameters, exploration, replay, rollouts."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..environment import DEFENDER_WIN, TRUNCATED
from ..neural_net import Mlp, forward, log_softmax


@dataclass(frozen=True)
class HyperParams:
    """Training knobs; defaults are the stock experiment configuration."""

    gamma: float = 0.8
    alpha: float = 0.005
    entropy_coef: float = 0.05
    eps_initial: float = 1.0
    eps_final: float = 0.04
    eps_decay_steps: int = 300_000
    num_workers: int = 4
    rollout_fragment: int = 12
    batch_size: int = 48
    ppo_clip: float = 0.4
    ppo_epochs: int = 3
    epochs: int = 100
    steps_per_epoch: int = 25_000
    replay_capacity: int = 50_000
    target_sync: int = 500
    double_dqn: bool = True
    grad_clip: float = 40.0

    def __post_init__(self):
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must lie in [0,1)")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.eps_final > self.eps_initial:
            raise ValueError("eps_final must not exceed eps_initial")
        for name in ("eps_decay_steps", "num_workers", "rollout_fragment",
                     "batch_size", "epochs", "steps_per_epoch"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def with_overrides(self, **kw) -> "HyperParams":
        return replace(self, **kw)


def epsilon(step: int, hp: HyperParams) -> float:
    """Linear decay from eps_initial to eps_final over eps_decay_steps."""
    if step < 0:
        raise ValueError("step must be non-negative")
    if step >= hp.eps_decay_steps:
        return hp.eps_final
    frac = step / hp.eps_decay_steps
    return hp.eps_initial + frac * (hp.eps_final - hp.eps_initial)


class ReplayBuffer:
    """Ring buffer of transitions with uniform sampling."""

    def __init__(self, capacity: int, rng):
        self.capacity = capacity
        self.rng = rng
        self._data: list = []
        self._pos = 0

    def push(self, obs, action, reward, next_obs, done):
        item = (obs, int(action), float(reward), next_obs, bool(done))
        if len(self._data) < self.capacity:
            self._data.append(item)
        else:
            self._data[self._pos] = item
            self._pos = (self._pos + 1) % self.capacity

    def __len__(self):
        return len(self._data)

    def sample(self, batch_size: int):
        if len(self._data) < batch_size:
            raise ValueError("buffer smaller than batch size")
        idx = self.rng.integers(len(self._data), size=batch_size)
        obs, actions, rewards, next_obs, dones = zip(*(self._data[i] for i in idx))
        return (
            np.stack(obs),
            np.asarray(actions),
            np.asarray(rewards),
            np.stack(next_obs),
            np.asarray(dones),
        )


def act_epsilon_greedy(qnet: Mlp, obs, eps: float, rng) -> int:
    """Uniform with probability eps, else q-argmax (lowest index wins ties)."""
    n_actions = qnet.dims[-1]
    if rng.random() < eps:
        return int(rng.integers(n_actions))
    q, _ = forward(qnet, obs)
    return int(np.argmax(q))


def compute_returns(rewards, gamma: float, bootstrap_value: float) -> np.ndarray:
    """Discounted returns over an ordered fragment, seeded by the bootstrap."""
    g = float(bootstrap_value)
    out = np.empty(len(rewards))
    for t in range(len(rewards) - 1, -1, -1):
        g = rewards[t] + gamma * g
        out[t] = g
    return out


def fragment_returns(rewards, dones, gamma: float, bootstrap_value: float) -> np.ndarray:
    """compute_returns over a fragment that may span episode boundaries."""
    g = float(bootstrap_value)
    out = np.empty(len(rewards))
    for t in range(len(rewards) - 1, -1, -1):
        if dones[t]:
            g = rewards[t]
        else:
            g = rewards[t] + gamma * g
        out[t] = g
    return out


def advantage(returns, values) -> np.ndarray:
    returns = np.asarray(returns, dtype=float)
    values = np.asarray(values, dtype=float)
    if returns.shape != values.shape:
        raise ValueError("returns/values length mismatch")
    return returns - values


def sample_policy_action(actor: Mlp, obs, rng):
    """Draw an action from the softmax policy; returns (action, log-prob)."""
    probs, cache = forward(actor, obs)
    a = int(rng.choice(len(probs), p=probs / probs.sum()))
    logits = cache[1][0]
    return a, float(log_softmax(logits)[a])


def greedy_policy(qnet: Mlp):
    def policy(obs, rng):
        q, _ = forward(qnet, obs)
        return int(np.argmax(q))

    return policy


def mode_policy(actor: Mlp):
    def policy(obs, rng):
        probs, _ = forward(actor, obs)
        return int(np.argmax(probs))

    return policy


def random_policy(n_actions: int):
    def policy(obs, rng):
        return int(rng.integers(n_actions))

    return policy


class EpisodeRunner:
    """Drives one environment over a path pool, tracking episode statistics.

    `env` is any object with reset(...)/step(action); for the cyber defense
    environment a path is drawn uniformly from the pool at each reset.
    """

    def __init__(self, env, paths=None, rng=None, on_episode_end=None):
        self.env = env
        self.paths = paths
        self.rng = rng
        self.on_episode_end = on_episode_end
        self.episode_return = 0.0
        self.episode_length = 0
        self.obs = self._reset()

    def _reset(self):
        self.episode_return = 0.0
        self.episode_length = 0
        if self.paths is None:
            return self.env.reset()
        path = self.paths[int(self.rng.integers(len(self.paths)))]
        return self.env.reset(path)

    def step(self, action: int):
        """Apply an action; auto-resets on episode end. Returns the StepOutcome."""
        result = self.env.step(action)
        self.episode_return += result.reward
        self.episode_length += 1
        if result.done:
            if self.on_episode_end is not None:
                win = result.info.get("outcome") in (DEFENDER_WIN, TRUNCATED)
                self.on_episode_end(
                    win, self.episode_return, self.episode_length, result.info
                )
            self.obs = self._reset()
        else:
            self.obs = result.observation
        return result
