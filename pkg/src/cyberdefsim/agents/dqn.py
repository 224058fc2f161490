"""Q-learning agent: replay buffer, target network, optional double-Q targets."""

from __future__ import annotations

import numpy as np

from ..neural_net import (
    LINEAR,
    Mlp,
    OptimizerState,
    apply_update,
    backward,
    forward,
    init_mlp,
)
from .common import HyperParams, ReplayBuffer, act_epsilon_greedy, epsilon


def dqn_targets(qnet: Mlp, target_net: Mlp, rewards, next_obs, dones,
                gamma: float, double: bool) -> np.ndarray:
    """Bootstrap targets for a batch; terminal transitions take the raw reward."""
    q_target, _ = forward(target_net, next_obs)
    if double:
        q_online, _ = forward(qnet, next_obs)
        pick = np.argmax(q_online, axis=1)
    else:
        pick = np.argmax(q_target, axis=1)
    bootstrap = q_target[np.arange(len(pick)), pick]
    return np.asarray(rewards) + gamma * bootstrap * (~np.asarray(dones))


def dqn_target(qnet: Mlp, target_net: Mlp, transition, gamma: float,
               double: bool = False) -> float:
    """Single-transition convenience wrapper around dqn_targets."""
    _obs, _action, reward, next_obs, done = transition
    return float(
        dqn_targets(qnet, target_net, [reward], next_obs[None, :], [done],
                    gamma, double)[0]
    )


class DqnAgent:
    """Owns the online/target nets, replay buffer, and update cadence."""

    def __init__(self, obs_dim: int, n_actions: int, hp: HyperParams, seed,
                 hidden=(256, 256), optimizer: str = "adam"):
        seq = np.random.SeedSequence(seed)
        net_seed, buf_seed, act_seed = seq.spawn(3)
        self.hp = hp
        self.qnet = init_mlp([obs_dim, *hidden, n_actions], LINEAR, net_seed)
        self.target_net = self.qnet.copy()
        self.opt = OptimizerState(kind=optimizer, lr=hp.alpha)
        self.buffer = ReplayBuffer(hp.replay_capacity, np.random.default_rng(buf_seed))
        self.act_rng = np.random.default_rng(act_seed)
        self.env_steps = 0
        self.updates = 0

    def act(self, obs) -> int:
        eps = epsilon(self.env_steps, self.hp)
        return act_epsilon_greedy(self.qnet, obs, eps, self.act_rng)

    def greedy(self, obs) -> int:
        q, _ = forward(self.qnet, obs)
        return int(np.argmax(q))

    def observe(self, obs, action, reward, next_obs, done):
        """Record a transition; runs an update every rollout_fragment steps."""
        self.buffer.push(obs, action, reward, next_obs, done)
        self.env_steps += 1
        if (
            self.env_steps % self.hp.rollout_fragment == 0
            and len(self.buffer) >= self.hp.batch_size
        ):
            return self.update()
        return None

    def update(self) -> float:
        return dqn_update(self, self.buffer, self.hp)


def dqn_update(agent: DqnAgent, buffer: ReplayBuffer, hp: HyperParams) -> float:
    """One sampled-batch temporal-difference step; returns the scalar loss."""
    obs, actions, rewards, next_obs, dones = buffer.sample(hp.batch_size)
    targets = dqn_targets(
        agent.qnet, agent.target_net, rewards, next_obs, dones,
        hp.gamma, hp.double_dqn,
    )
    q, cache = forward(agent.qnet, obs)
    taken = q[np.arange(len(actions)), actions]
    err = taken - targets
    loss = float(np.mean(err ** 2))
    grad_out = np.zeros_like(q)
    grad_out[np.arange(len(actions)), actions] = 2.0 * err / len(actions)
    grads = backward(agent.qnet, cache, grad_out)
    apply_update(agent.qnet, agent.opt, grads, direction="descend")
    agent.updates += 1
    if agent.updates % hp.target_sync == 0:
        agent.target_net = agent.qnet.copy()
    return loss


class DqnTrainer:
    """Single-environment training loop driving a DqnAgent."""

    def __init__(self, runner, agent: DqnAgent):
        self.runner = runner
        self.agent = agent

    def run(self, n_steps: int):
        for _ in range(n_steps):
            obs = self.runner.obs
            action = self.agent.act(obs)
            result = self.runner.step(action)
            self.agent.observe(obs, action, result.reward, result.observation,
                               result.done)

    def policy(self):
        from .common import greedy_policy

        return greedy_policy(self.agent.qnet)
