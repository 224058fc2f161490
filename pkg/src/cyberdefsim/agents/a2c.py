"""Synchronous advantage actor-critic over fixed-length worker fragments."""

from __future__ import annotations

import numpy as np

from ..neural_net import (
    LINEAR,
    SOFTMAX,
    Mlp,
    OptimizerState,
    apply_update,
    backward,
    clip_gradients,
    forward,
    init_mlp,
    log_softmax,
)
from .common import HyperParams, advantage, fragment_returns, sample_policy_action


def make_actor_critic(obs_dim: int, n_actions: int, seed, hidden=(256, 256)):
    seq = seed if isinstance(seed, np.random.SeedSequence) \
        else np.random.SeedSequence(seed)
    actor_seed, critic_seed = seq.spawn(2)
    actor = init_mlp([obs_dim, *hidden, n_actions], SOFTMAX, actor_seed)
    critic = init_mlp([obs_dim, *hidden, 1], LINEAR, critic_seed)
    return actor, critic


def a2c_losses(actor: Mlp, critic: Mlp, obs, actions, returns, hp: HyperParams):
    """Scalar (policy_loss, value_loss, entropy) for a prepared batch."""
    obs = np.asarray(obs, dtype=float)
    actions = np.asarray(actions)
    returns = np.asarray(returns, dtype=float)
    probs, a_cache = forward(actor, obs)
    logits = a_cache[1]
    logp = log_softmax(logits)
    values, _ = forward(critic, obs)
    adv = advantage(returns, values[:, 0])
    ent = -np.sum(probs * logp, axis=1)
    chosen_logp = logp[np.arange(len(actions)), actions]
    policy_loss = float(-np.mean(chosen_logp * adv) - hp.entropy_coef * np.mean(ent))
    value_loss = float(np.mean((returns - values[:, 0]) ** 2))
    return policy_loss, value_loss, float(np.mean(ent))


def a2c_gradients(actor: Mlp, critic: Mlp, obs, actions, returns, hp: HyperParams):
    """Gradients of the actor/critic losses, clipped; plus loss statistics."""
    obs = np.asarray(obs, dtype=float)
    actions = np.asarray(actions)
    returns = np.asarray(returns, dtype=float)
    n = len(actions)

    values, c_cache = forward(critic, obs)
    adv = advantage(returns, values[:, 0])

    probs, a_cache = forward(actor, obs)
    logits = a_cache[1]
    logp = log_softmax(logits)
    ent = -np.sum(probs * logp, axis=1)

    # d/dlogits of -mean(logpi(a) * A) - coef * mean(H)
    grad_logits = probs.copy()
    grad_logits[np.arange(n), actions] -= 1.0
    grad_logits *= adv[:, None]
    grad_logits += hp.entropy_coef * probs * (logp + ent[:, None])
    grad_logits /= n
    actor_grads = backward(actor, a_cache, grad_logits, from_logits=True)

    grad_v = (2.0 * (values[:, 0] - returns) / n)[:, None]
    critic_grads = backward(critic, c_cache, grad_v)

    clip_gradients(actor_grads, hp.grad_clip)
    clip_gradients(critic_grads, hp.grad_clip)

    chosen_logp = logp[np.arange(n), actions]
    stats = {
        "policy_loss": float(-np.mean(chosen_logp * adv)
                             - hp.entropy_coef * np.mean(ent)),
        "value_loss": float(np.mean((returns - values[:, 0]) ** 2)),
        "entropy": float(np.mean(ent)),
    }
    return actor_grads, critic_grads, stats


def collect_fragment(runner, actor: Mlp, critic: Mlp, hp: HyperParams, rng):
    """Roll out rollout_fragment steps; returns arrays plus discounted returns."""
    obs_l, act_l, rew_l, done_l, logp_l = [], [], [], [], []
    for _ in range(hp.rollout_fragment):
        obs = runner.obs
        action, logp = sample_policy_action(actor, obs, rng)
        result = runner.step(action)
        obs_l.append(obs)
        act_l.append(action)
        rew_l.append(result.reward)
        done_l.append(result.done)
        logp_l.append(logp)
    if done_l[-1]:
        bootstrap = 0.0
    else:
        v, _ = forward(critic, runner.obs)
        bootstrap = float(v[0])
    returns = fragment_returns(rew_l, done_l, hp.gamma, bootstrap)
    return (
        np.stack(obs_l),
        np.asarray(act_l),
        returns,
        np.asarray(logp_l),
    )


class A2CTrainer:
    """num_workers fragment collectors feeding one synchronous learner."""

    def __init__(self, runners, hp: HyperParams, seed,
                 obs_dim=None, n_actions=None, hidden=(256, 256)):
        self.runners = runners
        self.hp = hp
        obs_dim = obs_dim or runners[0].env.observation_dim
        n_actions = n_actions or runners[0].env.action_count
        seq = np.random.SeedSequence(seed)
        net_seed, sample_seed = seq.spawn(2)
        self.actor, self.critic = make_actor_critic(obs_dim, n_actions, net_seed,
                                                    hidden)
        self.actor_opt = OptimizerState(lr=hp.alpha)
        self.critic_opt = OptimizerState(lr=hp.alpha)
        # one action-sampling stream per worker; layout shared with A3C so the
        # single-worker trainers walk identical parameter trajectories
        self.sample_rngs = [
            np.random.default_rng(s) for s in sample_seed.spawn(len(runners))
        ]
        self.env_steps = 0

    def run(self, n_steps: int):
        """Advance in whole synchronization rounds until n_steps are consumed."""
        per_round = self.hp.rollout_fragment * len(self.runners)
        rounds = max(1, int(np.ceil(n_steps / per_round)))
        for _ in range(rounds):
            batches = [
                collect_fragment(r, self.actor, self.critic, self.hp, rng)
                for r, rng in zip(self.runners, self.sample_rngs)
            ]
            obs = np.concatenate([b[0] for b in batches])
            actions = np.concatenate([b[1] for b in batches])
            returns = np.concatenate([b[2] for b in batches])
            a_grads, c_grads, _ = a2c_gradients(
                self.actor, self.critic, obs, actions, returns, self.hp
            )
            apply_update(self.actor, self.actor_opt, a_grads, direction="descend")
            apply_update(self.critic, self.critic_opt, c_grads, direction="descend")
            self.env_steps += per_round

    def policy(self):
        from .common import mode_policy

        return mode_policy(self.actor)
