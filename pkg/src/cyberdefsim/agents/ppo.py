"""Proximal policy optimization with the clipped probability-ratio objective."""

from __future__ import annotations

import numpy as np

from ..neural_net import (
    Mlp,
    OptimizerState,
    apply_update,
    backward,
    clip_gradients,
    forward,
    log_softmax,
)
from .common import HyperParams, advantage
from .a2c import collect_fragment, make_actor_critic


def ppo_loss(actor: Mlp, obs, actions, advantages, old_logp,
             hp: HyperParams) -> float:
    """Scalar clipped-surrogate policy loss (entropy bonus included)."""
    obs = np.asarray(obs, dtype=float)
    actions = np.asarray(actions)
    advantages = np.asarray(advantages, dtype=float)
    old_logp = np.asarray(old_logp, dtype=float)
    probs, cache = forward(actor, obs)
    logp = log_softmax(cache[1])
    new_logp = logp[np.arange(len(actions)), actions]
    ratio = np.exp(new_logp - old_logp)
    clipped = np.clip(ratio, 1 - hp.ppo_clip, 1 + hp.ppo_clip)
    surrogate = np.minimum(ratio * advantages, clipped * advantages)
    ent = -np.sum(probs * logp, axis=1)
    return float(-np.mean(surrogate) - hp.entropy_coef * np.mean(ent))


def ppo_gradients(actor: Mlp, obs, actions, advantages, old_logp,
                  hp: HyperParams):
    obs = np.asarray(obs, dtype=float)
    actions = np.asarray(actions)
    advantages = np.asarray(advantages, dtype=float)
    old_logp = np.asarray(old_logp, dtype=float)
    n = len(actions)

    probs, cache = forward(actor, obs)
    logp = log_softmax(cache[1])
    new_logp = logp[np.arange(n), actions]
    ratio = np.exp(new_logp - old_logp)
    clipped = np.clip(ratio, 1 - hp.ppo_clip, 1 + hp.ppo_clip)
    unclipped_term = ratio * advantages
    clipped_term = clipped * advantages
    # gradient flows through the ratio only where the unclipped branch is taken
    active = unclipped_term <= clipped_term
    ent = -np.sum(probs * logp, axis=1)

    onehot_minus_p = -probs.copy()
    onehot_minus_p[np.arange(n), actions] += 1.0
    coeff = np.where(active, ratio * advantages, 0.0)
    grad_logits = -coeff[:, None] * onehot_minus_p
    grad_logits += hp.entropy_coef * probs * (logp + ent[:, None])
    grad_logits /= n
    grads = backward(actor, cache, grad_logits, from_logits=True)
    clip_gradients(grads, hp.grad_clip)
    return grads


class PPOTrainer:
    """Fragment collection like A2C, then ppo_epochs clipped policy passes."""

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
        self.sample_rng = np.random.default_rng(sample_seed)
        self.env_steps = 0

    def run(self, n_steps: int):
        per_round = self.hp.rollout_fragment * len(self.runners)
        rounds = max(1, int(np.ceil(n_steps / per_round)))
        for _ in range(rounds):
            batches = [
                collect_fragment(r, self.actor, self.critic, self.hp,
                                 self.sample_rng)
                for r in self.runners
            ]
            obs = np.concatenate([b[0] for b in batches])
            actions = np.concatenate([b[1] for b in batches])
            returns = np.concatenate([b[2] for b in batches])
            old_logp = np.concatenate([b[3] for b in batches])

            values, _ = forward(self.critic, obs)
            adv = advantage(returns, values[:, 0])

            for _epoch in range(self.hp.ppo_epochs):
                grads = ppo_gradients(self.actor, obs, actions, adv, old_logp,
                                      self.hp)
                apply_update(self.actor, self.actor_opt, grads,
                             direction="descend")
                values, c_cache = forward(self.critic, obs)
                grad_v = (2.0 * (values[:, 0] - returns) / len(returns))[:, None]
                c_grads = backward(self.critic, c_cache, grad_v)
                clip_gradients(c_grads, self.hp.grad_clip)
                apply_update(self.critic, self.critic_opt, c_grads,
                             direction="descend")
            self.env_steps += per_round

    def policy(self):
        from .common import mode_policy

        return mode_policy(self.actor)
