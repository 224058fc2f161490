"""Asynchronous advantage actor-critic: a parameter server plus free-running
workers that submit gradients computed on possibly stale snapshots.

The stock trainer interleaves workers deterministically (collect everywhere,
then apply submissions in a seeded order), which reproduces asynchronous
staleness while keeping runs bit-reproducible. The server itself is
lock-protected, so thread-based workers are also supported.
"""

from __future__ import annotations

import threading

import numpy as np

from ..neural_net import Mlp, OptimizerState, apply_update
from .common import HyperParams
from .a2c import a2c_gradients, collect_fragment, make_actor_critic


class ParameterServer:
    """Authoritative parameter copy with a strictly increasing version."""

    def __init__(self, actor: Mlp, critic: Mlp, hp: HyperParams):
        self._actor = actor
        self._critic = critic
        self._actor_opt = OptimizerState(lr=hp.alpha)
        self._critic_opt = OptimizerState(lr=hp.alpha)
        self._lock = threading.Lock()
        self.version = 0
        self.closed = False

    def snapshot(self):
        """Consistent (version, actor, critic) copy of a single version."""
        with self._lock:
            if self.closed:
                raise RuntimeError("parameter server shut down")
            return self.version, self._actor.copy(), self._critic.copy()

    def submit(self, actor_grads, critic_grads) -> int:
        """Atomically apply one gradient submission; returns the new version.

        Submissions computed against stale snapshots are applied as-is; that
        staleness is the defining behavior of the asynchronous scheme.
        """
        with self._lock:
            if self.closed:
                raise RuntimeError("parameter server shut down")
            apply_update(self._actor, self._actor_opt, actor_grads,
                         direction="descend")
            apply_update(self._critic, self._critic_opt, critic_grads,
                         direction="descend")
            self.version += 1
            return self.version

    def shutdown(self):
        with self._lock:
            self.closed = True


class A3CWorker:
    """Owns one environment runner and local net copies."""

    def __init__(self, runner, hp: HyperParams, rng):
        self.runner = runner
        self.hp = hp
        self.rng = rng

    def compute_submission(self, server: ParameterServer):
        """Pull a snapshot, roll one fragment, return (snapshot_version, grads)."""
        version, actor, critic = server.snapshot()
        obs, actions, returns, _ = collect_fragment(
            self.runner, actor, critic, self.hp, self.rng
        )
        a_grads, c_grads, _ = a2c_gradients(actor, critic, obs, actions,
                                            returns, self.hp)
        return version, a_grads, c_grads


def a3c_worker_step(worker: A3CWorker, server: ParameterServer,
                    hp: HyperParams) -> int:
    """One pull-rollout-submit cycle; returns the server version after apply."""
    _v, a_grads, c_grads = worker.compute_submission(server)
    return server.submit(a_grads, c_grads)


class A3CTrainer:
    def __init__(self, runners, hp: HyperParams, seed,
                 obs_dim=None, n_actions=None, hidden=(256, 256)):
        self.hp = hp
        obs_dim = obs_dim or runners[0].env.observation_dim
        n_actions = n_actions or runners[0].env.action_count
        seq = np.random.SeedSequence(seed)
        net_seed, sample_seed, order_seed = seq.spawn(3)
        worker_seeds = sample_seed.spawn(len(runners))
        actor, critic = make_actor_critic(obs_dim, n_actions, net_seed, hidden)
        self.server = ParameterServer(actor, critic, hp)
        self.workers = [
            A3CWorker(r, hp, np.random.default_rng(s))
            for r, s in zip(runners, worker_seeds)
        ]
        self.order_rng = np.random.default_rng(order_seed)
        self.env_steps = 0
        self.version_history: list[int] = []

    def run(self, n_steps: int):
        per_round = self.hp.rollout_fragment * len(self.workers)
        rounds = max(1, int(np.ceil(n_steps / per_round)))
        for _ in range(rounds):
            # all workers roll out against their own (progressively staler)
            # snapshots, then submissions land in a seeded arrival order
            submissions = []
            for w in self.workers:
                _v, a_grads, c_grads = w.compute_submission(self.server)
                submissions.append((a_grads, c_grads))
            for i in self.order_rng.permutation(len(submissions)):
                version = self.server.submit(*submissions[i])
                self.version_history.append(version)
            self.env_steps += per_round

    @property
    def actor(self) -> Mlp:
        return self.server._actor

    @property
    def critic(self) -> Mlp:
        return self.server._critic

    def policy(self):
        from .common import mode_policy

        return mode_policy(self.actor)
