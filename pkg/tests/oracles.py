"""Independent reference implementations used only by the test suite.

Everything here is written against the problem statement, not against the
package internals, so agreement between the two is meaningful evidence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


# -- brute-force path enumeration --------------------------------------------


def brute_force_paths(doc: dict) -> set[tuple[int, ...]]:
    """Every simple path from a stage-1 technique to a goal technique.

    Iterative stack-based search over the raw graph document; no reliance on
    the package's adjacency representation or ordering.
    """
    adj: dict[int, list[int]] = {}
    goals = set()
    starts = []
    stage = {}
    for t in doc["techniques"]:
        stage[t["id"]] = t["tactic"]
        if t["is_goal"]:
            goals.add(t["id"])
        if t["tactic"] == 1:
            starts.append(t["id"])
    def ref(x):
        if isinstance(x, str) and x.startswith("technique:"):
            return int(x.split(":", 1)[1])
        return x

    for frm, to in doc["edges"]:
        frm = ref(frm)
        if frm == "initiated":
            continue
        adj.setdefault(int(frm), []).append(int(ref(to)))

    found: set[tuple[int, ...]] = set()
    for start in starts:
        stack = [(start, (start,))]
        while stack:
            node, trail = stack.pop()
            if node in goals:
                found.add(trail)
                continue
            for nxt in adj.get(node, []):
                if nxt not in trail:
                    stack.append((nxt, trail + (nxt,)))
    return found


def random_graph_doc(rng: np.random.Generator) -> dict:
    """A random valid small graph document (at most 8 techniques)."""
    n_stages = int(rng.integers(2, 5))
    # at least one technique per stage, at most 8 total
    counts = [1] * n_stages
    budget = 8 - n_stages
    for _ in range(int(rng.integers(0, budget + 1))):
        counts[int(rng.integers(n_stages))] += 1
    techniques = []
    tid = 1
    by_stage: dict[int, list[int]] = {s: [] for s in range(1, n_stages + 1)}
    for s in range(1, n_stages + 1):
        for _ in range(counts[s - 1]):
            techniques.append(
                {"id": tid, "name": f"t{tid}", "tactic": s,
                 "is_goal": s == n_stages}
            )
            by_stage[s].append(tid)
            tid += 1

    edges = [["initiated", t] for t in by_stage[1]]
    for s in range(1, n_stages):
        for t in by_stage[s]:
            # every non-goal technique needs at least one forward edge
            targets = {int(rng.choice(by_stage[s + 1]))}
            # sprinkle extra lateral/forward/backward edges
            candidates = [
                c
                for d in (-1, 0, 1)
                if 1 <= s + d <= n_stages
                for c in by_stage[s + d]
                if c != t and not (s + d == n_stages and d <= 0)
            ]
            for c in candidates:
                if rng.random() < 0.25:
                    targets.add(c)
            edges.extend([t, x] for x in sorted(targets))
    return {
        "tactics": [{"id": s, "name": f"stage{s}"} for s in range(n_stages + 1)],
        "techniques": techniques,
        "edges": edges,
    }


# -- Monte Carlo goal probability ---------------------------------------------


def mc_p_goal(remaining: int, budget: int, rho: float, trials: int,
              seed) -> float:
    """Simulate the attempt process: independent Bernoulli(rho) tries until
    either `remaining` successes (goal) or `budget` failures (stopped).

    The episode is decided within the first remaining+budget-1 draws, so one
    fixed-width uniform matrix covers every trial.
    """
    if remaining == 0:
        return 1.0
    if budget == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    width = remaining + budget - 1
    hits = rng.random((trials, width)) < rho
    successes = hits.cumsum(axis=1)
    # reaching `remaining` successes within the decision window means the
    # goal attempt lands before the budget-th failure
    return float(np.mean(successes[:, -1] >= remaining))


# -- finite-difference gradients ----------------------------------------------


def finite_diff(loss_fn, params: list[np.ndarray], h: float = 1e-5):
    """Central finite differences of a scalar function of the parameter list."""
    grads = [np.zeros_like(p) for p in params]
    for p, g in zip(params, grads):
        flat_p = p.reshape(-1)
        flat_g = g.reshape(-1)
        for i in range(flat_p.size):
            orig = flat_p[i]
            flat_p[i] = orig + h
            up = loss_fn()
            flat_p[i] = orig - h
            down = loss_fn()
            flat_p[i] = orig
            flat_g[i] = (up - down) / (2 * h)
    return grads


def finite_diff_at(loss_fn, param: np.ndarray, flat_index: int,
                   h: float = 1e-5) -> float:
    """Central finite difference of one scalar parameter entry."""
    flat = param.reshape(-1)
    orig = flat[flat_index]
    flat[flat_index] = orig + h
    up = loss_fn()
    flat[flat_index] = orig - h
    down = loss_fn()
    flat[flat_index] = orig
    return (up - down) / (2 * h)


# -- two-state reference MDP and value iteration -------------------------------


@dataclass(frozen=True)
class TwoStateMdpSpec:
    """Deterministic 2-state / 2-action MDP.

    state 0: action 0 -> reward 1, stay;   action 1 -> reward 0, go to 1
    state 1: action 0 -> reward 3, stay;   action 1 -> reward 0, go to 0

    At gamma = 0.8 the optimal policy is (state 0 -> action 1,
    state 1 -> action 0): the myopic reward in state 0 is a trap.
    """

    rewards = ((1.0, 0.0), (3.0, 0.0))
    transitions = ((0, 1), (1, 0))


def value_iteration(spec: TwoStateMdpSpec, gamma: float,
                    tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Returns (optimal state values, optimal greedy policy)."""
    v = np.zeros(2)
    while True:
        q = np.array(
            [
                [spec.rewards[s][a] + gamma * v[spec.transitions[s][a]]
                 for a in range(2)]
                for s in range(2)
            ]
        )
        nv = q.max(axis=1)
        if np.max(np.abs(nv - v)) < tol:
            return nv, q.argmax(axis=1)
        v = nv


@dataclass(frozen=True)
class _MdpStep:
    observation: np.ndarray
    reward: float
    done: bool
    info: dict


class TwoStateMdpEnv:
    """Episodic wrapper over TwoStateMdpSpec with the simulator's step API."""

    observation_dim = 2
    action_count = 2

    def __init__(self, spec: TwoStateMdpSpec, horizon: int, seed):
        self.spec = spec
        self.horizon = horizon
        self.rng = np.random.default_rng(seed)
        self._state = 0
        self._t = 0

    def _obs(self):
        v = np.zeros(2)
        v[self._state] = 1.0
        return v

    def reset(self):
        self._state = int(self.rng.integers(2))
        self._t = 0
        return self._obs()

    def step(self, action: int):
        reward = self.spec.rewards[self._state][action]
        self._state = self.spec.transitions[self._state][action]
        self._t += 1
        done = self._t >= self.horizon
        return _MdpStep(self._obs(), reward, done, {"outcome": "truncated" if done else "ongoing"})
