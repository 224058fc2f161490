"""Unit tests for the episodic simulator, reward model, and risk term."""

import numpy as np
import pytest

from cyberdefsim.adversary import profile_by_name
from cyberdefsim.attack_graph import AttackPath, load_graph
from cyberdefsim.defense import load_catalog
from cyberdefsim.environment import (
    ADVERSARY_WIN,
    CyberDefenseEnv,
    DEFENDER_WIN,
    EnvConfig,
    ONGOING,
    RISK_ACTION_AWARE,
    RISK_INACTIVE,
    RewardModel,
    TRUNCATED,
    best_block_table,
    compute_p_goal,
    observe,
    one_hot,
    reward_of_transition,
    scripted_best_return,
)
from cyberdefsim.harness import default_catalog_path, default_graph_path


@pytest.fixture(scope="module")
def graph():
    return load_graph(default_graph_path())


@pytest.fixture(scope="module")
def catalog(graph):
    return load_catalog(default_catalog_path(), graph)


def make_env(graph, catalog, profile="Av1", **kw):
    cfg = EnvConfig(
        graph=graph, catalog=catalog, profile=profile_by_name(profile), **kw
    )
    return CyberDefenseEnv(cfg)


# -- goal probability ----------------------------------------------------------


def test_p_goal_boundaries():
    path = AttackPath((1, 2, 3))
    assert compute_p_goal(path, 3, 2, 0.8) == 1.0  # already at the goal
    assert compute_p_goal(path, 0, 0, 0.8) == 0.0  # no budget left
    assert 0.0 < compute_p_goal(path, 0, 2, 0.8) < 1.0


def test_p_goal_monotonicity():
    path = AttackPath((1, 2, 3, 4, 5))
    for rho in (0.5, 0.75, 0.9):
        for cursor in range(5):
            values = [compute_p_goal(path, cursor, b, rho) for b in range(8)]
            assert values == sorted(values)  # more budget helps
        for b in (1, 3, 5):
            by_cursor = [compute_p_goal(path, c, b, rho) for c in range(6)]
            assert by_cursor == sorted(by_cursor)  # shorter suffix helps
    for b in (1, 3):
        by_rho = [compute_p_goal(path, 0, b, r) for r in (0.3, 0.6, 0.9)]
        assert by_rho == sorted(by_rho)


def test_p_goal_validation():
    path = AttackPath((1, 2))
    with pytest.raises(ValueError):
        compute_p_goal(path, 3, 1, 0.5)
    with pytest.raises(ValueError):
        compute_p_goal(path, 0, -1, 0.5)


# -- reward model ---------------------------------------------------------------


def test_reward_branches():
    model = RewardModel(impact=10.0)
    assert reward_of_transition(model, 0.0, DEFENDER_WIN, 0.0) == 10.0
    assert reward_of_transition(model, 1.0, ADVERSARY_WIN, 0.0) == -20.0
    assert reward_of_transition(model, 0.5, ONGOING, 0.3) == -5.3
    assert reward_of_transition(model, 0.5, TRUNCATED, 0.3) == -5.3


def test_reward_literal_indicator():
    literal = RewardModel(impact=10.0, literal_iv=True)
    assert reward_of_transition(literal, 0.0, DEFENDER_WIN, 0.0) == 10.0
    assert reward_of_transition(literal, 1.0, ADVERSARY_WIN, 0.0) == -10.0


def test_reward_ongoing_decomposition():
    model = RewardModel(impact=10.0)
    rng = np.random.default_rng(1)
    for _ in range(200):
        p, cost = float(rng.random()), float(rng.random())
        # rounding is sign-symmetric, so the negated reward is exactly the
        # risk-plus-cost total
        assert -reward_of_transition(model, p, ONGOING, cost) == p * 10.0 + cost


from hypothesis import given, strategies as st


@given(
    p=st.floats(0.0, 1.0),
    cost=st.floats(0.0, 100.0),
    impact=st.floats(0.01, 100.0),
)
def test_reward_formula_property(p, cost, impact):
    model = RewardModel(impact=impact)
    assert reward_of_transition(model, p, ONGOING, cost) == -p * impact - cost
    assert (
        reward_of_transition(model, p, DEFENDER_WIN, cost)
        == -p * impact + impact - cost
    )
    assert (
        reward_of_transition(model, p, ADVERSARY_WIN, cost)
        == -p * impact - impact - cost
    )


@given(
    length=st.integers(1, 6),
    budget=st.integers(0, 6),
    rho=st.floats(0.05, 0.97),
)
def test_p_goal_is_probability(length, budget, rho):
    path = AttackPath(tuple(range(length)))
    p = compute_p_goal(path, 0, budget, rho)
    assert 0.0 <= p <= 1.0
    if budget == 0:
        assert p == 0.0
    else:
        assert p < 1.0  # at least one step remains, failure always possible


def test_reward_validation():
    model = RewardModel()
    with pytest.raises(ValueError):
        reward_of_transition(model, 1.5, ONGOING, 0.0)
    with pytest.raises(ValueError):
        reward_of_transition(model, 0.5, ONGOING, -1.0)
    with pytest.raises(ValueError):
        RewardModel(impact=0.0)


# -- observation channel -----------------------------------------------------------


def test_observe_terminated_exact(graph):
    profile = profile_by_name("Av3")
    rng = np.random.default_rng(0)
    for _ in range(50):
        obs = observe(graph.terminated, profile, rng, graph)
        assert int(np.argmax(obs)) == graph.terminated.index


def test_observe_wrong_reports_are_live_states(graph):
    profile = profile_by_name("Av3")
    rng = np.random.default_rng(3)
    state = graph.state_of(5)
    seen_wrong = set()
    for _ in range(3000):
        idx = int(np.argmax(observe(state, profile, rng, graph)))
        if idx != state.index:
            seen_wrong.add(idx)
    assert graph.terminated.index not in seen_wrong
    assert state.index not in seen_wrong
    assert len(seen_wrong) == graph.state_count - 2  # every other live state


# -- episode dynamics ----------------------------------------------------------------


def test_reset_returns_exact_initiated(graph, catalog):
    env = make_env(graph, catalog)
    path = graph.enumerate_paths()[0]
    obs = env.reset(path)
    assert np.array_equal(obs, one_hot(0, graph.state_count))


def test_step_before_reset_and_after_done(graph, catalog):
    env = make_env(graph, catalog)
    with pytest.raises(RuntimeError):
        env.step(0)
    path = graph.enumerate_paths()[0]
    env.reset(path)
    while True:
        result = env.step(0)
        if result.done:
            break
    with pytest.raises(RuntimeError):
        env.step(0)


def test_inactive_defense_lets_skill_decide(graph, catalog):
    # with the null action, a max-skill adversary wins every episode
    env = make_env(graph, catalog, profile="Av3", seed=1)
    path = graph.enumerate_paths()[0]
    outcomes = []
    for _ in range(30):
        env.reset(path)
        while True:
            result = env.step(0)
            if result.done:
                outcomes.append(result.info["outcome"])
                break
    assert outcomes.count(ADVERSARY_WIN) > 25


def test_horizon_truncation(graph, catalog):
    env = make_env(graph, catalog, horizon=3, seed=0)
    path = graph.enumerate_paths()[0]
    env.reset(path)
    done_at = None
    for t in range(1, 10):
        result = env.step(1)  # reactive blocking stalls the attack
        if result.done:
            done_at = t
            break
    assert done_at <= 3
    if result.info["outcome"] == TRUNCATED:
        assert result.info["stop_depth"] == env.graph.tactic_depth(
            env._status.position
        )


def test_defender_win_reward_and_stop_depth(graph, catalog):
    # reactive defense against a weak adversary ends in defender wins
    env = make_env(graph, catalog, profile="Av1", seed=5)
    path = graph.enumerate_paths()[0]
    for _ in range(20):
        env.reset(path)
        while True:
            result = env.step(1)
            if result.done:
                break
        if result.info["outcome"] == DEFENDER_WIN:
            # win payoff minus the executed action's cost
            assert result.reward == pytest.approx(10.0 - result.info["cost"])
            assert 0 <= result.info["stop_depth"] <= graph.goal_tactic
            return
    pytest.fail("no defender win in 20 reactive episodes")


def test_seeded_episode_determinism(graph, catalog):
    path = graph.enumerate_paths()[3]
    traces = []
    for _ in range(2):
        env = make_env(graph, catalog, seed=42)
        env.log_trajectory = True
        env.reset(path)
        while not env.step(2).done:
            pass
        traces.append(env.trajectory)
    assert traces[0] == traces[1]


def test_risk_mode_alters_ongoing_reward(graph, catalog):
    rewards = {}
    for mode in (None, RISK_ACTION_AWARE, RISK_INACTIVE):
        kw = {"risk_mode": mode} if mode else {}
        env = make_env(graph, catalog, profile="Av3", seed=9, **kw)
        env.reset(graph.enumerate_paths()[0])
        rewards[mode or "residual"] = env.step(0).reward
    # with the null action the conditioned readings coincide with raw skill
    # only when no defense could apply; the residual term is never harsher
    assert rewards["residual"] >= rewards[RISK_INACTIVE]
    assert rewards[RISK_ACTION_AWARE] == rewards[RISK_INACTIVE]


def test_best_block_table(graph, catalog):
    table = best_block_table(catalog, graph)
    assert set(table) == set(graph.techniques)
    assert all(0 < v <= 1 for v in table.values())


def test_scripted_best_return_positive(graph, catalog):
    profile = profile_by_name("Av1")
    model = RewardModel(impact=10.0)
    path = graph.enumerate_paths()[0]
    best = scripted_best_return(path, profile, model, residual_rho=0.05)
    assert best > 0


def test_env_config_validation(graph, catalog):
    with pytest.raises(ValueError):
        EnvConfig(graph=graph, catalog=catalog,
                  profile=profile_by_name("Av1"), horizon=0)
    with pytest.raises(ValueError):
        EnvConfig(graph=graph, catalog=catalog,
                  profile=profile_by_name("Av1"), risk_mode="bogus")
