"""Experiment orchestration: training runs, batch metrics, evaluation, sweeps."""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .adversary import AdversaryProfile, profile_by_name
from .agents.a2c import A2CTrainer
from .agents.a3c import A3CTrainer
from .agents.common import (
    EpisodeRunner,
    HyperParams,
    greedy_policy,
    mode_policy,
    random_policy,
)
from .agents.dqn import DqnAgent, DqnTrainer
from .agents.ppo import PPOTrainer
from .attack_graph import AttackGraph, load_graph, split_paths
from .defense import DefenseCatalog, load_catalog
from .environment import (
    CyberDefenseEnv,
    DEFENDER_WIN,
    EnvConfig,
    RISK_RESIDUAL,
    RewardModel,
    TRUNCATED,
    best_block_table,
    scripted_best_return,
)
from .neural_net import net_from_dict, net_to_dict

ALGORITHMS = ("dqn", "a2c", "a3c", "ppo")
METRICS_COLUMNS = ("seed", "batch", "episodes", "wins", "dwr", "mean_return",
                   "mean_len")


class ConfigError(ValueError):
    """Bad experiment configuration or referenced file."""


def default_graph_path() -> Path:
    return Path(resources.files("cyberdefsim").joinpath("data/attack_graph.default"))


def default_catalog_path() -> Path:
    return Path(resources.files("cyberdefsim").joinpath("data/defense_catalog.default"))


@dataclass
class ExperimentConfig:
    algorithm: str = "dqn"
    profile: str | dict = "Av1"
    hyperparams: dict = field(default_factory=dict)
    graph: str | None = None
    catalog: str | None = None
    seeds: list[int] = field(default_factory=lambda: [0])
    train_fraction: float = 0.8
    split_seed: int = 0
    output_dir: str = "runs"
    horizon: int = 64
    impact: float = 10.0
    literal_iv: bool = False
    risk_mode: str = "residual"
    eval_episodes: int = 1000
    batch_episodes: int = 200

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        for path in (self.graph, self.catalog):
            if path is not None and not Path(path).exists():
                raise ConfigError(f"referenced file does not exist: {path}")

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    def resolved_profile(self) -> AdversaryProfile:
        if isinstance(self.profile, str):
            return profile_by_name(self.profile)
        return AdversaryProfile(**self.profile)

    def resolved_hp(self) -> HyperParams:
        return HyperParams().with_overrides(**self.hyperparams)

    def load_graph(self) -> AttackGraph:
        return load_graph(self.graph or default_graph_path())

    def load_catalog(self, graph: AttackGraph) -> DefenseCatalog:
        return load_catalog(self.catalog or default_catalog_path(), graph)


def dwr(wins: int, episodes: int) -> float:
    if episodes <= 0:
        raise ValueError("episodes must be positive")
    if not 0 <= wins <= episodes:
        raise ValueError("wins must lie in [0, episodes]")
    return wins / episodes


def mean_reward_percent(mean_return: float, best_return: float) -> float:
    """Reward achieved relative to the ideal stop-everything-immediately episode."""
    if best_return <= 0:
        raise ValueError(
            f"best_return must be positive (got {best_return}); "
            "reward configuration is degenerate"
        )
    return 100.0 * max(0.0, mean_return / best_return)


class BatchRecorder:
    """Aggregates completed episodes into fixed-size batch metric rows."""

    def __init__(self, seed: int, batch_episodes: int, writer=None):
        self.seed = seed
        self.batch_episodes = batch_episodes
        self.writer = writer
        self.rows: list[dict] = []
        self._wins = 0
        self._returns: list[float] = []
        self._lengths: list[int] = []
        self._batch = 0

    def __call__(self, win: bool, episode_return: float, episode_length: int,
                 info: dict):
        self._wins += bool(win)
        self._returns.append(episode_return)
        self._lengths.append(episode_length)
        if len(self._returns) == self.batch_episodes:
            row = {
                "seed": self.seed,
                "batch": self._batch,
                "episodes": self.batch_episodes,
                "wins": self._wins,
                "dwr": self._wins / self.batch_episodes,
                "mean_return": float(np.mean(self._returns)),
                "mean_len": float(np.mean(self._lengths)),
            }
            self.rows.append(row)
            if self.writer is not None:
                self.writer(row)
            self._batch += 1
            self._wins = 0
            self._returns = []
            self._lengths = []


def _format_row(row: dict) -> list[str]:
    return [
        str(row["seed"]),
        str(row["batch"]),
        str(row["episodes"]),
        str(row["wins"]),
        f"{row['dwr']:.6f}",
        f"{row['mean_return']:.6f}",
        f"{row['mean_len']:.6f}",
    ]


def _build_runners(config: ExperimentConfig, graph, catalog, profile, hp,
                   train_paths, seed, on_episode_end):
    n_envs = 1 if config.algorithm == "dqn" else hp.num_workers
    seq = np.random.SeedSequence([seed, 0xE0A])
    env_seeds = seq.spawn(n_envs)
    path_seeds = seq.spawn(n_envs + 1)[n_envs:]  # distinct from env seeds
    runners = []
    for i, env_seed in enumerate(env_seeds):
        env_cfg = EnvConfig(
            graph=graph,
            catalog=catalog,
            profile=profile,
            reward_model=RewardModel(impact=config.impact,
                                     literal_iv=config.literal_iv),
            horizon=config.horizon,
            seed=env_seed,
            risk_mode=config.risk_mode,
        )
        env = CyberDefenseEnv(env_cfg)
        path_rng = np.random.default_rng([i, seed, 0xA17])
        runners.append(
            EpisodeRunner(env, train_paths, path_rng, on_episode_end=on_episode_end)
        )
    return runners


def make_trainer(algorithm: str, runners, hp: HyperParams, seed):
    if algorithm == "dqn":
        agent = DqnAgent(
            runners[0].env.observation_dim, runners[0].env.action_count, hp, seed
        )
        return DqnTrainer(runners[0], agent)
    if algorithm == "a2c":
        return A2CTrainer(runners, hp, seed)
    if algorithm == "a3c":
        return A3CTrainer(runners, hp, seed)
    if algorithm == "ppo":
        return PPOTrainer(runners, hp, seed)
    raise ConfigError(f"unknown algorithm {algorithm!r}")


def _trainer_networks(algorithm: str, trainer) -> dict:
    if algorithm == "dqn":
        return {"qnet": net_to_dict(trainer.agent.qnet)}
    return {
        "actor": net_to_dict(trainer.actor),
        "critic": net_to_dict(trainer.critic),
    }


def save_checkpoint(path, algorithm: str, hp: HyperParams, training_step: int,
                    networks: dict) -> None:
    doc = {
        "algorithm": algorithm,
        "hyperparams": asdict(hp),
        "training_step": training_step,
        "networks": networks,
    }
    Path(path).write_text(json.dumps(doc))


def load_checkpoint(path) -> dict:
    doc = json.loads(Path(path).read_text())
    doc["networks"] = {k: net_from_dict(v) for k, v in doc["networks"].items()}
    return doc


def checkpoint_policy(checkpoint: dict, n_actions: int):
    """Greedy (value) or mode (policy) action rule from a loaded checkpoint."""
    nets = checkpoint["networks"]
    net = nets["qnet"] if checkpoint["algorithm"] == "dqn" else nets["actor"]
    if net.dims[-1] != n_actions:
        raise ConfigError(
            f"checkpoint action space {net.dims[-1]} does not match "
            f"environment ({n_actions})"
        )
    if checkpoint["algorithm"] == "dqn":
        return greedy_policy(net)
    return mode_policy(net)


def split_for_config(config: ExperimentConfig, graph: AttackGraph):
    paths = graph.enumerate_paths()
    return split_paths(paths, config.train_fraction, config.split_seed)


def train(config: ExperimentConfig, run_dir=None) -> Path:
    """Run the configured training for every seed; returns the run directory.

    Outputs: metrics.csv (one row per completed episode batch, per seed) and
    checkpoint-seed<N>.json refreshed at every epoch boundary.
    """
    graph = config.load_graph()
    catalog = config.load_catalog(graph)
    profile = config.resolved_profile()
    hp = config.resolved_hp()
    train_paths, _ = split_for_config(config, graph)
    if not train_paths:
        raise ConfigError("empty training split")

    run_dir = Path(run_dir or config.output_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    metrics_path = run_dir / "metrics.csv"

    with metrics_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_COLUMNS)

        for seed in config.seeds:
            recorder = BatchRecorder(
                seed, config.batch_episodes,
                writer=lambda row: writer.writerow(_format_row(row)),
            )
            runners = _build_runners(
                config, graph, catalog, profile, hp, train_paths, seed, recorder
            )
            trainer = make_trainer(config.algorithm, runners, hp, seed)
            ckpt_path = run_dir / f"checkpoint-seed{seed}.json"
            steps_done = 0
            for _epoch in range(hp.epochs):
                trainer.run(hp.steps_per_epoch)
                steps_done += hp.steps_per_epoch
                save_checkpoint(
                    ckpt_path, config.algorithm, hp, steps_done,
                    _trainer_networks(config.algorithm, trainer),
                )
    return run_dir


def run_policy_episodes(policy, env: CyberDefenseEnv, paths, episodes: int, rng):
    """Roll `episodes` greedy episodes; returns (wins, returns, stop_depths, lens)."""
    wins = 0
    returns, stop_depths, lengths = [], [], []
    for _ in range(episodes):
        path = paths[int(rng.integers(len(paths)))]
        obs = env.reset(path)
        total, steps = 0.0, 0
        while True:
            action = policy(obs, rng)
            result = env.step(action)
            total += result.reward
            steps += 1
            obs = result.observation
            if result.done:
                win = result.info["outcome"] in (DEFENDER_WIN, TRUNCATED)
                wins += win
                stop_depths.append(
                    result.info["stop_depth"] if win else env.graph.goal_tactic
                )
                break
        returns.append(total)
        lengths.append(steps)
    return wins, returns, stop_depths, lengths


@dataclass
class EvalReport:
    episodes: int
    dwr: float
    histogram: dict[int, float]  # stop depth -> fraction (goal depth = loss)
    cumulative_t3: float
    cumulative_t6: float
    mean_return: float
    best_return: float
    mean_reward_pct: float

    def to_text(self) -> str:
        lines = [
            f"episodes:          {self.episodes}",
            f"defense win ratio: {self.dwr:.4f}",
            f"stopped by T3:     {100 * self.cumulative_t3:.1f}%",
            f"stopped by T6:     {100 * self.cumulative_t6:.1f}%",
            f"mean reward:       {self.mean_reward_pct:.1f}% of best "
            f"({self.mean_return:.3f} / {self.best_return:.3f})",
            "stop-depth histogram:",
        ]
        for depth in sorted(self.histogram):
            lines.append(f"  tactic {depth}: {self.histogram[depth]:.4f}")
        return "\n".join(lines)

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["stop_depth", "fraction"])
            for depth in sorted(self.histogram):
                writer.writerow([depth, f"{self.histogram[depth]:.6f}"])
            writer.writerow(["dwr", f"{self.dwr:.6f}"])
            writer.writerow(["cumulative_t3", f"{self.cumulative_t3:.6f}"])
            writer.writerow(["cumulative_t6", f"{self.cumulative_t6:.6f}"])
            writer.writerow(["mean_reward_pct", f"{self.mean_reward_pct:.6f}"])


def evaluate_policy(policy, config: ExperimentConfig, test_paths=None,
                    episodes=None, seed: int = 0) -> EvalReport:
    graph = config.load_graph()
    catalog = config.load_catalog(graph)
    profile = config.resolved_profile()
    if test_paths is None:
        _, test_paths = split_for_config(config, graph)
    episodes = episodes or config.eval_episodes
    env_cfg = EnvConfig(
        graph=graph, catalog=catalog, profile=profile,
        reward_model=RewardModel(impact=config.impact,
                                 literal_iv=config.literal_iv),
        horizon=config.horizon,
        seed=np.random.SeedSequence([seed, 0xE7A]),
        risk_mode=config.risk_mode,
    )
    env = CyberDefenseEnv(env_cfg)
    rng = np.random.default_rng([seed, 0x5EED])
    wins, returns, stop_depths, lengths = run_policy_episodes(
        policy, env, test_paths, episodes, rng
    )
    hist_counts: dict[int, int] = {}
    for d in stop_depths:
        hist_counts[d] = hist_counts.get(d, 0) + 1
    histogram = {d: c / episodes for d, c in sorted(hist_counts.items())}
    cum_t3 = sum(f for d, f in histogram.items() if d <= 3)
    cum_t6 = sum(f for d, f in histogram.items() if d <= 6)
    mean_return = float(np.mean(returns))
    model = RewardModel(impact=config.impact, literal_iv=config.literal_iv)
    if config.risk_mode == RISK_RESIDUAL:
        best_block = best_block_table(catalog, graph)
        best = float(np.mean([
            scripted_best_return(
                p, profile, model,
                residual_rho=(1.0 - best_block[p.steps[0]]) * profile.rho,
            )
            for p in test_paths
        ]))
    else:
        best = float(np.mean([scripted_best_return(p, profile, model)
                              for p in test_paths]))
    return EvalReport(
        episodes=episodes,
        dwr=wins / episodes,
        histogram=histogram,
        cumulative_t3=cum_t3,
        cumulative_t6=cum_t6,
        mean_return=mean_return,
        best_return=best,
        mean_reward_pct=mean_reward_percent(mean_return, best),
    )


def evaluate(checkpoint_path, config: ExperimentConfig, test_paths=None,
             episodes=None, seed: int = 0) -> EvalReport:
    """Greedy/mode evaluation of a checkpoint on the held-out paths."""
    graph = config.load_graph()
    catalog = config.load_catalog(graph)
    checkpoint = load_checkpoint(checkpoint_path)
    policy = checkpoint_policy(checkpoint, len(catalog))
    return evaluate_policy(policy, config, test_paths=test_paths,
                           episodes=episodes, seed=seed)


def random_baseline(config: ExperimentConfig, episodes=None,
                    seed: int = 0) -> EvalReport:
    graph = config.load_graph()
    catalog = config.load_catalog(graph)
    return evaluate_policy(random_policy(len(catalog)), config,
                           episodes=episodes, seed=seed)


def final_dwr(metrics_path, last_n: int = 5) -> float:
    """Mean DWR of each seed's last `last_n` batches, averaged across seeds."""
    rows_by_seed: dict[str, list[float]] = {}
    with Path(metrics_path).open() as fh:
        for row in csv.DictReader(fh):
            rows_by_seed.setdefault(row["seed"], []).append(float(row["dwr"]))
    if not rows_by_seed:
        raise ValueError(f"no completed batches in {metrics_path}")
    return float(
        np.mean([np.mean(v[-last_n:]) for v in rows_by_seed.values()])
    )


def sweep(config: ExperimentConfig, axis: str, values,
          max_workers: int = 2) -> dict:
    """Train once per axis value; rank by final-5-batch mean DWR.

    Runs are launched on a bounded worker pool; each writes to its own
    subdirectory, so the schedule cannot affect the outputs.
    Returns {"axis", "results": [(value, run_dir, final_dwr)], "winner"}.
    """
    if axis not in ("gamma", "alpha"):
        raise ConfigError(f"sweep axis must be gamma or alpha, got {axis!r}")
    values = list(values)
    if not values:
        raise ConfigError("empty sweep axis")
    root = Path(config.output_dir)
    root.mkdir(parents=True, exist_ok=True)
    subs = [
        replace(
            config,
            hyperparams={**config.hyperparams, axis: value},
            output_dir=str(root / f"{axis}-{value}"),
        )
        for value in values
    ]
    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        run_dirs = list(pool.map(train, subs))
    results = [
        (value, str(run_dir), final_dwr(run_dir / "metrics.csv"))
        for value, run_dir in zip(values, run_dirs)
    ]
    winner = max(results, key=lambda r: r[2])[0]
    hp = config.resolved_hp()
    with (root / "sweep_summary.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["gamma", "alpha", "run_dir", "final5_dwr", "winner"])
        for value, run_dir, score in results:
            gamma = value if axis == "gamma" else hp.gamma
            alpha = value if axis == "alpha" else hp.alpha
            writer.writerow(
                [gamma, alpha, run_dir, f"{score:.6f}",
                 "1" if value == winner else "0"]
            )
    return {"axis": axis, "results": results, "winner": winner}
