"""Experiment orchestration: training runs, evaluation, metrics persistence.

A run is one seeded train/eval cycle; an experiment is a set of independent
runs of the same configuration. Every random stream is derived from the
configuration seed and the run index through named SeedSequence children
(network init, game environment, exploration, replay sampling, evaluation),
so runs are reproducible individually and independent of execution order.

Output layout, one directory per run under the experiment directory:
``metrics.csv`` (deterministic; config hash in the header), ``summary.json``
(includes wall-clock), ``checkpoint.bin`` and ``config.snapshot``. A marker
file ``INCOMPLETE`` exists while a run is in progress and is removed on
clean completion. The experiment directory gets an aggregate
``summary.json`` with t-interval confidence bounds over run means.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from .catch import CatchEnv
from .config import ExperimentConfig, build_memory, config_hash, dump_config
from .qnet import (
    GameTrajectory,
    QNetwork,
    ReplayStore,
    epsilon_greedy,
    init_network,
    load_checkpoint,
    replay_session,
    save_checkpoint,
)

__all__ = [
    "ParameterCount",
    "count_parameters",
    "run_seeds",
    "evaluate",
    "evaluate_checkpoint",
    "train_single_run",
    "run_experiment",
    "t_interval",
]

METRICS_SCHEMA = 1
_STREAMS = ("net", "env", "policy", "replay", "eval")


@dataclass(frozen=True)
class ParameterCount:
    weights: int
    biases: int

    @property
    def total(self) -> int:
        return self.weights + self.biases


def count_parameters(S: int, N: int) -> ParameterCount:
    """Learnable parameters of the [S*N, S*N, S*N, 3] network.

    Two square hidden blocks dominate, so weights grow quadratically in N
    while the representation itself only adds slices linearly.
    """
    if S < 1 or N < 1:
        raise ValueError(f"S and N must be >= 1, got S={S}, N={N}")
    d = S * N
    return ParameterCount(weights=2 * d * d + 3 * d, biases=2 * d + 3)


def run_seeds(config_seed: int, run_index: int) -> dict[str, np.random.SeedSequence]:
    """Named independent seed streams for one run."""
    root = np.random.SeedSequence([int(config_seed), int(run_index)])
    return dict(zip(_STREAMS, root.spawn(len(_STREAMS))))


def _greedy_actions(q: np.ndarray) -> np.ndarray:
    return np.argmax(q, axis=1)  # first max wins: ties go to the lowest index


def evaluate(
    net: QNetwork,
    cfg: ExperimentConfig,
    n_games: int,
    seed,
) -> np.ndarray:
    """Greedy play over n_games fresh games; returns per-game scores.

    Games of a given ball count all span the same number of frames, so they
    are advanced in lockstep and the network forward pass is batched across
    games. Per-game results are identical to playing them one at a time.
    """
    if n_games < 1:
        raise ValueError(f"n_games must be >= 1, got {n_games}")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = ss.spawn(n_games)
    n_features = cfg.env.n_features
    envs = [CatchEnv(cfg.env, s) for s in children]
    memories = [build_memory(cfg.memory, n_features) for _ in range(n_games)]
    X = np.empty((n_games, n_features * cfg.memory.n_slices))
    for i, (env, mem) in enumerate(zip(envs, memories)):
        mem.observe(env.reset())
        X[i] = mem.render_flat()
    done = False
    while not done:
        actions = _greedy_actions(net.forward(X))
        for i, (env, mem) in enumerate(zip(envs, memories)):
            obs, _, _, game_done = env.step(int(actions[i]))
            mem.observe(obs)
            X[i] = mem.render_flat()
        done = game_done
    assert all(env.state.game_done for env in envs)
    return np.array([env.state.score for env in envs], dtype=np.float64)


def evaluate_checkpoint(path, n_games: int, seed, env_overrides: dict | None = None):
    """Load a checkpoint with its embedded config and evaluate it.

    ``env_overrides`` may change environment fields (e.g. mask_rows) while
    keeping the representation the checkpoint was trained with.
    """
    net, extra = load_checkpoint(path)
    if "config" not in extra:
        raise ValueError(f"checkpoint {path} carries no embedded config")
    cfg = ExperimentConfig.from_dict(extra["config"])
    if env_overrides:
        data = cfg.to_dict()
        data["env"].update(env_overrides)
        cfg = ExperimentConfig.from_dict(data)
    expected = cfg.env.n_features * cfg.memory.n_slices
    if net.layer_sizes[0] != expected:
        raise ValueError(
            f"checkpoint input layer {net.layer_sizes[0]} does not match "
            f"configured observation size {expected}"
        )
    return evaluate(net, cfg, n_games, seed), cfg


def _play_training_game(env, memory, net, store, cfg, epsilon, rng_policy, rng_replay):
    """Play one epsilon-greedy game, training once per frame along the way.

    Returns (trajectory, score, mean session loss). The game in progress is
    not replayed; it enters the store only once complete.
    """
    memory.reset()
    memory.observe(env.reset())
    rendered = [memory.render_flat()]
    actions, rewards, dones, losses = [], [], [], []
    game_done = False
    while not game_done:
        q = net.forward(rendered[-1][None, :])[0]
        a = epsilon_greedy(q, epsilon, rng_policy)
        obs, r, _, game_done = env.step(a)
        memory.observe(obs)
        rendered.append(memory.render_flat())
        actions.append(a)
        rewards.append(r)
        dones.append(game_done)
        if len(store):
            losses.append(replay_session(store, net, cfg.train, rng_replay))
    traj = GameTrajectory(
        observations=np.asarray(rendered),
        actions=np.asarray(actions, dtype=np.int64),
        rewards=np.asarray(rewards, dtype=np.float64),
        done=np.asarray(dones, dtype=bool),
    )
    mean_loss = float(np.mean(losses)) if losses else float("nan")
    return traj, env.state.score, mean_loss


def _metrics_header(cfg: ExperimentConfig, run_index: int, seed_entropy) -> str:
    return (
        f"# schema={METRICS_SCHEMA}\n"
        f"# config_sha256={config_hash(cfg)}\n"
        f"# label={cfg.label} run={run_index} seed={seed_entropy}\n"
        "phase,epoch,seed,loss,mean_score,scores\n"
    )


def _metrics_row(phase, epoch, seed_entropy, loss, scores) -> str:
    scores = np.asarray(scores)
    loss_txt = "" if loss is None or np.isnan(loss) else f"{loss:.10g}"
    joined = " ".join(f"{s:g}" for s in scores)
    return f"{phase},{epoch},{seed_entropy},{loss_txt},{scores.mean():.6f},{joined}\n"


def train_single_run(cfg: ExperimentConfig, run_index: int, out_dir) -> dict:
    """Execute one seeded run; returns the per-run summary dict."""
    cfg.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    marker = out / "INCOMPLETE"
    marker.write_text("run in progress\n")
    (out / "config.snapshot").write_text(
        f"# config_sha256={config_hash(cfg)}\n" + dump_config(cfg)
    )

    seeds = run_seeds(cfg.seed, run_index)
    seed_entropy = f"{cfg.seed}.{run_index}"
    rng_policy = np.random.default_rng(seeds["policy"])
    rng_replay = np.random.default_rng(seeds["replay"])
    env = CatchEnv(cfg.env, seeds["env"])
    n_features = cfg.env.n_features
    memory = build_memory(cfg.memory, n_features)
    net = init_network(n_features, cfg.memory.n_slices, seeds["net"])
    store = ReplayStore(cfg.train.replay_capacity_games)
    eval_root = seeds["eval"]

    t_start = time.perf_counter()
    lines = [_metrics_header(cfg, run_index, seed_entropy)]
    recent_losses: list[float] = []
    epochs_trained = 0
    early_stopped = False
    for epoch in range(cfg.train.epochs):
        epsilon = cfg.train.epsilon_at(epoch)
        traj, _, loss = _play_training_game(
            env, memory, net, store, cfg, epsilon, rng_policy, rng_replay
        )
        store.add(traj)
        if not np.isnan(loss):
            recent_losses.append(loss)
        epochs_trained = epoch + 1
        if epochs_trained % cfg.train.eval_every == 0:
            scores = evaluate(net, cfg, cfg.train.eval_games, eval_root.spawn(1)[0])
            window = float(np.mean(recent_losses)) if recent_losses else float("nan")
            lines.append(_metrics_row("train", epochs_trained, seed_entropy, window, scores))
            recent_losses.clear()
            stop_at = cfg.train.early_stop_eval_score
            if stop_at is not None and scores.mean() >= stop_at:
                early_stopped = True
                break

    final_scores = evaluate(net, cfg, cfg.train.final_eval_games, eval_root.spawn(1)[0])
    lines.append(_metrics_row("final", epochs_trained, seed_entropy, None, final_scores))
    wall = time.perf_counter() - t_start

    (out / "metrics.csv").write_text("".join(lines))
    save_checkpoint(
        net,
        out / "checkpoint.bin",
        extra={"config": cfg.to_dict(), "run_index": run_index, "epochs_trained": epochs_trained},
    )
    summary = {
        "schema": METRICS_SCHEMA,
        "label": cfg.label,
        "run": run_index,
        "seed": seed_entropy,
        "config_sha256": config_hash(cfg),
        "epochs_trained": epochs_trained,
        "early_stopped": early_stopped,
        "final_mean": float(final_scores.mean()),
        "final_std": float(final_scores.std(ddof=1)) if len(final_scores) > 1 else 0.0,
        "final_games": int(len(final_scores)),
        "wall_clock_s": wall,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    marker.unlink()
    return summary


def t_interval(values, level: float) -> tuple[float, float]:
    """Student-t confidence interval for the mean of independent run means."""
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    m = float(values.mean())
    if n < 2:
        return (m, m)
    half = float(stats.t.ppf(0.5 + level / 2.0, n - 1) * values.std(ddof=1) / np.sqrt(n))
    return (m - half, m + half)


def _run_job(args):
    cfg_dict, run_index, out_dir = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    return train_single_run(cfg, run_index, out_dir)


def run_experiment(cfg: ExperimentConfig, out_root, workers: int = 1) -> dict:
    """Train cfg.runs independent runs and aggregate their final scores."""
    cfg.validate()
    root = Path(out_root)
    root.mkdir(parents=True, exist_ok=True)
    jobs = [
        (cfg.to_dict(), i, str(root / f"run{i}")) for i in range(cfg.runs)
    ]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            summaries = list(pool.map(_run_job, jobs))
    else:
        summaries = [_run_job(j) for j in jobs]

    finals = [s["final_mean"] for s in summaries]
    aggregate = {
        "schema": METRICS_SCHEMA,
        "label": cfg.label,
        "config_sha256": config_hash(cfg),
        "n_runs": len(finals),
        "final_means": finals,
        "mean": float(np.mean(finals)),
        "median": float(np.median(finals)),
        "ci90": t_interval(finals, 0.90),
        "ci95": t_interval(finals, 0.95),
        "runs": summaries,
    }
    (root / "summary.json").write_text(json.dumps(aggregate, indent=2) + "\n")
    return aggregate
