"""Dense Q-network, Adagrad optimizer, and full-game experience replay.

The network is a fixed four-layer stack: input of size S*N (N memory
slices of S features each), two rectified-linear hidden layers of the same
size, and a linear 3-unit output scoring the actions left, right and noop.
Training minimizes the squared error between the taken action's Q-value
and its one-step bootstrap target; the other two outputs receive no
gradient. All parameters and state are float64.

Replay stores whole games. Observations enter the store already rendered
by the working memory that the agent plays with, so replayed experience is
replayed under the same representation it was gathered with.
"""

from __future__ import annotations

import io
import json
import math
from collections import deque
from dataclasses import dataclass, field, asdict

import numpy as np

__all__ = [
    "TrainConfig",
    "QNetwork",
    "GameTrajectory",
    "ReplayStore",
    "init_network",
    "q_targets",
    "replay_session",
    "epsilon_greedy",
    "save_checkpoint",
    "load_checkpoint",
]

CHECKPOINT_VERSION = 1


@dataclass
class TrainConfig:
    gamma: float = 0.9
    lr: float = 0.01
    adagrad_eps: float = 1e-8
    replay_capacity_games: int = 50
    games_per_session: int = 10
    epochs: int = 500
    eval_every: int = 5
    eval_games: int = 100
    final_eval_games: int = 1000
    session_batch_cap: int | None = 256  # None replays sampled games in full
    epsilon_start: float = 1.0
    epsilon_end: float = 0.1
    epsilon_anneal_frac: float = 0.1
    early_stop_eval_score: float | None = None

    def validate(self) -> None:
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must be in [0, 1), got {self.gamma}")
        if self.lr <= 0:
            raise ValueError(f"learning rate must be positive, got {self.lr}")
        if self.adagrad_eps <= 0:
            raise ValueError(f"adagrad_eps must be positive, got {self.adagrad_eps}")
        for name in ("replay_capacity_games", "games_per_session", "epochs",
                     "eval_every", "eval_games", "final_eval_games"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.session_batch_cap is not None and self.session_batch_cap < 1:
            raise ValueError(
                f"session_batch_cap must be >= 1 or None, got {self.session_batch_cap}"
            )
        for name in ("epsilon_start", "epsilon_end"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if not 0.0 <= self.epsilon_anneal_frac <= 1.0:
            raise ValueError("epsilon_anneal_frac must be in [0, 1]")

    def epsilon_at(self, epoch: int) -> float:
        """Linear anneal from epsilon_start to epsilon_end over the first
        epsilon_anneal_frac of the epoch budget, then hold."""
        anneal = max(1, int(round(self.epochs * self.epsilon_anneal_frac)))
        if epoch >= anneal:
            return self.epsilon_end
        t = epoch / anneal
        return self.epsilon_start + t * (self.epsilon_end - self.epsilon_start)


class QNetwork:
    """Dense ReLU network with per-parameter Adagrad accumulators."""

    def __init__(self, layer_sizes, weights, biases, acc_w, acc_b):
        self.layer_sizes = list(layer_sizes)
        self.weights = weights
        self.biases = biases
        self.acc_w = acc_w
        self.acc_b = acc_b

    @classmethod
    def random(cls, layer_sizes, rng) -> "QNetwork":
        """Fan-in-scaled symmetric uniform weights, zero biases."""
        sizes = list(layer_sizes)
        if len(sizes) < 2 or any(s < 1 for s in sizes):
            raise ValueError(f"bad layer sizes {sizes}")
        weights, biases, acc_w, acc_b = [], [], [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            limit = math.sqrt(6.0 / fan_in)
            weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
            acc_w.append(np.zeros((fan_in, fan_out)))
            acc_b.append(np.zeros(fan_out))
        return cls(sizes, weights, biases, acc_w, acc_b)

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def num_params(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def forward(self, X: np.ndarray) -> np.ndarray:
        """Q-values for a batch of observations, shape (batch, 3)."""
        return self._forward_cached(np.atleast_2d(X))[0]

    def _forward_cached(self, X):
        if X.shape[1] != self.layer_sizes[0]:
            raise ValueError(
                f"observation length {X.shape[1]} != input layer {self.layer_sizes[0]}"
            )
        acts = [X]
        h = X
        last = self.n_layers - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ W + b
            if i < last:
                np.maximum(h, 0.0, out=h)
            acts.append(h)
        return h, acts

    def loss_and_grads(self, X, actions, targets):
        """Mean squared error on the taken actions and its gradients.

        loss = mean_b (Q[b, a_b] - y_b)^2. Returns (loss, grads_w, grads_b).
        """
        X = np.atleast_2d(X)
        actions = np.asarray(actions)
        targets = np.asarray(targets, dtype=np.float64)
        batch = X.shape[0]
        q, acts = self._forward_cached(X)
        rows = np.arange(batch)
        err = q[rows, actions] - targets
        loss = float(np.mean(err**2))

        delta = np.zeros_like(q)
        delta[rows, actions] = 2.0 * err / batch
        grads_w = [None] * self.n_layers
        grads_b = [None] * self.n_layers
        for i in range(self.n_layers - 1, -1, -1):
            grads_w[i] = acts[i].T @ delta
            grads_b[i] = delta.sum(axis=0)
            if i > 0:
                delta = delta @ self.weights[i].T
                delta[acts[i] <= 0.0] = 0.0  # ReLU gate
        return loss, grads_w, grads_b

    def adagrad_update(self, grads_w, grads_b, lr: float, eps: float) -> None:
        """acc += g^2; param -= lr * g / (sqrt(acc) + eps), per parameter."""
        for g in grads_w + grads_b:
            if not np.all(np.isfinite(g)):
                raise FloatingPointError("non-finite gradient: training diverged")
        for W, g, a in zip(self.weights, grads_w, self.acc_w):
            a += g**2
            W -= lr * g / (np.sqrt(a) + eps)
        for b, g, a in zip(self.biases, grads_b, self.acc_b):
            a += g**2
            b -= lr * g / (np.sqrt(a) + eps)


def init_network(S: int, N: int, seed) -> QNetwork:
    """The Catch network: [S*N, S*N, S*N, 3] with seeded initialization."""
    if S < 1 or N < 1:
        raise ValueError(f"S and N must be >= 1, got S={S}, N={N}")
    rng = np.random.default_rng(seed)
    d = S * N
    return QNetwork.random([d, d, d, 3], rng)


@dataclass(frozen=True)
class GameTrajectory:
    """One complete game under a fixed representation.

    ``observations`` holds the rendered frames (T, D); transition t pairs
    observations[t] with observations[t+1], so there are T-1 transitions.
    Arrays are frozen read-only when the trajectory enters the store.
    """

    observations: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    done: np.ndarray

    def __post_init__(self):
        T = len(self.observations)
        if not (len(self.actions) == len(self.rewards) == len(self.done) == T - 1):
            raise ValueError("trajectory arrays disagree on transition count")

    @property
    def n_transitions(self) -> int:
        return len(self.actions)

    def freeze(self) -> "GameTrajectory":
        for arr in (self.observations, self.actions, self.rewards, self.done):
            arr.flags.writeable = False
        return self


class ReplayStore:
    """Ring buffer of complete game trajectories."""

    def __init__(self, capacity_games: int):
        if capacity_games < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity_games}")
        self.capacity = int(capacity_games)
        self._games: deque[GameTrajectory] = deque(maxlen=self.capacity)

    def add(self, trajectory: GameTrajectory) -> None:
        self._games.append(trajectory.freeze())

    def __len__(self) -> int:
        return len(self._games)

    def sample_games(self, n: int, rng) -> list[GameTrajectory]:
        """Up to n distinct stored games, uniformly without replacement."""
        if not self._games:
            raise ValueError("replay store is empty")
        n = min(n, len(self._games))
        idx = rng.choice(len(self._games), size=n, replace=False)
        return [self._games[i] for i in idx]


def q_targets(net: QNetwork, rewards, next_obs, done, gamma: float) -> np.ndarray:
    """One-step bootstrap targets: y = r, or r + gamma * max_a Q(s', a)."""
    rewards = np.asarray(rewards, dtype=np.float64)
    done = np.asarray(done, dtype=bool)
    y = rewards.copy()
    live = ~done
    if np.any(live):
        q_next = net.forward(np.atleast_2d(next_obs)[live])
        y[live] += gamma * q_next.max(axis=1)
    return y


def replay_session(store: ReplayStore, net: QNetwork, cfg: TrainConfig, rng) -> float:
    """One training session: replay a sample of stored games, take one step.

    Gathers every transition of up to ``games_per_session`` distinct games,
    optionally subsampled down to ``session_batch_cap`` transitions, then
    performs a single batched squared-error Adagrad step against targets
    computed with the current network. Returns the pre-update loss.
    """
    games = store.sample_games(cfg.games_per_session, rng)
    obs = np.concatenate([g.observations[:-1] for g in games])
    nxt = np.concatenate([g.observations[1:] for g in games])
    actions = np.concatenate([g.actions for g in games])
    rewards = np.concatenate([g.rewards for g in games])
    done = np.concatenate([g.done for g in games])
    if cfg.session_batch_cap is not None and len(obs) > cfg.session_batch_cap:
        keep = rng.choice(len(obs), size=cfg.session_batch_cap, replace=False)
        obs, nxt, actions, rewards, done = (
            obs[keep], nxt[keep], actions[keep], rewards[keep], done[keep],
        )
    y = q_targets(net, rewards, nxt, done, cfg.gamma)
    loss, gw, gb = net.loss_and_grads(obs, actions, y)
    net.adagrad_update(gw, gb, cfg.lr, cfg.adagrad_eps)
    return loss


def epsilon_greedy(qvals: np.ndarray, epsilon: float, rng) -> int:
    """Uniform action with probability epsilon, else argmax with ties going
    to the lowest action index."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(len(qvals)))
    return int(np.argmax(qvals))


def save_checkpoint(net: QNetwork, path, extra: dict | None = None) -> None:
    """Versioned binary dump of sizes, weights, biases and accumulators."""
    arrays = {
        "version": np.array(CHECKPOINT_VERSION),
        "layer_sizes": np.array(net.layer_sizes),
        "extra_json": np.frombuffer(
            json.dumps(extra or {}).encode("utf-8"), dtype=np.uint8
        ),
    }
    for i in range(net.n_layers):
        arrays[f"W{i}"] = net.weights[i]
        arrays[f"b{i}"] = net.biases[i]
        arrays[f"accW{i}"] = net.acc_w[i]
        arrays[f"accb{i}"] = net.acc_b[i]
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path) -> tuple[QNetwork, dict]:
    with np.load(path) as data:
        version = int(data["version"])
        if version != CHECKPOINT_VERSION:
            raise ValueError(
                f"checkpoint version {version} not supported (expected {CHECKPOINT_VERSION})"
            )
        sizes = data["layer_sizes"].tolist()
        n_layers = len(sizes) - 1
        weights = [data[f"W{i}"] for i in range(n_layers)]
        biases = [data[f"b{i}"] for i in range(n_layers)]
        acc_w = [data[f"accW{i}"] for i in range(n_layers)]
        acc_b = [data[f"accb{i}"] for i in range(n_layers)]
        extra = json.loads(bytes(data["extra_json"]).decode("utf-8"))
    return QNetwork(sizes, weights, biases, acc_w, acc_b), extra
