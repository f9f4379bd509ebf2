"""Catch and Hidden Catch: a falling-ball game on an 18x13 binary board.

A ball spawns at the top, falls one row per frame, and must be caught by a
three-pixel basket on the bottom row that the agent slides left or right.
Catching earns +1, missing costs -1, and a game resolves a fixed number of
balls. Hidden Catch zeroes the ``mask_rows`` rows directly above the bottom
row in the observation, so the ball vanishes mid-flight and reappears only
on the reward frame, turning the game into a POMDP whose temporal gap is
set by the mask size.

Masking touches observations only; rewards and dynamics are computed from
the unmasked state. Given a seed and an action sequence, observation and
reward streams are fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LEFT",
    "RIGHT",
    "NOOP",
    "ACTIONS",
    "CatchConfig",
    "GameState",
    "CatchEnv",
    "apply_mask",
    "random_policy_baseline",
    "tracker_policy",
    "write_trajectory_csv",
]

LEFT, RIGHT, NOOP = 0, 1, 2
ACTIONS = (LEFT, RIGHT, NOOP)
_MOVES = {LEFT: -1, RIGHT: 1, NOOP: 0}

# Balls spawn uniformly over the 12 leftmost columns. Together with the
# 3-wide basket this pins the catch probability of any ball-blind policy at
# exactly 3/12, i.e. random-play means of -5.0 (10 balls) and -0.5 (1 ball).
N_SPAWN_COLS = 12


@dataclass(frozen=True)
class CatchConfig:
    rows: int = 18
    cols: int = 13
    basket_width: int = 3
    balls_per_game: int = 10
    mask_rows: int = 0

    @property
    def n_features(self) -> int:
        return self.rows * self.cols

    def validate(self) -> None:
        if self.rows < 2:
            raise ValueError(f"rows must be >= 2, got {self.rows}")
        if not 1 <= self.basket_width <= self.cols:
            raise ValueError(
                f"basket width {self.basket_width} does not fit {self.cols} columns"
            )
        if not 0 <= self.mask_rows <= self.rows - 2:
            raise ValueError(
                f"mask_rows must be in [0, {self.rows - 2}], got {self.mask_rows}"
            )
        if self.balls_per_game < 1:
            raise ValueError(f"balls_per_game must be >= 1, got {self.balls_per_game}")


@dataclass
class GameState:
    ball_row: int = 0
    ball_col: int = 0
    basket_col: int = 0  # leftmost basket column
    balls_resolved: int = 0
    score: int = 0
    game_done: bool = False
    awaiting_spawn: bool = False


def apply_mask(frame: np.ndarray, mask_rows: int) -> np.ndarray:
    """Zero the mask_rows rows directly above the bottom row.

    The bottom row (basket, and ball at reward time) and the rows above the
    mask stay untouched; mask_rows=0 is the identity.
    """
    rows = frame.shape[0]
    if not 0 <= mask_rows <= rows - 2:
        raise ValueError(f"mask_rows must be in [0, {rows - 2}], got {mask_rows}")
    out = frame.copy()
    if mask_rows:
        out[rows - 1 - mask_rows : rows - 1, :] = 0
    return out


class CatchEnv:
    """One playable game stream; call reset() to start each game.

    The per-step order is: the basket moves (clipped at the walls), then the
    ball advances one row; if it reaches the bottom row the reward is paid
    and the next ball spawns on the following step. This ordering lets the
    final action still affect the catch. A b-ball game spans exactly 18*b
    frames counting the reset frame.
    """

    def __init__(self, config: CatchConfig, seed=None):
        config.validate()
        self.config = config
        self.rng = np.random.default_rng(seed)
        self.state = GameState(game_done=True)

    def reset(self) -> np.ndarray:
        cfg = self.config
        self.state = GameState(
            ball_row=0,
            ball_col=int(self.rng.integers(N_SPAWN_COLS)),
            basket_col=(cfg.cols - cfg.basket_width) // 2,
        )
        return self.observe()

    def basket_cols(self) -> range:
        return range(self.state.basket_col, self.state.basket_col + self.config.basket_width)

    def advance(self, action: int) -> tuple[int, bool, bool]:
        """State transition only: returns (reward, ball_done, game_done)."""
        st = self.state
        cfg = self.config
        if st.game_done:
            raise RuntimeError("step() called on a finished game; reset() first")
        if action not in _MOVES:
            raise ValueError(f"action must be one of {ACTIONS}, got {action}")
        st.basket_col = min(
            max(st.basket_col + _MOVES[action], 0), cfg.cols - cfg.basket_width
        )
        if st.awaiting_spawn:
            st.ball_row = 0
            st.ball_col = int(self.rng.integers(N_SPAWN_COLS))
            st.awaiting_spawn = False
            return 0, False, False
        st.ball_row += 1
        if st.ball_row == cfg.rows - 1:
            caught = st.ball_col in self.basket_cols()
            reward = 1 if caught else -1
            st.score += reward
            st.balls_resolved += 1
            if st.balls_resolved >= cfg.balls_per_game:
                st.game_done = True
            else:
                st.awaiting_spawn = True
            return reward, True, st.game_done
        return 0, False, False

    def step(self, action: int) -> tuple[np.ndarray, int, bool, bool]:
        reward, ball_done, game_done = self.advance(action)
        return self.observe(), reward, ball_done, game_done

    def board(self) -> np.ndarray:
        """Unmasked binary board for the current state.

        A just-resolved ball is still drawn on the bottom row, so the reward
        frame shows where it landed; it disappears when the next one spawns.
        """
        cfg = self.config
        st = self.state
        frame = np.zeros((cfg.rows, cfg.cols))
        frame[cfg.rows - 1, st.basket_col : st.basket_col + cfg.basket_width] = 1.0
        frame[st.ball_row, st.ball_col] = 1.0
        return frame

    def observe(self) -> np.ndarray:
        """Masked, flattened frame of length rows*cols."""
        return apply_mask(self.board(), self.config.mask_rows).ravel()

    def render_ascii(self) -> str:
        chars = {0.0: ".", 1.0: "#"}
        return "\n".join(
            "".join(chars[v] for v in row) for row in self.board()
        )


def random_policy_baseline(config: CatchConfig, n_games: int, seed=None) -> float:
    """Mean score of uniformly random actions over n_games games.

    The chance oracle for the game: no observation is consulted, so frame
    rendering is skipped entirely.
    """
    if n_games < 1:
        raise ValueError(f"n_games must be >= 1, got {n_games}")
    rng = np.random.default_rng(seed)
    env = CatchEnv(config, seed=rng)
    total = 0
    for _ in range(n_games):
        env.reset()
        game_done = False
        while not game_done:
            _, _, game_done = env.advance(int(rng.integers(3)))
        total += env.state.score
    return total / n_games


def tracker_policy(env: CatchEnv) -> int:
    """Follow the true ball column with the basket center; a perfect player
    for fully visible Catch."""
    center = env.state.basket_col + env.config.basket_width // 2
    if env.state.ball_col > center:
        return RIGHT
    if env.state.ball_col < center:
        return LEFT
    return NOOP


def write_trajectory_csv(env: CatchEnv, policy, path) -> int:
    """Play one game logging (step, ball_row, ball_col, basket_col, action,
    reward) per line; returns the final score."""
    env.reset()
    rows = ["step,ball_row,ball_col,basket_col,action,reward"]
    game_done = False
    step = 0
    while not game_done:
        st = env.state
        ball_row, ball_col, basket_col = st.ball_row, st.ball_col, st.basket_col
        action = policy(env)
        _, reward, _, game_done = env.step(action)
        rows.append(
            f"{step},{ball_row},{ball_col},{basket_col},{action},{reward}"
        )
        step += 1
    with open(path, "w") as fh:
        fh.write("\n".join(rows) + "\n")
    return env.state.score
