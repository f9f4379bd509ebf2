"""Scale-invariant temporal history working memory for Q-learning agents.

A logarithmically compressed memory of past input, built from a bank of
leaky integrators and an approximate inverse Laplace transform, used as a
drop-in replacement for FIFO frame buffers and exponentially decaying
feature traces. Includes the Catch / Hidden Catch environment, a
from-scratch dense Q-network with Adagrad and full-game experience replay,
and a harness that trains and compares the three representations.
"""

from .catch import CatchConfig, CatchEnv, apply_mask, random_policy_baseline
from .config import ExperimentConfig, MemoryConfig, build_memory
from .harness import count_parameters, evaluate, run_experiment, train_single_run
from .laplace import (
    LaplaceEnsemble,
    TauGrid,
    build_tau_grid,
    calibrate_gains,
    impulse_response_probe,
    invert_post,
    padded_tau_grid,
)
from .memory import ExpDecaySet, FifoBuffer, SithMemory, WorkingMemory, derive_decay_rates
from .qnet import QNetwork, ReplayStore, TrainConfig, epsilon_greedy, init_network

__version__ = "0.1.0"
