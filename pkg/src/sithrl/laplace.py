"""Leaky-integrator ensemble with approximate inverse Laplace reconstruction.

For each input feature a bank of leaky integrators

    dF(s)/dt = -s F(s) + f(t)

is driven by the feature's activation f(t). Each unit decays at its own
rate s, so the bank as a whole holds the Laplace transform of the input
history. Applying a discrete Post inversion of order k,

    f~(tau*) = ((-1)^k / k!) * s^(k+1) * d^k F / d s^k,   s = k / tau*,

turns the bank back into a fuzzy estimate of the input as it looked tau*
seconds ago. Reconstruction error grows in proportion to tau*, so laying
the tau* nodes out geometrically, tau*_i = tau0 * (1+c)^i, gives constant
relative resolution over an exponentially long horizon: covering a span T
needs a node count that grows only like log T.

The k-th s-derivative is approximated by k repeated applications of the
three-point first-derivative stencil for non-uniform grids. Each
application consumes one node on each end, so a grid with n nodes supports
reconstruction only at nodes k .. n-1-k, and n must be at least 2k+1.
The stencil underestimates or overestimates amplitude by a fixed factor
that depends only on c and k; per-slice calibration gains normalize the
steady-state response to a constant unit input back to exactly 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "TauGrid",
    "LaplaceEnsemble",
    "build_tau_grid",
    "padded_tau_grid",
    "calibrate_gains",
    "invert_post",
    "impulse_response_probe",
    "nodes_to_cover",
]


class GridError(ValueError):
    """Raised for grid parameters that cannot support the inversion stencil."""


@dataclass(frozen=True)
class TauGrid:
    """Geometric grid of reconstruction offsets tau* and decay rates s.

    tau_stars[i] = tau0 * (1+c)^i and s_values[i] = k / tau_stars[i].
    ``slice_indices`` are the node positions exported to consumers; every
    slice keeps the full 2k+1 stencil inside the grid.
    """

    tau0: float
    c: float
    k: int
    n_nodes: int
    tau_stars: np.ndarray
    s_values: np.ndarray
    slice_indices: tuple[int, ...]

    @property
    def n_slices(self) -> int:
        return len(self.slice_indices)

    @property
    def slice_tau_stars(self) -> np.ndarray:
        return self.tau_stars[list(self.slice_indices)]

    @property
    def slice_s_values(self) -> np.ndarray:
        return self.s_values[list(self.slice_indices)]


def build_tau_grid(
    tau0: float,
    c: float,
    k: int,
    n_nodes: int,
    slice_indices: Sequence[int],
    _exponent_offset: int = 0,
) -> TauGrid:
    """Build a grid whose node i sits at tau* = tau0 * (1+c)^i.

    ``slice_indices`` are physical node indices and must lie in
    [k, n_nodes-1-k] so that the k-fold derivative stencil survives at
    every slice.
    """
    if tau0 <= 0:
        raise GridError(f"tau0 must be positive, got {tau0}")
    if c <= 0:
        raise GridError(f"spacing c must be positive, got {c}")
    if k < 1 or int(k) != k:
        raise GridError(f"approximation order k must be a positive integer, got {k}")
    k = int(k)
    if n_nodes < 2 * k + 1:
        raise GridError(
            f"n_nodes={n_nodes} cannot support order k={k}; need at least {2 * k + 1}"
        )
    indices = tuple(sorted(int(i) for i in slice_indices))
    if not indices:
        raise GridError("at least one slice index is required")
    if len(set(indices)) != len(indices):
        raise GridError(f"duplicate slice indices: {slice_indices}")
    lo, hi = k, n_nodes - 1 - k
    bad = [i for i in indices if not lo <= i <= hi]
    if bad:
        raise GridError(
            f"slice indices {bad} lack stencil support; valid range is [{lo}, {hi}]"
        )

    exponents = np.arange(n_nodes, dtype=np.float64) + _exponent_offset
    tau_stars = tau0 * (1.0 + c) ** exponents
    s_values = k / tau_stars
    tau_stars.flags.writeable = False
    s_values.flags.writeable = False
    return TauGrid(
        tau0=float(tau_stars[0]),
        c=float(c),
        k=k,
        n_nodes=int(n_nodes),
        tau_stars=tau_stars,
        s_values=s_values,
        slice_indices=indices,
    )


def padded_tau_grid(
    tau0: float,
    c: float,
    k: int,
    slice_exponents: Sequence[int],
) -> TauGrid:
    """Build the minimal grid exposing slices at tau* = tau0 * (1+c)^e.

    ``slice_exponents`` are non-negative exponents relative to ``tau0``
    (the first slice usually sits at exponent 0, i.e. at tau0 itself).
    The grid is padded with k extra nodes on each side so every requested
    slice has full stencil support; physical slice index = exponent + k.
    """
    exps = sorted(int(e) for e in slice_exponents)
    if not exps:
        raise GridError("at least one slice exponent is required")
    if exps[0] < 0:
        raise GridError(f"slice exponents must be non-negative, got {exps}")
    n_nodes = exps[-1] + 2 * int(k) + 1
    return build_tau_grid(
        tau0=tau0,
        c=c,
        k=k,
        n_nodes=n_nodes,
        slice_indices=[e + int(k) for e in exps],
        _exponent_offset=-int(k),
    )


def _stencil_stages(s_values: np.ndarray, k: int):
    """Coefficient triples for k repeated non-uniform first derivatives.

    Stage j maps an array over nodes j..n-1-j to one over nodes
    j+1..n-2-j. Coefficients come from the exact-on-quadratics
    three-point formula with spacings a = x_i - x_{i-1}, b = x_{i+1} - x_i.
    """
    stages = []
    xs = s_values
    for _ in range(k):
        a = xs[1:-1] - xs[:-2]
        b = xs[2:] - xs[1:-1]
        cm = -b / (a * (a + b))
        c0 = (b - a) / (a * b)
        cp = a / (b * (a + b))
        stages.append((cm, c0, cp))
        xs = xs[1:-1]
    return stages


def _kfold_derivative(values: np.ndarray, stages) -> np.ndarray:
    """Apply the repeated stencil along the last axis, shrinking it by 2k."""
    d = values
    for cm, c0, cp in stages:
        d = cm * d[..., :-2] + c0 * d[..., 1:-1] + cp * d[..., 2:]
    return d


def _raw_invert(F: np.ndarray, grid: TauGrid, stages) -> np.ndarray:
    k = grid.k
    dk = _kfold_derivative(F, stages)
    cols = [i - k for i in grid.slice_indices]
    s = grid.slice_s_values
    scale = ((-1.0) ** k / math.factorial(k)) * s ** (k + 1)
    return scale * dk[..., cols]


def calibrate_gains(grid: TauGrid) -> np.ndarray:
    """Per-slice gains normalizing the steady-state unit response to 1.

    The analytic steady state of the ensemble under constant unit input is
    F(s) = 1/s, whose exact inversion is 1 at every tau*. The discrete
    stencil distorts that amplitude by a factor depending only on c and k;
    the gain is its reciprocal.
    """
    stages = _stencil_stages(grid.s_values, grid.k)
    raw = _raw_invert(1.0 / grid.s_values, grid, stages)
    if not np.all(np.isfinite(raw)) or np.any(raw <= 0):
        raise GridError(
            f"non-positive raw steady-state response {raw}; stencil misconfigured"
        )
    gains = 1.0 / raw
    gains.flags.writeable = False
    return gains


class LaplaceEnsemble:
    """Per-feature leaky-integrator bank over a TauGrid.

    State is a matrix F of shape (n_features, n_nodes), advanced with the
    exact constant-input solution of the node ODE over each interval, which
    is unconditionally stable for any step size. ``alpha`` rescales elapsed
    time: running with alpha=2 over dt/2 is bit-identical to alpha=1 over
    dt, which stretches or squeezes the whole temporal representation
    without changing its shape.

    Instances are single-threaded and share no mutable state.
    """

    def __init__(self, grid: TauGrid, n_features: int, alpha: float = 1.0):
        if n_features < 1:
            raise ValueError(f"n_features must be >= 1, got {n_features}")
        if not (alpha > 0 and math.isfinite(alpha)):
            raise ValueError(f"alpha must be positive and finite, got {alpha}")
        self.grid = grid
        self.n_features = int(n_features)
        self.alpha = float(alpha)
        self.F = np.zeros((self.n_features, grid.n_nodes), dtype=np.float64)
        self.gains = calibrate_gains(grid)
        self._stages = _stencil_stages(grid.s_values, grid.k)
        self._step_cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    def reset(self) -> None:
        self.F[:] = 0.0

    def _coefficients(self, dt_eff: float) -> tuple[np.ndarray, np.ndarray]:
        cached = self._step_cache.get(dt_eff)
        if cached is None:
            decay = np.exp(-self.grid.s_values * dt_eff)
            drive = (1.0 - decay) / self.grid.s_values
            if len(self._step_cache) > 64:
                self._step_cache.clear()
            cached = self._step_cache[dt_eff] = (decay, drive)
        return cached

    def step(self, f, dt: float) -> None:
        """Advance by dt seconds with input held constant at f.

        Uses the closed form F <- F e^(-s dt a) + (f/s)(1 - e^(-s dt a)),
        the exact solution of the node ODE, so sign and stability are
        preserved for any dt >= 0.
        """
        if dt < 0:
            raise ValueError(f"dt must be >= 0, got {dt}")
        f = np.asarray(f, dtype=np.float64)
        if f.ndim == 0:
            f = np.full(self.n_features, float(f))
        if f.shape != (self.n_features,):
            raise ValueError(f"input shape {f.shape} != ({self.n_features},)")
        if not np.all(np.isfinite(f)):
            raise ValueError("non-finite input")
        decay, drive = self._coefficients(dt * self.alpha)
        np.multiply(self.F, decay, out=self.F)
        if np.any(f):
            self.F += np.outer(f, drive)

    def present_frame(
        self,
        frame,
        dt_on: float = 1.0 / 300.0,
        dt_off: float = 1.0 / 30.0 - 1.0 / 300.0,
    ) -> None:
        """Present a frame briefly, then decay for the rest of the frame time.

        Defaults expose each frame for 1/300 s and decay for the remaining
        1/30 - 1/300 s, treating consecutive frames as 1/30 s apart.
        """
        self.step(frame, dt_on)
        self.step(np.zeros(self.n_features), dt_off)

    def invert(self, clamp_negative: bool = False) -> np.ndarray:
        """Calibrated reconstruction at the slice nodes.

        Returns shape (n_features, n_slices), slices in grid order
        (ascending tau*). The discrete stencil can produce small negative
        lobes; they are kept by default because the operator is linear,
        and clamped at zero only on request.
        """
        out = _raw_invert(self.F, self.grid, self._stages) * self.gains
        if clamp_negative:
            np.maximum(out, 0.0, out=out)
        return out


def invert_post(ensemble: LaplaceEnsemble, clamp_negative: bool = False) -> np.ndarray:
    """Functional alias for :meth:`LaplaceEnsemble.invert`."""
    return ensemble.invert(clamp_negative=clamp_negative)


def impulse_response_probe(
    grid: TauGrid,
    impulse_duration: float,
    record_duration: float,
    dt: float,
    alpha: float = 1.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Slice activations through time after a unit impulse from rest.

    A single feature is driven at 1 for ``impulse_duration`` seconds and
    then released; calibrated slice activations are recorded every ``dt``
    seconds from t=0 (before the impulse) to ``record_duration``. Returns
    (times, activations) with activations of shape (n_times, n_slices).
    """
    if impulse_duration <= 0 or record_duration <= 0 or dt <= 0:
        raise ValueError("durations and dt must be positive")
    ens = LaplaceEnsemble(grid, n_features=1, alpha=alpha)
    one = np.ones(1)
    zero = np.zeros(1)
    n_samples = int(round(record_duration / dt)) + 1
    times = np.arange(n_samples) * dt
    activations = np.empty((n_samples, grid.n_slices))
    activations[0] = ens.invert()[0]
    t = 0.0
    for j in range(1, n_samples):
        t_next = times[j]
        if t < impulse_duration:
            on = min(impulse_duration, t_next) - t
            ens.step(one, on)
            t += on
        if t_next > t:
            ens.step(zero, t_next - t)
        t = t_next
        activations[j] = ens.invert()[0]
    return times, activations


def nodes_to_cover(tau0: float, horizon: float, c: float) -> int:
    """Nodes needed so the geometric grid starting at tau0 reaches horizon.

    Equals ceil(log(horizon/tau0) / log(1+c)) + 1, evaluated with a small
    relative slack so that horizons landing exactly on a grid node do not
    round up. Grows like log(horizon): the economy of the geometric grid.
    """
    if tau0 <= 0 or horizon <= 0 or c <= 0:
        raise ValueError("tau0, horizon and c must be positive")
    if horizon <= tau0:
        return 1
    ratio = math.log(horizon / tau0) / math.log1p(c)
    return int(math.ceil(ratio - 1e-12)) + 1
