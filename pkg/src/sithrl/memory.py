"""Working-memory representations that turn a frame stream into agent input.

Three interchangeable memories share one contract: ``observe`` a frame,
``render`` an (n_slices, n_features) activation matrix, ``reset`` to all
zeros. Rendered rows are ordered oldest first (largest tau* / slowest
decay / least recent frame), newest last, and ``render_flat`` flattens
slice-major in that same order for every memory kind, so networks built
for one representation accept any other of equal size.
"""

from __future__ import annotations

import io
import math

import numpy as np

from .laplace import LaplaceEnsemble, TauGrid

__all__ = [
    "WorkingMemory",
    "FifoBuffer",
    "ExpDecaySet",
    "SithMemory",
    "derive_decay_rates",
    "render_csv",
]

FRAME_SECONDS = 1.0 / 30.0
PRESENT_SECONDS = 1.0 / 300.0


class WorkingMemory:
    """Common interface: a frame stream in, an activation matrix out."""

    n_slices: int
    n_features: int

    def observe(self, frame: np.ndarray) -> None:
        raise NotImplementedError

    def render(self) -> np.ndarray:
        raise NotImplementedError

    def reset(self) -> None:
        raise NotImplementedError

    def render_flat(self) -> np.ndarray:
        """Slice-major flattening of render(), oldest slice first."""
        return self.render().ravel()

    def _check_frame(self, frame) -> np.ndarray:
        frame = np.asarray(frame, dtype=np.float64)
        if frame.shape != (self.n_features,):
            raise ValueError(
                f"frame shape {frame.shape} != ({self.n_features},)"
            )
        return frame


class FifoBuffer(WorkingMemory):
    """Verbatim copies of the last n_slices frames; zeros before they exist.

    Perfectly accurate within its span, blind beyond it: any frame older
    than n_slices observations is gone entirely.
    """

    def __init__(self, n_slices: int, n_features: int):
        if n_slices < 1:
            raise ValueError(f"n_slices must be >= 1, got {n_slices}")
        self.n_slices = int(n_slices)
        self.n_features = int(n_features)
        self._slots = np.zeros((self.n_slices, self.n_features))

    def reset(self) -> None:
        self._slots[:] = 0.0

    def observe(self, frame) -> None:
        frame = self._check_frame(frame)
        self._slots[:-1] = self._slots[1:]
        self._slots[-1] = frame

    def render(self) -> np.ndarray:
        return self._slots.copy()


class ExpDecaySet(WorkingMemory):
    """One exponentially decaying trace per slice, all fed the same stream.

    Each slice integrates the input with its own fixed rate s_j using the
    same presentation timing as the Laplace ensemble (brief exposure, then
    decay for the rest of the frame). A slice says that a feature was
    active recently, but with no interior peak there is little to say when:
    after a single impulse every slice is a strictly decreasing function of
    elapsed time.
    """

    def __init__(
        self,
        decay_rates,
        n_features: int,
        dt_on: float = PRESENT_SECONDS,
        dt_off: float = FRAME_SECONDS - PRESENT_SECONDS,
    ):
        rates = np.asarray(decay_rates, dtype=np.float64)
        if rates.ndim != 1 or len(rates) < 1:
            raise ValueError("decay_rates must be a non-empty 1-d sequence")
        if np.any(rates <= 0) or not np.all(np.isfinite(rates)):
            raise ValueError(f"decay rates must be positive and finite: {rates}")
        # Stored slowest first so render() rows go oldest to newest.
        self.rates = np.sort(rates)
        self.n_slices = len(self.rates)
        self.n_features = int(n_features)
        self.dt_on = float(dt_on)
        self.dt_off = float(dt_off)
        self._A = np.zeros((self.n_slices, self.n_features))
        self._decay_on = np.exp(-self.rates * self.dt_on)
        self._decay_off = np.exp(-self.rates * self.dt_off)
        self._drive_on = (1.0 - self._decay_on) / self.rates

    def reset(self) -> None:
        self._A[:] = 0.0

    def observe(self, frame) -> None:
        frame = self._check_frame(frame)
        if not np.all(np.isfinite(frame)):
            raise ValueError("non-finite input")
        self._A *= self._decay_on[:, None]
        self._A += np.outer(self._drive_on, frame)
        self._A *= self._decay_off[:, None]

    def render(self) -> np.ndarray:
        return self._A.copy()


class SithMemory(WorkingMemory):
    """Laplace ensemble plus calibrated inversion, sliced at the grid nodes.

    Rendered rows are the reconstruction at each slice tau*, largest tau*
    first. Unlike the raw decay traces, each slice has a temporal receptive
    field: its activation through time peaks near its own tau*.
    """

    def __init__(
        self,
        grid: TauGrid,
        n_features: int,
        alpha: float = 1.0,
        clamp_negative: bool = False,
        dt_on: float = PRESENT_SECONDS,
        dt_off: float = FRAME_SECONDS - PRESENT_SECONDS,
    ):
        self.grid = grid
        self.ensemble = LaplaceEnsemble(grid, n_features, alpha=alpha)
        self.n_slices = grid.n_slices
        self.n_features = int(n_features)
        self.clamp_negative = bool(clamp_negative)
        self.dt_on = float(dt_on)
        self.dt_off = float(dt_off)

    def reset(self) -> None:
        self.ensemble.reset()

    def observe(self, frame) -> None:
        frame = self._check_frame(frame)
        self.ensemble.present_frame(frame, self.dt_on, self.dt_off)

    def render(self) -> np.ndarray:
        # invert() returns slices ascending in tau*; flip so oldest is first.
        out = self.ensemble.invert(clamp_negative=self.clamp_negative)
        return out.T[::-1].copy()


def derive_decay_rates(tau_slices) -> np.ndarray:
    """Rates at which a pure decay halves at each matching tau*.

    s_j = ln 2 / tau*_j, so a unit activation decays to exactly 0.5 after
    tau*_j seconds.
    """
    taus = np.asarray(tau_slices, dtype=np.float64)
    if np.any(taus <= 0) or not np.all(np.isfinite(taus)):
        raise ValueError(f"tau* values must be positive and finite: {taus}")
    return math.log(2.0) / taus


def render_csv(memory: WorkingMemory) -> str:
    """render() as a CSV matrix snapshot, one row per slice (oldest first)."""
    buf = io.StringIO()
    buf.write(f"# memory={type(memory).__name__}")
    buf.write(f" n_slices={memory.n_slices} n_features={memory.n_features}\n")
    buf.write(",".join(f"f{j}" for j in range(memory.n_features)) + "\n")
    for row in memory.render():
        buf.write(",".join(f"{v:.12g}" for v in row) + "\n")
    return buf.getvalue()
