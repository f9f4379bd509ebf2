"""Figure-style probes: impulse responses, parameter sweeps, comparisons.

Each scenario returns CSV text (comment header with the scenario, then a
header row, then data rows) so the CLI can write it straight to disk and
tests can parse it back.
"""

from __future__ import annotations

import io
import math

import numpy as np

from .config import MemoryConfig, slice_tau_centers
from .laplace import impulse_response_probe, padded_tau_grid
from .memory import FRAME_SECONDS, PRESENT_SECONDS, FifoBuffer, derive_decay_rates

__all__ = ["SCENARIOS", "run_scenario"]

# Impulse/decay protocols used by the comparison and sweep scenarios.
COMPARE_IMPULSE_S = PRESENT_SECONDS      # 0.0033 s flash
COMPARE_RECORD_S = 0.9                   # then 0.9 s of decay
SWEEP_IMPULSE_S = FRAME_SECONDS          # one full frame
SWEEP_RECORD_S = 0.5333                  # just past 0.5 s of decay
PROBE_DT = PRESENT_SECONDS

SWEEP_VALUES = {
    "tau0": [1.0 / 60.0, 1.0 / 30.0, 1.0 / 15.0],
    "k": [2, 4, 8],
    "c": [0.05, 0.1, 0.2],
}
SWEEP_SLICES = 3  # early slices carry the visible effect


def _grid_for(mem: MemoryConfig, n_slices: int | None = None):
    n = mem.n_slices if n_slices is None else n_slices
    return padded_tau_grid(
        mem.tau0, mem.c, mem.k, [mem.slice_stride * j for j in range(n)]
    )


def _write_rows(out: io.StringIO, columns, rows) -> None:
    out.write(",".join(columns) + "\n")
    for row in rows:
        out.write(",".join(str(v) for v in row) + "\n")


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def probe_impulse(mem: MemoryConfig) -> str:
    """Calibrated slice activations through time after a brief unit flash."""
    grid = _grid_for(mem)
    times, acts = impulse_response_probe(
        grid, COMPARE_IMPULSE_S, COMPARE_RECORD_S, PROBE_DT, alpha=mem.alpha
    )
    taus = grid.slice_tau_stars
    out = io.StringIO()
    out.write(f"# scenario=impulse impulse_s={COMPARE_IMPULSE_S:.6g} dt={PROBE_DT:.6g}\n")
    rows = (
        (_fmt(t), j, _fmt(taus[j]), _fmt(acts[i, j]))
        for i, t in enumerate(times)
        for j in range(len(taus))
    )
    _write_rows(out, ["time_s", "slice_index", "tau_star_s", "activation"], rows)
    return out.getvalue()


def probe_sweep(param: str, mem: MemoryConfig) -> str:
    """Impulse responses of the first few slices while one parameter varies."""
    if param not in SWEEP_VALUES:
        raise ValueError(f"unknown sweep parameter {param!r}; choose from {sorted(SWEEP_VALUES)}")
    out = io.StringIO()
    out.write(
        f"# scenario=sweep-{param} impulse_s={SWEEP_IMPULSE_S:.6g} dt={PROBE_DT:.6g}\n"
    )
    rows = []
    for value in SWEEP_VALUES[param]:
        swept = MemoryConfig(**{**mem.__dict__, param: value})
        grid = _grid_for(swept, n_slices=SWEEP_SLICES)
        times, acts = impulse_response_probe(
            grid, SWEEP_IMPULSE_S, SWEEP_RECORD_S, PROBE_DT, alpha=swept.alpha
        )
        taus = grid.slice_tau_stars
        for i, t in enumerate(times):
            for j in range(len(taus)):
                rows.append((param, _fmt(value), _fmt(t), j, _fmt(taus[j]), _fmt(acts[i, j])))
    _write_rows(
        out, ["param", "value", "time_s", "slice_index", "tau_star_s", "activation"], rows
    )
    return out.getvalue()


def probe_compare(mem: MemoryConfig) -> str:
    """All three representations given the same single flash.

    The reconstruction and the raw decay traces are recorded continuously;
    the frame buffer is recorded at its native frame boundaries, where each
    slot traces out one unit boxcar of width one frame.
    """
    out = io.StringIO()
    out.write(
        f"# scenario=compare-representations impulse_s={COMPARE_IMPULSE_S:.6g} "
        f"record_s={COMPARE_RECORD_S:.6g}\n"
    )
    rows = []
    taus = np.asarray(slice_tau_centers(mem))

    grid = _grid_for(mem)
    times, acts = impulse_response_probe(
        grid, COMPARE_IMPULSE_S, COMPARE_RECORD_S, PROBE_DT, alpha=mem.alpha
    )
    for i, t in enumerate(times):
        for j in range(grid.n_slices):
            rows.append(
                ("sith", _fmt(t), j, _fmt(grid.slice_tau_stars[j]), _fmt(acts[i, j]))
            )

    # Raw decay traces, matched so each rate halves at the same tau*.
    rates = derive_decay_rates(taus)
    drive = (1.0 - np.exp(-rates * COMPARE_IMPULSE_S)) / rates
    for t in times:
        if t < COMPARE_IMPULSE_S:
            act = (1.0 - np.exp(-rates * t)) / rates
        else:
            act = drive * np.exp(-rates * (t - COMPARE_IMPULSE_S))
        for j, s in enumerate(rates):
            rows.append(("expdecay", _fmt(t), j, _fmt(math.log(2.0) / s), _fmt(act[j])))

    buf = FifoBuffer(mem.n_slices, 1)
    n_frames = int(round(COMPARE_RECORD_S / FRAME_SECONDS))
    for frame in range(n_frames + 1):
        buf.observe(np.array([1.0 if frame == 0 else 0.0]))
        col = buf.render()[:, 0]
        t = frame * FRAME_SECONDS
        for j in range(mem.n_slices):
            # Rows are oldest first; report each slot's age center.
            age = (mem.n_slices - 1 - j) * FRAME_SECONDS
            rows.append(("buffer", _fmt(t), j, _fmt(age), _fmt(col[j])))

    _write_rows(
        out, ["representation", "time_s", "slice_index", "tau_star_s", "activation"], rows
    )
    return out.getvalue()


SCENARIOS = {
    "impulse": probe_impulse,
    "sweep-tau0": lambda mem: probe_sweep("tau0", mem),
    "sweep-k": lambda mem: probe_sweep("k", mem),
    "sweep-c": lambda mem: probe_sweep("c", mem),
    "compare-representations": probe_compare,
}


def run_scenario(name: str, mem: MemoryConfig | None = None) -> str:
    if name not in SCENARIOS:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    return SCENARIOS[name](mem or MemoryConfig())
