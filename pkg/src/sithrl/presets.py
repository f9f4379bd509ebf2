"""Named experiment presets shipped as YAML config files.

The preset files mirror the full comparison grid: five representations
(buffer-1, buffer-5, buffer-10, expdecay-5, sith-5) crossed with mask sizes
(0, 1, 2, 4, 8, 16) and ball counts (10 or 1 per game), five runs each.
One-ball presets train ten times the epochs on a ten-times replay capacity
so agents see a comparable number of frames; the two ``-long`` presets give
the exponential-decay representation another tenfold epoch budget.

Files live under ``sithrl/presets/`` and are ordinary experiment configs;
``--preset NAME`` is shorthand for ``--config <that file>``.
"""

from __future__ import annotations

from importlib import resources

from .config import ExperimentConfig, load_config

__all__ = ["preset_names", "load_preset", "preset_path", "GRID_GROUPS"]

REPRESENTATIONS = ("buffer-1", "buffer-5", "buffer-10", "expdecay-5", "sith-5")
MASKS = (0, 1, 2, 4, 8, 16)

GRID_GROUPS = {
    "paper-grid": [f"{rep}-mask{m}" for rep in REPRESENTATIONS for m in MASKS],
    "paper-grid-1ball": [
        f"{rep}-mask{m}-1ball" for rep in REPRESENTATIONS for m in MASKS
    ],
    "visible": [f"{rep}-mask0" for rep in REPRESENTATIONS],
    "mask8": [f"{rep}-mask8" for rep in ("buffer-5", "sith-5")],
    "mask16": [f"{rep}-mask16" for rep in ("buffer-1", "buffer-5", "buffer-10", "sith-5")],
    "expdecay-long": ["expdecay-5-mask16-long", "expdecay-5-mask16-1ball-long"],
}


def _preset_dir():
    return resources.files("sithrl") / "presets"


def preset_names() -> list[str]:
    return sorted(p.name[: -len(".yaml")] for p in _preset_dir().iterdir()
                  if p.name.endswith(".yaml"))


def preset_path(name: str):
    path = _preset_dir() / f"{name}.yaml"
    if not path.is_file():
        raise ValueError(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}"
        )
    return path


def load_preset(name: str) -> ExperimentConfig:
    with resources.as_file(preset_path(name)) as path:
        return load_config(path)
