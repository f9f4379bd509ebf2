"""Command line surface: train, eval, probe, sweep, params."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .config import ExperimentConfig, config_hash, load_config
from .harness import count_parameters, evaluate_checkpoint, run_experiment, t_interval
from .presets import GRID_GROUPS, load_preset, preset_names
from .probes import SCENARIOS, run_scenario


def _resolve_config(config_path, preset, seed, runs, faithful, label=None) -> ExperimentConfig:
    if (config_path is None) == (preset is None):
        raise click.UsageError("provide exactly one of --config or --preset")
    cfg = load_config(config_path) if config_path else load_preset(preset)
    if seed is not None:
        cfg.seed = seed
    if runs is not None:
        cfg.runs = runs
    if faithful:
        cfg.train.session_batch_cap = None
    if label:
        cfg.label = label
    cfg.validate()
    return cfg


@click.group()
def main():
    """Temporal working-memory experiments on the Catch game."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), help="Experiment config YAML.")
@click.option("--preset", type=str, help="Named preset (see `sithrl sweep --list`).")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--runs", type=int, default=None, help="Override the number of independent runs.")
@click.option("--out", type=click.Path(), required=True, help="Experiment output directory.")
@click.option("--faithful", is_flag=True, help="Replay sampled games in full (no session batch cap).")
@click.option("--workers", type=int, default=1, show_default=True, help="Parallel run workers.")
def train(config_path, preset, seed, runs, out, faithful, workers):
    """Train and evaluate one experiment (all of its independent runs)."""
    cfg = _resolve_config(config_path, preset, seed, runs, faithful)
    summary = run_experiment(cfg, out, workers=workers)
    click.echo(
        f"{cfg.label}: mean final score {summary['mean']:.3f} "
        f"(95% CI {summary['ci95'][0]:.3f} .. {summary['ci95'][1]:.3f}) "
        f"over {summary['n_runs']} runs -> {out}"
    )


@main.command("eval")
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
@click.option("--games", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--mask", type=int, default=None, help="Override the environment mask size.")
@click.option("--out", type=click.Path(), default=None, help="Write per-game scores CSV here.")
def eval_cmd(checkpoint, games, seed, mask, out):
    """Greedy evaluation of a saved checkpoint."""
    overrides = {"mask_rows": mask} if mask is not None else None
    scores, cfg = evaluate_checkpoint(checkpoint, games, seed, env_overrides=overrides)
    if out:
        header = f"# config_sha256={config_hash(cfg)}\ngame,score\n"
        body = "".join(f"{i},{s:g}\n" for i, s in enumerate(scores))
        Path(out).write_text(header + body)
    click.echo(
        f"{cfg.label}: mean {scores.mean():.3f} over {games} games "
        f"(min {scores.min():g}, max {scores.max():g})"
    )


@main.command()
@click.option("--scenario", type=click.Choice(sorted(SCENARIOS)), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="Optional experiment config; its memory section parameterizes the probe.")
@click.option("--out", type=click.Path(), required=True, help="Output CSV path.")
def probe(scenario, config_path, out):
    """Write impulse-response or sweep curves as CSV."""
    mem = load_config(config_path).memory if config_path else None
    Path(out).write_text(run_scenario(scenario, mem))
    click.echo(f"wrote {scenario} curves to {out}")


@main.command()
@click.option("--preset", "group", type=str, default=None, help="Preset group to execute.")
@click.option("--list", "list_only", is_flag=True, help="List preset groups and presets.")
@click.option("--seed", type=int, default=None)
@click.option("--runs", type=int, default=None)
@click.option("--out", type=click.Path(), default=None, help="Root directory for all experiments.")
@click.option("--faithful", is_flag=True)
@click.option("--workers", type=int, default=1, show_default=True)
def sweep(group, list_only, seed, runs, out, faithful, workers):
    """Run every experiment in a preset group, one directory per experiment."""
    if list_only:
        click.echo("preset groups:")
        for name, members in GRID_GROUPS.items():
            click.echo(f"  {name}: {', '.join(members)}")
        click.echo("presets:")
        for name in preset_names():
            click.echo(f"  {name}")
        return
    if group is None or out is None:
        raise click.UsageError("--preset and --out are required (or use --list)")
    if group not in GRID_GROUPS:
        raise click.UsageError(
            f"unknown group {group!r}; available: {', '.join(GRID_GROUPS)}"
        )
    root = Path(out)
    results = {}
    for name in GRID_GROUPS[group]:
        cfg = _resolve_config(None, name, seed, runs, faithful)
        summary = run_experiment(cfg, root / name, workers=workers)
        results[name] = summary["mean"]
        click.echo(f"{name}: mean final score {summary['mean']:.3f}")
    means = list(results.values())
    (root / "sweep_summary.json").write_text(
        json.dumps({"group": group, "means": results}, indent=2) + "\n"
    )
    click.echo(f"sweep {group} done; grand mean {np.mean(means):.3f} -> {root}")


@main.command()
@click.option("--s", "stimulus", type=int, default=234, show_default=True,
              help="Features per frame.")
@click.option("--n", "slices", type=int, required=True, help="Memory slices.")
def params(stimulus, slices):
    """Parameter count of the network for an S-feature, N-slice input."""
    pc = count_parameters(stimulus, slices)
    click.echo(f"input size : {stimulus * slices}")
    click.echo(f"weights    : {pc.weights}")
    click.echo(f"biases     : {pc.biases}")
    click.echo(f"total      : {pc.total}")


if __name__ == "__main__":
    sys.exit(main())
