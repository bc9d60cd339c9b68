"""
Command-line interface for the multi-modal driving workbench.
"""

import json
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional

import typer
from loguru import logger
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from multinet.core.config import RunConfig, get_settings
from multinet.core.errors import ArtifactIOError, ConfigError, WorkbenchError
from multinet.core.models import BehavioralMode, NetworkVariant
from multinet.dagger import iterate, supervise, write_round_summary
from multinet.data.codec import deserialize, serialize
from multinet.data.moments import Dataset
from multinet.data.pipeline import balance_by_mode, split
from multinet.harness.experiments import (
    EVALUATED_MODES,
    MULTINET,
    ExperimentReport,
    evaluate_autonomy,
    multinet_vs_mtl,
    network_seed,
    per_mode_comparison,
)
from multinet.harness.metrics import autonomy, select_model
from multinet.harness.report import emit_report, read_tables, write_curves
from multinet.harness.training import train
from multinet.model.checkpoint import load_checkpoint
from multinet.model.network import build_model
from multinet.runtime.orchestrator import JobRunner
from multinet.sim.collect import collect_all, scene_for
from multinet.sim.episode import NetworkPolicy, hard_left_policy
from multinet.sim.experts import expert_for
from multinet.sim.track import Track
from multinet.utils.logging import setup_logging

app = typer.Typer(help="Mode-conditioned multi-task driving workbench CLI", no_args_is_help=True)
console = Console()
err_console = Console(stderr=True)

SNAPSHOT_NAME = "run_config.txt"
MANIFEST_NAME = "manifest.json"
SELECTED_NAME = "selected.txt"

# episode offsets keeping evaluation and aggregation tracks apart from training tracks
EVAL_SCENE_OFFSET = 100_000
DAGGER_SCENE_OFFSET = 200_000


@contextmanager
def handled() -> Iterator[None]:
    """Turn workbench errors into a diagnostic and the matching exit code."""
    try:
        yield
    except WorkbenchError as e:
        err_console.print(f"[red]Error ({type(e).__name__}):[/red] {e}")
        raise typer.Exit(code=int(e.exit_code))


def load_config(ctx: typer.Context, **overrides: Any) -> RunConfig:
    """Merge the global options with a command's own flags; flags win over the file."""
    state: Dict[str, Any] = dict(ctx.obj or {})
    path = state.pop("config_path", None)
    state.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig.load(path, state)


def parse_modes(value: Optional[str]) -> Optional[List[BehavioralMode]]:
    if value is None:
        return None
    try:
        return [BehavioralMode(item.strip()) for item in value.split(",") if item.strip()]
    except ValueError as e:
        raise ConfigError(f"unknown mode in {value!r}") from e


def dataset_path(cfg: RunConfig, mode: BehavioralMode) -> Path:
    return cfg.data_dir / f"{mode.value}.mndm"


def load_datasets(cfg: RunConfig, modes: List[BehavioralMode]) -> Dict[BehavioralMode, Dataset]:
    return {mode: deserialize(dataset_path(cfg, mode)) for mode in modes}


def balanced_per_mode(datasets: Dict[BehavioralMode, Dataset], seed: int) -> Dict[BehavioralMode, Dataset]:
    """Equal-size per-mode datasets cut from a mode-balanced union."""
    union = balance_by_mode(Dataset.concat(datasets.values()), seed, list(datasets))
    return {mode: union.filter_mode(mode) for mode in datasets}


def eval_tracks(cfg: RunConfig, mode: BehavioralMode, count: int) -> List[Track]:
    sim = cfg.sim_config()
    return [
        scene_for(cfg.seed, mode, EVAL_SCENE_OFFSET + e, cfg.track_length_m, cfg.track_features(mode), sim)
        for e in range(count)
    ]


@app.callback()
def main(
    ctx: typer.Context,
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="key=value configuration file"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Run seed"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output directory"),
    threads: Optional[int] = typer.Option(None, "--threads", help="Worker threads"),
    log_level: Optional[str] = typer.Option(None, "--log-level", help="Logging level"),
):
    """Data generation, training, experiments, supervised driving and aggregation."""
    settings = get_settings()
    with handled():
        setup_logging(log_level or settings.log_level, settings.log_file)
    ctx.obj = {
        "config_path": config,
        "seed": seed,
        "out": out,
        "threads": threads if threads is not None else (settings.threads if settings.threads > 1 else None),
        "log_level": log_level,
    }


@app.command("gen-data")
def gen_data(
    ctx: typer.Context,
    modes: Optional[str] = typer.Option(None, "--modes", help="Comma-separated behavioral modes"),
    episodes: Optional[int] = typer.Option(None, "--episodes", help="Expert episodes per mode"),
    duration: Optional[float] = typer.Option(None, "--duration", help="Episode length in seconds"),
    max_moments: Optional[int] = typer.Option(None, "--max-moments", help="Cap on moments per mode"),
):
    """Drive the oracle experts and write one dataset file per mode plus a manifest."""
    with handled():
        cfg = load_config(
            ctx,
            modes=parse_modes(modes),
            episodes=episodes,
            episode_duration_s=duration,
            max_moments_per_mode=max_moments,
        )
        out_dir = cfg.data_dir
        console.print(Panel(f"[bold blue]Generating data[/bold blue] in {out_dir}", expand=False))
        collections = collect_all(
            cfg.modes,
            cfg.episodes,
            cfg.seed,
            {mode: cfg.track_features(mode) for mode in cfg.modes},
            cfg.sim_config(),
            cfg.episode_duration_s,
            cfg.track_length_m,
            cfg.max_moments_per_mode,
            cfg.threads,
        )
        manifest: Dict[str, Any] = {
            "seed": cfg.seed,
            "episodes": cfg.episodes,
            "episode_duration_s": cfg.episode_duration_s,
            "modes": {},
        }
        for collection in collections:
            path = serialize(collection.dataset, dataset_path(cfg, collection.mode))
            entry = collection.manifest_entry()
            entry["file"] = path.name
            manifest["modes"][collection.mode.value] = entry
            console.print(f"[green]✓[/green] {collection.mode.value}: {entry['moments']} moments -> {path}")
        manifest_path = out_dir / MANIFEST_NAME
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        except OSError as e:
            raise ArtifactIOError(manifest_path, e) from e
        cfg.snapshot(out_dir / SNAPSHOT_NAME)


@app.command("train")
def train_cmd(
    ctx: typer.Context,
    variant: Optional[NetworkVariant] = typer.Option(None, "--variant", help="multinet or mtl"),
    mode: Optional[BehavioralMode] = typer.Option(None, "--mode", help="Mode for an MTL network"),
    epochs: Optional[int] = typer.Option(None, "--epochs"),
    trials: Optional[int] = typer.Option(None, "--trials"),
):
    """Train a MultiNet on every mode, or an MTL network on one mode."""
    with handled():
        cfg = load_config(ctx, variant=variant, mode=mode, epochs=epochs, trials=trials)
        if cfg.variant is NetworkVariant.MTL:
            if cfg.mode is None:
                raise ConfigError("--variant mtl needs --mode")
            modes = [cfg.mode]
            label = f"mtl-{cfg.mode.value}"
        else:
            modes = list(cfg.modes)
            label = MULTINET
        datasets = load_datasets(cfg, modes)
        data = datasets[modes[0]] if len(modes) == 1 else Dataset.concat(balanced_per_mode(datasets, cfg.seed).values())
        train_set, val_set = split(data, cfg.validation_fraction, cfg.seed, modes)

        run_dir = cfg.out / "train" / label
        train_config = cfg.train_config(run_dir / "checkpoints")
        console.print(
            Panel(f"[bold blue]Training {label}[/bold blue]: {len(train_set)} train / {len(val_set)} val", expand=False)
        )

        def run_trial(trial: int):
            model = build_model(cfg.network_config(cfg.variant, network_seed(cfg.seed, trial, label)))
            return train(model, train_set, val_set, train_config, trial=trial, network=label)

        results = JobRunner(cfg.threads, job_type="trial").map(run_trial, list(range(cfg.trials)))
        curves = [r.curve for r in results]
        write_curves(curves, run_dir / "curves.csv")
        trial, epoch = select_model(curves)
        cfg.snapshot(run_dir / SNAPSHOT_NAME)
        best = results[trial].checkpoints[epoch - 1]
        selected_path = run_dir / SELECTED_NAME
        try:
            selected_path.write_text(f"{best}\n", encoding="utf-8")
        except OSError as e:
            raise ArtifactIOError(selected_path, e) from e
        console.print(f"[green]✓[/green] selected trial {trial} epoch {epoch}: {best}")


@app.command("experiment")
def experiment_cmd(
    ctx: typer.Context,
    epochs: Optional[int] = typer.Option(None, "--epochs"),
    trials: Optional[int] = typer.Option(None, "--trials"),
    pooled_baseline: Optional[bool] = typer.Option(None, "--pooled-baseline/--no-pooled-baseline"),
    eval_episodes: Optional[int] = typer.Option(None, "--eval-episodes", help="Autonomy episodes per evaluated mode"),
):
    """MultiNet against MTL, then one comparison per mode; writes four report directories."""
    with handled():
        cfg = load_config(
            ctx, epochs=epochs, trials=trials, pooled_baseline=pooled_baseline, eval_episodes=eval_episodes
        )
        modes = list(BehavioralMode)
        datasets = balanced_per_mode(load_datasets(cfg, modes), cfg.seed)
        root = cfg.out / "experiment"
        network_config = cfg.network_config(NetworkVariant.MULTINET)

        main_report = multinet_vs_mtl(
            datasets,
            cfg.train_config(),
            network_config,
            pooled_baseline=cfg.pooled_baseline,
            checkpoint_dir=root / "checkpoints" / "multinet_vs_mtl",
        )
        if cfg.eval_episodes > 0:
            evaluate_autonomy(
                main_report,
                {mode: eval_tracks(cfg, mode, cfg.eval_episodes) for mode in EVALUATED_MODES},
                cfg.sim_config(),
                cfg.override_policy(),
                cfg.eval_duration_s,
                cfg.threads,
            )
        reports: List[ExperimentReport] = [main_report]
        for mode in modes:
            report = per_mode_comparison(
                mode, datasets, cfg.train_config(), network_config, checkpoint_dir=root / "checkpoints" / mode.value
            )
            main_report.delta_loss[mode.value] = report.delta_loss[mode.value]
            reports.append(report)

        for report in reports:
            run_dir = emit_report(report, root)
            cfg.snapshot(run_dir / SNAPSHOT_NAME)
            console.print(f"[green]✓[/green] {report.experiment_id} -> {run_dir}")


@app.command("drive")
def drive_cmd(
    ctx: typer.Context,
    policy: Optional[str] = typer.Option(None, "--policy", help="checkpoint, oracle or hard-left"),
    checkpoint: Optional[Path] = typer.Option(None, "--checkpoint", help="Model checkpoint"),
    mode: Optional[BehavioralMode] = typer.Option(None, "--mode", help="Behavioral mode"),
    episodes: Optional[int] = typer.Option(None, "--episodes"),
    duration: Optional[float] = typer.Option(None, "--duration", help="Episode length in seconds"),
):
    """Supervised episodes on evaluation loops; prints autonomy and writes per-tick logs."""
    with handled():
        cfg = load_config(
            ctx, policy=policy, checkpoint=checkpoint, mode=mode, drive_episodes=episodes, drive_duration_s=duration
        )
        drive_mode = cfg.mode or BehavioralMode.DIRECT
        sim = cfg.sim_config()
        model = None
        if cfg.policy == "checkpoint":
            if cfg.checkpoint is None:
                raise ConfigError("--policy checkpoint needs --checkpoint")
            model, meta = load_checkpoint(cfg.checkpoint)
            trained_for = str(meta.get("network", ""))
            if not model.is_multinet and trained_for.startswith("mtl-") and trained_for != f"mtl-{drive_mode.value}":
                raise ConfigError(f"checkpoint was trained as {trained_for}, cannot drive {drive_mode.value}")

        run_dir = cfg.out / "drive" / f"{cfg.policy}_{drive_mode.value}"
        table = Table(show_header=True, header_style="bold magenta")
        table.add_column("Episode", style="cyan")
        table.add_column("Ticks")
        table.add_column("Correctional")
        table.add_column("Autonomy %", style="green")
        scores = []
        for e, track in enumerate(eval_tracks(cfg, drive_mode, cfg.drive_episodes)):
            oracle = expert_for(drive_mode, sim)
            if model is not None:
                acting = NetworkPolicy(model, drive_mode)
            elif cfg.policy == "oracle":
                acting = oracle
            else:
                acting = hard_left_policy()
            log = supervise(acting, oracle, cfg.override_policy(), track, sim, cfg.drive_duration_s)
            log.to_csv(run_dir / f"episode_{e:02d}.csv")
            scores.append(autonomy(log))
            table.add_row(str(e), str(log.ticks), str(log.correctional_ticks), f"{scores[-1]:.2f}")
        cfg.snapshot(run_dir / SNAPSHOT_NAME)
        console.print(table)
        console.print(f"autonomy: {sum(scores) / len(scores):.2f}")


@app.command("dagger")
def dagger_cmd(
    ctx: typer.Context,
    rounds: Optional[int] = typer.Option(None, "--rounds", help="Aggregation rounds"),
    episodes: Optional[int] = typer.Option(None, "--episodes", help="Supervised episodes per mode per round"),
):
    """Corrective aggregation rounds starting from the generated datasets."""
    with handled():
        cfg = load_config(ctx, dagger_rounds=rounds, dagger_episodes=episodes)
        initial = Dataset.concat(load_datasets(cfg, list(cfg.modes)).values())
        sim = cfg.sim_config()
        run_dir = cfg.out / "dagger"

        def tracks(round_index: int, mode: BehavioralMode, e: int) -> Track:
            episode = DAGGER_SCENE_OFFSET + round_index * cfg.dagger_episodes + e
            return scene_for(cfg.seed, mode, episode, cfg.track_length_m, cfg.track_features(mode), sim)

        summaries, aggregate = iterate(
            initial,
            cfg.dagger_rounds,
            cfg.train_config(),
            cfg.network_config(NetworkVariant.MULTINET),
            sim,
            cfg.override_policy(),
            tracks,
            cfg.dagger_episodes,
            cfg.drive_duration_s,
            threads=cfg.threads,
            checkpoint_dir=run_dir / "checkpoints",
        )
        write_round_summary(summaries, run_dir / "rounds.csv")
        serialize(aggregate, run_dir / "aggregate.mndm")
        cfg.snapshot(run_dir / SNAPSHOT_NAME)

        table = Table(show_header=True, header_style="bold magenta")
        for column in ("Round", "Dataset", "Correctional", "Autonomy %"):
            table.add_column(column)
        for s in summaries:
            table.add_row(str(s.round), str(s.dataset_size), f"{s.correctional_fraction:.2%}", f"{s.autonomy_pct:.2f}")
        console.print(table)


@app.command("report")
def report_cmd(run_dir: Path = typer.Argument(..., help="Experiment run directory")):
    """Render the tables of an existing run directory."""
    with handled():
        tables = read_tables(run_dir)
        console.print(Panel(f"[bold blue]Report[/bold blue] {run_dir}", expand=False))
        for name, rows in tables.items():
            if name == "curves" or not rows:
                continue
            table = Table(title=name, show_header=True, header_style="bold magenta")
            for column in rows[0]:
                table.add_column(column)
            for row in rows:
                table.add_row(*row.values())
            console.print(table)
        summary = Path(run_dir) / "summary.txt"
        if summary.is_file():
            console.print(summary.read_text(encoding="utf-8"))
        logger.debug(f"Rendered {len(tables)} tables from {run_dir}")


if __name__ == "__main__":
    app()
