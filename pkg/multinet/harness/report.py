"""
Report files for an experiment run directory.
"""

import csv
from pathlib import Path
from typing import Dict, Iterable, List, Sequence

from loguru import logger

from multinet.core.errors import ArtifactIOError, DataError
from multinet.harness.experiments import MTL, MULTINET, ExperimentReport
from multinet.harness.metrics import LossCurve

CURVES_COLUMNS = ("network", "trial", "epoch", "train_loss", "val_loss", "moments")
MEAN_CURVES_COLUMNS = ("family", "epoch", "train_mean", "train_ci95", "val_mean", "val_ci95")
AUTONOMY_COLUMNS = ("mode", "multinet", "mtl", "delta")
DELTA_LOSS_COLUMNS = ("comparison", "delta_loss_pct")
REPORT_FILES = ("curves.csv", "mean_curves.csv", "autonomy.csv", "delta_loss.csv", "summary.txt")


def _num(value: float) -> str:
    return f"{value:.10g}"


def _write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence[object]]) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            writer.writerows(rows)
    except OSError as e:
        raise ArtifactIOError(path, e) from e


def write_curves(curves: Sequence[LossCurve], path: Path) -> Path:
    """One row per network, trial and epoch, ordered by network then trial."""
    ordered = sorted(curves, key=lambda c: (c.network, c.trial))
    _write_csv(
        Path(path),
        CURVES_COLUMNS,
        (
            (c.network, c.trial, e + 1, _num(c.train_loss[e]), _num(c.val_loss[e]), c.moments_per_epoch[e])
            for c in ordered
            for e in range(c.epochs)
        ),
    )
    return Path(path)


def summary_text(report: ExperimentReport) -> str:
    lines = [
        f"experiment: {report.experiment_id}",
        f"seed: {report.seed}",
        f"trials: {report.trials}",
        f"epochs: {report.epochs}",
        f"moments per network per epoch: {report.budget}",
        f"validation modes: {','.join(m.value for m in report.validation_modes)}",
        "",
    ]
    for family in report.families:
        trial, epoch = report.selected[family]
        mean, half = report.interval_curve(family)[-1]
        lines.append(f"{family}: final validation loss {_num(mean)} +/- {_num(half)} (95% CI)")
        lines.append(f"{family}: selected trial {trial} epoch {epoch}")
    if report.delta_loss:
        lines.append("")
        for name, value in sorted(report.delta_loss.items()):
            lines.append(f"delta loss % ({name}): {value:.2f}")
    if report.autonomy:
        lines.append("")
        for mode in sorted(report.autonomy, key=lambda m: m.index):
            row = report.autonomy[mode]
            lines.append(
                f"autonomy {mode.value}: multinet {row[MULTINET]:.2f}% mtl {row[MTL]:.2f}% delta {row['delta']:+.2f}"
            )
    return "\n".join(lines) + "\n"


def emit_report(report: ExperimentReport, out_dir: Path) -> Path:
    """
    Write the report tables under out_dir/<run name>/.

    Returns:
        The run directory
    """
    run_dir = Path(out_dir) / report.run_name
    try:
        run_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ArtifactIOError(run_dir, e) from e

    write_curves(report.curves, run_dir / "curves.csv")

    mean_rows: List[Sequence[object]] = []
    for family in report.families:
        train = report.interval_curve(family, "train")
        val = report.interval_curve(family, "val")
        for e, ((tm, th), (vm, vh)) in enumerate(zip(train, val), start=1):
            mean_rows.append((family, e, _num(tm), _num(th), _num(vm), _num(vh)))
    _write_csv(run_dir / "mean_curves.csv", MEAN_CURVES_COLUMNS, mean_rows)

    _write_csv(
        run_dir / "autonomy.csv",
        AUTONOMY_COLUMNS,
        (
            (mode.value, f"{row[MULTINET]:.4f}", f"{row[MTL]:.4f}", f"{row['delta']:.4f}")
            for mode, row in sorted(report.autonomy.items(), key=lambda kv: kv[0].index)
        ),
    )
    _write_csv(
        run_dir / "delta_loss.csv",
        DELTA_LOSS_COLUMNS,
        ((name, f"{value:.4f}") for name, value in sorted(report.delta_loss.items())),
    )
    try:
        (run_dir / "summary.txt").write_text(summary_text(report), encoding="utf-8")
    except OSError as e:
        raise ArtifactIOError(run_dir / "summary.txt", e) from e

    logger.info(f"Wrote report to {run_dir}")
    return run_dir


def read_tables(run_dir: Path) -> Dict[str, List[Dict[str, str]]]:
    """Load the CSV tables of a run directory, keyed by file stem."""
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise DataError(f"not a run directory: {run_dir}")
    tables = {}
    for name in REPORT_FILES:
        path = run_dir / name
        if not name.endswith(".csv") or not path.is_file():
            continue
        try:
            with open(path, newline="", encoding="utf-8") as fh:
                tables[path.stem] = list(csv.DictReader(fh))
        except OSError as e:
            raise ArtifactIOError(path, e) from e
    if not tables:
        raise DataError(f"no report tables in {run_dir}")
    return tables
