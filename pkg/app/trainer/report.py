"""Plain-text training report: one tab-separated row per epoch and stage.

Layout::

    # safe training report generated_at=2026-10-18T09:12:44.120331+00:00
    stage	epoch	train_loss	val_loss
    stage_a	1	0.041273	0.038810
    ...
    # stage_a strategy=2 stop_epoch=31 stop_reason=early_stop best_epoch=11 ...

Losses carry six decimals. Summary lines start with ``#`` so the table can
be read by any tool that skips comment lines.
"""

from collections.abc import Sequence
from datetime import datetime
from pathlib import Path

from app.core.exceptions import ConfigError
from app.core.logging import get_logger
from app.shared.utils import format_decimal, format_iso, utcnow
from app.trainer.schemas import TrainReport

logger = get_logger(__name__)

COLUMNS = ("stage", "epoch", "train_loss", "val_loss")
LOSS_PLACES = 6


def _summary(report: TrainReport) -> str:
    baseline = (
        "none"
        if report.baseline_val_loss is None
        else format_decimal(report.baseline_val_loss, LOSS_PLACES)
    )
    fields = {
        "strategy": str(report.strategy),
        "stop_epoch": str(report.stop_epoch),
        "stop_reason": str(report.stop_reason),
        "best_epoch": str(report.best_epoch),
        "baseline_val_loss": baseline,
        "best_val_loss": format_decimal(report.best_val_loss, LOSS_PLACES),
        "final_val_loss": format_decimal(report.final_val_loss, LOSS_PLACES),
        "wall_seconds": format_decimal(report.wall_seconds, 2),
        "checkpoint": report.checkpoint_path or "none",
    }
    return f"# {report.stage} " + " ".join(f"{k}={v}" for k, v in fields.items())


def format_report(reports: Sequence[TrainReport], generated_at: datetime | None = None) -> str:
    """Render ``reports`` in stage order as report text."""
    stamp = format_iso(generated_at or utcnow())
    lines = [f"# safe training report generated_at={stamp}", "\t".join(COLUMNS)]
    for report in reports:
        lines.extend(
            "\t".join(
                (
                    report.stage,
                    str(record.epoch),
                    format_decimal(record.train_loss, LOSS_PLACES),
                    format_decimal(record.val_loss, LOSS_PLACES),
                )
            )
            for record in report.epochs
        )
    lines.extend(_summary(report) for report in reports)
    return "\n".join(lines) + "\n"


def write_report(reports: Sequence[TrainReport], path: Path) -> None:
    """Write the training report to ``path``.

    Raises:
        ConfigError: If the file cannot be written.
    """
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(format_report(reports), encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot write training report {path}: {exc}") from exc
    logger.info("training.report.write_completed", path=str(path), stages=len(reports))
