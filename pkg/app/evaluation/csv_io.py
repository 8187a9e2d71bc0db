"""Sweep results as CSV.

Columns are ``strategy,trainX,transY,channel,snr_db,mean_psnr_db,std_psnr_db,trials``.
Rows are sorted by strategy, trainX, transY, channel and SNR; decimals carry
four places and a saturated PSNR is written as ``inf``. Equal records give
byte-identical files.
"""

import csv
import io
from collections.abc import Sequence
from pathlib import Path

from pydantic import ValidationError

from app.channel.schemas import ChannelKind
from app.core.exceptions import ConfigError, DataFormatError
from app.core.logging import get_logger
from app.evaluation.sweep import SweepRecord
from app.shared.utils import format_decimal, parse_decimal

logger = get_logger(__name__)

HEADER = (
    "strategy",
    "trainX",
    "transY",
    "channel",
    "snr_db",
    "mean_psnr_db",
    "std_psnr_db",
    "trials",
)


def _row(record: SweepRecord) -> list[str]:
    return [
        str(record.strategy),
        str(record.train_x),
        str(record.trans_y),
        str(record.channel),
        format_decimal(record.snr_db),
        format_decimal(record.mean_psnr_db),
        format_decimal(record.std_psnr_db),
        str(record.trials),
    ]


def format_csv(records: Sequence[SweepRecord]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(HEADER)
    writer.writerows(_row(r) for r in sorted(records, key=lambda r: r.sort_key))
    return buffer.getvalue()


def write_csv(records: Sequence[SweepRecord], path: Path) -> None:
    """Write ``records`` to ``path``; an empty list gives a header-only file.

    Raises:
        ConfigError: If the path cannot be written.
    """
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(format_csv(records), encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot write results {path}: {exc}") from exc
    logger.info("evaluation.csv.write_completed", path=str(path), rows=len(records))


def parse_csv(text: str, source: str = "<string>") -> list[SweepRecord]:
    """Parse CSV text produced by ``format_csv``.

    Raises:
        DataFormatError: On a wrong header, a short row or an unparsable value.
    """
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != HEADER:
        found = rows[0] if rows else []
        raise DataFormatError(
            f"{source}: expected header {','.join(HEADER)}, got {','.join(found)}"
        )
    records: list[SweepRecord] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(HEADER):
            raise DataFormatError(
                f"{source}:{lineno}: expected {len(HEADER)} fields, got {len(row)}"
            )
        try:
            records.append(
                SweepRecord(
                    strategy=int(row[0]),
                    train_x=int(row[1]),
                    trans_y=int(row[2]),
                    channel=ChannelKind(row[3]),
                    snr_db=parse_decimal(row[4]),
                    mean_psnr_db=parse_decimal(row[5]),
                    std_psnr_db=parse_decimal(row[6]),
                    trials=int(row[7]),
                )
            )
        except (ValueError, ValidationError) as exc:
            raise DataFormatError(f"{source}:{lineno}: {exc}") from exc
    return records


def read_csv(path: Path) -> list[SweepRecord]:
    """Read a results file written by ``write_csv``.

    Raises:
        DataFormatError: If the file is unreadable or malformed.
    """
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"cannot read results {path}: {exc}") from exc
    return parse_csv(text, source=str(path))
