"""Unit tests for the results CSV."""

from pathlib import Path

import pytest

from app.core.exceptions import DataFormatError
from app.evaluation.csv_io import HEADER, format_csv, parse_csv, read_csv, write_csv
from app.evaluation.sweep import SweepRecord


def test_empty_records_give_header_only(tmp_path: Path) -> None:
    """Test an empty list writes just the header line."""
    path = tmp_path / "out" / "results.csv"

    write_csv([], path)

    assert path.read_text() == ",".join(HEADER) + "\n"


def test_rows_are_sorted_by_key_fields(records: list[SweepRecord]) -> None:
    """Test row order follows strategy, trainX, transY, channel and SNR."""
    lines = format_csv(records).splitlines()

    assert lines[1:] == [
        "1,2,2,awgn,20.0000,-1.5000,0.0000,32",
        "2,1,1,awgn,0.0000,inf,0.0000,32",
        "2,1,1,awgn,10.0000,19.8765,0.2500,32",
        "2,2,2,rayleigh,5.0000,21.1235,0.5000,32",
    ]


def test_output_is_independent_of_input_order(records: list[SweepRecord]) -> None:
    """Test shuffled records produce identical text."""
    assert format_csv(records) == format_csv(list(reversed(records)))


def test_round_trip_keeps_four_decimals(records: list[SweepRecord], tmp_path: Path) -> None:
    """Test write then read reproduces every record at four decimals."""
    path = tmp_path / "results.csv"
    write_csv(records, path)

    parsed = read_csv(path)

    expected = sorted(records, key=lambda r: r.sort_key)
    assert len(parsed) == len(expected)
    for got, want in zip(parsed, expected, strict=True):
        assert got.sort_key == want.sort_key
        assert got.trials == want.trials
        assert got.mean_psnr_db == pytest.approx(want.mean_psnr_db, abs=5e-5)
        assert got.std_psnr_db == pytest.approx(want.std_psnr_db, abs=5e-5)
    assert parsed[1].saturated


def test_wrong_header_is_rejected() -> None:
    """Test a file with other columns is refused."""
    with pytest.raises(DataFormatError, match="expected header"):
        parse_csv("a,b,c\n1,2,3\n")


def test_bad_value_names_the_line() -> None:
    """Test an unparsable number reports its line."""
    text = ",".join(HEADER) + "\n2,1,1,awgn,zero,20.0,0.1,32\n"

    with pytest.raises(DataFormatError, match=r"results.csv:2"):
        parse_csv(text, source="results.csv")


def test_short_row_is_rejected() -> None:
    """Test a row with missing fields is refused."""
    with pytest.raises(DataFormatError, match="expected 8 fields"):
        parse_csv(",".join(HEADER) + "\n2,1,1\n")


def test_missing_file_is_a_format_error(tmp_path: Path) -> None:
    """Test reading a missing results file raises a data format error."""
    with pytest.raises(DataFormatError, match="cannot read results"):
        read_csv(tmp_path / "missing.csv")
