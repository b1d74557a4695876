"""CSV ingestion for daily OHLC bars."""

from __future__ import annotations

import csv
import datetime as dt
from pathlib import Path

from ..indicators import OhlcBar, OhlcSeries, SeriesError

HEADER = ["date", "open", "high", "low", "close"]


class DataError(ValueError):
    pass


def load_ohlc_csv(path) -> OhlcSeries:
    """Read ``date,open,high,low,close`` rows, sort by date and validate every bar."""
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8-sig")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    bars = []
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != HEADER:
            raise DataError(f"{path}: expected header {','.join(HEADER)}, got {header}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 5:
                raise DataError(f"{path}:{line}: expected 5 fields, got {len(row)}")
            try:
                date = dt.date.fromisoformat(row[0].strip())
                o, h, l, c = (float(x) for x in row[1:])
            except ValueError as exc:
                raise DataError(f"{path}:{line}: malformed row {row!r} ({exc})") from exc
            try:
                bars.append(OhlcBar(date, o, h, l, c))
            except SeriesError as exc:
                raise DataError(f"{path}:{line}: {exc}") from exc
    bars.sort(key=lambda b: b.date)
    try:
        return OhlcSeries(bars)
    except SeriesError as exc:
        raise DataError(f"{path}: {exc}") from exc


def write_ohlc_csv(series: OhlcSeries, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for b in series.bars:
            w.writerow([b.date.isoformat(), repr(b.open), repr(b.high), repr(b.low), repr(b.close)])
