"""Daily price/volume series and their returns."""

import csv
from dataclasses import dataclass
from datetime import date, datetime

import numpy as np

from nmcopula.exceptions import (
    DataError,
    DuplicateDateError,
    NonPositivePriceError,
    ParseError,
    TooShortSeriesError,
    UnmappedColumnError,
)

__all__ = ["OhlcvSeries", "ReturnsSeries", "ingest_csv", "compute_returns", "parse_date"]


@dataclass(frozen=True)
class OhlcvSeries:
    """Closing prices and volumes on strictly increasing dates."""

    dates: tuple
    close: np.ndarray
    volume: np.ndarray

    def __post_init__(self):
        dates = tuple(self.dates)
        close = np.asarray(self.close, dtype=float)
        volume = np.asarray(self.volume, dtype=float)
        if not (len(dates) == close.size == volume.size):
            raise DataError("dates, close and volume must have the same length")
        if len(dates) < 2:
            raise TooShortSeriesError(f"need at least 2 observations, got {len(dates)}")
        if not np.all(np.isfinite(close)):
            raise DataError("close prices must not be missing")
        if not np.all(np.isfinite(volume)) or np.any(volume < 0):
            raise DataError("volumes must be finite and non-negative")
        for d0, d1 in zip(dates, dates[1:]):
            if not d0 < d1:
                if d0 == d1:
                    raise DuplicateDateError(d0)
                raise DataError("dates must be strictly increasing")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "close", close)
        object.__setattr__(self, "volume", volume)

    def __len__(self):
        return len(self.dates)


@dataclass(frozen=True)
class ReturnsSeries:
    """Simple returns with the volume traded on each return's end date."""

    r: np.ndarray
    w: np.ndarray
    dates: tuple = ()

    @property
    def n(self):
        return self.r.size


def compute_returns(s):
    """``r_k = (p_k - p_{k-1}) / p_{k-1}`` paired with ``w_k``, ``k = 1..n``.

    Raises
    ------
    NonPositivePriceError
        If any closing price is zero or negative.
    TooShortSeriesError
        If fewer than two prices are given.
    """
    close = np.asarray(s.close, dtype=float)
    if close.size < 2:
        raise TooShortSeriesError("need at least 2 prices to form a return")
    if np.any(close <= 0):
        i = int(np.argmax(close <= 0))
        raise NonPositivePriceError(f"non-positive close {close[i]!r} on {s.dates[i]}")
    r = np.diff(close) / close[:-1]
    return ReturnsSeries(r=r, w=np.asarray(s.volume, dtype=float)[1:], dates=tuple(s.dates[1:]))


def parse_date(text, date_format=None):
    text = text.strip()
    if date_format:
        return datetime.strptime(text, date_format).date()
    try:
        return date.fromisoformat(text[:10])
    except ValueError:
        return datetime.fromisoformat(text).date()


def _number(text, what, line):
    t = text.strip().replace(",", "") if text else ""
    if not t:
        raise ParseError(f"missing {what} value", line)
    try:
        x = float(t)
    except ValueError:
        raise ParseError(f"cannot parse {what} value {text!r}", line) from None
    if not np.isfinite(x):
        raise ParseError(f"{what} value {text!r} is not finite", line)
    return x


def _find_column(header, name):
    lowered = [h.strip().lower() for h in header]
    key = name.strip().lower()
    if key in lowered:
        return lowered.index(key)
    raise UnmappedColumnError(name, [h.strip() for h in header])


def ingest_csv(path, date_col="date", close_col="close", volume_col="volume", date_format=None):
    """Read a daily bar CSV into an :class:`OhlcvSeries`.

    Column names are matched case-insensitively.  Rows may appear in any
    order and are sorted by date.

    Raises
    ------
    ParseError
        Malformed row; the message names the 1-based file line.
    DuplicateDateError
        Two rows share a date.
    UnmappedColumnError
        A mapped column is missing from the header.
    """
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", 1) from None
        idx = [_find_column(header, c) for c in (date_col, close_col, volume_col)]
        rows = []
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) <= max(idx):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", line)
            try:
                d = parse_date(row[idx[0]], date_format)
            except ValueError:
                raise ParseError(f"cannot parse date {row[idx[0]]!r}", line) from None
            rows.append((d, _number(row[idx[1]], "close", line), _number(row[idx[2]], "volume", line), line))
    rows.sort(key=lambda r: r[0])
    for a, b in zip(rows, rows[1:]):
        if a[0] == b[0]:
            raise DuplicateDateError(a[0].isoformat())
    if len(rows) < 2:
        raise TooShortSeriesError(f"need at least 2 rows, got {len(rows)}")
    return OhlcvSeries(
        dates=tuple(r[0] for r in rows),
        close=np.array([r[1] for r in rows]),
        volume=np.array([r[2] for r in rows]),
    )
