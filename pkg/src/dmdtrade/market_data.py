"""Daily OHLC files, calendar alignment and snapshot windows."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path
from typing import Sequence

import numpy as np

from .dmd import SnapshotWindow
from .errors import (
    AlignmentError,
    CoverageError,
    DataError,
    DataValidationError,
    ParseError,
    ValidationError,
    WindowError,
)

PRICE_FIELDS = ("open", "high", "low", "close", "adj_close")
FIELDS = ("date",) + PRICE_FIELDS + ("volume",)

YAHOO_COLUMNS = ("Date", "Open", "High", "Low", "Close", "Adj Close", "Volume")


@dataclass(frozen=True)
class CsvSchema:
    """Column layout of a ticker file.

    ``columns`` names the file columns in order; ``mapping`` ties each of the
    seven fields to one of those names.  Without a header row the column
    order alone is used.
    """

    columns: tuple[str, ...] = YAHOO_COLUMNS
    header: bool = True
    date_format: str = "%Y-%m-%d"
    mapping: dict = field(default_factory=lambda: dict(zip(FIELDS, YAHOO_COLUMNS)))


@dataclass(frozen=True)
class TickerSeries:
    symbol: str
    dates: tuple[date, ...]
    open: np.ndarray
    high: np.ndarray
    low: np.ndarray
    close: np.ndarray
    adj_close: np.ndarray
    volume: np.ndarray

    def __len__(self) -> int:
        return len(self.dates)

    def field(self, name: str) -> np.ndarray:
        if name not in PRICE_FIELDS:
            raise ValidationError(f"unknown price field {name!r}; expected one of {PRICE_FIELDS}")
        return getattr(self, name)


def _parse_float(text: str, what: str, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"cannot parse {what} value {text!r}", line) from None
    if not np.isfinite(value):
        raise ParseError(f"non-finite {what} value {text!r}", line)
    return value


def load_ticker_csv(path, symbol: str | None = None, schema: CsvSchema | None = None) -> TickerSeries:
    """Read one ticker file; rows come back in ascending date order."""
    schema = schema or CsvSchema()
    path = Path(path)
    symbol = symbol or path.stem
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc.strerror}") from exc

    rows = []
    with handle:
        reader = csv.reader(handle)
        positions = {name: i for i, name in enumerate(schema.columns)}
        if schema.header:
            header = next(reader, None)
            if header is None:
                raise ParseError(f"{path.name}: empty file", 1)
            header = [h.strip().lstrip("﻿") for h in header]
            missing = [c for c in schema.mapping.values() if c not in header]
            if missing:
                raise ParseError(f"{path.name}: header lacks columns {missing}", 1)
            positions = {name: header.index(name) for name in header}
        index = {f: positions[schema.mapping[f]] for f in FIELDS}
        width = max(index.values()) + 1

        for record in reader:
            line = reader.line_num
            if not record or all(not cell.strip() for cell in record):
                continue
            if len(record) < width:
                raise ParseError(f"{path.name}: expected at least {width} columns, got {len(record)}", line)
            try:
                day = datetime.strptime(record[index["date"]].strip(), schema.date_format).date()
            except ValueError:
                raise ParseError(f"{path.name}: bad date {record[index['date']]!r}", line) from None
            values = [_parse_float(record[index[f]].strip(), f, line) for f in PRICE_FIELDS]
            volume = _parse_float(record[index["volume"]].strip(), "volume", line)
            if min(values) <= 0:
                raise DataValidationError(f"{path.name} line {line}: non-positive price on {day}")
            if volume < 0:
                raise DataValidationError(f"{path.name} line {line}: negative volume on {day}")
            rows.append((day, *values, volume))

    rows.sort(key=lambda r: r[0])
    for prev, cur in zip(rows, rows[1:]):
        if prev[0] == cur[0]:
            raise DataValidationError(f"{path.name}: duplicate date {cur[0]}")
    if not rows:
        raise DataError(f"{path.name}: no data rows")
    columns = list(zip(*rows))
    arrays = [np.array(col, dtype=float) for col in columns[1:]]
    for arr in arrays:
        arr.setflags(write=False)
    return TickerSeries(symbol, tuple(columns[0]), *arrays)


@dataclass(frozen=True)
class PricePanel:
    """Aligned prices, one row per symbol and one column per trading day."""

    symbols: tuple[str, ...]
    calendar: tuple[date, ...]
    prices: np.ndarray
    benchmark: str | None = None

    def __post_init__(self):
        prices = np.array(self.prices, dtype=float)
        if prices.ndim != 2 or prices.shape != (len(self.symbols), len(self.calendar)):
            raise ValidationError(
                f"prices shape {prices.shape} does not match {len(self.symbols)} symbols x {len(self.calendar)} days"
            )
        if prices.shape[0] < 1 or prices.shape[1] < 2:
            raise ValidationError("a panel needs at least one symbol and two days")
        if not np.all(np.isfinite(prices)) or np.any(prices <= 0):
            raise DataValidationError("panel prices must be finite and positive")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValidationError("duplicate symbols in panel")
        prices.setflags(write=False)
        object.__setattr__(self, "symbols", tuple(self.symbols))
        object.__setattr__(self, "calendar", tuple(self.calendar))
        object.__setattr__(self, "prices", prices)

    @property
    def n_symbols(self) -> int:
        return self.prices.shape[0]

    @property
    def n_days(self) -> int:
        return self.prices.shape[1]

    @property
    def benchmark_row(self) -> int | None:
        if self.benchmark is not None and self.benchmark in self.symbols:
            return self.symbols.index(self.benchmark)
        return None

    def row(self, symbol: str) -> int:
        try:
            return self.symbols.index(symbol)
        except ValueError:
            raise ValidationError(f"symbol {symbol!r} not in panel") from None

    def slice_days(self, start: int, stop: int) -> "PricePanel":
        return PricePanel(self.symbols, self.calendar[start:stop], self.prices[:, start:stop], self.benchmark)

    def between(self, first: date | None = None, last: date | None = None) -> "PricePanel":
        """Restrict to days in ``[first, last]`` (inclusive, either may be open)."""
        days = np.array(self.calendar)
        mask = np.ones(len(days), bool)
        if first is not None:
            mask &= days >= first
        if last is not None:
            mask &= days <= last
        idx = np.flatnonzero(mask)
        if len(idx) < 2:
            raise CoverageError(f"fewer than two trading days between {first} and {last}")
        return self.slice_days(idx[0], idx[-1] + 1)


def build_panel(
    series: Sequence[TickerSeries],
    field: str = "adj_close",
    policy: str = "intersection",
    start: date | None = None,
    end: date | None = None,
    benchmark: str | None = None,
) -> PricePanel:
    """Align ticker series on a shared calendar.

    ``policy="intersection"`` keeps the days every ticker traded.
    ``policy="ffill"`` keeps the union of days and carries the last price
    forward over gaps; a ticker that starts after the first union day is an
    error because there is nothing to carry.
    """
    if not series:
        raise ValidationError("build_panel needs at least one series")
    if field not in PRICE_FIELDS:
        raise ValidationError(f"unknown price field {field!r}; expected one of {PRICE_FIELDS}")
    if policy not in ("intersection", "ffill"):
        raise ValidationError(f"unknown alignment policy {policy!r}")

    clipped = []
    for s in series:
        keep = [i for i, d in enumerate(s.dates) if (start is None or d >= start) and (end is None or d <= end)]
        if not keep:
            raise CoverageError(f"{s.symbol} has no data between {start} and {end}")
        clipped.append((s.symbol, [s.dates[i] for i in keep], s.field(field)[keep]))

    if policy == "intersection":
        common = set(clipped[0][1])
        for _, dates, _ in clipped[1:]:
            common &= set(dates)
        calendar = sorted(common)
        if not calendar:
            coverage = ", ".join(f"{sym} {d[0]}..{d[-1]}" for sym, d, _ in clipped)
            raise AlignmentError(f"ticker calendars do not overlap ({coverage})")
        rows = []
        for _, dates, values in clipped:
            lookup = dict(zip(dates, values))
            rows.append([lookup[d] for d in calendar])
    else:
        calendar = sorted(set().union(*(d for _, d, _ in clipped)))
        rows = []
        for sym, dates, values in clipped:
            if dates[0] != calendar[0]:
                raise CoverageError(f"{sym} starts {dates[0]}, after the panel start {calendar[0]}; cannot forward-fill")
            lookup = dict(zip(dates, values))
            row, last = [], None
            for d in calendar:
                last = lookup.get(d, last)
                row.append(last)
            rows.append(row)

    if len(calendar) < 2:
        raise AlignmentError(f"aligned calendar has only {len(calendar)} day(s)")
    return PricePanel(tuple(s for s, _, _ in clipped), tuple(calendar), np.array(rows, dtype=float), benchmark)


def window(panel: PricePanel, end_index: int, length: int, values: np.ndarray | None = None) -> SnapshotWindow:
    """Snapshot window of ``length`` days ending at (and including) ``end_index``.

    ``values`` substitutes an array of the panel's shape (log prices, say)
    for the raw prices.
    """
    if length < 2:
        raise WindowError(f"window length must be >= 2, got {length}")
    if end_index >= panel.n_days or end_index < 0:
        raise WindowError(f"end index {end_index} outside panel of {panel.n_days} days")
    start = end_index - length + 1
    if start < 0:
        raise WindowError(f"window of {length} days ending at day {end_index} needs {-start} more day(s) of history")
    data = panel.prices if values is None else values
    return SnapshotWindow(data[:, start : end_index + 1], dt=1.0, start_index=start)


def load_universe(path) -> tuple[list[tuple[str, Path]], str]:
    """Read a universe file.

    Either a JSON list of ``{"symbol", "path"}`` objects, or an object with a
    ``"tickers"`` list of those plus an optional ``"benchmark"`` symbol
    (default ``"SPY"``).  Relative paths resolve against the file's folder.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read universe file {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"universe file {path} is not valid JSON: {exc}") from exc
    benchmark = "SPY"
    if isinstance(doc, dict):
        benchmark = doc.get("benchmark", benchmark)
        doc = doc.get("tickers")
    if not isinstance(doc, list) or not doc:
        raise ValidationError(f"universe file {path} lists no tickers")
    entries = []
    for item in doc:
        if not isinstance(item, dict) or "symbol" not in item or "path" not in item:
            raise ValidationError(f"universe entry {item!r} needs 'symbol' and 'path'")
        entries.append((str(item["symbol"]), path.parent / item["path"]))
    return entries, benchmark
