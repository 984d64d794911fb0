"""Directional success rates over (sampling window, prediction window) grids.

For a day ``t`` and a cell ``(m, l)`` the DMD model of the ``m`` days ending
at ``t`` forecasts every company ``l`` days ahead.  The forecast calls the
company up or down relative to its price on day ``t``; the call is scored
against the realised move from ``t`` to ``t + l``.  Flat calls and flat
outcomes are left out of both the numerator and the denominator.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from datetime import date
from fractions import Fraction
from typing import Sequence

import numpy as np

from .dmd import DEFAULT_POLICY, RankPolicy, fit, forecast_windows, predict
from .errors import TrainingSpanError, ValidationError
from .market_data import PricePanel, window

UP, FLAT, DOWN = 1, 0, -1

#: Forecasts within this many dollars of the current price count as flat.
FLAT_TOLERANCE = 1e-9

DEFAULT_THRESHOLD = 0.53


@dataclass(frozen=True)
class GridSpec:
    m_values: tuple[int, ...] = tuple(range(2, 26))
    l_values: tuple[int, ...] = tuple(range(1, 11))
    rank_policy: RankPolicy = DEFAULT_POLICY
    log_prices: bool = False

    def __post_init__(self):
        m_values = tuple(sorted(set(int(m) for m in self.m_values)))
        l_values = tuple(sorted(set(int(l) for l in self.l_values)))
        if not m_values or m_values[0] < 2:
            raise ValidationError("m_values must be non-empty and all >= 2")
        if not l_values or l_values[0] < 1:
            raise ValidationError("l_values must be non-empty and all >= 1")
        object.__setattr__(self, "m_values", m_values)
        object.__setattr__(self, "l_values", l_values)

    @classmethod
    def ranges(cls, m_min=2, m_max=25, l_min=1, l_max=10, **kwargs) -> "GridSpec":
        return cls(tuple(range(m_min, m_max + 1)), tuple(range(l_min, l_max + 1)), **kwargs)


@dataclass(frozen=True)
class CellResult:
    n_correct: int
    n_predictions: int

    @property
    def valid(self) -> bool:
        return self.n_predictions > 0

    @property
    def success_rate(self) -> float:
        return self.n_correct / self.n_predictions if self.n_predictions else float("nan")


@dataclass(frozen=True)
class SuccessGrid:
    """Success counts indexed ``[m_index, l_index]``."""

    m_values: tuple[int, ...]
    l_values: tuple[int, ...]
    n_correct: np.ndarray
    n_predictions: np.ndarray
    training_span: tuple[date, date] | None = None

    def __post_init__(self):
        shape = (len(self.m_values), len(self.l_values))
        if self.n_correct.shape != shape or self.n_predictions.shape != shape:
            raise ValidationError(f"count arrays must have shape {shape}")
        for arr in (self.n_correct, self.n_predictions):
            arr.setflags(write=False)

    @property
    def valid(self) -> np.ndarray:
        return self.n_predictions > 0

    @property
    def success_rates(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.valid, self.n_correct / np.maximum(self.n_predictions, 1), np.nan)

    def __getitem__(self, cell: tuple[int, int]) -> CellResult:
        m, l = cell
        try:
            i, j = self.m_values.index(m), self.l_values.index(l)
        except ValueError:
            raise KeyError(cell) from None
        return CellResult(int(self.n_correct[i, j]), int(self.n_predictions[i, j]))

    def __contains__(self, cell) -> bool:
        m, l = cell
        return m in self.m_values and l in self.l_values

    def cells(self):
        """``((m, l), CellResult)`` pairs in m-major, l-minor order."""
        for m in self.m_values:
            for l in self.l_values:
                yield (m, l), self[m, l]

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("m,l,success_rate,n_predictions\n")
        for (m, l), cell in self.cells():
            rate = repr(float(cell.success_rate)) if cell.valid else ""
            out.write(f"{m},{l},{rate},{cell.n_predictions}\n")
        return out.getvalue()


@dataclass(frozen=True)
class Hotspot:
    center: tuple[int, int]
    center_rate: float
    neighborhood_mean: float
    n_neighbors: int
    threshold: float
    qualified: bool


def _values(panel: PricePanel, log_prices: bool) -> np.ndarray:
    return np.log(panel.prices) if log_prices else panel.prices


def _directions(forecast: np.ndarray, current: np.ndarray) -> np.ndarray:
    diff = forecast - current
    out = np.where(diff > 0, UP, DOWN).astype(np.int8)
    out[np.abs(diff) <= FLAT_TOLERANCE] = FLAT
    return out


def directional_signal(
    panel: PricePanel,
    t: int,
    m: int,
    l: int,
    policy: RankPolicy = DEFAULT_POLICY,
    log_prices: bool = False,
) -> np.ndarray:
    """Per-company call (``UP``, ``DOWN`` or ``FLAT``) for ``l`` days after day ``t``."""
    values = _values(panel, log_prices)
    model = fit(window(panel, t, m, values), policy)
    return _directions(predict(model, l), values[:, t])


def _span(panel: PricePanel, span) -> tuple[int, int]:
    start, end = (0, panel.n_days - 1) if span is None else span
    if not 0 <= start <= end < panel.n_days:
        raise ValidationError(f"span {span} outside panel of {panel.n_days} days")
    return int(start), int(end)


def _rows(panel: PricePanel, rows) -> np.ndarray:
    return np.arange(panel.n_symbols) if rows is None else np.asarray(rows, dtype=int)


def evaluate_cell(
    panel: PricePanel,
    m: int,
    l: int,
    span: tuple[int, int] | None = None,
    policy: RankPolicy = DEFAULT_POLICY,
    log_prices: bool = False,
    rows: Sequence[int] | None = None,
) -> CellResult:
    """Score cell ``(m, l)`` day by day over ``span`` (inclusive day indices).

    A day ``t`` is scored when its window fits (``t >= m - 1``) and its
    outcome day stays inside the span (``t + l <= end``), so nothing past
    ``end`` is ever read.  ``rows`` restricts scoring to some companies; the
    model is still fitted on all of them.
    """
    start, end = _span(panel, span)
    rows = _rows(panel, rows)
    prices = panel.prices
    correct = total = 0
    for t in range(max(start, m - 1), end - l + 1):
        calls = directional_signal(panel, t, m, l, policy, log_prices)[rows]
        moves = np.sign(prices[rows, t + l] - prices[rows, t]).astype(np.int8)
        scored = (calls != FLAT) & (moves != 0)
        total += int(np.count_nonzero(scored))
        correct += int(np.count_nonzero(scored & (calls == moves)))
    return CellResult(correct, total)


class SignalCube:
    """Every directional call a grid can need, computed once.

    ``calls[i]`` holds, for ``m = spec.m_values[i]``, an int8 array of shape
    days x len(l_values) x rows; ``moves`` holds the realised signs in the
    same layout.  Days that cannot be forecast or scored are zero (flat) and
    so drop out of every count.
    """

    def __init__(self, panel: PricePanel, spec: GridSpec, days: tuple[int, int] | None = None, rows=None):
        self.panel = panel
        self.spec = spec
        self.rows = _rows(panel, rows)
        first, last = _span(panel, days)
        self.first, self.last = first, last
        values = _values(panel, spec.log_prices)
        steps = np.array(spec.l_values)
        n_days = panel.n_days

        self.calls = []
        for m in spec.m_values:
            out = np.zeros((n_days, len(steps), len(self.rows)), np.int8)
            ts = np.arange(max(first, m - 1), last + 1)
            if len(ts):
                stack = np.stack([values[:, t - m + 1 : t + 1] for t in ts])
                forecasts = forecast_windows(stack, steps, spec.rank_policy)
                out[ts] = _directions(forecasts, values[:, ts].T[:, :, None]).transpose(0, 2, 1)[:, :, self.rows]
            self.calls.append(out)

        prices = panel.prices[self.rows]
        self.moves = np.zeros((n_days, len(steps), len(self.rows)), np.int8)
        for j, l in enumerate(steps):
            if l < n_days:
                self.moves[: n_days - l, j] = np.sign(prices[:, l:] - prices[:, :-l]).T

    def grid(self, start: int, end: int) -> SuccessGrid:
        """Success grid for the inclusive day span ``[start, end]``."""
        if start < self.first or end > self.last:
            raise ValidationError(f"span ({start}, {end}) outside computed days ({self.first}, {self.last})")
        steps = np.array(self.spec.l_values)
        days = np.arange(start, end + 1)
        in_span = (days[:, None] + steps[None, :] <= end)[:, :, None]
        moves = self.moves[start : end + 1]
        correct = np.zeros((len(self.spec.m_values), len(steps)), np.int64)
        total = np.zeros_like(correct)
        for i, calls in enumerate(self.calls):
            c = calls[start : end + 1]
            scored = in_span & (c != FLAT) & (moves != 0)
            total[i] = scored.sum(axis=(0, 2))
            correct[i] = (scored & (c == moves)).sum(axis=(0, 2))
        cal = self.panel.calendar
        return SuccessGrid(self.spec.m_values, self.spec.l_values, correct, total, (cal[start], cal[end]))

    def call(self, t: int, m: int, l: int) -> np.ndarray:
        """Calls for day ``t`` and cell ``(m, l)`` over the cube's rows."""
        if not self.first <= t <= self.last or t < m - 1:
            raise ValidationError(f"day {t} not forecastable for m={m}")
        return self.calls[self.spec.m_values.index(m)][t, self.spec.l_values.index(l)]


def train_grid(
    panel: PricePanel,
    spec: GridSpec = GridSpec(),
    span: tuple[int, int] | None = None,
    rows: Sequence[int] | None = None,
) -> SuccessGrid:
    """Evaluate every cell of ``spec`` over ``span``; same counts as :func:`evaluate_cell`."""
    start, end = _span(panel, span)
    needed = min(spec.m_values) + min(spec.l_values) + 1
    if end - start + 1 < needed:
        raise TrainingSpanError(f"training span of {end - start + 1} days is shorter than {needed}")
    return SignalCube(panel, spec, (start, end), rows).grid(start, end)


def _neighbourhood(grid: SuccessGrid, m: int, l: int) -> list[float]:
    rates = []
    for dm in (-1, 0, 1):
        for dl in (-1, 0, 1):
            cell = (m + dm, l + dl)
            if cell in grid and grid[cell].valid:
                rates.append(grid[cell].success_rate)
    return rates


def find_hotspot(grid: SuccessGrid, threshold: float = DEFAULT_THRESHOLD) -> Hotspot | None:
    """Best cell and the mean success over its 3x3 neighbourhood.

    Returns ``None`` when no cell is valid.  When several cells share the
    best rate, the one with the larger neighbourhood mean wins, then the
    smaller ``m``, then the smaller ``l``.  Neighbours missing from the grid
    or without predictions are left out of the mean.
    """
    rates = grid.success_rates
    valid = grid.valid
    if not valid.any():
        return None
    best = np.max(rates[valid])
    candidates = []
    for i, j in zip(*np.nonzero(valid & (rates == best))):
        m, l = grid.m_values[i], grid.l_values[j]
        neighbours = _neighbourhood(grid, m, l)
        # exact mean so a flat neighbourhood averages to its own rate
        mean = sum(map(Fraction, neighbours)) / len(neighbours)
        candidates.append((-mean, m, l, len(neighbours)))
    neg_mean, m, l, count = min(candidates)
    mean = -neg_mean
    return Hotspot((m, l), float(best), float(mean), count, threshold, mean > Fraction(threshold))
