"""Daily backtests of the DMD trading rules.

Three rules share one simulator:

* ``Fixed(m, l)`` trades a fixed cell every day;
* ``SlidingMax(lookback)`` retrains the grid each day on the previous
  ``lookback`` days and trades the best cell;
* ``HotspotGated(lookback, threshold)`` does the same but only trades when
  the best cell sits in a 3x3 neighbourhood whose mean success beats the
  threshold, otherwise it stays in cash.

Every position is dollar sized (fractional shares), held exactly ``l``
days and charged ``cost_per_position`` when opened and again when closed.
Shorts post their allocation as collateral and earn ``shares * (entry -
exit)``; there is no borrow fee, margin interest or slippage.
"""

from __future__ import annotations

import io
import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import ConfigurationError, EmptyReportError, NumericalError, ValidationError
from .market_data import PricePanel
from .trainer import DEFAULT_THRESHOLD, DOWN, UP, GridSpec, Hotspot, SignalCube, find_hotspot

TRADING_DAYS_PER_YEAR = 252


@dataclass(frozen=True)
class Fixed:
    m: int
    l: int
    name = "fixed"


@dataclass(frozen=True)
class SlidingMax:
    lookback: int = 100
    name = "sliding_max"


@dataclass(frozen=True)
class HotspotGated:
    lookback: int = 100
    threshold: float = DEFAULT_THRESHOLD
    name = "hotspot_gated"


Algorithm = Union[Fixed, SlidingMax, HotspotGated]


@dataclass(frozen=True)
class BacktestConfig:
    algorithm: Algorithm
    initial_capital: float = 1_000_000.0
    cost_per_position: float = 8.0
    entry_mode: str = "cohort"
    allow_short: bool = True
    grid: GridSpec = GridSpec()
    benchmark: str = "SPY"
    trade_benchmark: bool = False

    def __post_init__(self):
        if not self.initial_capital > 0:
            raise ValidationError("initial_capital must be positive")
        if not self.cost_per_position >= 0:
            raise ValidationError("cost_per_position must be >= 0")
        if self.entry_mode not in ("cohort", "cycle"):
            raise ValidationError(f"entry_mode must be 'cohort' or 'cycle', got {self.entry_mode!r}")
        algo = self.algorithm
        if isinstance(algo, Fixed):
            if algo.m < 2 or algo.l < 1:
                raise ValidationError(f"fixed cell needs m >= 2 and l >= 1, got ({algo.m}, {algo.l})")
        elif isinstance(algo, (SlidingMax, HotspotGated)):
            needed = max(self.grid.m_values) + max(self.grid.l_values) + 1
            if algo.lookback < needed:
                raise ValidationError(f"lookback {algo.lookback} is shorter than max(m) + max(l) + 1 = {needed}")
        else:
            raise ValidationError(f"unknown algorithm {algo!r}")

    def describe(self) -> dict:
        algo = {"name": self.algorithm.name, **{k: getattr(self.algorithm, k) for k in self.algorithm.__dataclass_fields__}}
        return {
            "algorithm": algo,
            "initial_capital": self.initial_capital,
            "cost_per_position": self.cost_per_position,
            "entry_mode": self.entry_mode,
            "allow_short": self.allow_short,
            "grid": {
                "m_values": list(self.grid.m_values),
                "l_values": list(self.grid.l_values),
                "rank_policy": {"mode": self.grid.rank_policy.mode, "rank": self.grid.rank_policy.rank, "eps": self.grid.rank_policy.eps},
                "log_prices": self.grid.log_prices,
            },
            "benchmark": self.benchmark,
            "trade_benchmark": self.trade_benchmark,
        }


@dataclass
class Position:
    symbol: str
    direction: str
    shares: float
    entry_price: float
    entry_day: int
    exit_day: int
    allocation: float

    def value(self, price: float) -> float:
        if self.direction == "long":
            return self.shares * price
        return self.allocation + self.shares * (self.entry_price - price)

    def pnl(self, price: float) -> float:
        move = price - self.entry_price
        return self.shares * (move if self.direction == "long" else -move)


@dataclass(frozen=True)
class LedgerEntry:
    day: int
    date: object
    action: str
    symbol: str = ""
    direction: str = ""
    shares: float = 0.0
    price: float = 0.0
    cash_delta: float = 0.0
    cost: float = 0.0


@dataclass
class TradeLedger:
    initial_capital: float
    entries: list[LedgerEntry] = field(default_factory=list)
    equity_curve: np.ndarray = field(default_factory=lambda: np.empty(0))
    realized_pnl: float = 0.0
    total_costs: float = 0.0

    def conservation_error(self) -> float:
        """``final equity - (initial + realised P&L - costs)`` in dollars."""
        return float(self.equity_curve[-1] - (self.initial_capital + self.realized_pnl - self.total_costs))

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("day,date,action,symbol,direction,shares,price,cash_delta,cost\n")
        for e in self.entries:
            shares = repr(float(e.shares)) if e.action != "hold" else ""
            price = f"{e.price:.2f}" if e.action != "hold" else ""
            out.write(
                f"{e.day},{e.date},{e.action},{e.symbol},{e.direction},{shares},{price},"
                f"{e.cash_delta:.2f},{e.cost:.2f}\n"
            )
        return out.getvalue()


@dataclass(frozen=True)
class Decision:
    day: int
    m: int | None
    l: int | None
    hotspot: Hotspot | None
    positions_opened: int


@dataclass
class BacktestReport:
    config: BacktestConfig
    calendar: tuple
    equity_curve: np.ndarray
    benchmark_curve: np.ndarray | None
    holdings_curve: np.ndarray
    participation_rate: float
    eligible_days: int
    trading_days: int
    ledger: TradeLedger
    decisions: list[Decision]
    window_histograms: dict[str, dict[int, int]] | None = None

    @property
    def final_equity(self) -> float:
        return float(self.equity_curve[-1])

    @property
    def annualized_return(self) -> float | None:
        """``None`` once the strategy has lost everything."""
        if self.final_equity <= 0:
            return None
        return annualize(self.equity_curve)

    def to_json(self) -> str:
        doc = {
            "config": self.config.describe(),
            "start": str(self.calendar[0]),
            "end": str(self.calendar[-1]),
            "final_equity": self.final_equity,
            "annualized_return": self.annualized_return,
            "participation_rate": self.participation_rate,
            "eligible_days": self.eligible_days,
            "trading_days": self.trading_days,
            "realized_pnl": self.ledger.realized_pnl,
            "total_costs": self.ledger.total_costs,
            "benchmark_final": None if self.benchmark_curve is None else float(self.benchmark_curve[-1]),
            "holdings_final": float(self.holdings_curve[-1]),
            "window_histograms": None
            if self.window_histograms is None
            else {kind: {str(k): v for k, v in sorted(h.items())} for kind, h in self.window_histograms.items()},
        }
        return json.dumps(doc, indent=2) + "\n"

    def equity_csv(self) -> str:
        out = io.StringIO()
        out.write("date,strategy,benchmark,holdings\n")
        for i, day in enumerate(self.calendar):
            bench = "" if self.benchmark_curve is None else f"{self.benchmark_curve[i]:.2f}"
            out.write(f"{day},{self.equity_curve[i]:.2f},{bench},{self.holdings_curve[i]:.2f}\n")
        return out.getvalue()

    def window_hist_csv(self) -> str:
        out = io.StringIO()
        out.write("value,count,kind\n")
        for kind in ("sampling", "prediction"):
            for value, count in sorted((self.window_histograms or {}).get(kind, {}).items()):
                out.write(f"{value},{count},{kind}\n")
        return out.getvalue()


def annualize(equity_curve) -> float:
    """Compound yearly growth, ``(final / initial) ** (252 / days) - 1``.

    ``days`` is the number of daily steps in the curve, ``len(curve) - 1``.
    """
    curve = np.asarray(equity_curve, dtype=float)
    if curve.ndim != 1 or len(curve) < 2:
        raise ValidationError("annualize needs a curve of at least two points")
    if curve[0] <= 0 or curve[-1] <= 0:
        raise NumericalError("cannot annualize a non-positive equity curve")
    return float((curve[-1] / curve[0]) ** (TRADING_DAYS_PER_YEAR / (len(curve) - 1)) - 1.0)


def tradeable_rows(panel: PricePanel, config: BacktestConfig) -> np.ndarray:
    rows = [i for i, s in enumerate(panel.symbols) if config.trade_benchmark or s != config.benchmark]
    if not rows:
        raise ConfigurationError("no tradeable symbols once the benchmark is excluded")
    return np.array(rows)


def holdings_curve(panel: PricePanel, config: BacktestConfig) -> np.ndarray:
    """Equal-dollar buy-and-hold of the tradeable symbols from day 0."""
    rows = tradeable_rows(panel, config)
    per_name = config.initial_capital / len(rows) - config.cost_per_position
    prices = panel.prices[rows]
    return (per_name * prices / prices[:, :1]).sum(axis=0)


def benchmark_curves(panel: PricePanel, config: BacktestConfig) -> tuple[np.ndarray, np.ndarray]:
    """``(benchmark_curve, holdings_curve)``; both pay one entry cost per name."""
    if config.benchmark not in panel.symbols:
        raise ConfigurationError(f"benchmark symbol {config.benchmark!r} is not in the panel")
    bench = panel.prices[panel.symbols.index(config.benchmark)]
    curve = (config.initial_capital - config.cost_per_position) * bench / bench[0]
    return curve, holdings_curve(panel, config)


class _Book:
    def __init__(self, panel: PricePanel, config: BacktestConfig):
        self.panel = panel
        self.config = config
        self.cash = config.initial_capital
        self.open: list[Position] = []
        self.ledger = TradeLedger(config.initial_capital)

    def close_due(self, day: int) -> None:
        cost = self.config.cost_per_position
        still_open = []
        for pos in self.open:
            if pos.exit_day != day:
                still_open.append(pos)
                continue
            price = float(self.panel.prices[self.panel.symbols.index(pos.symbol), day])
            delta = pos.value(price) - cost
            self.cash += delta
            self.ledger.realized_pnl += pos.pnl(price)
            self.ledger.total_costs += cost
            self.ledger.entries.append(
                LedgerEntry(day, self.panel.calendar[day], "close", pos.symbol, pos.direction, pos.shares, price, delta, cost)
            )
        self.open = still_open

    def equity(self, day: int) -> float:
        prices = self.panel.prices[:, day]
        return self.cash + sum(pos.value(float(prices[self.panel.symbols.index(pos.symbol)])) for pos in self.open)

    def hold(self, day: int) -> None:
        self.ledger.entries.append(LedgerEntry(day, self.panel.calendar[day], "hold"))

    def open_cohort(self, day: int, rows: np.ndarray, calls: np.ndarray, l: int) -> int:
        """Open one position per non-flat call; returns how many were opened."""
        cfg = self.config
        wanted = [(r, "long") for r, c in zip(rows, calls) if c == UP]
        if cfg.allow_short:
            wanted += [(r, "short") for r, c in zip(rows, calls) if c == DOWN]
        wanted.sort()
        if not wanted:
            return 0
        equity = self.equity(day)
        if equity <= 0:
            return 0
        budget = equity if cfg.entry_mode == "cycle" else equity / l
        budget = min(budget, self.cash)
        allocation = budget / len(wanted) - cfg.cost_per_position
        if allocation <= 0:
            return 0
        for row, direction in wanted:
            price = float(self.panel.prices[row, day])
            pos = Position(self.panel.symbols[row], direction, allocation / price, price, day, day + l, allocation)
            delta = -(allocation + cfg.cost_per_position)
            self.cash += delta
            self.ledger.total_costs += cfg.cost_per_position
            self.open.append(pos)
            self.ledger.entries.append(
                LedgerEntry(day, self.panel.calendar[day], "open", pos.symbol, direction, pos.shares, price, delta, cfg.cost_per_position)
            )
        return len(wanted)


def _simulate(panel: PricePanel, config: BacktestConfig, decision_days: range, choose) -> BacktestReport:
    """Run the day loop; ``choose(t)`` returns ``(m, l, hotspot, trade)``."""
    rows = tradeable_rows(panel, config)
    book = _Book(panel, config)
    equity = np.empty(panel.n_days)
    decisions: list[Decision] = []
    eligible = traded = 0
    sampling: Counter = Counter()
    prediction: Counter = Counter()
    days = set(decision_days)

    for t in range(panel.n_days):
        book.close_due(t)
        if t in days and not (config.entry_mode == "cycle" and book.open):
            eligible += 1
            m, l, hotspot, calls = choose(t)
            opened = book.open_cohort(t, rows, calls, l) if calls is not None else 0
            if opened:
                traded += 1
                sampling[m] += 1
                prediction[l] += 1
            else:
                book.hold(t)
            decisions.append(Decision(t, m, l, hotspot, opened))
        equity[t] = book.equity(t)

    if eligible == 0:
        raise EmptyReportError("the panel leaves no eligible trading day")
    if book.open:
        raise AssertionError("positions left open past the last day")
    book.ledger.equity_curve = equity
    bench = benchmark_curves(panel, config)[0] if config.benchmark in panel.symbols else None
    adaptive = not isinstance(config.algorithm, Fixed)
    return BacktestReport(
        config=config,
        calendar=panel.calendar,
        equity_curve=equity,
        benchmark_curve=bench,
        holdings_curve=holdings_curve(panel, config),
        participation_rate=traded / eligible,
        eligible_days=eligible,
        trading_days=traded,
        ledger=book.ledger,
        decisions=decisions,
        window_histograms={"sampling": dict(sampling), "prediction": dict(prediction)} if adaptive else None,
    )


def run_fixed(panel: PricePanel, config: BacktestConfig) -> BacktestReport:
    """Trade the fixed cell ``(m, l)`` on every day it can be fitted and closed."""
    algo = config.algorithm
    if not isinstance(algo, Fixed):
        raise ConfigurationError("run_fixed needs a Fixed algorithm")
    spec = GridSpec((algo.m,), (algo.l,), config.grid.rank_policy, config.grid.log_prices)
    days = range(algo.m - 1, panel.n_days - algo.l)
    if len(days) == 0:
        raise EmptyReportError(f"panel of {panel.n_days} days is too short for cell ({algo.m}, {algo.l})")
    cube = SignalCube(panel, spec, (algo.m - 1, days[-1]), tradeable_rows(panel, config))
    return _simulate(panel, config, days, lambda t: (algo.m, algo.l, None, cube.call(t, algo.m, algo.l)))


def _run_adaptive(panel: PricePanel, config: BacktestConfig, gated: bool) -> BacktestReport:
    algo = config.algorithm
    lookback = algo.lookback
    spec = config.grid
    days = range(lookback, panel.n_days - max(spec.l_values))
    if len(days) == 0:
        raise EmptyReportError(f"panel of {panel.n_days} days is too short for a lookback of {lookback}")
    cube = SignalCube(panel, spec, (0, days[-1]), tradeable_rows(panel, config))
    threshold = algo.threshold if gated else DEFAULT_THRESHOLD

    def choose(t):
        hotspot = find_hotspot(cube.grid(t - lookback, t - 1), threshold)
        if hotspot is None:
            return None, None, None, None
        m, l = hotspot.center
        if gated and not hotspot.qualified:
            return m, l, hotspot, None
        return m, l, hotspot, cube.call(t, m, l)

    return _simulate(panel, config, days, choose)


def run_sliding_max(panel: PricePanel, config: BacktestConfig) -> BacktestReport:
    """Retrain on the previous ``lookback`` days each day and trade the best cell."""
    if not isinstance(config.algorithm, SlidingMax):
        raise ConfigurationError("run_sliding_max needs a SlidingMax algorithm")
    return _run_adaptive(panel, config, gated=False)


def run_hotspot_gated(panel: PricePanel, config: BacktestConfig) -> BacktestReport:
    """As :func:`run_sliding_max`, but trade only on qualified hot-spots."""
    if not isinstance(config.algorithm, HotspotGated):
        raise ConfigurationError("run_hotspot_gated needs a HotspotGated algorithm")
    return _run_adaptive(panel, config, gated=True)


def run(panel: PricePanel, config: BacktestConfig) -> BacktestReport:
    runner = {Fixed: run_fixed, SlidingMax: run_sliding_max, HotspotGated: run_hotspot_gated}[type(config.algorithm)]
    return runner(panel, config)
