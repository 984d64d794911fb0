"""Dynamic mode decomposition for trading on portfolios of daily prices."""

from .backtest import (
    BacktestConfig,
    BacktestReport,
    Fixed,
    HotspotGated,
    SlidingMax,
    annualize,
    benchmark_curves,
    run,
    run_fixed,
    run_hotspot_gated,
    run_sliding_max,
)
from .dmd import DmdModel, RankPolicy, SnapshotWindow, fit, predict, spectrum_summary
from .market_data import PricePanel, build_panel, load_ticker_csv, window
from .trainer import GridSpec, SuccessGrid, directional_signal, evaluate_cell, find_hotspot, train_grid

__version__ = "0.1.0"
