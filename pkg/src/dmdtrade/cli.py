"""Command-line front end: ``dmdtrade {decompose,train,backtest,version}``.

Each command reads a JSON run configuration, loads the ticker universe and
writes its artifacts into the output directory.  Artifacts are staged in a
temporary directory and only moved into place once all of them are written.
Exit codes: 0 success, 1 validation error, 2 data error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import json
import os
import shutil
import sys
import tempfile
from dataclasses import dataclass, field, replace
from datetime import date
from pathlib import Path

from . import __version__
from .backtest import BacktestConfig, Fixed, HotspotGated, SlidingMax, benchmark_curves, run, tradeable_rows
from .dmd import RankPolicy, fit
from .errors import ConfigurationError, DataError, DmdTradeError, ValidationError
from .market_data import PricePanel, build_panel, load_ticker_csv, load_universe, window
from .reporting import energies_csv, eigenvalues_csv, hotspot_json, modes_csv, omega_hist_csv
from .trainer import DEFAULT_THRESHOLD, GridSpec, find_hotspot, train_grid

ALGORITHMS = ("fixed", "sliding_max", "hotspot_gated")


@dataclass
class RunConfig:
    universe: Path | None = None
    start: date | None = None
    end: date | None = None
    price_field: str = "adj_close"
    alignment: str = "intersection"
    grid: dict = field(default_factory=dict)
    backtest: dict = field(default_factory=dict)
    decompose: dict = field(default_factory=dict)
    out: Path = Path("out")
    seed: int = 0

    def grid_spec(self) -> GridSpec:
        g = self.grid
        rank = g.get("rank", {"mode": "threshold", "eps": 1e-10})
        policy = RankPolicy(mode=rank.get("mode", "threshold"), rank=rank.get("rank"), eps=rank.get("eps", 1e-10))
        return GridSpec.ranges(
            g.get("m_min", 2), g.get("m_max", 25), g.get("l_min", 1), g.get("l_max", 10),
            rank_policy=policy, log_prices=bool(g.get("log_prices", False)),
        )

    def backtest_config(self, benchmark: str) -> BacktestConfig:
        b = self.backtest
        name = b.get("algorithm", "fixed")
        if name == "fixed":
            algo = Fixed(int(b.get("m", 11)), int(b.get("l", 5)))
        elif name == "sliding_max":
            algo = SlidingMax(int(b.get("lookback", 100)))
        elif name == "hotspot_gated":
            algo = HotspotGated(int(b.get("lookback", 100)), float(b.get("threshold", DEFAULT_THRESHOLD)))
        else:
            raise ConfigurationError(f"unknown algorithm {name!r}; expected one of {ALGORITHMS}")
        return BacktestConfig(
            algorithm=algo,
            initial_capital=float(b.get("initial_capital", 1_000_000.0)),
            cost_per_position=float(b.get("cost_per_position", 8.0)),
            entry_mode=b.get("entry_mode", "cohort"),
            allow_short=bool(b.get("allow_short", True)),
            grid=self.grid_spec(),
            benchmark=b.get("benchmark", benchmark),
            trade_benchmark=bool(b.get("trade_benchmark", False)),
        )


def _date(text, key: str) -> date | None:
    if text is None:
        return None
    try:
        return date.fromisoformat(str(text))
    except ValueError:
        raise ValidationError(f"{key}: {text!r} is not a YYYY-MM-DD date") from None


def load_config(path: Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError(f"config {path} must be a JSON object")
    known = set(RunConfig.__dataclass_fields__)
    unknown = set(doc) - known
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    base = Path(path).parent
    cfg = RunConfig(**{k: v for k, v in doc.items() if k not in ("universe", "out", "start", "end")})
    cfg.universe = base / doc["universe"] if "universe" in doc else None
    cfg.out = base / doc.get("out", "out")
    cfg.start = _date(doc.get("start"), "start")
    cfg.end = _date(doc.get("end"), "end")
    if cfg.start and cfg.end and cfg.start > cfg.end:
        raise ValidationError(f"empty date range {cfg.start}..{cfg.end}")
    return cfg


def apply_flags(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    cfg = replace(cfg, grid=dict(cfg.grid), backtest=dict(cfg.backtest), decompose=dict(cfg.decompose))
    if args.out is not None:
        cfg.out = Path(args.out)
    if args.price_field is not None:
        cfg.price_field = args.price_field
    if args.algorithm is not None:
        cfg.backtest["algorithm"] = args.algorithm
    if args.m is not None:
        cfg.backtest["m"] = args.m
        cfg.decompose["m"] = args.m
    if args.l is not None:
        cfg.backtest["l"] = args.l
    if args.end_date is not None:
        cfg.decompose["end_date"] = args.end_date
    return cfg


def load_panel(cfg: RunConfig) -> tuple[PricePanel, str]:
    if cfg.universe is None:
        raise ValidationError("no universe file configured")
    entries, benchmark = load_universe(cfg.universe)
    series = [load_ticker_csv(p, symbol) for symbol, p in entries]
    panel = build_panel(series, cfg.price_field, cfg.alignment, cfg.start, cfg.end, benchmark)
    return panel, benchmark


def cmd_decompose(cfg: RunConfig) -> dict[str, str]:
    panel, _ = load_panel(cfg)
    m = int(cfg.decompose.get("m", 18))
    end_date = _date(cfg.decompose.get("end_date"), "end_date")
    if end_date is None:
        end_index = panel.n_days - 1
    else:
        candidates = [i for i, d in enumerate(panel.calendar) if d <= end_date]
        if not candidates:
            raise DataError(f"no trading day on or before {end_date}")
        end_index = candidates[-1]
    model = fit(window(panel, end_index, m), cfg.grid_spec().rank_policy)
    return {
        "energies.csv": energies_csv(model),
        "eigenvalues.csv": eigenvalues_csv(model),
        "modes.csv": modes_csv(model, panel.symbols),
        "omega_hist.csv": omega_hist_csv(model, int(cfg.decompose.get("bins", 10))),
    }


def cmd_train(cfg: RunConfig) -> dict[str, str]:
    panel, benchmark = load_panel(cfg)
    bt = cfg.backtest_config(benchmark)
    grid = train_grid(panel, cfg.grid_spec(), rows=tradeable_rows(panel, bt))
    threshold = float(cfg.backtest.get("threshold", DEFAULT_THRESHOLD))
    return {
        "success_grid.csv": grid.to_csv(),
        "hotspot.json": hotspot_json(find_hotspot(grid, threshold), threshold),
    }


def cmd_backtest(cfg: RunConfig) -> dict[str, str]:
    panel, benchmark = load_panel(cfg)
    bt = cfg.backtest_config(benchmark)
    benchmark_curves(panel, bt)
    report = run(panel, bt)
    files = {"report.json": report.to_json(), "equity.csv": report.equity_csv(), "ledger.csv": report.ledger.to_csv()}
    if report.window_histograms is not None:
        files["window_hist.csv"] = report.window_hist_csv()
    return files


COMMANDS = {"decompose": cmd_decompose, "train": cmd_train, "backtest": cmd_backtest}


def write_artifacts(out: Path, files: dict[str, str]) -> None:
    """Stage every file, then move the whole set into ``out``."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=".dmdtrade-", dir=out.parent))
    try:
        for name, text in files.items():
            (staging / name).write_text(text, encoding="utf-8", newline="\n")
        if not out.exists():
            os.replace(staging, out)
            return
        for name in files:
            os.replace(staging / name, out / name)
    finally:
        if staging.exists():
            shutil.rmtree(staging)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--out", help="output directory (overrides config)")
    common.add_argument("--algorithm", choices=ALGORITHMS)
    common.add_argument("--m", type=int, help="sampling window in days")
    common.add_argument("--l", type=int, help="prediction window in days")
    common.add_argument("--price-field", choices=("open", "high", "low", "close", "adj_close"))
    common.add_argument("--end-date", help="last day of the decompose window (YYYY-MM-DD)")

    parser = argparse.ArgumentParser(prog="dmdtrade", description="DMD decomposition, window training and backtests over daily prices.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("decompose", parents=[common], help="DMD of one sampling window")
    sub.add_parser("train", parents=[common], help="success-rate grid and hot-spot")
    sub.add_parser("backtest", parents=[common], help="run a trading rule against benchmarks")
    sub.add_parser("version", help="print the package version")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "version":
        print(__version__)
        return 0
    try:
        cfg = apply_flags(load_config(args.config), args)
        files = COMMANDS[args.command](cfg)
        write_artifacts(cfg.out, files)
    except DmdTradeError as exc:
        print(f"dmdtrade {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"dmdtrade {args.command}: {exc}", file=sys.stderr)
        return DataError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
