"""Panel and system builders shared by the tests."""

import json
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from dmdtrade.market_data import PricePanel

START = date(2015, 1, 5)


def calendar(n_days, start=START):
    days, d = [], start
    while len(days) < n_days:
        if d.weekday() < 5:
            days.append(d)
        d += timedelta(days=1)
    return tuple(days)


def make_panel(prices, symbols=None, benchmark=None):
    prices = np.asarray(prices, dtype=float)
    symbols = symbols or tuple(f"T{i}" for i in range(prices.shape[0]))
    return PricePanel(tuple(symbols), calendar(prices.shape[1]), prices, benchmark)


def constant_panel(n_symbols=2, n_days=30, levels=(5.0, 7.0)):
    levels = np.resize(np.asarray(levels, float), n_symbols)
    return make_panel(np.repeat(levels[:, None], n_days, axis=1))


def geometric_panel(n_symbols=3, n_days=30, rate=2.0, benchmark=None):
    base = np.linspace(1.0, 3.0, n_symbols)
    symbols = None
    if benchmark:
        symbols = tuple(f"T{i}" for i in range(n_symbols - 1)) + (benchmark,)
    return make_panel(base[:, None] * rate ** np.arange(n_days)[None, :], symbols, benchmark)


def random_walk_panel(seed, n_symbols=5, n_days=120, vol=0.015, drift=0.0003, benchmark=None):
    rng = np.random.default_rng(seed)
    steps = rng.normal(drift, vol, size=(n_symbols, n_days))
    prices = 50.0 * rng.uniform(0.5, 2.0, size=(n_symbols, 1)) * np.exp(np.cumsum(steps, axis=1))
    symbols = None
    if benchmark:
        symbols = tuple(f"T{i}" for i in range(n_symbols - 1)) + (benchmark,)
    return make_panel(prices, symbols, benchmark)


def linear_system(seed, n, spectrum=None):
    """Real diagonalizable ``A`` with known spectrum, plus a start vector.

    Without an explicit ``spectrum`` a mix of real eigenvalues in [0.6, 1.1]
    and complex pairs of modulus [0.8, 1.05] is drawn, all at least 0.05 apart.
    """
    rng = np.random.default_rng(seed)
    if spectrum is None:
        n_pairs = int(rng.integers(0, n // 2 + 1))
        while True:
            values = []
            for _ in range(n_pairs):
                r, theta = rng.uniform(0.8, 1.05), rng.uniform(0.2, 1.0)
                values += [r * np.exp(1j * theta), r * np.exp(-1j * theta)]
            values += list(rng.uniform(0.6, 1.1, n - 2 * n_pairs))
            values = np.array(values, dtype=complex)
            gaps = np.abs(values[:, None] - values[None, :]) + np.eye(n)
            if gaps.min() > 0.05:
                break
    else:
        values = np.asarray(spectrum, dtype=complex)
        n_pairs = 0
    block = np.zeros((n, n))
    i = 0
    for k in range(n_pairs):
        z = values[2 * k]
        block[i : i + 2, i : i + 2] = [[z.real, -z.imag], [z.imag, z.real]]
        i += 2
    for z in values[2 * n_pairs :]:
        block[i, i] = z.real
        i += 1
    p = rng.normal(size=(n, n))
    a = p @ block @ np.linalg.inv(p)
    x0 = rng.normal(size=n)
    return a, values, x0


def trajectory(a, x0, n_snapshots):
    x = np.empty((len(x0), n_snapshots))
    x[:, 0] = x0
    for j in range(1, n_snapshots):
        x[:, j] = a @ x[:, j - 1]
    return x


def write_yahoo_csv(path, days, closes, descending=False, exact=False):
    rows = list(zip(days, closes))
    if descending:
        rows.reverse()
    fmt = repr if exact else "{:.6f}".format
    with open(path, "w", encoding="utf-8") as f:
        f.write("Date,Open,High,Low,Close,Adj Close,Volume\n")
        for d, c in rows:
            c = float(c)
            f.write(f"{d},{fmt(c)},{fmt(c * 1.01)},{fmt(c * 0.99)},{fmt(c)},{fmt(c)},1000\n")


def write_fixture(directory, prices, symbols=None, benchmark="SPY", config=None, exact=False):
    """Ticker CSVs, ``universe.json`` and ``config.json`` under ``directory``.

    Returns the config path.  ``config`` entries override the defaults; the
    output directory defaults to ``out`` next to the config.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    prices = np.asarray(prices, dtype=float)
    symbols = symbols or [f"T{i}" for i in range(prices.shape[0])]
    days = calendar(prices.shape[1])
    tickers = []
    for symbol, row in zip(symbols, prices):
        write_yahoo_csv(directory / f"{symbol}.csv", days, row, exact=exact)
        tickers.append({"symbol": symbol, "path": f"{symbol}.csv"})
    (directory / "universe.json").write_text(json.dumps({"tickers": tickers, "benchmark": benchmark}, indent=2))
    doc = {"universe": "universe.json", "out": "out", **(config or {})}
    path = directory / "config.json"
    path.write_text(json.dumps(doc, indent=2))
    return path
