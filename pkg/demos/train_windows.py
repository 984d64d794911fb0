# Grid search over (m, l) and the 3x3 hot-spot check.

import numpy as np

from dmdtrade import GridSpec, PricePanel, evaluate_cell, find_hotspot, train_grid
from dmdtrade.reporting import rate_matrix

rng = np.random.default_rng(1)

# five tickers on a shared market factor, one year of trading days
n_days = 252
market = rng.normal(0.0004, 0.01, n_days)
prices = 40 * np.exp(np.cumsum(market + rng.normal(0, 0.012, size=(5, n_days)), axis=1))
calendar = tuple(np.busday_offset("2022-01-03", np.arange(n_days), roll="forward").astype(object))
panel = PricePanel(tuple("ABCDE"), calendar, prices)

# one cell first: success rate of the 11-day window forecasting 5 days ahead
cell = evaluate_cell(panel, 11, 5)
print(f"(11, 5): {cell.n_correct}/{cell.n_predictions} = {cell.success_rate:.3f}")

# the full grid trains every cell on the same span; days before the span
# may feed a window, but only outcomes inside it are scored
spec = GridSpec()
grid = train_grid(panel, spec, span=(100, n_days - 1))
rates = rate_matrix(grid)
print("grid shape (m x l):", rates.shape)
print("best rate %.3f, worst %.3f" % (np.nanmax(rates), np.nanmin(rates)))

hot = find_hotspot(grid)
print("hot-spot:", hot.center, "rate %.3f" % hot.center_rate,
      "neighbourhood mean %.3f" % hot.neighborhood_mean, "qualified" if hot.qualified else "not qualified")

# the same check against a stricter threshold
print("at 0.60:", find_hotspot(grid, threshold=0.60).qualified)

# small grids are cheap, handy for quick looks
small = train_grid(panel, GridSpec.ranges(2, 6, 1, 3))
print(small.to_csv())
