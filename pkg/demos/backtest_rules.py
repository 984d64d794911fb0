# The three trading rules on the same synthetic panel, against buy-and-hold.

import numpy as np

from dmdtrade import BacktestConfig, Fixed, HotspotGated, PricePanel, SlidingMax, benchmark_curves, run

rng = np.random.default_rng(2)

n_days = 400
market = rng.normal(0.0003, 0.01, n_days)
loads = np.r_[rng.uniform(0.8, 1.5, 5), 1.0]
noise = rng.normal(0, 0.012, size=(6, n_days))
noise[-1] = 0.0  # the benchmark is the market itself
prices = 50 * np.exp(np.cumsum(loads[:, None] * market + noise, axis=1))
calendar = tuple(np.busday_offset("2019-01-02", np.arange(n_days), roll="forward").astype(object))
panel = PricePanel(("H1", "H2", "H3", "H4", "H5", "SPY"), calendar, prices, benchmark="SPY")

# SPY is fitted with the others but never traded
bench, holdings = benchmark_curves(panel, BacktestConfig(Fixed(11, 5)))
print(f"benchmark   final {bench[-1]:>14,.2f}")
print(f"equal hold  final {holdings[-1]:>14,.2f}")

for algo in (Fixed(11, 5), SlidingMax(100), HotspotGated(100, 0.53)):
    report = run(panel, BacktestConfig(algo))
    print(f"{algo.name:<13} final {report.final_equity:>14,.2f}  annualized {report.annualized_return:+.2%}"
          f"  traded {report.participation_rate:.0%} of {report.eligible_days} days"
          f"  costs {report.ledger.total_costs:,.0f}")

# the adaptive rules record which windows they picked
gated = run(panel, BacktestConfig(HotspotGated(100)))
hist = gated.window_histograms["sampling"]
if hist:
    print("most used m:", max(hist, key=hist.get))

# cycle mode commits everything every l days instead of overlapping cohorts
cycle = run(panel, BacktestConfig(Fixed(11, 5), entry_mode="cycle"))
print(f"cycle mode final {cycle.final_equity:,.2f}")

# every dollar is accounted for
print("conservation error:", cycle.ledger.conservation_error())
print(cycle.ledger.to_csv().splitlines()[:4])
