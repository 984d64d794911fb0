# DMD of one sampling window: spectrum, energies and a short forecast.
#
# Prices here come from a known linear system so the recovered eigenvalues
# can be checked against the truth.

import numpy as np

from dmdtrade import PricePanel, fit, predict, spectrum_summary, window
from dmdtrade.dmd import predict_many

rng = np.random.default_rng(0)

# four tickers mixing one growing, one flat and two decaying directions
basis = np.abs(rng.normal(1.0, 0.3, size=(4, 4)))
mu_true = np.array([1.02, 1.0, 0.97, 0.9])
weights = np.array([40.0, 30.0, 20.0, 10.0])
days = np.arange(40)
prices = basis @ (weights[:, None] * mu_true[:, None] ** days)

calendar = tuple(np.busday_offset("2021-01-04", days, roll="forward").astype(object))
panel = PricePanel(("AAA", "BBB", "CCC", "DDD"), calendar, prices)

# an 18-day window ending on day 30
snapshots = window(panel, 30, 18)
model = fit(snapshots)
print("rank used:", model.rank)
print("recovered mu:", np.round(np.sort(model.mu.real)[::-1], 10))
print("true mu:     ", mu_true)

# growth rates per day; Re(omega) > 0 is a growing mode
summary = spectrum_summary(model)
for k, (omega, energy) in enumerate(zip(model.omega, summary.energy_fractions), start=1):
    print(f"mode {k}: omega = {omega.real:+.5f}{omega.imag:+.5f}j  energy {energy:.3e}")
# the mu = 1 mode sits on the boundary, so rounding decides which side it lands
print("growing modes:", summary.growth_count)

# forecast l days past the window and compare with what actually happened
for l in (1, 5, 9):
    err = np.abs(predict(model, l) - prices[:, 30 + l]).max()
    print(f"l={l}: max abs forecast error {err:.2e}")

# many horizons at once, one column per horizon
print(predict_many(model, [1, 2, 3]).shape)

# real prices are not linear; a random walk window still fits, but the
# spectrum is just noise around mu = 1
walk = 50 * np.exp(np.cumsum(rng.normal(0, 0.01, size=(4, 40)), axis=1))
noisy = fit(window(PricePanel(panel.symbols, calendar, walk), 30, 18))
print("random walk |mu|:", np.round(np.abs(noisy.mu), 3))
