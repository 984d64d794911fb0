"""Figure data as CSV/JSON text: spectra, modes, success grids, hot-spots."""

from __future__ import annotations

import io
import json

import numpy as np

from .dmd import DmdModel, spectrum_summary
from .trainer import Hotspot


def energies_csv(model: DmdModel) -> str:
    summary = spectrum_summary(model)
    out = io.StringIO()
    out.write("k,sigma_k,fraction\n")
    for k, (sigma, frac) in enumerate(zip(model.sigma_spectrum, summary.energy_fractions), start=1):
        out.write(f"{k},{float(sigma)!r},{float(frac)!r}\n")
    return out.getvalue()


def eigenvalues_csv(model: DmdModel) -> str:
    out = io.StringIO()
    out.write("k,re_omega,im_omega,abs_mu\n")
    for k, (omega, mu) in enumerate(zip(model.omega, model.mu), start=1):
        out.write(f"{k},{float(omega.real)!r},{float(omega.imag)!r},{float(abs(mu))!r}\n")
    return out.getvalue()


def modes_csv(model: DmdModel, symbols) -> str:
    out = io.StringIO()
    header = ["symbol"] + [f"mode{k}_{part}" for k in range(1, model.rank + 1) for part in ("re", "im")]
    out.write(",".join(header) + "\n")
    for symbol, row in zip(symbols, model.modes):
        cells = [symbol] + [repr(float(x)) for z in row for x in (z.real, z.imag)]
        out.write(",".join(cells) + "\n")
    return out.getvalue()


def omega_hist_csv(model: DmdModel, bins: int = 10) -> str:
    summary = spectrum_summary(model, bins)
    out = io.StringIO()
    out.write("bin_lo,bin_hi,count\n")
    for lo, hi, count in zip(summary.hist_edges[:-1], summary.hist_edges[1:], summary.hist_counts):
        out.write(f"{float(lo)!r},{float(hi)!r},{int(count)}\n")
    return out.getvalue()


def hotspot_json(hotspot: Hotspot | None, threshold: float) -> str:
    if hotspot is None:
        doc = {
            "valid": False,
            "center_m": None,
            "center_l": None,
            "center_rate": None,
            "neighborhood_mean": None,
            "threshold": threshold,
            "qualified": False,
        }
    else:
        doc = {
            "valid": True,
            "center_m": hotspot.center[0],
            "center_l": hotspot.center[1],
            "center_rate": hotspot.center_rate,
            "neighborhood_mean": hotspot.neighborhood_mean,
            "n_neighbors": hotspot.n_neighbors,
            "threshold": hotspot.threshold,
            "qualified": bool(hotspot.qualified),
        }
    return json.dumps(doc, indent=2) + "\n"


def rate_matrix(grid) -> np.ndarray:
    """Success rates as an m x l array (NaN where invalid), for heatmaps."""
    return grid.success_rates
