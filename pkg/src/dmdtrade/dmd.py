"""Exact DMD of a window of price snapshots.

A window ``X = [x_1 ... x_M]`` (companies by days) is split into the shifted
pair ``X1 = [x_1 ... x_{M-1}]`` and ``X2 = [x_2 ... x_M]``.  With the thin SVD
``X1 = U S V^T`` the reduced one-step operator is ``A~ = U^T X2 V S^-1``.  Its
eigenpairs ``(mu_k, y_k)`` give the modes ``psi_k = U y_k``, continuous rates
``omega_k = ln(mu_k) / dt`` and amplitudes ``b = pinv(Psi) x_1``, and the state
at time ``t`` (``t = 0`` at the first snapshot) is ``Re(Psi diag(e^{omega t}) b)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDataError, NumericalError, ValidationError, WindowTooSmallError
from .linalg import PINV_RCOND, RankPolicy, eig_stack, eig_tolerance, pinv_apply

__all__ = [
    "DEFAULT_POLICY",
    "DmdModel",
    "RankPolicy",
    "SnapshotWindow",
    "SpectrumSummary",
    "fit",
    "forecast_windows",
    "predict",
    "predict_many",
    "reconstruct",
    "spectrum_summary",
]

DEFAULT_POLICY = RankPolicy.threshold(1e-10)

#: Eigenvalues with modulus below this are discarded before taking logs.
MIN_EIGENVALUE_MODULUS = 1e-12


@dataclass(frozen=True)
class SnapshotWindow:
    """``data`` is N x M, one column per snapshot, spaced ``dt`` apart."""

    data: np.ndarray
    dt: float = 1.0
    start_index: int = 0

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise ValidationError(f"snapshot data must be 2-D, got shape {data.shape}")
        if data.shape[1] < 2:
            raise WindowTooSmallError(f"DMD needs at least 2 snapshots, got {data.shape[1]}")
        if data.shape[0] < 1:
            raise ValidationError("snapshot data has no rows")
        if not np.all(np.isfinite(data)):
            raise ValidationError("snapshot data contains non-finite values")
        if not self.dt > 0:
            raise ValidationError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "data", data)

    @property
    def n_series(self) -> int:
        return self.data.shape[0]

    @property
    def n_snapshots(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class DmdModel:
    modes: np.ndarray
    mu: np.ndarray
    omega: np.ndarray
    amplitudes: np.ndarray
    dt: float
    n_snapshots: int
    sigma_spectrum: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def rank(self) -> int:
        return len(self.mu)


def _fit_stack(stack: np.ndarray, policy: RankPolicy, dt: float) -> list:
    """Fit every window of a B x N x M stack; returns a model or error per window.

    All LAPACK work runs as stacked calls, so fitting one window alone and
    fitting it inside a larger stack perform the same arithmetic.
    """
    n_batch, _, n_snap = stack.shape
    x1, x2 = stack[:, :, :-1], stack[:, :, 1:]
    u, s, vt = np.linalg.svd(x1, full_matrices=False)
    s0 = s[:, 0]
    numerical_rank = np.count_nonzero(s > PINV_RCOND * s[:, :1], axis=1)
    if policy.mode == "full":
        chosen = np.full(n_batch, s.shape[1])
    else:
        chosen = np.array([policy.select(row) for row in s])
    ranks = np.minimum(chosen, numerical_rank)
    ranks[s0 == 0.0] = 0

    results: list = [None] * n_batch
    for b in np.flatnonzero(ranks == 0):
        results[b] = DegenerateDataError("no singular value survives the rank policy")

    for k in np.unique(ranks[ranks > 0]):
        idx = np.flatnonzero(ranks == k)
        uk = u[idx, :, :k]
        vk = np.swapaxes(vt[idx, :k, :], 1, 2)
        a_tilde = (np.swapaxes(uk, 1, 2) @ x2[idx] @ vk) / s[idx, None, :k]
        values, vectors, residual = eig_stack(a_tilde)
        tolerance = eig_tolerance(a_tilde)
        modes = uk @ vectors
        x0 = stack[idx, :, 0].astype(complex)

        kept = np.abs(values) >= MIN_EIGENVALUE_MODULUS
        whole = kept.all(axis=1)
        amplitudes: dict[int, np.ndarray] = {}
        if whole.any():
            sel = np.flatnonzero(whole)
            pu, ps, pvh = np.linalg.svd(modes[sel], full_matrices=False)
            for i, j in enumerate(sel):
                amplitudes[j] = pinv_apply(pu[i], ps[i], pvh[i], x0[j])
        for j in np.flatnonzero(~whole):
            if kept[j].any():
                pu, ps, pvh = np.linalg.svd(modes[j][None, :, kept[j]], full_matrices=False)
                amplitudes[j] = pinv_apply(pu[0], ps[0], pvh[0], x0[j])

        for j, b in enumerate(idx):
            if residual[j] > tolerance[j]:
                results[b] = NumericalError(f"eigen-residual {residual[j]:.3e} exceeds tolerance", residual[j])
                continue
            if j not in amplitudes:
                results[b] = DegenerateDataError("every DMD eigenvalue is numerically zero")
                continue
            keep = kept[j]
            mu = values[j][keep]
            model = DmdModel(
                modes=modes[j][:, keep],
                mu=mu,
                omega=np.log(mu) / dt,
                amplitudes=amplitudes[j],
                dt=dt,
                n_snapshots=n_snap,
                sigma_spectrum=s[b, : numerical_rank[b]].copy(),
            )
            for arr in (model.modes, model.mu, model.omega, model.amplitudes, model.sigma_spectrum):
                arr.setflags(write=False)
            results[b] = model
    return results


def fit(window: SnapshotWindow, policy: RankPolicy = DEFAULT_POLICY) -> DmdModel:
    """Fit the exact-DMD model to ``window``."""
    if not isinstance(window, SnapshotWindow):
        window = SnapshotWindow(np.asarray(window, dtype=float))
    result = _fit_stack(window.data[None], policy, window.dt)[0]
    if isinstance(result, Exception):
        raise result
    return result


def reconstruct(model: DmdModel, t) -> np.ndarray:
    """Model state at absolute time(s) ``t`` (``t = 0`` is the first snapshot).

    A scalar ``t`` gives a length-N vector; an array of times gives N x len(t).
    """
    t = np.asarray(t, dtype=float)
    if t.ndim == 0:
        return reconstruct(model, t[None])[:, 0]
    dynamics = np.exp(np.outer(model.omega, t)) * model.amplitudes[:, None]
    return (model.modes @ dynamics).real


def predict(model: DmdModel, steps_ahead: float) -> np.ndarray:
    """Forecast ``steps_ahead`` steps past the last snapshot of the window."""
    if steps_ahead < 0:
        raise ValidationError(f"steps_ahead must be >= 0, got {steps_ahead}")
    return predict_many(model, [steps_ahead])[:, 0]


def predict_many(model: DmdModel, steps_ahead) -> np.ndarray:
    """Forecasts for several horizons at once, shape N x len(steps_ahead)."""
    steps = np.asarray(steps_ahead, dtype=float)
    if np.any(steps < 0):
        raise ValidationError("steps_ahead must be >= 0")
    return reconstruct(model, (model.n_snapshots - 1 + steps) * model.dt)


@dataclass(frozen=True)
class SpectrumSummary:
    energy_fractions: np.ndarray
    omega: np.ndarray
    mode_weights: np.ndarray
    hist_counts: np.ndarray
    hist_edges: np.ndarray

    @property
    def growth_count(self) -> int:
        return int(np.count_nonzero(self.omega.real > 0))


def spectrum_summary(model: DmdModel, bins: int = 10) -> SpectrumSummary:
    """Diagnostics for plotting: SVD energy, rates, mode weights, |omega| histogram."""
    sigma = np.asarray(model.sigma_spectrum, dtype=float)
    if sigma.size and sigma.sum() > 0:
        fractions = sigma / sigma.sum()
    else:
        fractions = np.empty(0)
    counts, edges = np.histogram(np.abs(model.omega), bins=bins)
    return SpectrumSummary(
        energy_fractions=fractions,
        omega=np.asarray(model.omega),
        mode_weights=np.abs(model.modes),
        hist_counts=counts,
        hist_edges=edges,
    )


def forecast_windows(stack, steps_ahead, policy: RankPolicy = DEFAULT_POLICY, dt: float = 1.0) -> np.ndarray:
    """Forecasts for a stack of equally sized windows, shape B x N x len(steps).

    Bit-for-bit the same as calling :func:`fit` and :func:`predict_many` on
    each window, only faster.
    """
    stack = np.asarray(stack, dtype=float)
    steps = np.asarray(steps_ahead, dtype=float)
    if stack.ndim != 3:
        raise ValidationError(f"expected a B x N x M stack, got shape {stack.shape}")
    n_batch, n_rows, n_snap = stack.shape
    out = np.empty((n_batch, n_rows, len(steps)))
    if n_batch == 0:
        return out
    if n_snap < 2:
        raise WindowTooSmallError(f"DMD needs at least 2 snapshots, got {n_snap}")
    if not np.all(np.isfinite(stack)):
        raise ValidationError("snapshot data contains non-finite values")
    for b, model in enumerate(_fit_stack(stack, policy, dt)):
        if isinstance(model, Exception):
            raise model
        out[b] = predict_many(model, steps)
    return out
