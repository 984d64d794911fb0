"""Small dense linear-algebra kernels.

Thin, validated wrappers over LAPACK (through numpy) with the conventions the
DMD code relies on: descending singular values with a rank policy, unit-norm
eigenvectors in a fixed order, and a guarded minimum-norm least-squares solve.
Matrices here are small (tens of rows and columns), so the wrappers favour
checks over speed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DimensionError, NumericalError, ValidationError

#: Singular values below this fraction of the largest are treated as zero
#: whenever an inverse of the singular values is formed.
PINV_RCOND = 1e-12


@dataclass(frozen=True)
class RankPolicy:
    """How many singular triplets to keep.

    ``mode`` is ``"full"``, ``"fixed"`` (keep ``rank`` triplets) or
    ``"threshold"`` (drop ``sigma_k < eps * sigma_1``).
    """

    mode: str = "threshold"
    rank: int | None = None
    eps: float = 1e-10

    def __post_init__(self):
        if self.mode == "fixed":
            if self.rank is None or self.rank < 1:
                raise ValidationError("fixed rank policy needs rank >= 1")
        elif self.mode == "threshold":
            if not 0.0 < self.eps < 1.0:
                raise ValidationError("threshold eps must lie in (0, 1)")
        elif self.mode != "full":
            raise ValidationError(f"unknown rank policy mode {self.mode!r}")

    @classmethod
    def full(cls) -> "RankPolicy":
        return cls(mode="full")

    @classmethod
    def fixed(cls, rank: int) -> "RankPolicy":
        return cls(mode="fixed", rank=rank)

    @classmethod
    def threshold(cls, eps: float = 1e-10) -> "RankPolicy":
        return cls(mode="threshold", eps=eps)

    def select(self, sigma: np.ndarray) -> int:
        """Number of leading entries of a descending ``sigma`` to keep."""
        n = len(sigma)
        if self.mode == "full":
            return n
        if self.mode == "fixed":
            if self.rank > n:
                raise ValidationError(f"fixed rank {self.rank} exceeds min(rows, cols) = {n}")
            return self.rank
        if n == 0 or sigma[0] == 0.0:
            return 0
        return int(np.count_nonzero(sigma >= self.eps * sigma[0]))


@dataclass(frozen=True)
class SvdResult:
    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    @property
    def rank_used(self) -> int:
        return len(self.sigma)

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.sigma) @ self.v.T


@dataclass(frozen=True)
class EigResult:
    values: np.ndarray
    vectors: np.ndarray


def _as_matrix(a, dtype) -> np.ndarray:
    arr = np.asarray(a, dtype=dtype)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("matrix contains non-finite entries")
    return arr


def _frozen(*arrays: np.ndarray) -> None:
    for arr in arrays:
        arr.setflags(write=False)


def svd(a, truncation: RankPolicy | None = None) -> SvdResult:
    """Thin SVD ``a = u @ diag(sigma) @ v.T`` of a real matrix.

    With the default ``truncation=None`` every singular triplet is kept.
    """
    a = _as_matrix(a, float)
    policy = truncation or RankPolicy.full()
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    k = policy.select(s)
    u, s, v = u[:, :k].copy(), s[:k].copy(), vt[:k].T.copy()
    _frozen(u, s, v)
    return SvdResult(u, s, v)


def eig_stack(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Eigenpairs of a B x K x K stack, ordered and normalised as in :func:`eig`.

    Returns ``(values, vectors, residual)`` where ``residual[b]`` is the largest
    ``|A y_k - mu_k y_k|`` over the pairs of matrix ``b``.  No validation.
    """
    try:
        values, vectors = np.linalg.eig(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver did not converge: {exc}", residual=float("nan")) from exc
    values = values.astype(complex)
    vectors = vectors.astype(complex)
    order = np.lexsort((-values.imag, -values.real), axis=-1)
    values = np.take_along_axis(values, order, axis=1)
    vectors = np.take_along_axis(vectors, order[:, None, :], axis=2)
    vectors = vectors / np.linalg.norm(vectors, axis=1, keepdims=True)
    residual = np.linalg.norm(a @ vectors - vectors * values[:, None, :], axis=1).max(axis=1)
    return values, vectors, residual


def eig_tolerance(a: np.ndarray) -> np.ndarray:
    """Largest acceptable eigen-residual for each matrix of a stack."""
    return 1e-8 * np.linalg.norm(a, axis=(-2, -1)) + 1e-300


def eig(a) -> EigResult:
    """Eigenpairs of a square matrix.

    Values come back ordered by descending real part, ties by descending
    imaginary part; each eigenvector column has unit 2-norm.  Raises
    :class:`NumericalError` (with ``residual`` set) when LAPACK fails or the
    pairs do not satisfy ``|A y - mu y| <= 1e-8 |A|_F``.
    """
    a = np.asarray(a)
    a = _as_matrix(a, complex if np.iscomplexobj(a) else float)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"eig needs a square matrix, got shape {a.shape}")
    values, vectors, residual = eig_stack(a[None])
    if residual[0] > eig_tolerance(a):
        raise NumericalError(f"eigen-residual {residual[0]:.3e} exceeds tolerance", residual=float(residual[0]))
    values, vectors = values[0], vectors[0]
    _frozen(values, vectors)
    return EigResult(values, vectors)


Vector = Union[np.ndarray, list]


def pseudo_inverse_solve(a, rhs: Vector) -> np.ndarray:
    """Minimum-norm least-squares solution of ``a @ x = rhs``."""
    a = _as_matrix(a, complex)
    rhs = np.asarray(rhs, dtype=complex)
    if rhs.ndim != 1 or rhs.shape[0] != a.shape[0]:
        raise ValidationError(f"rhs of length {rhs.shape} does not match {a.shape[0]} rows")
    if not np.all(np.isfinite(rhs)):
        raise ValidationError("rhs contains non-finite entries")
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    if s[0] == 0.0:
        return np.zeros(a.shape[1], dtype=complex)
    return pinv_apply(u, s, vh, rhs)


def pinv_apply(u: np.ndarray, s: np.ndarray, vh: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """``pinv(A) @ rhs`` from a precomputed thin SVD ``A = u diag(s) vh``."""
    keep = s > PINV_RCOND * s[0]
    coeffs = (u[:, keep].conj().T @ rhs) / s[keep]
    return vh[keep].conj().T @ coeffs
