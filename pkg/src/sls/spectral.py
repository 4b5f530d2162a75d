"""Thin SVD of the centered logit buffer and the derived projection operators.

The buffer has at most ``window`` rows, so the decomposition is cheap; the
meaningful contract is the rank-``m_eff`` orthogonal projector spanned by the
leading right singular vectors.  Column signs of the basis are unspecified
(the projector is sign-invariant).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InputError


@dataclass(frozen=True)
class CenteredBuffer:
    """Column-centered buffer matrix together with the subtracted mean.

    ``matrix`` holds one row per stored step; every column sums to zero up to
    roundoff.  The mean is stored rather than recomputed so the original rows
    can be reconstructed (to float64 roundoff) as ``matrix + mean``.
    """

    matrix: np.ndarray  # (t_b, k)
    mean: np.ndarray  # (k,)

    def __post_init__(self):
        matrix = np.ascontiguousarray(self.matrix, dtype=np.float64)
        mean = np.ascontiguousarray(self.mean, dtype=np.float64)
        if matrix.ndim != 2:
            raise InputError(f"centered buffer must be 2-D, got shape {matrix.shape}")
        if mean.shape != (matrix.shape[1],):
            raise InputError(
                f"mean length {mean.shape} does not match buffer width {matrix.shape[1]}"
            )
        matrix.setflags(write=False)
        mean.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "mean", mean)

    @property
    def t_b(self) -> int:
        return self.matrix.shape[0]

    @property
    def k(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class SpectralBasis:
    """Orthonormal basis (columns) of the dominant logit-variation subspace."""

    basis: np.ndarray  # (k, m_eff), orthonormal columns
    singular_values: np.ndarray  # (m_eff,), non-increasing, >= 0

    def __post_init__(self):
        basis = np.ascontiguousarray(self.basis, dtype=np.float64)
        sv = np.ascontiguousarray(self.singular_values, dtype=np.float64)
        if basis.ndim != 2 or sv.ndim != 1 or basis.shape[1] != sv.shape[0]:
            raise InputError(
                f"basis shape {basis.shape} inconsistent with {sv.shape[0]} singular values"
            )
        if sv.size == 0 or np.any(sv < 0.0) or np.any(np.diff(sv) > 0.0):
            raise InputError("singular values must be non-negative and non-increasing")
        basis.setflags(write=False)
        sv.setflags(write=False)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "singular_values", sv)

    @property
    def m_eff(self) -> int:
        return self.basis.shape[1]

    @property
    def k(self) -> int:
        return self.basis.shape[0]


def center_buffer(rows) -> CenteredBuffer:
    """Subtract the per-column mean over stored rows.

    Accepts a sequence of equal-length vectors or a 2-D array; raises
    InputError when empty or ragged.
    """
    try:
        matrix = np.asarray(rows, dtype=np.float64)
    except ValueError as exc:
        raise InputError(f"buffer rows are not a rectangular array: {exc}") from exc
    if matrix.ndim != 2 or matrix.shape[0] == 0 or matrix.shape[1] == 0:
        raise InputError(f"need at least one non-empty row, got shape {matrix.shape}")
    mean = matrix.mean(axis=0)
    return CenteredBuffer(matrix=matrix - mean, mean=mean)


def spectral_basis(centered: CenteredBuffer, m: int, svd_tol: float) -> SpectralBasis | None:
    """Leading right singular vectors of the centered buffer.

    Returns None (degenerate signal) when the leading singular value falls
    below ``svd_tol``: a zero-variance buffer has no meaningful directions.
    Singular values below ``svd_tol * leading`` are treated as numerical
    zeros, so the retained rank is ``min(m, rows, columns, numerical rank)``.
    """
    if m < 1:
        raise ConfigError(f"rank must be >= 1, got {m}")
    if svd_tol <= 0.0:
        raise ConfigError(f"svd_tol must be > 0, got {svd_tol}")
    if not np.isfinite(centered.matrix).all():
        raise InputError("centered buffer contains non-finite entries")

    _, sv, vt = np.linalg.svd(centered.matrix, full_matrices=False)
    if sv.size == 0 or sv[0] < svd_tol:
        return None
    numerical_rank = int(np.count_nonzero(sv >= svd_tol * sv[0]))
    m_eff = min(m, centered.t_b, centered.k, numerical_rank)
    return SpectralBasis(basis=vt[:m_eff].T, singular_values=sv[:m_eff])


def project_split(z, basis: SpectralBasis) -> tuple[np.ndarray, np.ndarray]:
    """Split ``z`` into its component inside span(basis) and the residual.

    Computed as two thin matrix-vector products; the k-by-k projector is
    never formed.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (basis.k,):
        raise InputError(f"vector length {z.shape} does not match basis rows {basis.k}")
    in_span = basis.basis @ (basis.basis.T @ z)
    return in_span, z - in_span


def recombine(in_span, residual, alpha: float, gamma: float) -> np.ndarray:
    """Weighted recombination: amplified in-span part plus damped residual."""
    in_span = np.asarray(in_span, dtype=np.float64)
    residual = np.asarray(residual, dtype=np.float64)
    if in_span.shape != residual.shape:
        raise InputError(
            f"component shapes differ: {in_span.shape} vs {residual.shape}"
        )
    if not alpha >= 1.0:
        raise InputError(f"alpha must be >= 1, got {alpha}")
    if not 0.0 < gamma <= 1.0:
        raise InputError(f"gamma must be in (0, 1], got {gamma}")
    return gamma * residual + alpha * in_span
