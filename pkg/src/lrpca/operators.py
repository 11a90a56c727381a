"""Elementwise outlier-detection operators.

Two detectors are provided: soft-thresholding (shrink every entry toward
zero by a level ``zeta``) and top-fraction sparsification (keep an entry only
if it ranks among the largest magnitudes of both its row and its column).
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidFraction, InvalidThreshold
from .validation import check_matrix

__all__ = ["SupportSet", "soft_threshold", "sparsify_top_fraction", "support_of"]


@dataclass(frozen=True)
class SupportSet:
    """Set of (row, col) index pairs inside a fixed matrix shape."""

    indices: frozenset
    shape: tuple

    def __len__(self):
        return len(self.indices)

    def __le__(self, other):
        return self.indices <= other.indices

    def issubset(self, other):
        return self.indices <= other.indices


def soft_threshold(M, zeta):
    """Shrink every entry of ``M`` toward zero by ``zeta``.

    ``out_ij = sign(M_ij) * max(0, |M_ij| - zeta)``.
    """
    if zeta < 0:
        raise InvalidThreshold(f"threshold must be >= 0, got {zeta}")
    A = check_matrix(M, "M")
    return _soft_threshold_unchecked(A, zeta)


def _soft_threshold_unchecked(A, zeta):
    # In-place ops to limit temporaries on large inputs.
    out = np.abs(A)
    out -= zeta
    np.maximum(out, 0.0, out)
    out *= np.sign(A)
    return out


def sparsify_top_fraction(M, alpha_tilde):
    """Keep entries in the top ``alpha_tilde`` magnitude fraction of both
    their row and their column; zero the rest.

    The keep count per row is ``floor(alpha_tilde * cols)`` and per column
    ``floor(alpha_tilde * rows)``; a zero count forces a zero output.  Ties
    at the cutoff magnitude are all kept.
    """
    if not 0.0 <= alpha_tilde <= 1.0:
        raise InvalidFraction(f"fraction must be in [0, 1], got {alpha_tilde}")
    A = check_matrix(M, "M")
    return _sparsify_unchecked(A, alpha_tilde)


def _sparsify_unchecked(A, alpha_tilde):
    n1, n2 = A.shape
    k_row = int(np.floor(alpha_tilde * n2))
    k_col = int(np.floor(alpha_tilde * n1))
    if k_row == 0 or k_col == 0:
        return np.zeros_like(A)
    mag = np.abs(A)
    row_cut = np.partition(mag, n2 - k_row, axis=1)[:, n2 - k_row][:, None]
    col_cut = np.partition(mag, n1 - k_col, axis=0)[n1 - k_col, :][None, :]
    return np.where((mag >= row_cut) & (mag >= col_cut), A, 0.0)


def support_of(M, tol=0.0):
    """Indices of entries with ``|M_ij| > tol`` (strict inequality)."""
    if tol < 0:
        raise InvalidThreshold(f"tolerance must be >= 0, got {tol}")
    A = check_matrix(M, "M")
    rows, cols = np.nonzero(np.abs(A) > tol)
    return SupportSet(frozenset(zip(rows.tolist(), cols.tolist())), A.shape)
