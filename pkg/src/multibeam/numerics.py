"""Complex dense linear algebra used by the beamforming and solver layers.

Thin, contract-checked wrappers around LAPACK (via numpy): SVD, numerical
rank, and orthonormal null-space bases for the conjugate-transpose
constraint system ``A^H w = 0``.  Everything here targets desk-scale
matrices (at most a few tens of rows).
"""

from dataclasses import dataclass

import numpy as np

# Relative singular-value cutoff.  Rician channels are well conditioned
# with probability one, so nothing more aggressive is needed.
DEFAULT_RANK_TOL = 1e-9


class InvalidMatrix(ValueError):
    """Raised when an input matrix contains NaN or infinite entries."""


def as_cmatrix(a) -> np.ndarray:
    """Validate and return ``a`` as a 2-D complex ndarray."""
    m = np.asarray(a, dtype=complex)
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2:
        raise InvalidMatrix(f"expected a 2-D matrix, got ndim={m.ndim}")
    if not (np.all(np.isfinite(m.real)) and np.all(np.isfinite(m.imag))):
        raise InvalidMatrix("matrix contains non-finite entries")
    return m


@dataclass(frozen=True)
class SvdResult:
    """Factorisation A = U @ diag(s) @ Vh with s sorted descending."""

    u: np.ndarray
    s: np.ndarray
    vh: np.ndarray

    def reconstruct(self) -> np.ndarray:
        k = self.s.size
        return (self.u[:, :k] * self.s) @ self.vh[:k, :]

    def reconstruction_error(self, a) -> float:
        return float(np.linalg.norm(self.reconstruct() - np.asarray(a, dtype=complex)))


def svd(a) -> SvdResult:
    """Full SVD of a complex matrix.

    Raises InvalidMatrix on non-finite input.  The reconstruction error is
    bounded by 1e-10 times the largest singular value.
    """
    m = as_cmatrix(a)
    u, s, vh = np.linalg.svd(m, full_matrices=True)
    return SvdResult(u=u, s=s, vh=vh)


def rank(a, tol: float = DEFAULT_RANK_TOL) -> int:
    """Number of singular values above ``tol`` times the largest one.

    The zero matrix (and any empty matrix) has rank 0.
    """
    m = as_cmatrix(a)
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


def null_space(a, tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Orthonormal basis of {w : A^H w = 0}.

    The columns of ``a`` (shape M x k) are the constraint vectors; the
    returned basis has shape M x d with d = M - rank(a, tol).  For k = 0
    the whole space is unconstrained and the identity is returned.
    """
    m = as_cmatrix(a)
    rows = m.shape[0]
    if m.shape[1] == 0:
        return np.eye(rows, dtype=complex)
    u, s, _ = np.linalg.svd(m, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        r = 0
    else:
        r = int(np.count_nonzero(s > tol * s[0]))
    return u[:, r:].copy()
