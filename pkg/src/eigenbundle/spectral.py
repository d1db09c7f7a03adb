"""Eigenbundle decomposition of a normalized spillover matrix.

Eigenvalues are kept in ascending order, so bundle 1 is the most negative
eigenvalue and has the smallest pass-through.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyFailure, DimensionMismatch
from .linalg import jacobi_eigh

SIGN_TOL = 1e-12
VARIANCE_AGREEMENT_TOL = 1e-9


@dataclass(frozen=True)
class SpectralDecomposition:
    """D = U diag(sigma) U^T with columns of ``basis`` signed so q_eigen >= 0.

    Attributes:
        sigma: eigenvalues of D, ascending.
        basis: orthonormal eigenbundles as columns.
        lam: pass-throughs 1 / (1 - sigma).
        mu: inverse pass-throughs 1 - sigma.
        q_eigen: pre-intervention quantities in the eigenbasis.
    """

    sigma: np.ndarray
    basis: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    q_eigen: np.ndarray

    @property
    def n(self) -> int:
        return self.sigma.size

    def matrix(self) -> np.ndarray:
        """Reassemble D from the decomposition."""
        return (self.basis * self.sigma) @ self.basis.T


def _orient(basis: np.ndarray, q0: np.ndarray) -> np.ndarray:
    basis = basis.copy()
    proj = basis.T @ q0
    q_scale = max(1.0, float(np.max(np.abs(q0)))) if q0.size else 1.0
    for ell in range(basis.shape[1]):
        if abs(proj[ell]) > SIGN_TOL * q_scale:
            if proj[ell] < 0:
                basis[:, ell] = -basis[:, ell]
        else:
            col = basis[:, ell]
            first = col[np.flatnonzero(np.abs(col) > SIGN_TOL)[0]]
            if first < 0:
                basis[:, ell] = -col
    return basis


def decompose(d_norm, q0) -> SpectralDecomposition:
    """Eigenbundles of ``d_norm`` oriented against the equilibrium quantities ``q0``.

    Each column u is signed so that <u, q0> >= 0; when the projection is zero
    the first nonzero entry of u is made positive.
    """
    d = np.asarray(d_norm, dtype=float)
    q0 = np.asarray(q0, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1] or q0.shape != (d.shape[0],):
        raise DimensionMismatch(
            f"need an n x n matrix and a length-n vector, got {d.shape} and {q0.shape}"
        )
    sigma, basis = jacobi_eigh(d)
    basis = _orient(basis, q0)
    q_eigen = basis.T @ q0
    # orientation makes these non-negative; clear rounding residue
    q_eigen = np.where(q_eigen < 0, 0.0, q_eigen)
    mu = 1.0 - sigma
    for arr in (sigma, basis, mu, q_eigen):
        arr.setflags(write=False)
    lam = 1.0 / mu
    lam.setflags(write=False)
    return SpectralDecomposition(sigma=sigma, basis=basis, lam=lam, mu=mu, q_eigen=q_eigen)


def to_eigenbasis(x, dec: SpectralDecomposition) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (dec.n,):
        raise DimensionMismatch(f"expected length {dec.n}, got shape {x.shape}")
    return dec.basis.T @ x


def from_eigenbasis(x_eigen, dec: SpectralDecomposition) -> np.ndarray:
    x_eigen = np.asarray(x_eigen, dtype=float)
    if x_eigen.shape != (dec.n,):
        raise DimensionMismatch(f"expected length {dec.n}, got shape {x_eigen.shape}")
    return dec.basis @ x_eigen


def eigenvalue_variance(dec_or_matrix) -> float:
    """Population variance of the eigenvalues of a normalized spillover matrix.

    Computed from the eigenvalues and, independently, as the mean over goods
    of the summed squared off-diagonal entries. The two must agree; the
    eigenvalue form is returned.
    """
    if isinstance(dec_or_matrix, SpectralDecomposition):
        sigma = np.asarray(dec_or_matrix.sigma)
        d = dec_or_matrix.matrix()
    else:
        d = np.asarray(dec_or_matrix, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise DimensionMismatch(f"expected a square matrix, got {d.shape}")
        sigma, _ = jacobi_eigh(d)
    n = sigma.size
    from_eigs = float(np.mean(sigma**2) - np.mean(sigma) ** 2)
    off = d - np.diag(np.diag(d))
    from_entries = float(np.sum(off**2) / n)
    if abs(from_eigs - from_entries) > VARIANCE_AGREEMENT_TOL * max(1.0, from_eigs):
        raise ConsistencyFailure(
            f"eigenvalue variance {from_eigs!r} disagrees with off-diagonal form "
            f"{from_entries!r}; is the matrix normalized to diagonal -1?"
        )
    return max(from_eigs, 0.0)


def first_order_response(c_dot, dec: SpectralDecomposition, q0):
    """Price and consumer-surplus response to a marginal cost change.

    Returns:
        (p_dot, c_surplus_dot) where p_dot = U diag(lam) U^T c_dot and the
        surplus derivative is -<p_dot, q0>.
    """
    c_dot = np.asarray(c_dot, dtype=float)
    q0 = np.asarray(q0, dtype=float)
    if c_dot.shape != (dec.n,) or q0.shape != (dec.n,):
        raise DimensionMismatch(f"c_dot and q0 must have length {dec.n}")
    p_dot = from_eigenbasis(dec.lam * to_eigenbasis(c_dot, dec), dec)
    return p_dot, -float(p_dot @ q0)
