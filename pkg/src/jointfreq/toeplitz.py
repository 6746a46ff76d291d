"""Hermitian Toeplitz algebra on first-column generators.

A generator u in C^n represents the Hermitian Toeplitz matrix whose first
column is u; only the generator is stored, full matrices are materialized
on demand.  The adjoint and projection here are the building blocks of the
splitting solver's per-diagonal updates.
"""

from __future__ import annotations

import numpy as np

#: tolerance on the imaginary part of u[0] (relative to max(1, |u[0]|))
GENERATOR_IMAG_TOL = 1e-12


def check_generator(u: np.ndarray) -> np.ndarray:
    """Validate a Hermitian Toeplitz generator and return it as complex."""
    u = np.asarray(u, dtype=complex).reshape(-1)
    if u.size < 1:
        raise ValueError("generator must have length >= 1")
    if abs(u[0].imag) > GENERATOR_IMAG_TOL * max(1.0, abs(u[0])):
        raise ValueError(
            f"generator head must be real valued, got imaginary part {u[0].imag}"
        )
    return u


def toeplitz_from_generator(u: np.ndarray) -> np.ndarray:
    """Dense Hermitian Toeplitz matrix with first column ``u``.

    T[r, s] = u[r-s] for r >= s and conj(u[s-r]) otherwise.
    """
    u = check_generator(u)
    n = u.size
    # u_ext[k] = conj(u[n-1-k]) for the upper diagonals, then u itself
    u_ext = np.concatenate([np.conj(u[:0:-1]), u])
    idx = np.arange(n)
    return u_ext[(n - 1) + idx[:, None] - idx[None, :]]


def toeplitz_adjoint(T: np.ndarray) -> np.ndarray:
    """Subdiagonal sums g[d] = sum_{r-s=d} T[r, s], d = 0..n-1.

    This is the adjoint of the generator-to-matrix map under the pairing
    over the lower triangle, sum_{r>=s} conj(A[r,s]) B[r,s]:
    <Toep(u), T> = <u, toeplitz_adjoint(T)> exactly.
    """
    T = np.asarray(T)
    n = T.shape[0]
    if T.shape != (n, n):
        raise ValueError("input must be square")
    return np.array([np.trace(T, offset=-d) for d in range(n)])


def project_toeplitz(T: np.ndarray) -> np.ndarray:
    """Generator of the Frobenius-nearest Hermitian Toeplitz matrix.

    Hermitizes the input first, then averages along each diagonal; the
    head entry is forced real.
    """
    T = np.asarray(T, dtype=complex)
    n = T.shape[0]
    if T.shape != (n, n):
        raise ValueError("input must be square")
    H = 0.5 * (T + T.conj().T)
    counts = n - np.arange(n)
    g = toeplitz_adjoint(H) / counts
    g[0] = g[0].real
    return g


def normalized_trace(u: np.ndarray) -> float:
    """trace(Toep(u)) / n, which is just the real head entry of u."""
    u = check_generator(u)
    return float(u[0].real)
