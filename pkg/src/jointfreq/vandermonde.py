"""Frequency/weight recovery from PSD Hermitian Toeplitz matrices.

A rank-r PSD Hermitian Toeplitz matrix factors as sum_k d_k a(f_k) a(f_k)*
with positive weights and distinct frequencies.  Frequencies are recovered
by a matrix pencil on the dominant eigenspace (the shift invariance of the
exponential basis), weights by nonnegative least squares against the
rank-one atom outer products; component coefficients then follow from an
ordinary least squares fit of the component vector against the recovered
atoms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .model import SparseSpectrum, atom_vector, wrap_distance
from .toeplitz import check_generator, toeplitz_from_generator

#: frequencies closer than this (wrap-around) are merged, weights summed
MERGE_TOL = 1e-6


class DecompositionError(RuntimeError):
    """Input admits no (unique) exponential decomposition."""


@dataclass
class VandermondeDecomposition:
    """Recovered frequencies, positive weights, rank and fit residual."""

    frequencies: np.ndarray
    weights: np.ndarray
    rank: int
    residual: float


@dataclass
class SpectrumRecovery:
    """Recovered component spectrum with fit diagnostics.

    ``residual`` is ||z - sum c_k a(f_k)|| / ||z||; ``basis_condition`` is
    the condition number of the recovered atom basis (values above 1e10
    mean the coefficients are unreliable and should be treated as such).
    """

    spectrum: SparseSpectrum
    residual: float
    basis_condition: float


def _pencil_frequencies(eigvecs: np.ndarray) -> np.ndarray:
    """Frequencies from the shift invariance of the dominant eigenspace."""
    upper = eigvecs[:-1, :]
    lower = eigvecs[1:, :]
    rotation = np.linalg.lstsq(upper, lower, rcond=None)[0]
    phases = np.linalg.eigvals(rotation)
    return np.angle(phases) / (2.0 * np.pi) % 1.0


def _merge_close(freqs: np.ndarray, weights: np.ndarray):
    order = np.argsort(freqs)
    freqs, weights = freqs[order], weights[order]
    out_f, out_w = [], []
    for f, w in zip(freqs, weights):
        if out_f and wrap_distance(f, out_f[-1]) < MERGE_TOL:
            total = out_w[-1] + w
            if total > 0:
                out_f[-1] = (out_f[-1] * out_w[-1] + f * w) / total
            out_w[-1] = total
        else:
            out_f.append(f)
            out_w.append(w)
    # wrap-around pair (first vs last) may also be mergeable
    if len(out_f) > 1 and wrap_distance(out_f[0], out_f[-1]) < MERGE_TOL:
        total = out_w[0] + out_w[-1]
        out_f[0] = out_f[0] if out_w[0] >= out_w[-1] else out_f[-1]
        out_w[0] = total
        out_f.pop()
        out_w.pop()
    return np.array(out_f), np.array(out_w)


def decompose(u: np.ndarray, rank_tol: float = 1e-6) -> VandermondeDecomposition:
    """Exponential decomposition of the Toeplitz matrix generated by u.

    Eigenvalues above rank_tol times the largest determine the rank; the
    matrix must be PSD within that tolerance and strictly rank deficient.

    Raises
    ------
    DecompositionError
        If the matrix has negative eigenvalues beyond tolerance, or is
        full rank (the decomposition is then not unique).
    """
    u = check_generator(u)
    n = u.size
    T = toeplitz_from_generator(u)
    eigvals, eigvecs = np.linalg.eigh(T)
    lam_max = float(eigvals[-1])
    if lam_max <= 0.0:
        if float(eigvals[0]) < -rank_tol * max(1.0, abs(lam_max)):
            raise DecompositionError("matrix has negative eigenvalues beyond tolerance")
        return VandermondeDecomposition(
            frequencies=np.empty(0), weights=np.empty(0), rank=0, residual=0.0
        )
    if float(eigvals[0]) < -rank_tol * lam_max:
        raise DecompositionError(
            f"matrix not PSD within tolerance: min eigenvalue {eigvals[0]:.3e}"
        )
    keep = eigvals > rank_tol * lam_max
    r = int(keep.sum())
    if r >= n:
        raise DecompositionError(
            "matrix is numerically full rank; decomposition not unique"
        )
    if r == 0:
        return VandermondeDecomposition(
            frequencies=np.empty(0), weights=np.empty(0), rank=0, residual=0.0
        )

    freqs = _pencil_frequencies(eigvecs[:, keep])

    # weights: nonnegative least squares of T against the atom outer
    # products, via the real normal equations |a_k^* a_l|^2 d = a_k^* T a_k
    atoms = np.stack([atom_vector(f, n) for f in freqs], axis=1)
    gram = np.abs(atoms.conj().T @ atoms) ** 2
    rhs = np.real(np.einsum("tk,ts,sk->k", atoms.conj(), T, atoms))
    weights, _ = nnls(gram, rhs)

    positive = weights > 0.0
    freqs, weights = _merge_close(freqs[positive], weights[positive])
    positive = weights > 0.0
    freqs, weights = freqs[positive], weights[positive]

    approx = np.zeros_like(T)
    for f, d in zip(freqs, weights):
        a = atom_vector(f, n)
        approx += d * np.outer(a, a.conj())
    denom = float(np.linalg.norm(T))
    residual = float(np.linalg.norm(T - approx)) / denom if denom > 0 else 0.0
    return VandermondeDecomposition(
        frequencies=freqs, weights=weights, rank=int(freqs.size), residual=residual
    )


def recover_spectrum(
    u: np.ndarray, z: np.ndarray, rank_tol: float = 1e-6
) -> SpectrumRecovery:
    """Fit the component vector z in the atom span recovered from u.

    The component of an optimal solution lies in the span of the atoms of
    its Toeplitz block; the coefficients are the least-squares fit of z
    against those atoms.
    """
    z = np.asarray(z, dtype=complex).reshape(-1)
    dec = decompose(u, rank_tol)
    n = z.size
    z_norm = float(np.linalg.norm(z))
    if dec.rank == 0:
        spectrum = SparseSpectrum.empty(n)
        return SpectrumRecovery(
            spectrum=spectrum,
            residual=0.0 if z_norm == 0 else 1.0,
            basis_condition=1.0,
        )
    atoms = np.stack([atom_vector(f, n) for f in dec.frequencies], axis=1)
    condition = float(np.linalg.cond(atoms))
    coeffs = np.linalg.lstsq(atoms, z, rcond=None)[0]
    fit = atoms @ coeffs
    residual = float(np.linalg.norm(z - fit)) / z_norm if z_norm > 0 else 0.0
    spectrum = SparseSpectrum(dec.frequencies.copy(), coeffs, n)
    return SpectrumRecovery(
        spectrum=spectrum, residual=residual, basis_condition=condition
    )
