"""Frequency-sparse signal model: atoms, spectra, ensembles, random instances.

Signals live in C^n and are sums of unit-modulus complex exponentials
("atoms") with continuously valued frequencies in [0, 1].  An ensemble of J
signals shares a common sparse component; each signal adds its own
innovation component:

    x_j = z_c + z_j,   j = 1, ..., J

Both components are sparse combinations of atoms.  Frequencies are treated
as points on the torus, so all separation logic uses wrap-around distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

#: resample budget for rejection sampling of separated frequencies
MAX_RESAMPLES = 10_000

#: supported magnitude law: |c| = 0.5 + w^2 with w standard normal
MAGNITUDE_LAW_SHIFTED_SQUARE = "shifted_square_normal"


class SamplingBudgetError(RuntimeError):
    """Rejection sampling could not satisfy the separation constraint."""


def wrap_distance(f1: float, f2: float) -> float:
    """Circular distance between two frequencies on the [0, 1) torus."""
    d = abs(f1 - f2) % 1.0
    return min(d, 1.0 - d)


@dataclass(frozen=True)
class Atom:
    """A single unit-modulus exponential a(f, phi) in C^n.

    Parameters
    ----------
    f : float
        Frequency in cycles/sample, 0 <= f <= 1.
    phi : float
        Phase in [0, 2*pi).
    n : int
        Ambient dimension (number of samples).
    """

    f: float
    phi: float
    n: int

    def __post_init__(self):
        if not 0.0 <= self.f <= 1.0:
            raise ValueError(f"frequency must lie in [0, 1], got {self.f}")
        if not 0.0 <= self.phi < TWO_PI:
            raise ValueError(f"phase must lie in [0, 2*pi), got {self.phi}")
        if self.n < 1:
            raise ValueError(f"ambient dimension must be >= 1, got {self.n}")


def atom_vector(f: float, n: int) -> np.ndarray:
    """Phase-zero atom a(f): entry t equals exp(i*2*pi*f*t)."""
    t = np.arange(n)
    return np.exp(1j * TWO_PI * f * t)


def synthesize_atom(atom: Atom) -> np.ndarray:
    """Generate the vector of ``atom``: entry t is exp(i*(2*pi*f*t + phi))."""
    return np.exp(1j * atom.phi) * atom_vector(atom.f, atom.n)


@dataclass
class SparseSpectrum:
    """A sparse atomic decomposition of one component.

    Stored as parallel arrays of frequencies and complex coefficients
    (phases are absorbed into the coefficients).  Frequencies must be
    pairwise distinct.  The decomposition cost ``sum |c_k|`` is always
    recomputed from the coefficients, never cached.
    """

    frequencies: np.ndarray
    coefficients: np.ndarray
    n: int

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float).reshape(-1)
        self.coefficients = np.asarray(self.coefficients, dtype=complex).reshape(-1)
        if self.frequencies.shape != self.coefficients.shape:
            raise ValueError("frequencies and coefficients must have equal length")
        if self.n < 1:
            raise ValueError(f"ambient dimension must be >= 1, got {self.n}")
        if np.any(self.frequencies < 0.0) or np.any(self.frequencies > 1.0):
            raise ValueError("frequencies must lie in [0, 1]")
        if len(np.unique(self.frequencies)) != self.frequencies.size:
            raise ValueError("frequencies must be pairwise distinct")

    @classmethod
    def empty(cls, n: int) -> "SparseSpectrum":
        return cls(np.empty(0), np.empty(0, dtype=complex), n)

    @classmethod
    def from_entries(cls, entries: Sequence[tuple], n: int) -> "SparseSpectrum":
        """Build from a list of (frequency, coefficient) pairs."""
        if not entries:
            return cls.empty(n)
        f, c = zip(*entries)
        return cls(np.array(f), np.array(c, dtype=complex), n)

    @property
    def size(self) -> int:
        return int(self.frequencies.size)

    def atomic_cost(self) -> float:
        """Total coefficient magnitude sum |c_k| of this decomposition."""
        return float(np.abs(self.coefficients).sum())


def synthesize_component(spectrum: SparseSpectrum) -> np.ndarray:
    """Sum of coefficient-weighted phase-zero atoms: sum_k c_k a(f_k)."""
    out = np.zeros(spectrum.n, dtype=complex)
    for f, c in zip(spectrum.frequencies, spectrum.coefficients):
        out += c * atom_vector(f, spectrum.n)
    return out


@dataclass
class SignalEnsemble:
    """Common/innovation decomposition of J signals of length n."""

    common: SparseSpectrum
    innovations: list
    n: int

    def __post_init__(self):
        if self.common.n != self.n:
            raise ValueError("common spectrum dimension mismatch")
        if not self.innovations:
            raise ValueError("ensemble needs at least one signal")
        for spec in self.innovations:
            if spec.n != self.n:
                raise ValueError("innovation spectrum dimension mismatch")

    @property
    def J(self) -> int:
        return len(self.innovations)

    def signals(self) -> list:
        return synthesize_ensemble(self)


def synthesize_ensemble(ensemble: SignalEnsemble) -> list:
    """Per-signal vectors x_j = synth(common) + synth(innovations[j])."""
    zc = synthesize_component(ensemble.common)
    return [zc + synthesize_component(spec) for spec in ensemble.innovations]


@dataclass
class InstanceConfig:
    """Parameters for random ensemble generation.

    ``min_sep`` is the minimum wrap-around separation enforced within
    Omega_c union Omega_j for every signal j (default 1/n).  Magnitudes
    follow |c| = 0.5 + w^2 with w standard normal; phases are uniform on
    [0, 2*pi) and absorbed into the complex coefficients.
    """

    n: int
    J: int
    s_c: int
    s_j: int
    min_sep: Optional[float] = None
    magnitude_law: str = MAGNITUDE_LAW_SHIFTED_SQUARE
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.J < 1:
            raise ValueError("n and J must be positive")
        if self.s_c < 0 or self.s_j < 0:
            raise ValueError("sparsities must be nonnegative")
        if self.min_sep is None:
            self.min_sep = 1.0 / self.n
        if self.min_sep <= 0.0:
            raise ValueError("min_sep must be positive")
        if self.min_sep * (self.s_c + self.s_j + 1) >= 1.0:
            raise ValueError(
                "min_sep * (s_c + s_j + 1) must be < 1 or sampling cannot terminate"
            )
        if self.magnitude_law != MAGNITUDE_LAW_SHIFTED_SQUARE:
            raise ValueError(f"unknown magnitude law {self.magnitude_law!r}")


def _sample_separated(rng, count, existing, min_sep, budget):
    """Draw ``count`` frequencies pairwise separated from each other and
    from ``existing``; returns (frequencies, remaining budget)."""
    accepted = []
    while len(accepted) < count:
        candidate = float(rng.random())
        ok = all(
            wrap_distance(candidate, f) >= min_sep for f in existing + accepted
        )
        if ok:
            accepted.append(candidate)
        else:
            budget -= 1
            if budget <= 0:
                raise SamplingBudgetError(
                    f"exceeded {MAX_RESAMPLES} resamples; "
                    f"min_sep={min_sep} appears infeasible"
                )
    return accepted, budget


def _draw_coefficients(rng, count):
    magnitudes = 0.5 + rng.standard_normal(count) ** 2
    phases = rng.random(count) * TWO_PI
    return magnitudes * np.exp(1j * phases)


def random_instance(cfg: InstanceConfig) -> SignalEnsemble:
    """Sample a random ensemble per ``cfg``.

    Frequencies are uniform on [0, 1) subject to the wrap-around minimum
    separation within Omega_c union Omega_j for every j; innovation sets of
    different signals are mutually unconstrained.  Deterministic for a
    fixed seed.

    Raises
    ------
    SamplingBudgetError
        If rejection sampling exceeds the resample budget.
    """
    rng = np.random.default_rng(cfg.seed)
    budget = MAX_RESAMPLES

    common_f, budget = _sample_separated(rng, cfg.s_c, [], cfg.min_sep, budget)
    common = SparseSpectrum(
        np.array(common_f), _draw_coefficients(rng, cfg.s_c), cfg.n
    )

    innovations = []
    for _ in range(cfg.J):
        innov_f, budget = _sample_separated(
            rng, cfg.s_j, list(common_f), cfg.min_sep, budget
        )
        innovations.append(
            SparseSpectrum(np.array(innov_f), _draw_coefficients(rng, cfg.s_j), cfg.n)
        )
    return SignalEnsemble(common=common, innovations=innovations, n=cfg.n)


def minimum_separation(ensemble: SignalEnsemble) -> float:
    """Smallest wrap-around distance within Omega_c union Omega_j over j.

    Returns inf when no signal has two or more frequencies to compare.
    """
    best = math.inf
    common = list(ensemble.common.frequencies)
    for spec in ensemble.innovations:
        freqs = common + list(spec.frequencies)
        for a in range(len(freqs)):
            for b in range(a + 1, len(freqs)):
                best = min(best, wrap_distance(freqs[a], freqs[b]))
    return best
