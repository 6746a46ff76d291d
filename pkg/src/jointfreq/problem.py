"""Joint recovery program: measurement model, variables, objective, norms.

The convex program couples one Hermitian Toeplitz block per component with
the stacked component vector Z = (z_c, z_1, ..., z_J) and a scalar t in a
single positive semidefinite constraint of size (J+1)n + 1:

    minimize   (1/2n) * sum_b trace(Toep(u_b)) + t/2
    subject to [[diag(Toep(u_c), ..., Toep(u_J)), Z], [Z*, t]] >= 0
               y_j = Phi_j (z_c + z_j)  for all j.

Its optimal value is the concatenated atomic norm of the signal ensemble;
the measurement multipliers feed the dual polynomial certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

from .certificate import eval_dual_poly, golden_section_max, grid_eval
from .model import SparseSpectrum, atom_vector, synthesize_component
from .toeplitz import toeplitz_from_generator


class SensingOperator:
    """Per-signal linear measurement map, m x n.

    Two interchangeable representations: a dense complex matrix, or a
    row-subsampling index set (rows of the identity), which is what the
    experiment path uses.  Behaviour is identical through ``apply``,
    ``adjoint`` and ``as_matrix``.
    """

    def __init__(self, *, indices=None, matrix=None, n=None):
        if (indices is None) == (matrix is None):
            raise ValueError("provide exactly one of indices or matrix")
        if indices is not None:
            if n is None:
                raise ValueError("subsampling representation needs n")
            idx = np.asarray(indices, dtype=int).reshape(-1)
            if idx.size and (idx.min() < 0 or idx.max() >= n):
                raise ValueError("subsampling indices out of range")
            if np.any(np.diff(idx) <= 0):
                raise ValueError("subsampling indices must be strictly increasing")
            if idx.size > n:
                raise ValueError("m must be at most n")
            self.indices = idx
            self.matrix = None
            self.m = int(idx.size)
            self.n = int(n)
        else:
            mat = np.asarray(matrix, dtype=complex)
            if mat.ndim != 2:
                raise ValueError("sensing matrix must be 2-D")
            if mat.shape[0] > mat.shape[1]:
                raise ValueError("m must be at most n")
            self.indices = None
            self.matrix = mat
            self.m, self.n = map(int, mat.shape)

    @classmethod
    def subsample(cls, indices, n: int) -> "SensingOperator":
        return cls(indices=indices, n=n)

    @classmethod
    def dense(cls, matrix) -> "SensingOperator":
        return cls(matrix=matrix)

    @classmethod
    def identity(cls, n: int) -> "SensingOperator":
        return cls(indices=np.arange(n), n=n)

    @property
    def is_subsampling(self) -> bool:
        return self.indices is not None

    def apply(self, x: np.ndarray) -> np.ndarray:
        if self.indices is not None:
            return np.asarray(x, dtype=complex)[self.indices]
        return self.matrix @ x

    def adjoint(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=complex)
        if self.indices is not None:
            out = np.zeros(self.n, dtype=complex)
            out[self.indices] = q
            return out
        return self.matrix.conj().T @ q

    def as_matrix(self) -> np.ndarray:
        if self.indices is not None:
            mat = np.zeros((self.m, self.n), dtype=complex)
            mat[np.arange(self.m), self.indices] = 1.0
            return mat
        return self.matrix


@dataclass
class MeasurementSet:
    """Sensing operators and measurements for the J signals."""

    sensing: list
    measurements: list
    n: int

    def __post_init__(self):
        if len(self.sensing) != len(self.measurements):
            raise ValueError("need one measurement vector per sensing operator")
        if not self.sensing:
            raise ValueError("need at least one signal")
        self.measurements = [
            np.asarray(y, dtype=complex).reshape(-1) for y in self.measurements
        ]
        for op, y in zip(self.sensing, self.measurements):
            if op.n != self.n:
                raise ValueError("sensing operator dimension mismatch")
            if op.m != y.size:
                raise ValueError("measurement length must match operator rows")

    @property
    def J(self) -> int:
        return len(self.sensing)


def full_observation(signals) -> MeasurementSet:
    """Identity sensing of every signal (y_j = x_j)."""
    signals = [np.asarray(x, dtype=complex).reshape(-1) for x in signals]
    n = signals[0].size
    return MeasurementSet(
        sensing=[SensingOperator.identity(n) for _ in signals],
        measurements=signals,
        n=n,
    )


def subsampled_measurements(signals, index_sets) -> MeasurementSet:
    """Sub-identity sensing: y_j = x_j restricted to the given rows."""
    signals = [np.asarray(x, dtype=complex).reshape(-1) for x in signals]
    n = signals[0].size
    sensing = [SensingOperator.subsample(idx, n) for idx in index_sets]
    measurements = [op.apply(x) for op, x in zip(sensing, signals)]
    return MeasurementSet(sensing=sensing, measurements=measurements, n=n)


def draw_row_subsets(n: int, m: int, J: int, rng) -> list:
    """Uniform random distinct row indices per signal, sorted."""
    return [np.sort(rng.choice(n, size=m, replace=False)) for _ in range(J)]


@dataclass
class SdpVariables:
    """Primal variables: Toeplitz generators (u_c first), component stack
    (z_c first), and the scalar t."""

    generators: list
    components: list
    t: float

    def __post_init__(self):
        self.generators = [np.asarray(u, dtype=complex).reshape(-1) for u in self.generators]
        self.components = [np.asarray(z, dtype=complex).reshape(-1) for z in self.components]
        if len(self.generators) != len(self.components):
            raise ValueError("need one generator per component")
        if len(self.generators) < 2:
            raise ValueError("need the common block plus at least one innovation")
        n = self.generators[0].size
        for arr in self.generators + self.components:
            if arr.size != n:
                raise ValueError("all blocks must share the ambient dimension")
        self.t = float(self.t)

    @property
    def n(self) -> int:
        return int(self.generators[0].size)

    @property
    def J(self) -> int:
        return len(self.generators) - 1

    def stacked_components(self) -> np.ndarray:
        return np.concatenate(self.components)

    def recovered_signals(self) -> list:
        """x_j = z_c + z_j for each signal."""
        zc = self.components[0]
        return [zc + zj for zj in self.components[1:]]

    @classmethod
    def zeros(cls, n: int, J: int) -> "SdpVariables":
        return cls(
            generators=[np.zeros(n, dtype=complex) for _ in range(J + 1)],
            components=[np.zeros(n, dtype=complex) for _ in range(J + 1)],
            t=0.0,
        )


def variables_from_decomposition(common: SparseSpectrum, innovations) -> SdpVariables:
    """Feasible variables built from an explicit atomic decomposition.

    With u_b = sum_k |c_k| a(f_k), z_b the synthesized components and
    t the total coefficient cost, the semidefinite block is a sum of
    rank-one terms and the objective equals the decomposition cost.
    """
    spectra = [common] + list(innovations)
    n = common.n
    generators = []
    for spec in spectra:
        u = np.zeros(n, dtype=complex)
        for f, c in zip(spec.frequencies, spec.coefficients):
            u += abs(c) * atom_vector(f, n)
        generators.append(u)
    components = [synthesize_component(spec) for spec in spectra]
    t = sum(spec.atomic_cost() for spec in spectra)
    return SdpVariables(generators=generators, components=components, t=t)


def primal_objective(variables: SdpVariables) -> float:
    """(1/2n) * sum of block traces plus t/2."""
    head = sum(u[0].real for u in variables.generators)
    return 0.5 * head + 0.5 * variables.t


def assemble_psd_block(variables: SdpVariables) -> np.ndarray:
    """The (J+1)n + 1 square Hermitian block of the semidefinite constraint."""
    n, J = variables.n, variables.J
    N = (J + 1) * n
    M = np.zeros((N + 1, N + 1), dtype=complex)
    for b, u in enumerate(variables.generators):
        sl = slice(b * n, (b + 1) * n)
        M[sl, sl] = toeplitz_from_generator(u)
    Z = variables.stacked_components()
    M[:N, N] = Z
    M[N, :N] = Z.conj()
    M[N, N] = variables.t
    return M


@dataclass
class SdpSolution:
    """Solver output: primal variables, measurement multipliers, and
    convergence diagnostics.

    ``status`` is one of "converged", "max_iters", "infeasible".  The
    ``diagnostics`` dict carries duality_gap, dual_norm, min_eigenvalue,
    measurement_residual and the normalization scale used internally.
    """

    variables: SdpVariables
    multipliers: list
    objective: float
    residuals: tuple
    iterations: int
    status: str
    diagnostics: dict = field(default_factory=dict)


def ca_norm(signals, solver_config=None) -> float:
    """Concatenated atomic norm of an ensemble via the fully observed
    program (identity sensing of every signal).

    For J = 1 this equals the atomic norm of the single signal.
    """
    from .solver import solve  # deferred: solver builds on this module

    problem = full_observation(signals)
    solution = solve(problem, solver_config)
    if solution.status == "infeasible":
        raise RuntimeError("norm evaluation failed: problem reported infeasible")
    return solution.objective


def dual_norm(multipliers, sensing, grid_size: int = 8192, refine_tol: float = 1e-10) -> float:
    """Dual norm of the lifted multipliers Phi_j^* q_j.

    Evaluates max over f of max(|sum_j Q_j(f)|, max_j |Q_j(f)|) on a
    uniform grid, then sharpens each candidate maximizer with a local
    golden-section search (the polynomials are smooth trigonometric
    polynomials, so 4n-oversampling cannot miss a peak by more than the
    local refinement can recover).
    """
    n = sensing[0].n
    if grid_size < 4 * n:
        raise ValueError("grid_size must be at least 4n")
    vectors = [op.adjoint(q) for op, q in zip(sensing, multipliers)]
    curves = [np.abs(grid_eval(v, grid_size)) for v in vectors]
    v_sum = np.sum(vectors, axis=0)
    curves.append(np.abs(grid_eval(v_sum, grid_size)))
    polys = vectors + [v_sum]

    best = 0.0
    h = 1.0 / grid_size
    for v, curve in zip(polys, curves):
        k = int(np.argmax(curve))
        best = max(best, float(curve[k]))
        f0 = k * h
        _, refined = golden_section_max(
            lambda x: abs(eval_dual_poly(v, x)), f0 - h, f0 + h, tol=refine_tol
        )
        best = max(best, refined)
    return best
