"""Discretized reference solver: block l1 minimization on a fine grid.

Restricting the atoms to G equispaced frequencies turns the continuous
program into basis pursuit over (J+1) coefficient blocks,

    minimize ||w_c||_1 + sum_j ||w_j||_1
    subject to y_j = Phi_j (A w_c + A w_j),

with A the n x G grid-atom dictionary.  Solved by iteratively reweighted
least squares with a slowly annealed smoothing parameter; every iterate is
exactly feasible (it solves the weighted normal equations), and the
weighted-solve multiplier doubles as a dual candidate whose lifted
polynomial is feasible in the limit, so the reported duality gap is a
certified bracket around the true grid optimum.  This path shares no
machinery with the semidefinite solver, which is the point: the two
cross-check each other.  Sizes are capped; this is an oracle, not a
production path.

First-order splitting (Douglas-Rachford) was measured to plateau around a
1e-3 gap on 2^14-point grids: adjacent grid atoms are so coherent that the
solution face is numerically flat.  The reweighted scheme plus a small
phase-fixed linear program on the detected support certifies brackets two
to four orders tighter in a fraction of the time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .problem import MeasurementSet

MAX_ORACLE_N = 16
MAX_ORACLE_J = 2
MIN_GRID = 2**12
MAX_GRID = 2**14

#: per-iteration geometric annealing factor of the smoothing parameter
ANNEAL = 0.97


class GridBudgetError(RuntimeError):
    """Instance exceeds the oracle's size budget."""


@dataclass
class GridProblem:
    """Gridded formulation: frequency grid and per-signal measurement data."""

    grid: np.ndarray
    n: int
    J: int
    sensing: list
    measurements: list


@dataclass
class GridSolution:
    """Feasible objective value, per-block grid weights, and the certified
    duality gap (objective - gap lower-bounds the true grid optimum)."""

    objective: float
    weights: list
    gap: float
    iterations: int
    converged: bool
    grid: np.ndarray


def _check_budget(problem: MeasurementSet, grid_size: int) -> None:
    if problem.n > MAX_ORACLE_N or problem.J > MAX_ORACLE_J:
        raise GridBudgetError(
            f"oracle limited to n <= {MAX_ORACLE_N}, J <= {MAX_ORACLE_J}; "
            f"got n={problem.n}, J={problem.J}"
        )
    if grid_size < MIN_GRID or grid_size > MAX_GRID:
        raise GridBudgetError(
            f"grid size must lie in [{MIN_GRID}, {MAX_GRID}], got {grid_size}"
        )
    if grid_size & (grid_size - 1):
        raise GridBudgetError("grid size must be a power of two (nested refinement)")


def build_grid_problem(problem: MeasurementSet, grid_size: int) -> GridProblem:
    _check_budget(problem, grid_size)
    return GridProblem(
        grid=np.arange(grid_size) / grid_size,
        n=problem.n,
        J=problem.J,
        sensing=problem.sensing,
        measurements=problem.measurements,
    )


class _GridOperators:
    """Applications of the stacked grid dictionary B.

    Row-subsampled sensing admits an FFT fast path for both the adjoint
    and the weighted Gram matrix; dense sensing falls back to explicit
    dictionary slices.
    """

    def __init__(self, gp: GridProblem, grid_size: int):
        self.n = gp.n
        self.J = gp.J
        self.G = grid_size
        self.sensing = gp.sensing
        self.y = np.concatenate(gp.measurements)
        self.m = [op.m for op in gp.sensing]
        self.offsets = np.cumsum([0] + self.m)
        self.fast = all(op.is_subsampling for op in gp.sensing)
        if self.fast:
            self.tidx = [op.indices for op in gp.sensing]
            self.lags = [
                [(self.tidx[k][None, :] - self.tidx[j][:, None]) % self.G
                 for k in range(self.J)]
                for j in range(self.J)
            ]
        else:
            t = np.arange(self.n)
            g = np.arange(self.G)
            dictionary = np.exp(2j * np.pi * np.outer(t, g) / self.G)
            self.rows = [op.as_matrix() @ dictionary for op in gp.sensing]

    def dict_apply(self, w: np.ndarray) -> np.ndarray:
        return self.G * np.fft.ifft(w)[: self.n]

    def dict_adjoint(self, x: np.ndarray) -> np.ndarray:
        return np.fft.fft(x, self.G)

    def forward(self, w: np.ndarray) -> np.ndarray:
        G = self.G
        xc = self.dict_apply(w[:G])
        out = np.empty(sum(self.m), dtype=complex)
        for j in range(self.J):
            xj = self.dict_apply(w[(j + 1) * G : (j + 2) * G])
            out[self.offsets[j] : self.offsets[j + 1]] = self.sensing[j].apply(xc + xj)
        return out

    def adjoint(self, mu: np.ndarray) -> np.ndarray:
        G = self.G
        out = np.zeros((self.J + 1) * G, dtype=complex)
        for j in range(self.J):
            muj = mu[self.offsets[j] : self.offsets[j + 1]]
            lifted = self.dict_adjoint(self.sensing[j].adjoint(muj))
            out[:G] += lifted
            out[(j + 1) * G : (j + 2) * G] = lifted
        return out

    def weighted_gram(self, d: np.ndarray) -> np.ndarray:
        """B diag(d) B^* for nonnegative weights d."""
        G = self.G
        total = sum(self.m)
        out = np.zeros((total, total), dtype=complex)
        if self.fast:
            fc = np.fft.fft(d[:G])
            for j in range(self.J):
                fj = np.fft.fft(d[(j + 1) * G : (j + 2) * G])
                sj = slice(self.offsets[j], self.offsets[j + 1])
                for k in range(self.J):
                    sk = slice(self.offsets[k], self.offsets[k + 1])
                    out[sj, sk] += fc[self.lags[j][k]]
                    if j == k:
                        out[sj, sk] += fj[self.lags[j][j]]
        else:
            for j in range(self.J):
                sj = slice(self.offsets[j], self.offsets[j + 1])
                for k in range(self.J):
                    sk = slice(self.offsets[k], self.offsets[k + 1])
                    out[sj, sk] += (self.rows[j] * d[:G]) @ self.rows[k].conj().T
                    if j == k:
                        dj = d[(j + 1) * G : (j + 2) * G]
                        out[sj, sk] += (self.rows[j] * dj) @ self.rows[j].conj().T
        return out


def _support_polish(ops: "_GridOperators", w: np.ndarray, best_primal: float):
    """Redistribute mass exactly within the detected support.

    The reweighted iterate drains near-active atoms only algebraically; a
    small linear program over the support with the iterate's coefficient
    phases (four rays per atom so the cone always spans, phases re-fixed
    from each solution) finishes the redistribution to simplex accuracy.
    """
    magnitudes = np.abs(w)
    top = float(magnitudes.max())
    if top <= 0.0:
        return best_primal, w
    S = np.flatnonzero(magnitudes > 1e-7 * top)
    if S.size == 0 or S.size > 2000:
        return best_primal, w
    dim = w.size
    sig = w[S] / magnitudes[S]
    base = []
    for i, ph in zip(S, sig):
        e = np.zeros(dim, dtype=complex)
        e[i] = ph
        base.append(ops.forward(e))
    base = np.stack(base, axis=1)
    b_eq = np.concatenate([ops.y.real, ops.y.imag])
    best_w = w
    for _ in range(4):
        C = np.concatenate([base, 1j * base, -base, -1j * base], axis=1)
        res = linprog(
            np.ones(C.shape[1]),
            A_eq=np.vstack([C.real, C.imag]),
            b_eq=b_eq,
            bounds=(0, None),
            method="highs",
        )
        if not res.success:
            break
        k = S.size
        r = res.x
        w_S = sig * (r[:k] - r[2 * k : 3 * k]) + 1j * sig * (r[k : 2 * k] - r[3 * k :])
        value = float(np.abs(w_S).sum())
        if value < best_primal:
            best_primal = value
            best_w = np.zeros(dim, dtype=complex)
            best_w[S] = w_S
        new_sig = np.where(
            np.abs(w_S) > 1e-12, w_S / np.maximum(np.abs(w_S), 1e-300), sig
        )
        if np.abs(new_sig - sig).max() < 1e-12:
            break
        base = base * (new_sig / sig)
        sig = new_sig
    return best_primal, best_w


def solve_grid_l1(
    problem: MeasurementSet,
    grid_size: int,
    gap_tol: float = 1e-6,
    max_iters: int = 10_000,
    check_every: int = 100,
) -> GridSolution:
    """Gridded block-l1 reference solve with a certified duality gap.

    Returns the best feasible objective found, the corresponding per-block
    weights, and the gap against the best dual bound; the true grid
    optimum lies in [objective - gap, objective].  ``converged`` reports
    whether ``gap_tol`` was reached; on very coherent grids the attainable
    gap is limited by the flatness of the solution face, and the honest
    gap is reported either way.

    Raises
    ------
    GridBudgetError
        If n, J or the grid size exceed the oracle budget.
    """
    gp = build_grid_problem(problem, grid_size)
    ops = _GridOperators(gp, grid_size)
    G = grid_size
    J = gp.J

    y_scale = float(np.linalg.norm(ops.y))
    if y_scale == 0.0:
        zero = [np.zeros(G, dtype=complex) for _ in range(J + 1)]
        return GridSolution(0.0, zero, 0.0, 0, True, gp.grid)

    # minimum-norm feasible start (unit weights)
    gram = ops.weighted_gram(np.ones((J + 1) * G))
    mu = np.linalg.solve(gram, ops.y)
    w = ops.adjoint(mu)

    delta = float(np.abs(w).max())
    floor = 1e-11 * delta
    best_primal = float(np.abs(w).sum())
    best_weights = w.copy()
    best_dual = -np.inf
    gap = np.inf
    it = 0
    for it in range(1, max_iters + 1):
        d = np.sqrt(np.abs(w) ** 2 + delta * delta)
        gram = ops.weighted_gram(d)
        try:
            mu = np.linalg.solve(gram, ops.y)
        except np.linalg.LinAlgError:
            # weighted Gram went numerically singular at the smoothing
            # floor; keep the best certified bracket found so far
            break
        w = d * ops.adjoint(mu)
        delta = max(delta * ANNEAL, floor)

        if it % check_every == 0 or it == max_iters:
            primal = float(np.abs(w).sum())
            if primal < best_primal:
                best_primal = primal
                best_weights = w.copy()
            lifted = ops.adjoint(mu)
            sup = float(np.abs(lifted).max())
            best_dual = max(best_dual, float(np.vdot(ops.y, mu).real) / max(1.0, sup))
            gap = best_primal - best_dual
            if gap <= gap_tol:
                break

    if gap > gap_tol:
        best_primal, best_weights = _support_polish(ops, best_weights, best_primal)
        gap = best_primal - best_dual

    weights = [best_weights[b * G : (b + 1) * G].copy() for b in range(J + 1)]
    return GridSolution(
        objective=best_primal,
        weights=weights,
        gap=float(gap),
        iterations=it,
        converged=bool(gap <= gap_tol),
        grid=gp.grid,
    )
