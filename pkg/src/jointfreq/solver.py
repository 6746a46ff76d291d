"""First-order splitting solver for the joint semidefinite program.

The program is split into (i) a structured affine block over the Toeplitz
generators, the measurement-constrained component stack and the scalar t,
all with closed-form updates, and (ii) the semidefinite cone handled by
eigenvalue projection, with scaled dual updates, over-relaxation and
residual-balancing penalty adaptation.  Measurement equalities are enforced
exactly in every iteration through a cached KKT factorization; convergence
additionally requires the assembled block to be numerically semidefinite
and the extracted multipliers to certify a small duality gap, so a
"converged" status is a checked optimality claim, not just small residuals.

Per-iteration cost is dominated by one Hermitian eigendecomposition of
size (J+1)n + 1.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .problem import (
    MeasurementSet,
    SdpSolution,
    SdpVariables,
    assemble_psd_block,
    dual_norm,
    primal_objective,
)

_RHO_MIN = 1e-6
_RHO_MAX = 1e8


class SolverError(RuntimeError):
    """Internal solver failure (e.g. eigendecomposition breakdown)."""


@dataclass
class SolverConfig:
    """Splitting-solver parameters.

    The duality-gap and dual-norm gates make "converged" imply the
    certificate-quality bounds that downstream checks rely on; trials that
    cannot reach them within ``max_iters`` are reported as such.
    """

    rho: float = 1.0
    max_iters: int = 50_000
    eps_abs: float = 1e-8
    eps_rel: float = 1e-8
    over_relaxation: float = 1.6
    adaptive_rho: bool = True
    rho_ratio: float = 10.0
    rho_scale: float = 2.0
    # rebalancing every iteration can lock the iteration into a limit
    # cycle; adapting on a schedule keeps it a rare, stabilizing event
    adapt_every: int = 100
    psd_tol: float = 1e-7
    gap_tol: float = 1e-5
    dual_norm_tol: float = 1e-3
    check_every: int = 25
    trace_log: Optional[str] = None
    log_every: int = 50

    def __post_init__(self):
        if self.rho <= 0.0:
            raise ValueError("rho must be positive")
        if not 1.0 <= self.over_relaxation <= 1.8:
            raise ValueError("over_relaxation must lie in [1, 1.8]")
        if self.eps_abs <= 0.0 or self.eps_rel <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class SolverState:
    """Iterate of the splitting method: primal variables, PSD slack W,
    scaled dual Y, current penalty and residual history."""

    variables: SdpVariables
    slack: np.ndarray
    dual: np.ndarray
    rho: float
    iteration: int = 0
    residual_history: list = field(default_factory=list)


def psd_project(M: np.ndarray) -> np.ndarray:
    """Frobenius-nearest positive semidefinite matrix (Hermitian input).

    Symmetrizes first, then clips negative eigenvalues; reconstructs from
    whichever eigenvalue subset is smaller.
    """
    M = np.asarray(M, dtype=complex)
    H = 0.5 * (M + M.conj().T)
    try:
        w, U = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"eigendecomposition failed: {exc}") from exc
    return _clip_reconstruct(H, w, U)


def _clip_reconstruct(H: np.ndarray, w: np.ndarray, U: np.ndarray) -> np.ndarray:
    pos = w > 0.0
    k = int(pos.sum())
    if k == 0:
        return np.zeros_like(H)
    if k <= H.shape[0] - k:
        Up = U[:, pos]
        W = (Up * w[pos]) @ Up.conj().T
    else:
        Un = U[:, ~pos]
        W = H - (Un * w[~pos]) @ Un.conj().T
    return 0.5 * (W + W.conj().T)


class _Workspace:
    """Cached problem structure: dimensions, index maps for the Toeplitz
    updates, and the KKT factorization of the measurement projector."""

    def __init__(self, problem: MeasurementSet):
        self.n = problem.n
        self.J = problem.J
        n, J = self.n, self.J
        self.N = (J + 1) * n
        self.sensing = problem.sensing
        self.m = [op.m for op in problem.sensing]
        self.y_stack = np.concatenate(problem.measurements)

        rows = np.arange(n)
        lower_r, lower_s = np.tril_indices(n)
        self.lower_flat = lower_r * n + lower_s
        self.diag_ids = lower_r - lower_s
        self.counts = (n - rows).astype(float)
        self.toep_idx = (n - 1) + rows[:, None] - rows[None, :]

        self.all_subsampling = all(op.is_subsampling for op in problem.sensing)
        if not self.all_subsampling:
            self.mats = [op.as_matrix() for op in problem.sensing]
        gram = self._build_gram()
        self.kkt = sla.cho_factor(gram, check_finite=False)

    def _build_gram(self) -> np.ndarray:
        # A A^* where A maps the stacked components to the measurements:
        # block (j, k) is Phi_j Phi_k^* plus Phi_j Phi_j^* on the diagonal.
        total = sum(self.m)
        gram = np.zeros((total, total), dtype=complex)
        offsets = np.cumsum([0] + self.m)
        for j in range(self.J):
            sj = slice(offsets[j], offsets[j + 1])
            for k in range(self.J):
                sk = slice(offsets[k], offsets[k + 1])
                if self.all_subsampling:
                    block = np.equal.outer(
                        self.sensing[j].indices, self.sensing[k].indices
                    ).astype(complex)
                else:
                    block = self.mats[j] @ self.mats[k].conj().T
                gram[sj, sk] += block
                if j == k:
                    gram[sj, sk] += block
        self.offsets = offsets
        return gram

    def apply_forward(self, g_z: np.ndarray) -> np.ndarray:
        """A g_z: per-signal measurements of g_c + g_j."""
        n = self.n
        gc = g_z[:n]
        out = np.empty(sum(self.m), dtype=complex)
        for j in range(self.J):
            gj = g_z[(j + 1) * n : (j + 2) * n]
            sl = slice(self.offsets[j], self.offsets[j + 1])
            if self.all_subsampling:
                idx = self.sensing[j].indices
                out[sl] = gc[idx] + gj[idx]
            else:
                out[sl] = self.mats[j] @ (gc + gj)
        return out

    def apply_adjoint(self, mu: np.ndarray) -> np.ndarray:
        """A^* mu scattered back to the stacked component layout."""
        n = self.n
        out = np.zeros(self.N, dtype=complex)
        for j in range(self.J):
            muj = mu[self.offsets[j] : self.offsets[j + 1]]
            if self.all_subsampling:
                idx = self.sensing[j].indices
                out[:n][idx] += muj
                out[(j + 1) * n : (j + 2) * n][idx] = muj
            else:
                lifted = self.mats[j].conj().T @ muj
                out[:n] += lifted
                out[(j + 1) * n : (j + 2) * n] = lifted
        return out

    def project_components(self, g_z: np.ndarray):
        """Euclidean projection of g_z onto the measurement equalities,
        plus the KKT multiplier of the projection."""
        resid = self.apply_forward(g_z) - self.y_stack
        mu = sla.cho_solve(self.kkt, resid, check_finite=False)
        return g_z - self.apply_adjoint(mu), mu

    def diag_means(self, block: np.ndarray) -> np.ndarray:
        vals = block.ravel()[self.lower_flat]
        sums = np.bincount(self.diag_ids, weights=vals.real, minlength=self.n)
        sums = sums + 1j * np.bincount(
            self.diag_ids, weights=vals.imag, minlength=self.n
        )
        return sums / self.counts

    def fill_toeplitz(self, out: np.ndarray, u: np.ndarray) -> None:
        u_ext = np.concatenate([np.conj(u[:0:-1]), u])
        out[...] = u_ext[self.toep_idx]


def _affine_update(ws: _Workspace, G: np.ndarray, rho: float):
    """Closed-form minimizer of objective + (rho/2)||assemble(v) - G||^2
    subject to the measurement equalities."""
    n, J, N = ws.n, ws.J, ws.N
    shift = 1.0 / (2.0 * rho * n)
    gens = []
    for b in range(J + 1):
        block = G[b * n : (b + 1) * n, b * n : (b + 1) * n]
        u = ws.diag_means(block)
        u[0] = u[0].real - shift
        gens.append(u)
    t = float(G[N, N].real) - 1.0 / (2.0 * rho)
    g_z = 0.5 * (G[:N, N] + np.conj(G[N, :N]))
    z, mu = ws.project_components(g_z)
    comps = [z[b * n : (b + 1) * n] for b in range(J + 1)]
    return gens, comps, t, mu


def _assemble_into(ws: _Workspace, M: np.ndarray, gens, comps, t) -> None:
    n, N = ws.n, ws.N
    for b, u in enumerate(gens):
        ws.fill_toeplitz(M[b * n : (b + 1) * n, b * n : (b + 1) * n], u)
    z = np.concatenate(comps)
    M[:N, N] = z
    M[N, :N] = z.conj()
    M[N, N] = t


def affine_step(state: SolverState, problem: MeasurementSet, cfg: SolverConfig) -> SolverState:
    """One affine update from the current slack/dual pair.

    At a feasible optimum (slack equal to the assembled block and dual
    holding the cone multiplier) this map is a fixed point.
    """
    ws = _Workspace(problem)
    G = state.slack - state.dual
    gens, comps, t, _ = _affine_update(ws, G, state.rho)
    variables = SdpVariables(generators=gens, components=comps, t=t)
    return SolverState(
        variables=variables,
        slack=state.slack,
        dual=state.dual,
        rho=state.rho,
        iteration=state.iteration + 1,
        residual_history=state.residual_history,
    )


def extract_multipliers(state: SolverState, problem: MeasurementSet) -> list:
    """Measurement-equality multipliers q_j recovered from the iterate.

    At convergence these are the dual-certificate inputs; away from it the
    induced gaps are simply reported by the caller, never enforced here.
    """
    ws = _Workspace(problem)
    return _multipliers_from(ws, state.slack, state.dual, state.rho)


def _multipliers_from(ws: _Workspace, W: np.ndarray, Y: np.ndarray, rho: float) -> list:
    N = ws.N
    G = W - Y
    g_z = 0.5 * (G[:N, N] + np.conj(G[N, :N]))
    q = 2.0 * rho * sla.cho_solve(
        ws.kkt, ws.y_stack - ws.apply_forward(g_z), check_finite=False
    )
    return [q[ws.offsets[j] : ws.offsets[j + 1]] for j in range(ws.J)]


def _eigh(V: np.ndarray):
    try:
        if V.shape[0] <= 300:
            return sla.eigh(V, driver="evd", check_finite=False)
        return sla.eigh(V, driver="evr", check_finite=False)
    except (sla.LinAlgError, ValueError) as exc:
        raise SolverError(f"eigendecomposition failed: {exc}") from exc


def solve(problem: MeasurementSet, config: Optional[SolverConfig] = None) -> SdpSolution:
    """Solve the joint program for one measurement set.

    Returns the primal variables (measurement equalities hold to the KKT
    solve's accuracy in every iterate), the measurement multipliers, and
    diagnostics: duality gap, dual norm of the multipliers, minimum
    eigenvalue of the assembled block, and the per-signal measurement
    residual.
    """
    cfg = config or SolverConfig()
    ws = _Workspace(problem)
    n, J, N = ws.n, ws.J, ws.N
    dim = N + 1

    # normalize the data scale; the program is positively homogeneous and
    # the dual multipliers are invariant under this scaling
    scale = max(float(np.linalg.norm(y)) for y in problem.measurements)
    if scale <= 0.0:
        # all-zero measurements: the zero point is feasible and the
        # objective is nonnegative on the cone, so it is exactly optimal
        variables = SdpVariables.zeros(n, J)
        return SdpSolution(
            variables=variables,
            multipliers=[np.zeros(op.m, dtype=complex) for op in problem.sensing],
            objective=0.0,
            residuals=(0.0, 0.0),
            iterations=0,
            status="converged",
            diagnostics={
                "duality_gap": 0.0,
                "dual_value": 0.0,
                "dual_norm": 0.0,
                "min_eigenvalue": 0.0,
                "scale": 0.0,
                "seconds": 0.0,
            },
        )
    ws.y_stack = ws.y_stack / scale

    rho = cfg.rho
    alpha = cfg.over_relaxation
    W = np.zeros((dim, dim), dtype=complex)
    Y = np.zeros((dim, dim), dtype=complex)
    M = np.zeros((dim, dim), dtype=complex)

    history = []
    status = "max_iters"
    r_norm = s_norm = float("nan")
    diag_cache = {}
    next_check = 0
    start = time.perf_counter()

    it = 0
    for it in range(1, cfg.max_iters + 1):
        G = W - Y
        gens, comps, t, _ = _affine_update(ws, G, rho)
        _assemble_into(ws, M, gens, comps, t)

        M_relaxed = alpha * M + (1.0 - alpha) * W
        V = M_relaxed + Y
        w_eig, U = _eigh(V)
        W_prev = W
        W = _clip_reconstruct(0.5 * (V + V.conj().T), w_eig, U)
        Y = Y + M_relaxed - W

        r_norm = float(np.linalg.norm(M - W))
        s_norm = rho * float(np.linalg.norm(W - W_prev))
        M_norm = float(np.linalg.norm(M))
        W_norm = float(np.linalg.norm(W))
        Y_norm = float(np.linalg.norm(Y))
        eps_pri = cfg.eps_abs * dim + cfg.eps_rel * max(M_norm, W_norm)
        eps_dual = cfg.eps_abs * dim + cfg.eps_rel * rho * Y_norm

        if cfg.trace_log and (it % cfg.log_every == 0 or it == 1):
            obj = 0.5 * sum(u[0].real for u in gens) + 0.5 * t
            history.append((it, scale * obj, r_norm, s_norm, rho))

        if r_norm <= eps_pri and s_norm <= eps_dual and it >= next_check:
            ok, diag_cache = _optimality_check(
                ws, M, W, Y, rho, gens, comps, t, scale, cfg
            )
            if ok:
                status = "converged"
                break
            next_check = it + cfg.check_every

        if cfg.adaptive_rho and it % cfg.adapt_every == 0:
            if r_norm > cfg.rho_ratio * s_norm and rho * cfg.rho_scale <= _RHO_MAX:
                rho *= cfg.rho_scale
                Y /= cfg.rho_scale
            elif s_norm > cfg.rho_ratio * r_norm and rho / cfg.rho_scale >= _RHO_MIN:
                rho /= cfg.rho_scale
                Y *= cfg.rho_scale

    if status != "converged":
        _, diag_cache = _optimality_check(ws, M, W, Y, rho, gens, comps, t, scale, cfg)

    variables = SdpVariables(
        generators=[scale * u for u in gens],
        components=[scale * z for z in comps],
        t=scale * t,
    )
    multipliers = diag_cache.pop("multipliers")
    diag_cache["scale"] = scale
    diag_cache["seconds"] = time.perf_counter() - start

    if cfg.trace_log:
        _write_trace(cfg.trace_log, history)

    return SdpSolution(
        variables=variables,
        multipliers=multipliers,
        objective=primal_objective(variables),
        residuals=(r_norm, s_norm),
        iterations=it,
        status=status,
        diagnostics=diag_cache,
    )


def _optimality_check(ws, M, W, Y, rho, gens, comps, t, scale, cfg):
    """Certificate-quality gates evaluated at candidate stops.

    All thresholds are checked on the unscaled problem: minimum eigenvalue
    of the assembled block, duality gap against the extracted multipliers,
    and the dual-norm bound.
    """
    multipliers = _multipliers_from(ws, W, Y, rho)
    objective = scale * (0.5 * sum(u[0].real for u in gens) + 0.5 * t)
    dual_value = scale * float(
        sum(np.vdot(y, q).real for y, q in zip(np.split(ws.y_stack, ws.offsets[1:-1]), multipliers))
    )
    gap = abs(objective - dual_value)
    norm_value = dual_norm(multipliers, ws.sensing)
    min_eig = scale * float(np.linalg.eigvalsh(M)[0])
    ok = (
        min_eig >= -cfg.psd_tol
        and gap <= cfg.gap_tol * max(1.0, abs(objective))
        and norm_value <= 1.0 + cfg.dual_norm_tol
    )
    diagnostics = {
        "multipliers": multipliers,
        "duality_gap": gap,
        "dual_value": dual_value,
        "dual_norm": norm_value,
        "min_eigenvalue": min_eig,
    }
    return ok, diagnostics


def _write_trace(path: str, history) -> None:
    with open(path, "w") as fh:
        fh.write("iter,objective,primal_res,dual_res,rho\n")
        for it, obj, r, s, rho in history:
            fh.write(f"{it},{obj:.17g},{r:.17g},{s:.17g},{rho:.17g}\n")


def measurement_residual(variables: SdpVariables, problem: MeasurementSet) -> float:
    """Largest per-signal relative violation of y_j = Phi_j (z_c + z_j)."""
    worst = 0.0
    for op, y, x in zip(
        problem.sensing, problem.measurements, variables.recovered_signals()
    ):
        denom = max(float(np.linalg.norm(y)), 1e-300)
        worst = max(worst, float(np.linalg.norm(op.apply(x) - y)) / denom)
    return worst


def atomic_norm_sdp(x: np.ndarray, config: Optional[SolverConfig] = None):
    """Atomic norm of a single fully known vector via the one-block
    program with the component pinned to x.

    This is an independent formulation from the joint path (one Toeplitz
    block of size n+1, no free components); used to cross-check the J = 1
    reduction.  Returns (value, iterations, status).
    """
    cfg = config or SolverConfig()
    x = np.asarray(x, dtype=complex).reshape(-1)
    n = x.size
    dim = n + 1
    scale = float(np.linalg.norm(x))
    if scale <= 0.0:
        return 0.0, 0, "converged"
    xs = x / scale

    rows = np.arange(n)
    lower_r, lower_s = np.tril_indices(n)
    lower_flat = lower_r * n + lower_s
    diag_ids = lower_r - lower_s
    counts = (n - rows).astype(float)
    toep_idx = (n - 1) + rows[:, None] - rows[None, :]

    rho = cfg.rho
    alpha = cfg.over_relaxation
    W = np.zeros((dim, dim), dtype=complex)
    Y = np.zeros((dim, dim), dtype=complex)
    M = np.zeros((dim, dim), dtype=complex)
    M[:n, n] = xs
    M[n, :n] = xs.conj()

    status = "max_iters"
    it = 0
    for it in range(1, cfg.max_iters + 1):
        G = W - Y
        vals = G[:n, :n].ravel()[lower_flat]
        u = (
            np.bincount(diag_ids, weights=vals.real, minlength=n)
            + 1j * np.bincount(diag_ids, weights=vals.imag, minlength=n)
        ) / counts
        u[0] = u[0].real - 1.0 / (2.0 * rho * n)
        t = float(G[n, n].real) - 1.0 / (2.0 * rho)

        u_ext = np.concatenate([np.conj(u[:0:-1]), u])
        M[:n, :n] = u_ext[toep_idx]
        M[n, n] = t

        M_relaxed = alpha * M + (1.0 - alpha) * W
        V = M_relaxed + Y
        w_eig, U = _eigh(V)
        W_prev = W
        W = _clip_reconstruct(0.5 * (V + V.conj().T), w_eig, U)
        Y = Y + M_relaxed - W

        r_norm = float(np.linalg.norm(M - W))
        s_norm = rho * float(np.linalg.norm(W - W_prev))
        eps_pri = cfg.eps_abs * dim + cfg.eps_rel * max(
            np.linalg.norm(M), np.linalg.norm(W)
        )
        eps_dual = cfg.eps_abs * dim + cfg.eps_rel * rho * float(np.linalg.norm(Y))
        if r_norm <= eps_pri and s_norm <= eps_dual:
            status = "converged"
            break

        if cfg.adaptive_rho and it % cfg.adapt_every == 0:
            if r_norm > cfg.rho_ratio * s_norm and rho * cfg.rho_scale <= _RHO_MAX:
                rho *= cfg.rho_scale
                Y /= cfg.rho_scale
            elif s_norm > cfg.rho_ratio * r_norm and rho / cfg.rho_scale >= _RHO_MIN:
                rho /= cfg.rho_scale
                Y *= cfg.rho_scale

    value = scale * (0.5 * float(u[0].real) + 0.5 * t)
    return value, it, status
