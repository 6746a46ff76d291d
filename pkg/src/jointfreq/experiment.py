"""Monte Carlo harness: success rate versus measurements per signal.

Each trial draws a fresh random ensemble and per-signal random row subsets,
solves the joint program and/or the per-signal separate programs, and
records relative errors, certificate quality and localization outcomes.
A trial succeeds when every signal is recovered to the relative error
threshold.  Separate recovery reuses the joint solver with J = 1 per
signal, which is exactly the single-signal special case of the norm.

Trial seeds are derived from a stable hash of (base seed, mode, J, m,
trial index), so sweeps are reproducible cell by cell and trials can run
in parallel without changing any outcome.
"""

from __future__ import annotations

import csv
import hashlib
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .certificate import DualPolynomialEnsemble, localize, peaks_match_support
from .model import InstanceConfig, random_instance, synthesize_ensemble
from .problem import draw_row_subsets, subsampled_measurements
from .solver import SolverConfig, solve

MODES = ("joint", "separate")


@dataclass
class ExperimentConfig:
    """Sweep parameters; desk defaults are 20 trials per cell."""

    n: int = 40
    s_c: int = 4
    s_j: int = 2
    j_values: tuple = (4,)
    m_values: tuple = (5, 10, 15, 20, 25, 30, 35)
    trials: int = 20
    base_seed: int = 20250
    mode: str = "both"
    success_threshold: float = 1e-6
    min_sep: Optional[float] = None
    rho: float = 0.1
    max_iters: int = 20_000
    eps_abs: float = 1e-8
    eps_rel: float = 1e-8
    certificates: bool = True
    cert_grid: int = 8192
    cert_tol: float = 1e-3
    workers: int = 1
    reproducible: bool = False
    dump_dual_polynomials: bool = False

    def __post_init__(self):
        if self.mode not in ("joint", "separate", "both"):
            raise ValueError(f"mode must be joint, separate or both, got {self.mode!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        self.j_values = tuple(int(j) for j in self.j_values)
        self.m_values = tuple(int(m) for m in self.m_values)
        for m in self.m_values:
            if not 1 <= m <= self.n:
                raise ValueError(f"m_j must lie in [1, n], got {m}")
        for j in self.j_values:
            if j < 1:
                raise ValueError("J values must be >= 1")

    def modes(self) -> tuple:
        return MODES if self.mode == "both" else (self.mode,)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            rho=self.rho,
            max_iters=self.max_iters,
            eps_abs=self.eps_abs,
            eps_rel=self.eps_rel,
        )


def intrinsic_sparsity(s_c: int, s_j: int, j_count: int) -> int:
    """Three real parameters per sinusoid across the whole ensemble."""
    return 3 * (s_c + s_j * j_count)


def trial_seed(base_seed: int, mode: str, j_count: int, m: int, index: int) -> int:
    """Stable per-trial seed from the cell coordinates."""
    key = f"{base_seed}|{mode}|{j_count}|{m}|{index}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big")


@dataclass
class TrialRecord:
    """Outcome of one Monte Carlo trial (one mode, one cell)."""

    mode: str
    j_count: int
    m: int
    trial_index: int
    seed: int
    rel_errors: list
    max_rel_error: float
    success: bool
    status: str
    iterations: int
    objective: float
    duality_gap: float
    dual_norm: float
    min_eigenvalue: float
    wall_seconds: float
    l0_atoms: int
    cert_common_matched: Optional[bool] = None
    cert_innovation_matched: Optional[bool] = None
    cert_max_offsupport: Optional[float] = None
    cert_conditions_met: Optional[bool] = None


def _relative_errors(recovered, truth_signals) -> list:
    errors = []
    for xh, x in zip(recovered, truth_signals):
        denom = max(float(np.linalg.norm(x)), 1e-300)
        errors.append(float(np.linalg.norm(xh - x)) / denom)
    return errors


def run_trial(
    cfg: ExperimentConfig,
    mode: str,
    j_count: int,
    m: int,
    seed: int,
    trial_index: int = 0,
    dump_path=None,
) -> TrialRecord:
    """One Monte Carlo trial: generate, sense with random sub-identity
    rows, solve in the requested mode, and grade the recovery."""
    master = np.random.default_rng(seed)
    instance_seed = int(master.integers(2**63))
    instance_cfg = InstanceConfig(
        n=cfg.n, J=j_count, s_c=cfg.s_c, s_j=cfg.s_j,
        min_sep=cfg.min_sep, seed=instance_seed,
    )
    ensemble = random_instance(instance_cfg)
    signals = synthesize_ensemble(ensemble)
    index_sets = draw_row_subsets(cfg.n, m, j_count, master)
    solver_cfg = cfg.solver_config()

    start = time.perf_counter()
    if mode == "joint":
        problem = subsampled_measurements(signals, index_sets)
        solution = solve(problem, solver_cfg)
        recovered = solution.variables.recovered_signals()
        status = solution.status
        iterations = solution.iterations
        objective = solution.objective
        gap_norm = solution.diagnostics["duality_gap"] / max(1.0, abs(objective))
        dual_norm_value = solution.diagnostics["dual_norm"]
        min_eig = solution.diagnostics["min_eigenvalue"]
    elif mode == "separate":
        recovered = []
        statuses = []
        iterations = 0
        objective = 0.0
        gap_norm = 0.0
        dual_norm_value = 0.0
        min_eig = 0.0
        solution = None
        problem = None
        for j in range(j_count):
            sub = subsampled_measurements([signals[j]], [index_sets[j]])
            sol = solve(sub, solver_cfg)
            recovered.append(sol.variables.recovered_signals()[0])
            statuses.append(sol.status)
            iterations += sol.iterations
            objective += sol.objective
            gap_norm = max(
                gap_norm,
                sol.diagnostics["duality_gap"] / max(1.0, abs(sol.objective)),
            )
            dual_norm_value = max(dual_norm_value, sol.diagnostics["dual_norm"])
            min_eig = min(min_eig, sol.diagnostics["min_eigenvalue"])
        status = "converged" if all(s == "converged" for s in statuses) else "max_iters"
    else:
        raise ValueError(f"unknown mode {mode!r}")
    wall = time.perf_counter() - start

    rel_errors = _relative_errors(recovered, signals)
    record = TrialRecord(
        mode=mode,
        j_count=j_count,
        m=m,
        trial_index=trial_index,
        seed=seed,
        rel_errors=rel_errors,
        max_rel_error=max(rel_errors),
        success=max(rel_errors) <= cfg.success_threshold,
        status=status,
        iterations=iterations,
        objective=objective,
        duality_gap=gap_norm,
        dual_norm=dual_norm_value,
        min_eigenvalue=min_eig,
        wall_seconds=wall,
        l0_atoms=cfg.s_c + cfg.s_j * j_count,
    )

    if mode == "joint" and cfg.certificates:
        dual_ens = DualPolynomialEnsemble.from_multipliers(
            solution.multipliers, problem.sensing
        )
        report = localize(
            dual_ens, truth=ensemble, tol_peak=cfg.cert_tol, grid_size=cfg.cert_grid
        )
        record.cert_common_matched = peaks_match_support(
            report.common_peaks, list(ensemble.common.frequencies), 1e-3
        )
        record.cert_innovation_matched = all(
            peaks_match_support(peaks, list(spec.frequencies), 1e-3)
            for peaks, spec in zip(report.innovation_peaks, ensemble.innovations)
        )
        record.cert_max_offsupport = max(
            [report.max_offsupport_modulus_sum] + report.max_offsupport_modulus
        )
        record.cert_conditions_met = all(report.conditions_met.values())
        if dump_path is not None:
            from .certificate import write_localization_csv

            write_localization_csv(dump_path, dual_ens, truth=ensemble,
                                   grid_size=cfg.cert_grid)
    return record


def _run_cell(args):
    cfg, mode, j_count, m, index, dump_path = args
    seed = trial_seed(cfg.base_seed, mode, j_count, m, index)
    return run_trial(cfg, mode, j_count, m, seed, trial_index=index, dump_path=dump_path)


@dataclass
class SweepResult:
    records: list
    table: list = field(default_factory=list)


def run_sweep(cfg: ExperimentConfig, out_dir=None) -> SweepResult:
    """Run all (mode, J, m, trial) cells and aggregate success rates.

    Writes sweep.csv and trials.csv into ``out_dir`` when given.  Results
    are independent of worker count; in reproducible mode wall-time fields
    are zeroed so output files are byte-identical across runs.
    """
    tasks = []
    for mode in cfg.modes():
        for j_count in cfg.j_values:
            for m in cfg.m_values:
                for index in range(cfg.trials):
                    dump_path = None
                    if (
                        cfg.dump_dual_polynomials
                        and out_dir is not None
                        and mode == "joint"
                    ):
                        dump_path = os.path.join(
                            out_dir, f"dualpoly_J{j_count}_m{m}_t{index}.csv"
                        )
                    tasks.append((cfg, mode, j_count, m, index, dump_path))

    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_run_cell, tasks))
    else:
        records = [_run_cell(task) for task in tasks]

    records.sort(key=lambda r: (r.mode, r.j_count, r.m, r.trial_index))
    if cfg.reproducible:
        for r in records:
            r.wall_seconds = 0.0

    table = []
    for mode in cfg.modes():
        for j_count in cfg.j_values:
            for m in cfg.m_values:
                cell = [
                    r for r in records
                    if r.mode == mode and r.j_count == j_count and r.m == m
                ]
                successes = sum(r.success for r in cell)
                table.append(
                    dict(
                        mode=mode,
                        J=j_count,
                        m=m,
                        trials=len(cell),
                        successes=successes,
                        rate=successes / len(cell),
                        mean_error=float(np.mean([r.max_rel_error for r in cell])),
                        mean_iters=float(np.mean([r.iterations for r in cell])),
                        mean_seconds=float(np.mean([r.wall_seconds for r in cell])),
                    )
                )

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_sweep_csv(os.path.join(out_dir, "sweep.csv"), table)
        write_trials_csv(os.path.join(out_dir, "trials.csv"), records)
    return SweepResult(records=records, table=table)


def success_rate(result: SweepResult, mode: str, j_count: int, m: int) -> float:
    for row in result.table:
        if row["mode"] == mode and row["J"] == j_count and row["m"] == m:
            return row["rate"]
    raise KeyError(f"no cell ({mode}, J={j_count}, m={m}) in sweep")


def write_sweep_csv(path, table) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["mode", "J", "m", "trials", "successes", "rate",
             "mean_error", "mean_iters", "mean_seconds"]
        )
        for row in table:
            writer.writerow(
                [row["mode"], row["J"], row["m"], row["trials"], row["successes"],
                 f"{row['rate']:.17g}", f"{row['mean_error']:.17g}",
                 f"{row['mean_iters']:.17g}", f"{row['mean_seconds']:.17g}"]
            )


def write_trials_csv(path, records) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["mode", "J", "m", "trial", "seed", "success", "max_rel_error",
             "rel_errors", "status", "iterations", "objective", "duality_gap",
             "dual_norm", "min_eigenvalue", "l0_atoms", "cert_common_matched",
             "cert_innovation_matched", "cert_max_offsupport",
             "cert_conditions_met", "wall_seconds"]
        )
        for r in records:
            writer.writerow(
                [r.mode, r.j_count, r.m, r.trial_index, r.seed, int(r.success),
                 f"{r.max_rel_error:.17g}",
                 ";".join(f"{e:.17g}" for e in r.rel_errors),
                 r.status, r.iterations, f"{r.objective:.17g}",
                 f"{r.duality_gap:.17g}", f"{r.dual_norm:.17g}",
                 f"{r.min_eigenvalue:.17g}", r.l0_atoms,
                 _opt_int(r.cert_common_matched),
                 _opt_int(r.cert_innovation_matched),
                 "" if r.cert_max_offsupport is None else f"{r.cert_max_offsupport:.17g}",
                 _opt_int(r.cert_conditions_met),
                 f"{r.wall_seconds:.17g}"]
            )


def _opt_int(value) -> str:
    return "" if value is None else str(int(value))
