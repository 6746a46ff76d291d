"""Command-line front end.

Subcommands: generate (random instance to file), solve (one instance),
localize (dual polynomial CSV from a solution), sweep (Monte Carlo success
rates), oracle-check (cross-check the semidefinite path against the
gridded reference).  Exit codes: 0 success, 2 configuration or input
error, 3 solver non-convergence, 4 assertion failure.

The JOINTFREQ_WORKERS environment variable sets the default trial
parallelism for sweeps.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .certificate import DualPolynomialEnsemble, write_localization_csv
from .experiment import ExperimentConfig, intrinsic_sparsity, run_sweep, success_rate
from .files import (
    FormatError,
    read_instance,
    read_measurements,
    read_solution,
    write_instance,
    write_measurements,
    write_solution,
)
from .gridded import GridBudgetError, solve_grid_l1
from .model import (
    InstanceConfig,
    SamplingBudgetError,
    minimum_separation,
    random_instance,
    synthesize_ensemble,
)
from .problem import draw_row_subsets, subsampled_measurements
from .solver import SolverConfig, solve
from .vandermonde import DecompositionError, recover_spectrum

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_ASSERT = 4


class ConfigError(ValueError):
    pass


def _load_json(path, required, optional):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}")
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    for key in required:
        if key not in data:
            raise ConfigError(f"{path}: missing required field {key!r}")
    unknown = set(data) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"{path}: unknown fields {sorted(unknown)}")
    return data


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def cmd_generate(args) -> int:
    data = _load_json(
        args.config,
        required=("n", "J", "s_c", "s_j", "seed"),
        optional=("min_sep", "magnitude_law"),
    )
    try:
        cfg = InstanceConfig(**data)
        ensemble = random_instance(cfg)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{args.config}: {exc}")
    except SamplingBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "instance.txt")
    write_instance(path, None if args.blind else ensemble,
                   signals=synthesize_ensemble(ensemble))
    print(f"wrote {path} (n={cfg.n}, J={cfg.J}, "
          f"min separation {_fmt(minimum_separation(ensemble))})")
    return EXIT_OK


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        rho=args.rho,
        max_iters=args.max_iters,
        eps_abs=args.eps_abs,
        eps_rel=args.eps_rel,
    )


def cmd_solve(args) -> int:
    ensemble, signals = read_instance(args.instance)
    n = signals[0].size
    if args.measurements:
        problem = read_measurements(args.measurements)
        if problem.n != n:
            raise ConfigError("measurement file dimension does not match instance")
    else:
        if args.m is None:
            raise ConfigError("provide --m (with optional --measure-seed) or --measurements")
        if not 1 <= args.m <= n:
            raise ConfigError(f"--m must lie in [1, {n}]")
        rng = np.random.default_rng(args.measure_seed)
        index_sets = draw_row_subsets(n, args.m, len(signals), rng)
        problem = subsampled_measurements(signals, index_sets)

    solution = solve(problem, _solver_config(args))
    os.makedirs(args.out, exist_ok=True)
    write_measurements(os.path.join(args.out, "measurements.txt"), problem)
    write_solution(os.path.join(args.out, "solution.txt"), solution, problem)

    lines = [
        f"status {solution.status}",
        f"objective {_fmt(solution.objective)}",
        f"iterations {solution.iterations}",
        f"duality_gap {_fmt(solution.diagnostics['duality_gap'])}",
        f"dual_norm {_fmt(solution.diagnostics['dual_norm'])}",
        f"min_eigenvalue {_fmt(solution.diagnostics['min_eigenvalue'])}",
    ]
    recovered = solution.variables.recovered_signals()
    if ensemble is not None:
        errors = [
            float(np.linalg.norm(xh - x)) / max(float(np.linalg.norm(x)), 1e-300)
            for xh, x in zip(recovered, signals)
        ]
        lines.append("rel_errors " + " ".join(_fmt(e) for e in errors))
        lines.append(f"max_rel_error {_fmt(max(errors))}")
        try:
            rec = recover_spectrum(
                solution.variables.generators[0], solution.variables.components[0]
            )
            freqs = " ".join(_fmt(f) for f in rec.spectrum.frequencies)
            lines.append(f"recovered_common_frequencies {freqs}")
            truth = " ".join(_fmt(f) for f in sorted(ensemble.common.frequencies))
            lines.append(f"true_common_frequencies {truth}")
        except DecompositionError as exc:
            lines.append(f"recovered_common_frequencies unavailable ({exc})")
    report = os.path.join(args.out, "report.txt")
    with open(report, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK if solution.status == "converged" else EXIT_SOLVER


def cmd_localize(args) -> int:
    solution, sensing = read_solution(args.solution)
    truth = None
    if args.truth:
        truth, _ = read_instance(args.truth)
        if truth is None:
            raise ConfigError("truth instance file carries no spectra (blind file)")
    ensemble = DualPolynomialEnsemble.from_multipliers(solution.multipliers, sensing)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "dualpoly.csv")
    write_localization_csv(path, ensemble, truth=truth, grid_size=args.grid)
    print(f"wrote {path} ({args.grid} rows)")
    return EXIT_OK


def _experiment_config(path, args) -> ExperimentConfig:
    data = _load_json(
        path,
        required=(),
        optional=(
            "n", "s_c", "s_j", "j_values", "m_values", "trials", "base_seed",
            "mode", "success_threshold", "min_sep", "rho", "max_iters",
            "eps_abs", "eps_rel", "certificates", "cert_grid", "cert_tol",
            "workers", "dump_dual_polynomials", "assertions",
        ),
    )
    assertions = data.pop("assertions", [])
    workers_env = os.environ.get("JOINTFREQ_WORKERS")
    if args.workers is not None:
        data["workers"] = args.workers
    elif workers_env and "workers" not in data:
        data["workers"] = int(workers_env)
    data["reproducible"] = args.reproducible
    try:
        cfg = ExperimentConfig(**data)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}")
    return cfg, assertions


def cmd_sweep(args) -> int:
    cfg, assertions = _experiment_config(args.config, args)
    os.makedirs(args.out, exist_ok=True)
    result = run_sweep(cfg, out_dir=args.out)
    for j in cfg.j_values:
        k = intrinsic_sparsity(cfg.s_c, cfg.s_j, j)
        print(f"J={j}: intrinsic sparsity K={k}")
    for row in result.table:
        print(
            f"{row['mode']:9s} J={row['J']:3d} m={row['m']:3d} "
            f"rate={row['rate']:.3f} ({row['successes']}/{row['trials']}) "
            f"mean_iters={row['mean_iters']:.0f}"
        )
    if not args.check:
        return EXIT_OK
    failures = []
    for spec in assertions:
        kind = spec.get("kind", "rate")
        if kind == "rate":
            rate = success_rate(result, spec["mode"], spec["J"], spec["m"])
            if "min_rate" in spec and rate < spec["min_rate"]:
                failures.append(f"{spec}: rate {rate:.3f} below {spec['min_rate']}")
            if "max_rate" in spec and rate > spec["max_rate"]:
                failures.append(f"{spec}: rate {rate:.3f} above {spec['max_rate']}")
        elif kind == "mode_gap":
            joint = success_rate(result, "joint", spec["J"], spec["m"])
            separate = success_rate(result, "separate", spec["J"], spec["m"])
            if joint - separate < spec["min_gap"]:
                failures.append(
                    f"{spec}: joint-separate gap {joint - separate:.3f} "
                    f"below {spec['min_gap']}"
                )
        else:
            raise ConfigError(f"unknown assertion kind {kind!r}")
    for f in failures:
        print(f"ASSERTION FAILED: {f}", file=sys.stderr)
    return EXIT_ASSERT if failures else EXIT_OK


def cmd_oracle_check(args) -> int:
    data = _load_json(
        args.config,
        required=("instances",),
        optional=("grid", "rel_tol", "solver_max_iters", "oracle_max_iters"),
    )
    grid = int(data.get("grid", 2**14))
    rel_tol = float(data.get("rel_tol", 1e-3))
    solver_cfg = SolverConfig(rho=0.1, max_iters=int(data.get("solver_max_iters", 50_000)))
    oracle_iters = int(data.get("oracle_max_iters", 10_000))

    rows = []
    worst = 0.0
    all_lower_ok = True
    for k, inst in enumerate(data["instances"]):
        for key in ("n", "J", "s_c", "s_j", "m", "seed"):
            if key not in inst:
                raise ConfigError(f"instance {k}: missing field {key!r}")
        cfg = InstanceConfig(
            n=inst["n"], J=inst["J"], s_c=inst["s_c"], s_j=inst["s_j"],
            seed=inst["seed"],
        )
        signals = synthesize_ensemble(random_instance(cfg))
        rng = np.random.default_rng(inst["seed"] + 977)
        problem = subsampled_measurements(
            signals, draw_row_subsets(inst["n"], inst["m"], inst["J"], rng)
        )
        sdp = solve(problem, solver_cfg)
        try:
            grid_sol = solve_grid_l1(problem, grid, max_iters=oracle_iters)
        except GridBudgetError as exc:
            raise ConfigError(f"instance {k}: {exc}")
        rel = abs(grid_sol.objective - sdp.objective) / max(1.0, abs(sdp.objective))
        lower_ok = grid_sol.objective >= sdp.objective - 1e-6
        worst = max(worst, rel)
        all_lower_ok &= lower_ok
        rows.append(
            [k, inst["n"], inst["J"], inst["m"], inst["seed"],
             _fmt(sdp.objective), sdp.status, _fmt(grid_sol.objective),
             _fmt(grid_sol.gap), _fmt(rel), int(lower_ok)]
        )
        print(
            f"instance {k}: sdp={sdp.objective:.8f} ({sdp.status}) "
            f"grid={grid_sol.objective:.8f} (gap {grid_sol.gap:.2e}) rel={rel:.2e}"
        )

    os.makedirs(args.out, exist_ok=True)
    import csv as _csv

    with open(os.path.join(args.out, "oracle.csv"), "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(
            ["instance", "n", "J", "m", "seed", "sdp_objective", "sdp_status",
             "grid_objective", "grid_gap", "rel_diff", "lower_ok"]
        )
        writer.writerows(rows)
    print(f"max relative objective difference: {_fmt(worst)} (tolerance {_fmt(rel_tol)})")
    if args.check and (worst > rel_tol or not all_lower_ok):
        print("ASSERTION FAILED: oracle disagreement beyond tolerance", file=sys.stderr)
        return EXIT_ASSERT
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jointfreq",
        description="Joint off-grid recovery of frequency-sparse signal ensembles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a random instance to a file")
    p.add_argument("--config", required=True, help="JSON instance configuration")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--blind", action="store_true",
                   help="strip ground-truth spectra from the instance file")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="solve one instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--m", type=int, default=None,
                   help="measurements per signal (random sub-identity rows)")
    p.add_argument("--measure-seed", type=int, default=0)
    p.add_argument("--measurements", default=None,
                   help="use an explicit measurement file instead of --m")
    p.add_argument("--out", required=True)
    p.add_argument("--rho", type=float, default=0.1)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=50_000)
    p.add_argument("--eps-abs", dest="eps_abs", type=float, default=1e-8)
    p.add_argument("--eps-rel", dest="eps_rel", type=float, default=1e-8)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("localize", help="dual polynomial CSV from a solution file")
    p.add_argument("--solution", required=True)
    p.add_argument("--truth", default=None, help="instance file with spectra")
    p.add_argument("--grid", type=int, default=8192)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_localize)

    p = sub.add_parser("sweep", help="Monte Carlo success-rate sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--assert", dest="check", action="store_true",
                   help="exit 4 unless the config's assertions hold")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--reproducible", action="store_true",
                   help="zero wall-time fields for byte-identical output")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle-check", help="cross-check solver vs gridded reference")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--assert", dest="check", action="store_true")
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FormatError, SamplingBudgetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
