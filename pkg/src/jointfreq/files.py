"""Structured text file formats: instances, measurements, solutions.

All numeric fields are written as full-precision decimals (17 significant
digits), so files round-trip bit-exactly through float parsing.  Parsers
report the offending line number on malformed input.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .model import SignalEnsemble, SparseSpectrum, synthesize_ensemble
from .problem import MeasurementSet, SdpSolution, SdpVariables, SensingOperator

INSTANCE_MAGIC = "jointfreq-instance v1"
MEASUREMENT_MAGIC = "jointfreq-measurements v1"
SOLUTION_MAGIC = "jointfreq-solution v1"


class FormatError(ValueError):
    """Malformed structured text file."""

    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


def _fmt(x: float) -> str:
    return f"{x:.17g}"


class _Reader:
    def __init__(self, path):
        self.path = path
        with open(path) as fh:
            self.lines = fh.read().splitlines()
        self.pos = 0

    def error(self, message):
        raise FormatError(self.path, self.pos, message)

    def next(self) -> str:
        while self.pos < len(self.lines):
            line = self.lines[self.pos].strip()
            self.pos += 1
            if line and not line.startswith("#"):
                return line
        self.error("unexpected end of file")

    def expect(self, keyword: str) -> list:
        line = self.next()
        parts = line.split()
        if parts[0] != keyword:
            self.error(f"expected {keyword!r}, got {parts[0]!r}")
        return parts[1:]

    def expect_int(self, keyword: str) -> int:
        parts = self.expect(keyword)
        try:
            return int(parts[0])
        except (IndexError, ValueError):
            self.error(f"expected integer after {keyword!r}")

    def complex_rows(self, count: int) -> np.ndarray:
        out = np.empty(count, dtype=complex)
        for k in range(count):
            parts = self.next().split()
            try:
                out[k] = float(parts[0]) + 1j * float(parts[1])
            except (IndexError, ValueError):
                self.error("expected two decimal fields (re, im)")
        return out


def write_instance(path, ensemble: Optional[SignalEnsemble], signals=None) -> None:
    """Write an instance: ground-truth spectra (unless blind) plus the
    synthesized signal vectors.

    Pass ``ensemble=None`` with explicit ``signals`` for a blind file.
    """
    if signals is None:
        if ensemble is None:
            raise ValueError("need an ensemble or explicit signals")
        signals = synthesize_ensemble(ensemble)
    signals = [np.asarray(x, dtype=complex).reshape(-1) for x in signals]
    n = signals[0].size
    J = len(signals)
    with open(path, "w") as fh:
        fh.write(f"{INSTANCE_MAGIC}\n")
        fh.write(f"n {n}\n")
        fh.write(f"J {J}\n")
        fh.write(f"spectra {0 if ensemble is None else 1}\n")
        if ensemble is not None:
            fh.write(f"common {ensemble.common.size}\n")
            for f, c in zip(ensemble.common.frequencies, ensemble.common.coefficients):
                fh.write(f"{_fmt(f)} {_fmt(c.real)} {_fmt(c.imag)}\n")
            for j, spec in enumerate(ensemble.innovations):
                fh.write(f"innovation {j + 1} {spec.size}\n")
                for f, c in zip(spec.frequencies, spec.coefficients):
                    fh.write(f"{_fmt(f)} {_fmt(c.real)} {_fmt(c.imag)}\n")
        fh.write(f"signals {J}\n")
        for j, x in enumerate(signals):
            fh.write(f"signal {j + 1}\n")
            for v in x:
                fh.write(f"{_fmt(v.real)} {_fmt(v.imag)}\n")


def read_instance(path):
    """Read an instance file; returns (ensemble or None, signal list)."""
    r = _Reader(path)
    if r.next() != INSTANCE_MAGIC:
        r.error(f"expected header {INSTANCE_MAGIC!r}")
    n = r.expect_int("n")
    J = r.expect_int("J")
    has_spectra = r.expect_int("spectra")
    ensemble = None
    if has_spectra:
        s_c = r.expect_int("common")
        common = _read_spectrum_rows(r, s_c, n)
        innovations = []
        for j in range(J):
            parts = r.expect("innovation")
            try:
                idx, s_j = int(parts[0]), int(parts[1])
            except (IndexError, ValueError):
                r.error("expected 'innovation <index> <count>'")
            if idx != j + 1:
                r.error(f"innovation blocks out of order: got {idx}, expected {j + 1}")
            innovations.append(_read_spectrum_rows(r, s_j, n))
        ensemble = SignalEnsemble(common=common, innovations=innovations, n=n)
    count = r.expect_int("signals")
    if count != J:
        r.error(f"signal count {count} does not match J={J}")
    signals = []
    for j in range(J):
        idx = r.expect_int("signal")
        if idx != j + 1:
            r.error(f"signal blocks out of order: got {idx}, expected {j + 1}")
        signals.append(r.complex_rows(n))
    return ensemble, signals


def _read_spectrum_rows(r: _Reader, count: int, n: int) -> SparseSpectrum:
    freqs = np.empty(count)
    coeffs = np.empty(count, dtype=complex)
    for k in range(count):
        parts = r.next().split()
        try:
            freqs[k] = float(parts[0])
            coeffs[k] = float(parts[1]) + 1j * float(parts[2])
        except (IndexError, ValueError):
            r.error("expected three decimal fields (f, re, im)")
    return SparseSpectrum(freqs, coeffs, n)


def write_measurements(path, problem: MeasurementSet) -> None:
    """Export (n, J, per-signal index sets, measurement values).

    Only the row-subsampling sensing representation is serializable; dense
    operators have no index-set form.
    """
    for op in problem.sensing:
        if not op.is_subsampling:
            raise ValueError("measurement export requires subsampling sensing")
    with open(path, "w") as fh:
        fh.write(f"{MEASUREMENT_MAGIC}\n")
        fh.write(f"n {problem.n}\n")
        fh.write(f"J {problem.J}\n")
        for j, (op, y) in enumerate(zip(problem.sensing, problem.measurements)):
            fh.write(f"signal {j + 1}\n")
            fh.write(f"m {op.m}\n")
            fh.write("indices " + " ".join(str(int(i)) for i in op.indices) + "\n")
            for v in y:
                fh.write(f"{_fmt(v.real)} {_fmt(v.imag)}\n")


def read_measurements(path) -> MeasurementSet:
    r = _Reader(path)
    if r.next() != MEASUREMENT_MAGIC:
        r.error(f"expected header {MEASUREMENT_MAGIC!r}")
    n = r.expect_int("n")
    J = r.expect_int("J")
    sensing, measurements = [], []
    for j in range(J):
        idx = r.expect_int("signal")
        if idx != j + 1:
            r.error(f"signal blocks out of order: got {idx}, expected {j + 1}")
        m = r.expect_int("m")
        parts = r.expect("indices")
        try:
            indices = np.array([int(p) for p in parts])
        except ValueError:
            r.error("indices must be integers")
        if indices.size != m:
            r.error(f"expected {m} indices, got {indices.size}")
        try:
            sensing.append(SensingOperator.subsample(indices, n))
        except ValueError as exc:
            r.error(str(exc))
        measurements.append(r.complex_rows(m))
    return MeasurementSet(sensing=sensing, measurements=measurements, n=n)


def write_solution(path, solution: SdpSolution, problem: MeasurementSet) -> None:
    """Persist a solver result together with the sensing index sets needed
    to re-evaluate its dual polynomials."""
    for op in problem.sensing:
        if not op.is_subsampling:
            raise ValueError("solution export requires subsampling sensing")
    v = solution.variables
    diag = solution.diagnostics
    with open(path, "w") as fh:
        fh.write(f"{SOLUTION_MAGIC}\n")
        fh.write(f"n {v.n}\n")
        fh.write(f"J {v.J}\n")
        fh.write(f"status {solution.status}\n")
        fh.write(f"objective {_fmt(solution.objective)}\n")
        fh.write(f"iterations {solution.iterations}\n")
        fh.write(f"primal_residual {_fmt(solution.residuals[0])}\n")
        fh.write(f"dual_residual {_fmt(solution.residuals[1])}\n")
        fh.write(f"duality_gap {_fmt(diag.get('duality_gap', float('nan')))}\n")
        fh.write(f"dual_norm {_fmt(diag.get('dual_norm', float('nan')))}\n")
        fh.write(f"min_eigenvalue {_fmt(diag.get('min_eigenvalue', float('nan')))}\n")
        fh.write(f"t {_fmt(v.t)}\n")
        for b, u in enumerate(v.generators):
            fh.write(f"generator {'c' if b == 0 else b}\n")
            for val in u:
                fh.write(f"{_fmt(val.real)} {_fmt(val.imag)}\n")
        for b, z in enumerate(v.components):
            fh.write(f"component {'c' if b == 0 else b}\n")
            for val in z:
                fh.write(f"{_fmt(val.real)} {_fmt(val.imag)}\n")
        for j, (op, q) in enumerate(zip(problem.sensing, solution.multipliers)):
            fh.write(f"multiplier {j + 1}\n")
            fh.write(f"m {op.m}\n")
            fh.write("indices " + " ".join(str(int(i)) for i in op.indices) + "\n")
            for val in q:
                fh.write(f"{_fmt(val.real)} {_fmt(val.imag)}\n")


def read_solution(path):
    """Read a solution file; returns (SdpSolution, sensing operator list).

    Raises FormatError if the multiplier blocks are missing (a solution
    without multipliers cannot be localized).
    """
    r = _Reader(path)
    if r.next() != SOLUTION_MAGIC:
        r.error(f"expected header {SOLUTION_MAGIC!r}")
    n = r.expect_int("n")
    J = r.expect_int("J")
    status = r.expect("status")[0]
    objective = float(r.expect("objective")[0])
    iterations = int(r.expect("iterations")[0])
    primal_res = float(r.expect("primal_residual")[0])
    dual_res = float(r.expect("dual_residual")[0])
    gap = float(r.expect("duality_gap")[0])
    dual_norm_value = float(r.expect("dual_norm")[0])
    min_eig = float(r.expect("min_eigenvalue")[0])
    t = float(r.expect("t")[0])
    generators = []
    for _ in range(J + 1):
        r.expect("generator")
        generators.append(r.complex_rows(n))
    components = []
    for _ in range(J + 1):
        r.expect("component")
        components.append(r.complex_rows(n))
    multipliers, sensing = [], []
    for j in range(J):
        idx = r.expect_int("multiplier")
        if idx != j + 1:
            r.error(f"multiplier blocks out of order: got {idx}, expected {j + 1}")
        m = r.expect_int("m")
        parts = r.expect("indices")
        indices = np.array([int(p) for p in parts])
        if indices.size != m:
            r.error(f"expected {m} indices, got {indices.size}")
        sensing.append(SensingOperator.subsample(indices, n))
        multipliers.append(r.complex_rows(m))
    variables = SdpVariables(generators=generators, components=components, t=t)
    solution = SdpSolution(
        variables=variables,
        multipliers=multipliers,
        objective=objective,
        residuals=(primal_res, dual_res),
        iterations=iterations,
        status=status,
        diagnostics={
            "duality_gap": gap,
            "dual_norm": dual_norm_value,
            "min_eigenvalue": min_eig,
        },
    )
    return solution, sensing
