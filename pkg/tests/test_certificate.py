import csv

import numpy as np
import pytest

from jointfreq.certificate import (
    DualPolynomialEnsemble,
    eval_dual_poly,
    grid_eval,
    localize,
    peaks_match_support,
    verify_sign_conditions,
    write_localization_csv,
)
from jointfreq.model import SignalEnsemble, SparseSpectrum, atom_vector
from jointfreq.problem import SensingOperator, ca_norm, dual_norm
from jointfreq.solver import SolverConfig


class TestEvalDualPoly:
    def test_normalized_self_inner_product(self):
        n = 12
        v = atom_vector(0.37, n) / n
        assert eval_dual_poly(v, 0.37) == pytest.approx(1.0, abs=1e-12)

    def test_zero_vector(self):
        assert eval_dual_poly(np.zeros(8), 0.4) == 0.0

    def test_fft_grid_matches_direct_summation(self):
        rng = np.random.default_rng(0)
        n, G = 9, 64
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        direct = np.array(
            [sum(v[t] * np.exp(-2j * np.pi * k / G * t) for t in range(n))
             for k in range(G)]
        )
        np.testing.assert_allclose(grid_eval(v, G), direct, atol=1e-12)

    def test_periodicity(self):
        rng = np.random.default_rng(1)
        v = rng.standard_normal(7) + 1j * rng.standard_normal(7)
        for f in (0.13, 0.777):
            assert eval_dual_poly(v, f) == pytest.approx(
                eval_dual_poly(v, f + 1.0), abs=1e-12
            )


class TestSignConditions:
    def test_analytic_single_atom_witness(self):
        n, f, phi = 16, 0.3, 1.2
        q = np.exp(1j * phi) * atom_vector(f, n) / n
        ens = DualPolynomialEnsemble.from_multipliers(
            [q], [SensingOperator.identity(n)]
        )
        truth = SignalEnsemble(
            common=SparseSpectrum.from_entries([(f, np.exp(1j * phi))], n),
            innovations=[SparseSpectrum.empty(n)],
            n=n,
        )
        met, rows = verify_sign_conditions(ens, truth, tol=1e-8)
        assert met
        assert len(rows) == 1
        assert rows[0]["residual"] <= 1e-8

    def test_zero_coefficient_excluded(self):
        n = 8
        ens = DualPolynomialEnsemble(vectors=[np.zeros(n)], n=n)
        truth = SignalEnsemble(
            common=SparseSpectrum(np.array([0.25]), np.array([0.0 + 0j]), n),
            innovations=[SparseSpectrum.empty(n)],
            n=n,
        )
        met, rows = verify_sign_conditions(ens, truth, tol=1e-3)
        assert met and rows == []


class TestLocalize:
    def test_zero_polynomials_no_peaks(self):
        ens = DualPolynomialEnsemble(vectors=[np.zeros(8), np.zeros(8)], n=8)
        report = localize(ens, grid_size=64)
        assert report.common_peaks == []
        assert all(p == [] for p in report.innovation_peaks)

    def test_grid_size_validation(self):
        ens = DualPolynomialEnsemble(vectors=[np.zeros(16)], n=16)
        with pytest.raises(ValueError):
            localize(ens, grid_size=32)

    def test_converged_trial_localizes_truth(self, small_joint_case):
        sol = small_joint_case["solution"]
        problem = small_joint_case["problem"]
        truth = small_joint_case["ensemble"]
        ens = DualPolynomialEnsemble.from_multipliers(sol.multipliers, problem.sensing)
        report = localize(ens, truth=truth, grid_size=4096)
        assert peaks_match_support(
            report.common_peaks, list(truth.common.frequencies), 1e-3
        )
        for peaks, spec in zip(report.innovation_peaks, truth.innovations):
            assert peaks_match_support(peaks, list(spec.frequencies), 1e-3)
        assert report.max_offsupport_modulus_sum < 1.0
        assert all(m < 1.0 for m in report.max_offsupport_modulus)
        assert all(report.conditions_met.values())

    def test_offsupport_excludes_radius(self, small_joint_case):
        sol = small_joint_case["solution"]
        problem = small_joint_case["problem"]
        truth = small_joint_case["ensemble"]
        ens = DualPolynomialEnsemble.from_multipliers(sol.multipliers, problem.sensing)
        report = localize(ens, truth=truth, grid_size=4096)
        # off-support moduli stay away from 1 on exact recoveries
        assert report.max_offsupport_modulus_sum < 1.0 - 1e-4

    def test_pairing_bounded_by_dual_norm_times_value(self, small_joint_case):
        sol = small_joint_case["solution"]
        problem = small_joint_case["problem"]
        recovered = sol.variables.recovered_signals()
        pairing = sum(
            np.vdot(xh, op.adjoint(q)).real
            for xh, op, q in zip(recovered, problem.sensing, sol.multipliers)
        )
        norm_q = dual_norm(sol.multipliers, problem.sensing)
        value = ca_norm(recovered, SolverConfig(rho=0.1))
        assert pairing <= norm_q * value + 1e-6


class TestPeaksMatch:
    def test_bijective_match(self):
        peaks = [(0.1001, 1.0), (0.5, 1.0)]
        assert peaks_match_support(peaks, [0.1, 0.5001], tol=1e-3)

    def test_count_mismatch(self):
        assert not peaks_match_support([(0.1, 1.0)], [0.1, 0.5], tol=1e-3)

    def test_wraparound_match(self):
        assert peaks_match_support([(0.9995, 1.0)], [0.0001], tol=1e-3)


class TestLocalizationCsv:
    def test_row_count_and_columns(self, small_joint_case, tmp_path):
        sol = small_joint_case["solution"]
        problem = small_joint_case["problem"]
        truth = small_joint_case["ensemble"]
        ens = DualPolynomialEnsemble.from_multipliers(sol.multipliers, problem.sensing)
        path = tmp_path / "dualpoly.csv"
        write_localization_csv(path, ens, truth=truth, grid_size=256)
        with open(path) as fh:
            lines = fh.read().splitlines()
        data = [l for l in lines if not l.startswith("#")]
        header = data[0].split(",")
        assert header[0] == "f" and "abs_sum" in header
        assert len(data) - 1 == 256
        # appended condition rows are comment-prefixed
        assert any(l.startswith("# sign-conditions") for l in lines)

    def test_zero_multipliers_zero_moduli(self, tmp_path):
        n = 8
        ens = DualPolynomialEnsemble(vectors=[np.zeros(n)], n=n)
        path = tmp_path / "zero.csv"
        write_localization_csv(path, ens, grid_size=64)
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 64
        assert all(float(r["abs_q_1"]) == 0.0 for r in rows)
