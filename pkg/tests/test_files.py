import numpy as np
import pytest

from jointfreq.files import (
    FormatError,
    read_instance,
    read_measurements,
    read_solution,
    write_instance,
    write_measurements,
    write_solution,
)
from jointfreq.model import (
    InstanceConfig,
    random_instance,
    synthesize_ensemble,
)
from jointfreq.problem import draw_row_subsets, subsampled_measurements
from jointfreq.solver import SolverConfig, solve


@pytest.fixture()
def ensemble():
    return random_instance(InstanceConfig(n=10, J=2, s_c=2, s_j=1, seed=19))


class TestInstanceFiles:
    def test_round_trip_exact(self, ensemble, tmp_path):
        path = tmp_path / "instance.txt"
        write_instance(path, ensemble)
        loaded, signals = read_instance(path)
        np.testing.assert_array_equal(
            loaded.common.frequencies, ensemble.common.frequencies
        )
        np.testing.assert_array_equal(
            loaded.common.coefficients, ensemble.common.coefficients
        )
        for a, b in zip(loaded.innovations, ensemble.innovations):
            np.testing.assert_array_equal(a.frequencies, b.frequencies)
            np.testing.assert_array_equal(a.coefficients, b.coefficients)
        for x, y in zip(signals, synthesize_ensemble(ensemble)):
            np.testing.assert_array_equal(x, y)

    def test_blind_strips_spectra(self, ensemble, tmp_path):
        path = tmp_path / "blind.txt"
        write_instance(path, None, signals=synthesize_ensemble(ensemble))
        loaded, signals = read_instance(path)
        assert loaded is None
        assert len(signals) == ensemble.J

    def test_parse_error_reports_line(self, tmp_path):
        path = tmp_path / "broken.txt"
        path.write_text("jointfreq-instance v1\nn 4\nJ nope\n")
        with pytest.raises(FormatError) as err:
            read_instance(path)
        assert ":3:" in str(err.value)

    def test_wrong_magic(self, tmp_path):
        path = tmp_path / "other.txt"
        path.write_text("something else\n")
        with pytest.raises(FormatError):
            read_instance(path)


class TestMeasurementFiles:
    def test_round_trip(self, ensemble, tmp_path):
        signals = synthesize_ensemble(ensemble)
        rng = np.random.default_rng(2)
        problem = subsampled_measurements(signals, draw_row_subsets(10, 6, 2, rng))
        path = tmp_path / "meas.txt"
        write_measurements(path, problem)
        loaded = read_measurements(path)
        assert loaded.n == problem.n and loaded.J == problem.J
        for a, b in zip(loaded.sensing, problem.sensing):
            np.testing.assert_array_equal(a.indices, b.indices)
        for a, b in zip(loaded.measurements, problem.measurements):
            np.testing.assert_array_equal(a, b)

    def test_dense_sensing_not_serializable(self, ensemble, tmp_path):
        from jointfreq.problem import MeasurementSet, SensingOperator

        op = SensingOperator.dense(np.eye(10)[:4])
        problem = MeasurementSet(
            sensing=[op], measurements=[np.zeros(4)], n=10
        )
        with pytest.raises(ValueError):
            write_measurements(tmp_path / "meas.txt", problem)


class TestSolutionFiles:
    def test_round_trip(self, ensemble, tmp_path):
        signals = synthesize_ensemble(ensemble)
        rng = np.random.default_rng(3)
        problem = subsampled_measurements(signals, draw_row_subsets(10, 8, 2, rng))
        solution = solve(problem, SolverConfig(rho=0.1, max_iters=4000))
        path = tmp_path / "solution.txt"
        write_solution(path, solution, problem)
        loaded, sensing = read_solution(path)
        assert loaded.status == solution.status
        assert loaded.objective == solution.objective
        assert loaded.iterations == solution.iterations
        for a, b in zip(loaded.variables.generators, solution.variables.generators):
            np.testing.assert_array_equal(a, b)
        for a, b in zip(loaded.multipliers, solution.multipliers):
            np.testing.assert_array_equal(a, b)
        for a, b in zip(sensing, problem.sensing):
            np.testing.assert_array_equal(a.indices, b.indices)

    def test_missing_multipliers_detected(self, tmp_path):
        path = tmp_path / "partial.txt"
        path.write_text(
            "jointfreq-solution v1\nn 2\nJ 1\nstatus converged\nobjective 0\n"
            "iterations 1\nprimal_residual 0\ndual_residual 0\nduality_gap 0\n"
            "dual_norm 0\nmin_eigenvalue 0\nt 0\n"
            "generator c\n0 0\n0 0\ngenerator 1\n0 0\n0 0\n"
            "component c\n0 0\n0 0\ncomponent 1\n0 0\n0 0\n"
        )
        with pytest.raises(FormatError):
            read_solution(path)
