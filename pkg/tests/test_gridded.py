import numpy as np
import pytest

from jointfreq.gridded import GridBudgetError, solve_grid_l1
from jointfreq.model import (
    InstanceConfig,
    atom_vector,
    random_instance,
    synthesize_ensemble,
)
from jointfreq.problem import (
    draw_row_subsets,
    full_observation,
    subsampled_measurements,
)
from jointfreq.solver import SolverConfig, solve


class TestBudget:
    def test_dimension_cap(self):
        prob = full_observation([np.zeros(20)])
        with pytest.raises(GridBudgetError):
            solve_grid_l1(prob, 2**12)

    def test_ensemble_cap(self):
        prob = full_observation([np.zeros(8)] * 3)
        with pytest.raises(GridBudgetError):
            solve_grid_l1(prob, 2**12)

    def test_grid_range_and_power_of_two(self):
        prob = full_observation([np.zeros(8)])
        with pytest.raises(GridBudgetError):
            solve_grid_l1(prob, 2**11)
        with pytest.raises(GridBudgetError):
            solve_grid_l1(prob, 2**15)
        with pytest.raises(GridBudgetError):
            solve_grid_l1(prob, 5000)


class TestSolveGridL1:
    def test_zero_measurements(self):
        prob = full_observation([np.zeros(8)])
        sol = solve_grid_l1(prob, 2**12)
        assert sol.objective == 0.0
        assert sol.converged

    def test_on_grid_atom(self):
        n, G = 12, 2**12
        x = atom_vector(256 / G, n)
        sol = solve_grid_l1(full_observation([x]), G)
        assert sol.objective == pytest.approx(1.0, abs=1e-5)

    def test_matches_sdp_objective(self):
        ens = random_instance(InstanceConfig(n=10, J=1, s_c=1, s_j=1, seed=42))
        signals = synthesize_ensemble(ens)
        rng = np.random.default_rng(3)
        prob = subsampled_measurements(signals, draw_row_subsets(10, 8, 1, rng))
        sdp = solve(prob, SolverConfig(rho=0.1))
        grid = solve_grid_l1(prob, 2**12, max_iters=4000)
        assert sdp.status == "converged"
        rel = abs(grid.objective - sdp.objective) / max(1.0, abs(sdp.objective))
        assert rel <= 1e-3
        assert grid.objective >= sdp.objective - 1e-6

    def test_refinement_monotonicity(self):
        # nested grids: the certified lower bound of the finer grid cannot
        # exceed the feasible value of the coarser one
        ens = random_instance(InstanceConfig(n=8, J=1, s_c=1, s_j=1, seed=15))
        signals = synthesize_ensemble(ens)
        rng = np.random.default_rng(4)
        prob = subsampled_measurements(signals, draw_row_subsets(8, 6, 1, rng))
        coarse = solve_grid_l1(prob, 2**12, max_iters=4000)
        fine = solve_grid_l1(prob, 2**13, max_iters=4000)
        assert fine.objective - fine.gap <= coarse.objective + 1e-9
        assert fine.objective <= coarse.objective + max(fine.gap, 1e-9)

    def test_weights_reproduce_measurements(self):
        ens = random_instance(InstanceConfig(n=8, J=2, s_c=1, s_j=1, seed=23))
        signals = synthesize_ensemble(ens)
        rng = np.random.default_rng(5)
        prob = subsampled_measurements(signals, draw_row_subsets(8, 6, 2, rng))
        sol = solve_grid_l1(prob, 2**12, max_iters=2000)
        G = 2**12
        t = np.arange(8)
        recon_c = np.fft.ifft(sol.weights[0])[:8] * G
        for j, (op, y) in enumerate(zip(prob.sensing, prob.measurements)):
            recon_j = np.fft.ifft(sol.weights[j + 1])[:8] * G
            np.testing.assert_allclose(op.apply(recon_c + recon_j), y, atol=1e-6)
