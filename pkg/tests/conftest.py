import numpy as np
import pytest

from jointfreq.model import InstanceConfig, random_instance, synthesize_ensemble
from jointfreq.problem import draw_row_subsets, subsampled_measurements
from jointfreq.solver import SolverConfig, solve


@pytest.fixture(scope="session")
def small_joint_case():
    """A converged joint solve on a small instance, shared across tests.

    n=16, J=2, s_c=2, s_j=1, m=12: comfortably inside the exact-recovery
    region, so the certificate machinery has something real to verify.
    """
    cfg = InstanceConfig(n=16, J=2, s_c=2, s_j=1, seed=11)
    ensemble = random_instance(cfg)
    signals = synthesize_ensemble(ensemble)
    rng = np.random.default_rng(77)
    index_sets = draw_row_subsets(16, 12, 2, rng)
    problem = subsampled_measurements(signals, index_sets)
    solution = solve(problem, SolverConfig(rho=0.1))
    assert solution.status == "converged"
    return dict(
        config=cfg,
        ensemble=ensemble,
        signals=signals,
        problem=problem,
        solution=solution,
    )
