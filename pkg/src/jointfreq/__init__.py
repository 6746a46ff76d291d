"""Joint recovery of frequency-sparse signal ensembles sharing an
off-grid common component, with dual-certificate verification."""

from .model import (
    Atom,
    InstanceConfig,
    SamplingBudgetError,
    SignalEnsemble,
    SparseSpectrum,
    random_instance,
    synthesize_atom,
    synthesize_component,
    synthesize_ensemble,
)
from .problem import (
    MeasurementSet,
    SdpSolution,
    SdpVariables,
    SensingOperator,
    assemble_psd_block,
    ca_norm,
    draw_row_subsets,
    dual_norm,
    full_observation,
    primal_objective,
    subsampled_measurements,
)
from .solver import SolverConfig, SolverError, atomic_norm_sdp, psd_project, solve

__all__ = [
    "Atom",
    "InstanceConfig",
    "MeasurementSet",
    "SamplingBudgetError",
    "SdpSolution",
    "SdpVariables",
    "SensingOperator",
    "SignalEnsemble",
    "SolverConfig",
    "SolverError",
    "SparseSpectrum",
    "assemble_psd_block",
    "atomic_norm_sdp",
    "ca_norm",
    "draw_row_subsets",
    "dual_norm",
    "full_observation",
    "primal_objective",
    "psd_project",
    "random_instance",
    "solve",
    "subsampled_measurements",
    "synthesize_atom",
    "synthesize_component",
    "synthesize_ensemble",
]

__version__ = "0.1.0"
