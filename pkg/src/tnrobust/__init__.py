"""Robust pulse optimization for qubit arrays with matrix product states and operators.

The package propagates states (MPS) and unitaries (MPO) through Trotterized
pulse schedules with TEBD, averages the infidelity over sampled parasitic
couplings, and minimizes it with L-BFGS using exact adjoint gradients.
"""

from __future__ import annotations

from .dmrg import dmrg_ground_state, energy_variance
from .model import (
    ControlProblem,
    CouplingPattern,
    EnsembleSpec,
    ParasiticSample,
    PulseSchedule,
    Task,
    build_problem,
    heisenberg_mpo,
    sample_ensemble,
)
from .mpo import MPO, parallel_cnot_mpo, parallel_x_mpo, trace_overlap
from .mps import MPS, ghz_state, overlap, product_state
from .objective import (
    ensemble_infidelity,
    gate_infidelity,
    gradient_check,
    infidelity_gradient,
    per_gate_infidelity,
    state_infidelity,
)
from .optimizer import LadderPlan, OptimizerConfig, ladder_optimize, lbfgs_minimize, optimize_problem
from .tebd import propagate, propagate_backward
from .tensor_core import NumericalError, svd_truncate

__version__ = "0.1.0"

__all__ = [
    "ControlProblem", "CouplingPattern", "EnsembleSpec", "LadderPlan", "MPO", "MPS",
    "NumericalError", "OptimizerConfig", "ParasiticSample", "PulseSchedule", "Task",
    "build_problem", "dmrg_ground_state", "energy_variance", "ensemble_infidelity",
    "gate_infidelity", "ghz_state", "gradient_check", "heisenberg_mpo", "infidelity_gradient",
    "ladder_optimize", "lbfgs_minimize", "optimize_problem", "overlap", "parallel_cnot_mpo",
    "parallel_x_mpo", "per_gate_infidelity", "product_state", "propagate", "propagate_backward",
    "sample_ensemble", "state_infidelity", "svd_truncate", "trace_overlap",
]
