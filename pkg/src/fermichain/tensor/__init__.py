"""Matrix-product engine: tensor trains, TEBD, DMRG and Gaussian Heisenberg MPOs."""

from .core import (
    TensorTrain,
    TruncationPolicy,
    compress,
    expectation,
    mpo_dagger,
    mpo_product,
    mpo_sum,
    truncated_svd,
)
from .dmrg import DMRGResult, dmrg_ground_state, hamiltonian_mpo
from .evolution import EvolutionResult, StepRecord, TrotterScheme, bond_gates, tebd_evolve
from .gaussian import gaussian_heisenberg_mpo

__all__ = [
    "TensorTrain",
    "TruncationPolicy",
    "TrotterScheme",
    "compress",
    "expectation",
    "mpo_sum",
    "mpo_product",
    "mpo_dagger",
    "truncated_svd",
    "hamiltonian_mpo",
    "DMRGResult",
    "dmrg_ground_state",
    "EvolutionResult",
    "StepRecord",
    "tebd_evolve",
    "bond_gates",
    "gaussian_heisenberg_mpo",
]
