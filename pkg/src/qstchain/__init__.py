"""Quantum state transfer on staggered spin chains and parametrically driven transmon chains."""

__version__ = "0.1.0"

from .model import VACUUM, ChainSpec, DensityMatrix, NoiseMode, NoiseSpec, StateVector, basis_index, initial_state
from .hamiltonians import (DriveSchedule, build_chain_hamiltonian, build_driven_hamiltonian,
                           build_effective_hamiltonian, build_full_spin_hamiltonian)
from .dynamics import (evolve_lindblad, evolve_unitary_driven, evolve_unitary_static, fidelity,
                       population_trajectory)
from .bessel import bessel_j, invert_j1
from .calibration import CalibrationTarget, synthesize_schedule
from .sweep import best_point, find_peak_fidelity, sweep_plane
