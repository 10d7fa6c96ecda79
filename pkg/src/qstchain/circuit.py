"""Driven transmon-chain runs compared against their rotating-wave model."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .calibration import schedule_scale
from .dynamics import (DEFAULT_POINTS_PER_DRIVE_PERIOD,
                       PropagationResult, evolve_lindblad,
                       evolve_unitary_driven, fidelity)
from .hamiltonians import (DriveSchedule, build_driven_hamiltonian,
                           build_effective_hamiltonian)
from .model import ChainSpec, NoiseSpec, initial_state
from .sweep import DEFAULT_COARSE_DT, DEFAULT_T_MAX, Peak, TransferCurve, peak_of_curve


@dataclass
class CircuitResult:
    tau: float
    fidelity: float
    effective_fidelity: float
    trajectory: PropagationResult

    @property
    def rwa_gap(self) -> float:
        return abs(self.fidelity - self.effective_fidelity)


def effective_peak(schedule: DriveSchedule, noise: Optional[NoiseSpec] = None) -> Peak:
    """Peak transfer of the rotating-wave model, in the schedule's time unit."""
    n = schedule_scale(schedule)
    curve = TransferCurve(build_effective_hamiltonian(schedule), noise)
    return peak_of_curve(curve, DEFAULT_T_MAX / n, DEFAULT_COARSE_DT / n)


def default_driven_dt(schedule: DriveSchedule) -> float:
    """``min(2 pi / (100 w_max), 0.01 / n)``."""
    w = schedule.max_drive_frequency()
    limit = math.inf if w == 0 else 2 * math.pi / (DEFAULT_POINTS_PER_DRIVE_PERIOD * w)
    return min(limit, 0.01 / schedule_scale(schedule))


def run_circuit(schedule: DriveSchedule, noise: Optional[NoiseSpec] = None,
                tau: Optional[float] = None, dt: Optional[float] = None,
                n_output: int = 401) -> CircuitResult:
    """Simulate the modulated chain up to ``tau`` starting from ``|1>_1``.

    ``tau=None`` uses the peak time of the rotating-wave model under the same
    noise. The returned effective fidelity is that model's value at ``tau``.
    """
    noise = noise or NoiseSpec()
    if tau is None:
        tau = effective_peak(schedule, noise).tau
    h = build_driven_hamiltonian(schedule)
    if dt is None:
        dt = default_driven_dt(schedule)
    psi0 = initial_state(ChainSpec(schedule.n_sites, end_coupling=1.0))
    if noise.is_closed:
        traj = evolve_unitary_driven(h, psi0, tau, dt, n_output=n_output)
    else:
        traj = evolve_lindblad(h, psi0, noise, tau, dt=dt, n_output=n_output)
    f_eff = float(TransferCurve(build_effective_hamiltonian(schedule), noise)(tau)[0])
    return CircuitResult(
        tau=float(tau),
        fidelity=fidelity(traj.final_state, schedule.n_sites),
        effective_fidelity=f_eff,
        trajectory=traj,
    )


def points_per_period(dt: float, schedule: DriveSchedule) -> float:
    w = schedule.max_drive_frequency()
    return math.inf if w == 0 else 2 * math.pi / (w * dt)


