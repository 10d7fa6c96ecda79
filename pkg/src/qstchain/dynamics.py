"""State propagation, master-equation integration and transfer fidelity."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .errors import ConfigError, DomainError, IntegratorError
from .model import (ChainSpec, DensityMatrix, NoiseMode, NoiseSpec, StateVector,
                    basis_index)

Hamiltonian = Union[np.ndarray, Callable[[float], np.ndarray]]

HERMITIAN_TOL = 1e-10
POINTS_PER_DRIVE_PERIOD = 20
# default resolution; 20 points per period drifts the norm by ~1e-5 over a transfer
DEFAULT_POINTS_PER_DRIVE_PERIOD = 100
DEFAULT_STATIC_LINDBLAD_DT = 0.005


@dataclass
class PropagationResult:
    times: np.ndarray
    populations: np.ndarray  # shape (len(times), N+1), column 0 is the vacuum
    final_state: Union[StateVector, DensityMatrix]
    fidelity_trace: np.ndarray

    @property
    def n_sites(self) -> int:
        return self.populations.shape[1] - 1


def _as_array(state) -> np.ndarray:
    if isinstance(state, StateVector):
        return state.amplitudes
    if isinstance(state, DensityMatrix):
        return state.entries
    return np.asarray(state, dtype=complex)


def _check_hermitian(h: np.ndarray):
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DomainError("Hamiltonian must be a square matrix")
    if np.max(np.abs(h - h.conj().T), initial=0.0) > HERMITIAN_TOL:
        raise DomainError("Hamiltonian is not Hermitian")


def static_propagator(h: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i H t)`` through the eigendecomposition of Hermitian ``H``."""
    _check_hermitian(h)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def evolve_unitary_static(h: np.ndarray, psi0, t: float) -> StateVector:
    """Return ``exp(-i H t) psi0``."""
    psi = _as_array(psi0)
    if psi.shape != (h.shape[0],):
        raise DomainError("state and Hamiltonian dimensions differ")
    return StateVector(static_propagator(h, t) @ psi)


def amplitude_trace(h: np.ndarray, source: int, target: int, times) -> np.ndarray:
    """``<target| exp(-i H t) |source>`` on an array of times, via one eigensolve."""
    _check_hermitian(h)
    w, v = np.linalg.eigh(h)
    weights = v[target, :] * v[source, :].conj()
    return np.exp(-1j * np.outer(np.asarray(times, dtype=float), w)) @ weights


def static_trajectory(h: np.ndarray, psi0, times) -> PropagationResult:
    """Exact populations of ``exp(-i H t) psi0`` on the given times."""
    _check_hermitian(h)
    psi = _as_array(psi0)
    w, v = np.linalg.eigh(h)
    times = np.asarray(times, dtype=float)
    coeffs = v.conj().T @ psi
    states = (np.exp(-1j * np.outer(times, w)) * coeffs) @ v.T
    pops = np.abs(states) ** 2
    n = psi.size - 1
    return PropagationResult(times, pops, StateVector(states[-1]), pops[:, n].copy())


def rk4_step(y: np.ndarray, t: float, dt: float, rhs) -> np.ndarray:
    """One classical Runge-Kutta step of ``dy/dt = rhs(t, y)``."""
    half = 0.5 * dt
    k1 = rhs(t, y)
    k2 = rhs(t + half, y + half * k1)
    k3 = rhs(t + half, y + half * k2)
    k4 = rhs(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _step_plan(t_final: float, dt_max: float, n_output: int):
    """Split ``[0, t_final]`` into equal steps no longer than ``dt_max``.

    Returns ``(dt, n_steps, stride)`` with ``n_steps = stride * (n_output - 1)``
    so that outputs fall on a uniform grid.
    """
    if t_final < 0:
        raise DomainError("t_final must be >= 0")
    if t_final == 0:
        return 0.0, 0, 1
    if n_output < 2:
        raise DomainError("n_output must be >= 2")
    intervals = n_output - 1
    stride = max(1, math.ceil(t_final / (dt_max * intervals) - 1e-12))
    n_steps = stride * intervals
    return t_final / n_steps, n_steps, stride


def _hamiltonian_at(h: Hamiltonian):
    if callable(h):
        return h
    _check_hermitian(h)
    return lambda t: h


def required_driven_dt(h: Hamiltonian) -> float:
    """Largest step allowed for a driven generator (20 points per fastest period)."""
    w = getattr(h, "max_frequency", 0.0) or 0.0
    if w <= 0:
        return math.inf
    return 2 * math.pi / (POINTS_PER_DRIVE_PERIOD * w)


def _target_index(spec_or_n) -> int:
    return spec_or_n.n_sites if isinstance(spec_or_n, ChainSpec) else int(spec_or_n)


def evolve_unitary_driven(h: Hamiltonian, psi0, t_final: float, dt_max: float,
                          n_output: int = 401,
                          norm_tol: Optional[float] = 1e-7) -> PropagationResult:
    """Fixed-step RK4 integration of ``i dpsi/dt = H(t) psi``.

    ``h`` may be a static matrix or a callable ``t -> matrix``; callables
    exposing ``max_frequency`` enforce ``dt_max <= 2 pi / (20 w_max)``.
    A final norm drift above ``norm_tol`` raises :class:`IntegratorError`;
    ``norm_tol=None`` disables the check (convergence studies).
    """
    limit = required_driven_dt(h)
    if dt_max > limit * (1 + 1e-12):
        raise ConfigError(
            f"dt_max={dt_max:.6g} exceeds the drive-resolution bound {limit:.6g}",
            field="dt_max",
        )
    psi = np.array(_as_array(psi0), dtype=complex)
    ham = _hamiltonian_at(h)
    n = psi.size - 1
    dt, n_steps, stride = _step_plan(t_final, dt_max, n_output)

    def rhs(t, y):
        return -1j * (ham(t) @ y)

    pops = [np.abs(psi) ** 2]
    times = [0.0]
    for step in range(n_steps):
        psi = rk4_step(psi, step * dt, dt, rhs)
        if (step + 1) % stride == 0:
            pops.append(np.abs(psi) ** 2)
            times.append((step + 1) * dt)
    pops = np.array(pops)
    drift = abs(np.linalg.norm(psi) - np.linalg.norm(_as_array(psi0)))
    if norm_tol is not None and not drift <= norm_tol:
        raise IntegratorError(f"norm drift {drift:.3g} exceeds {norm_tol:g}; reduce dt_max")
    return PropagationResult(np.array(times), pops, StateVector(psi), pops[:, n].copy())


def collapse_operators(n_sites: int, noise: NoiseSpec):
    """Collapse operators on the ``(N+1)``-dimensional basis.

    Collective mode returns ``[a1, a2]`` with ``a1 = sum_j c_j`` (every site
    to vacuum) and ``a2 = sum_j n_j``; per-site mode returns every ``c_j``
    followed by every ``n_j``.
    """
    d = n_sites + 1
    ops = []
    if noise.mode is NoiseMode.COLLECTIVE:
        a1 = np.zeros((d, d))
        a1[0, 1:] = 1.0
        ops.append(a1)
        if noise.dephasing:
            ops.append(np.diag(np.r_[0.0, np.ones(n_sites)]))
    else:
        for j in range(1, d):
            c = np.zeros((d, d))
            c[0, j] = 1.0
            ops.append(c)
        if noise.dephasing:
            for j in range(1, d):
                nj = np.zeros((d, d))
                nj[j, j] = 1.0
                ops.append(nj)
    return ops


def lindblad_rhs(h: Hamiltonian, noise: NoiseSpec, n_sites: int):
    """``drho/dt`` for the master equation with dissipators ``(rate/2) L(A)``.

    ``L(A) rho = 2 A rho A^+ - A^+ A rho - rho A^+ A``.
    """
    ham = _hamiltonian_at(h)
    ops = [] if noise.is_closed else collapse_operators(n_sites, noise)
    rate = noise.rate
    jumps = [(a.astype(complex), a.conj().T.astype(complex)) for a in ops]
    loss = sum((ad @ a for a, ad in jumps), np.zeros((n_sites + 1,) * 2, dtype=complex))

    def rhs(t, rho):
        hm = ham(t)
        out = -1j * (hm @ rho - rho @ hm)
        if jumps:
            gain = sum(a @ rho @ ad for a, ad in jumps)
            out += 0.5 * rate * (2.0 * gain - loss @ rho - rho @ loss)
        return out

    return rhs


def evolve_lindblad(h: Hamiltonian, rho0, noise: NoiseSpec, t_final: float,
                    dt: float = DEFAULT_STATIC_LINDBLAD_DT,
                    n_output: int = 401) -> PropagationResult:
    """Fixed-step RK4 integration of the Lindblad master equation.

    ``h`` is a static matrix or a callable evaluated at the RK4 stage times.
    ``rho0`` may be a :class:`DensityMatrix`, a :class:`StateVector` (turned
    into its projector) or a raw array.
    """
    if isinstance(rho0, StateVector):
        rho0 = rho0.to_density()
    rho = np.array(_as_array(rho0), dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    limit = required_driven_dt(h)
    if dt > limit * (1 + 1e-12):
        raise ConfigError(
            f"dt={dt:.6g} exceeds the drive-resolution bound {limit:.6g}", field="dt"
        )
    n = rho.shape[0] - 1
    rhs = lindblad_rhs(h, noise, n)
    step_dt, n_steps, stride = _step_plan(t_final, dt, n_output)
    trace0 = np.trace(rho).real

    pops = [np.diagonal(rho).real.copy()]
    times = [0.0]
    for step in range(n_steps):
        rho = rk4_step(rho, step * step_dt, step_dt, rhs)
        if (step + 1) % stride == 0:
            pops.append(np.diagonal(rho).real.copy())
            times.append((step + 1) * step_dt)
    pops = np.array(pops)
    # RK4 keeps the trace exactly in exact arithmetic, so instability shows up
    # as non-finite entries or populations leaving [0, 1] first
    drift = abs(np.trace(rho).real - trace0)
    excursion = float(max(-pops.min(), pops.max() - 1.0, 0.0)) if np.all(np.isfinite(pops)) else np.inf
    if not np.isfinite(drift) or drift > 1e-6 or excursion > 1e-6:
        raise IntegratorError(
            f"unstable integration with dt={step_dt:.3g} (trace drift {drift:.3g}, "
            f"population excursion {excursion:.3g}); reduce dt"
        )
    return PropagationResult(np.array(times), pops, DensityMatrix(rho), pops[:, n].copy())


def liouvillian(h: np.ndarray, noise: NoiseSpec) -> np.ndarray:
    """Superoperator of the master equation acting on row-major ``vec(rho)``."""
    _check_hermitian(h)
    d = h.shape[0]
    eye = np.eye(d)
    sup = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    if not noise.is_closed:
        for a in collapse_operators(d - 1, noise):
            ada = a.conj().T @ a
            sup += 0.5 * noise.rate * (
                2 * np.kron(a, a.conj()) - np.kron(ada, eye) - np.kron(eye, ada.T)
            )
    return sup


def fidelity(state, spec_or_n) -> float:
    """Probability of the excitation sitting on the last site.

    ``|C_N|^2`` for a pure state, ``<1_N| rho |1_N>`` for a density matrix.
    """
    n = _target_index(spec_or_n)
    arr = _as_array(state)
    if arr.shape[0] != n + 1 or (arr.ndim == 2 and arr.shape[1] != n + 1):
        raise DomainError(f"state dimension {arr.shape} does not match N+1 = {n + 1}")
    if arr.ndim == 1:
        return float(abs(arr[n]) ** 2)
    return float(arr[n, n].real)


def population_trajectory(result: PropagationResult, site) -> np.ndarray:
    """Population time series of ``site`` (``VACUUM`` or ``1..N``)."""
    return result.populations[:, basis_index(site, result.n_sites)].copy()
