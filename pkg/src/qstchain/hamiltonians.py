"""Hamiltonian builders.

All single-excitation matrices act on the ``(N+1)``-dimensional basis of
:mod:`qstchain.model`; the vacuum row and column are always zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .bessel import J0_FIRST_ZERO, J1_ARGMAX, bessel_j
from .errors import DomainError
from .model import ChainSpec

FULL_SPIN_MAX_SITES = 10


def chain_bonds(spec: ChainSpec):
    """``(j, coupling)`` for every bond ``(j, j+1)``, 1-based."""
    n = spec.n_sites
    bonds = []
    for j in range(1, n):
        end = j == 1 or j == n - 1
        bonds.append((j, spec.end_coupling if end else spec.inner_coupling))
    return bonds


def build_chain_hamiltonian(spec: ChainSpec) -> np.ndarray:
    """Tight-binding matrix of the chain in the single-excitation sector.

    For ``N = 2`` both end-bond terms refer to the same bond, which is
    counted once.
    """
    h = np.zeros((spec.dim, spec.dim), dtype=complex)
    idx = np.arange(1, spec.dim)
    h[idx, idx] = spec.onsite_energies()
    for j, c in chain_bonds(spec):
        h[j, j + 1] = c
        h[j + 1, j] = c
    return h


def _site_operator(op, site, n):
    eye = np.eye(2)
    return reduce(np.kron, [op if k == site else eye for k in range(n)])


def build_full_spin_hamiltonian(spec: ChainSpec):
    """Spin-1/2 Hamiltonian on the full ``2**N`` space.

    Local basis is ``(|0>, |1>)`` = (down, up) and site 1 is the most
    significant tensor factor. ``S^z = S^+ S^- - 1/2``.

    Returns
    -------
    h : ndarray
        The ``2**N x 2**N`` Hamiltonian.
    shift : float
        Constant ``-sum_j lambda_j / 2`` by which single-excitation energies
        differ from :func:`build_chain_hamiltonian`.
    """
    n = spec.n_sites
    if n > FULL_SPIN_MAX_SITES:
        raise DomainError(
            f"full spin space limited to N <= {FULL_SPIN_MAX_SITES} (got {n})"
        )
    s_plus = np.array([[0.0, 0.0], [1.0, 0.0]])
    s_minus = s_plus.T
    s_z = s_plus @ s_minus - 0.5 * np.eye(2)
    sp = [_site_operator(s_plus, k, n) for k in range(n)]
    sm = [_site_operator(s_minus, k, n) for k in range(n)]

    h = np.zeros((2**n, 2**n))
    for k, lam in enumerate(spec.onsite_energies()):
        h += lam * _site_operator(s_z, k, n)
    for j, c in chain_bonds(spec):
        hop = sp[j - 1] @ sm[j]
        h += c * (hop + hop.T)
    shift = -0.5 * float(spec.onsite_energies().sum())
    return h, shift


def excitation_number_operator(n_sites: int) -> np.ndarray:
    s_up = np.diag([0.0, 1.0])
    return sum(_site_operator(s_up, k, n_sites) for k in range(n_sites))


def single_excitation_indices(n_sites: int) -> np.ndarray:
    """Full-space indices of ``|1>_1 .. |1>_N`` in site order."""
    return np.array([1 << (n_sites - 1 - k) for k in range(n_sites)])


@dataclass(frozen=True, eq=False)
class DriveSchedule:
    """Parametric modulation of a transmon chain.

    ``bare_couplings[l-1]`` is the coupling between transmons ``l`` and
    ``l+1``; ``amplitudes``, ``drive_frequencies`` and ``phases`` are indexed
    from transmon 2 (entry 0 is ``l = 2``); ``detuning_params`` covers all
    ``N`` transmons. Frequencies are angular.
    """

    bare_couplings: np.ndarray
    amplitudes: np.ndarray
    drive_frequencies: np.ndarray
    phases: np.ndarray
    detuning_params: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        arrays = {}
        for name in ("bare_couplings", "amplitudes", "drive_frequencies", "phases",
                     "detuning_params"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            arrays[name] = a
            object.__setattr__(self, name, a)
        n = arrays["detuning_params"].size
        if n < 2:
            raise DomainError("a drive schedule needs at least two transmons")
        for name in ("bare_couplings", "amplitudes", "drive_frequencies", "phases"):
            if arrays[name].size != n - 1:
                raise DomainError(f"{name} must have N-1 = {n - 1} entries")
        f = arrays["amplitudes"]
        if np.any(f < 0) or np.any(f >= J1_ARGMAX) or np.any(f >= J0_FIRST_ZERO):
            raise DomainError(
                f"drive amplitudes must lie in [0, {J1_ARGMAX:.4f}) (principal J_1 branch)"
            )

    @property
    def n_sites(self) -> int:
        return self.detuning_params.size

    @property
    def dim(self) -> int:
        return self.n_sites + 1

    def bond_detunings(self) -> np.ndarray:
        """``Delta_l`` for ``l = 1..N-1``: ``+w_{l+1}`` for odd ``l``, ``-w_{l+1}`` for even."""
        l = np.arange(1, self.n_sites)
        return np.where(l % 2 == 1, 1.0, -1.0) * self.drive_frequencies

    def max_drive_frequency(self) -> float:
        return float(np.max(np.abs(self.drive_frequencies), initial=0.0))

    def to_dict(self) -> dict:
        return {
            "n_sites": self.n_sites,
            "bare_couplings": self.bare_couplings.tolist(),
            "amplitudes": self.amplitudes.tolist(),
            "drive_frequencies": self.drive_frequencies.tolist(),
            "phases": self.phases.tolist(),
            "detuning_params": self.detuning_params.tolist(),
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DriveSchedule":
        return cls(
            bare_couplings=data["bare_couplings"],
            amplitudes=data["amplitudes"],
            drive_frequencies=data["drive_frequencies"],
            phases=data["phases"],
            detuning_params=data["detuning_params"],
            metadata=dict(data.get("metadata", {})),
        )


class DrivenHamiltonian:
    """Rotating-frame Hamiltonian of the modulated chain as a function of time.

    Calling the object with ``t`` returns a fresh ``(N+1) x (N+1)`` matrix;
    evaluation holds no mutable state and is safe from several threads.
    """

    def __init__(self, schedule: DriveSchedule):
        self.schedule = schedule
        n = schedule.n_sites
        self.dim = n + 1
        self._diag = np.zeros(self.dim, dtype=complex)
        self._diag[1:] = schedule.detuning_params
        self._rows = np.arange(1, n)
        self._cols = self._rows + 1
        self._omega = schedule.bare_couplings.astype(complex)
        self._delta = schedule.bond_detunings()
        # F_l(t) for l = 2..N; F_1 is zero (transmon 1 is not driven)
        self._f = schedule.amplitudes
        self._wd = schedule.drive_frequencies
        self._phi = schedule.phases
        self.max_frequency = schedule.max_drive_frequency()

    def modulation(self, t: float) -> np.ndarray:
        """``F_l(t)`` for ``l = 1..N`` with ``F_1 = 0``."""
        out = np.zeros(self.schedule.n_sites)
        out[1:] = self._f * np.sin(self._wd * t + self._phi)
        return out

    def hoppings(self, t: float) -> np.ndarray:
        """Matrix elements ``<l|H(t)|l+1>`` for ``l = 1..N-1``."""
        mod = self.modulation(t)
        phase = -self._delta * t + mod[:-1] - mod[1:]
        return self._omega * np.exp(1j * phase)

    def __call__(self, t: float) -> np.ndarray:
        h = np.diag(self._diag)
        hop = self.hoppings(t)
        h[self._rows, self._cols] = hop
        h[self._cols, self._rows] = hop.conj()
        return h


def build_driven_hamiltonian(schedule: DriveSchedule) -> DrivenHamiltonian:
    """Time-dependent generator of the driven chain in the rotating frame.

    On-site terms ``m_l/2 sigma^z`` enter as single-excitation energies
    ``m_l``; the constant ``-sum m_l / 2`` is a global phase and is dropped.
    """
    return DrivenHamiltonian(schedule)


def effective_couplings(schedule: DriveSchedule) -> np.ndarray:
    """RWA couplings ``Omega_l^eff`` for ``l = 1..N-1`` (complex)."""
    n = schedule.n_sites
    f = np.concatenate(([0.0], schedule.amplitudes))  # f[l-1] is f_l
    phi = np.concatenate(([0.0], schedule.phases))
    out = np.empty(n - 1, dtype=complex)
    for l in range(1, n):
        weight = bessel_j(1, f[l])
        if l > 1:
            weight *= bessel_j(0, f[l - 1])
        if l % 2 == 1:
            phase = np.exp(1j * (phi[l] + np.pi))
        else:
            phase = np.exp(-1j * phi[l])
        out[l - 1] = schedule.bare_couplings[l - 1] * weight * phase
    return out


def build_effective_hamiltonian(schedule: DriveSchedule) -> np.ndarray:
    """Static rotating-wave Hamiltonian with Bessel-weighted couplings."""
    n = schedule.n_sites
    h = np.zeros((n + 1, n + 1), dtype=complex)
    idx = np.arange(1, n + 1)
    h[idx, idx] = schedule.detuning_params
    coup = effective_couplings(schedule)
    h[idx[:-1], idx[1:]] = coup
    h[idx[1:], idx[:-1]] = coup.conj()
    return h


def real_coupling_phases(n_sites: int) -> np.ndarray:
    """Drive phases ``phi_2..phi_N`` making every effective coupling real and positive."""
    l = np.arange(1, n_sites)
    return np.where(l % 2 == 1, np.pi, 0.0)
