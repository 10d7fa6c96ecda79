"""Basis conventions, parameter records and state containers.

The working basis is ``{|vac>, |1>_1, ..., |1>_N}``: index 0 is the vacuum
(needed once collective decay maps excitations out of the chain) and index
``j`` is the state with only site ``j`` excited.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError

VACUUM = "vac"


@dataclass(frozen=True)
class ChainSpec:
    """Spin chain with weak end couplings and a staggered on-site potential.

    Parameters
    ----------
    n_sites : int
        Number of spins ``N``.
    inner_coupling : float
        Hopping ``J`` between sites ``j, j+1`` for ``2 <= j <= N-2``.
    end_coupling : float
        Hopping ``g`` on the two end bonds ``(1, 2)`` and ``(N-1, N)``.
    potential : float
        Magnitude ``lambda``; site ``j`` gets ``(-1)**j * lambda``.
    """

    n_sites: int
    end_coupling: float
    potential: float = 0.0
    inner_coupling: float = 1.0

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 2:
            raise DomainError(f"n_sites must be an integer >= 2, got {self.n_sites!r}")
        if not self.inner_coupling > 0:
            raise DomainError(f"inner_coupling must be > 0, got {self.inner_coupling!r}")
        if not self.end_coupling > 0:
            raise DomainError(f"end_coupling must be > 0, got {self.end_coupling!r}")
        if not self.potential >= 0:
            raise DomainError(f"potential must be >= 0, got {self.potential!r}")
        object.__setattr__(self, "n_sites", int(self.n_sites))

    @property
    def dim(self) -> int:
        return self.n_sites + 1

    def onsite_energies(self) -> np.ndarray:
        """Site energies ``lambda_j = (-1)**j lambda`` for ``j = 1..N``."""
        j = np.arange(1, self.n_sites + 1)
        return np.where(j % 2 == 0, 1.0, -1.0) * self.potential

    def replace(self, **changes) -> "ChainSpec":
        fields = dict(
            n_sites=self.n_sites,
            end_coupling=self.end_coupling,
            potential=self.potential,
            inner_coupling=self.inner_coupling,
        )
        fields.update(changes)
        return ChainSpec(**fields)


class NoiseMode(str, Enum):
    COLLECTIVE = "collective"
    PER_SITE = "per_site"


@dataclass(frozen=True)
class NoiseSpec:
    """Decoherence rate and choice of collapse operators.

    ``collective`` uses the single operators ``a1 = sum_j c_j`` and
    ``a2 = sum_j n_j``; ``per_site`` sums the dissipators of every ``c_j``
    and ``n_j`` instead. ``dephasing=False`` drops the number-operator
    channel, which is useful for isolating its contribution.
    """

    rate: float = 0.0
    mode: NoiseMode = NoiseMode.COLLECTIVE
    dephasing: bool = True

    def __post_init__(self):
        if not self.rate >= 0:
            raise DomainError(f"noise rate must be >= 0, got {self.rate!r}")
        try:
            object.__setattr__(self, "mode", NoiseMode(self.mode))
        except ValueError:
            raise DomainError(f"unknown noise mode {self.mode!r}") from None

    @property
    def is_closed(self) -> bool:
        return self.rate == 0


def basis_index(site, n_sites: int) -> int:
    """Map ``VACUUM`` to 0 and site ``j`` (1-based) to ``j``."""
    if isinstance(site, str):
        if site == VACUUM:
            return 0
        raise DomainError(f"unknown site tag {site!r}")
    if int(site) != site or not 1 <= site <= n_sites:
        raise DomainError(f"site {site!r} outside 1..{n_sites}")
    return int(site)


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size < 3:
            raise DomainError("state vector must be 1-D with length N+1 >= 3")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_sites(self) -> int:
        return self.amplitudes.size - 1

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    entries: np.ndarray

    def __post_init__(self):
        rho = np.array(self.entries, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] < 3:
            raise DomainError("density matrix must be square with side N+1 >= 3")
        rho.setflags(write=False)
        object.__setattr__(self, "entries", rho)

    @property
    def n_sites(self) -> int:
        return self.entries.shape[0] - 1

    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def populations(self) -> np.ndarray:
        return np.diagonal(self.entries).real.copy()

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))


def initial_state(spec: ChainSpec) -> StateVector:
    """The sender-excited state ``|1>_1``."""
    amps = np.zeros(spec.dim, dtype=complex)
    amps[basis_index(1, spec.n_sites)] = 1.0
    return StateVector(amps)


def site_projector(site, n_sites: int) -> DensityMatrix:
    rho = np.zeros((n_sites + 1, n_sites + 1), dtype=complex)
    k = basis_index(site, n_sites)
    rho[k, k] = 1.0
    return DensityMatrix(rho)
