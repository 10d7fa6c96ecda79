"""Drive-schedule synthesis from target effective chain parameters."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .bessel import bessel_j, invert_j1
from .errors import DomainError, UnsatisfiableCalibration
from .hamiltonians import DriveSchedule, real_coupling_phases
from .model import ChainSpec
from .sweep import DEFAULT_T_MAX, find_peak_fidelity


@dataclass
class CalibrationTarget:
    """What a drive schedule has to realise.

    ``edge_ratio`` is the target ``|Omega_1^eff| / |Omega_mid^eff|`` and
    ``scale`` the inner effective coupling ``n``; ``scale=None`` asks
    :func:`calibrated_scale` to pick it. All frequencies share one angular
    unit.
    """

    n_sites: int
    edge_ratio: float
    potential_magnitude: float
    drive_base_frequency: float
    drive_frequency_step: float
    bare_couplings: list = field(default_factory=list)
    scale: Optional[float] = None

    def __post_init__(self):
        self.bare_couplings = [float(x) for x in self.bare_couplings]
        if self.n_sites < 2:
            raise DomainError("n_sites must be >= 2")
        if len(self.bare_couplings) != self.n_sites - 1:
            raise DomainError(f"bare_couplings needs N-1 = {self.n_sites - 1} entries")
        if any(c <= 0 for c in self.bare_couplings):
            raise DomainError("bare couplings must be positive")
        if not 0.0 <= self.edge_ratio <= 1.0:
            raise DomainError(f"edge_ratio must lie in [0, 1], got {self.edge_ratio}")
        if self.potential_magnitude < 0:
            raise DomainError("potential_magnitude must be >= 0")
        if self.scale is not None and not self.scale > 0:
            raise DomainError("scale must be > 0")

    def with_scale(self, scale: float) -> "CalibrationTarget":
        data = asdict(self)
        data["scale"] = scale
        return CalibrationTarget(**data)

    def scaled(self, s: float) -> "CalibrationTarget":
        """Every frequency multiplied by ``s``."""
        return CalibrationTarget(
            n_sites=self.n_sites,
            edge_ratio=self.edge_ratio,
            potential_magnitude=s * self.potential_magnitude,
            drive_base_frequency=s * self.drive_base_frequency,
            drive_frequency_step=s * self.drive_frequency_step,
            bare_couplings=[s * c for c in self.bare_couplings],
            scale=None if self.scale is None else s * self.scale,
        )


def nine_site_recipe(omega_mid: float, scale: Optional[float] = None) -> CalibrationTarget:
    """Nine transmons: end couplings 0.31 of the middle ones, effective edge ratio 0.241."""
    edge = 0.31 * omega_mid
    return CalibrationTarget(
        n_sites=9,
        edge_ratio=0.241,
        potential_magnitude=0.08 * omega_mid,
        drive_base_frequency=12.11 * omega_mid,
        drive_frequency_step=omega_mid,
        bare_couplings=[edge] + [omega_mid] * 6 + [edge],
        scale=scale,
    )


def eleven_site_recipe(omega: float, scale: Optional[float] = None) -> CalibrationTarget:
    """Eleven identically coupled transmons, effective edge ratio 0.384."""
    return CalibrationTarget(
        n_sites=11,
        edge_ratio=0.384,
        potential_magnitude=0.69 * omega,
        drive_base_frequency=56.8 * omega,
        drive_frequency_step=5.8 * omega,
        bare_couplings=[omega] * 10,
        scale=scale,
    )


RECIPES = {"n9": nine_site_recipe, "n11": eleven_site_recipe}


def bond_targets(target: CalibrationTarget, scale: float) -> np.ndarray:
    """Target ``|Omega_l^eff|`` for ``l = 1..N-1``: ratio*n on the end bonds, n inside."""
    out = np.full(target.n_sites - 1, float(scale))
    out[0] = out[-1] = target.edge_ratio * scale
    return out


def solve_amplitudes(target: CalibrationTarget, scale: float) -> np.ndarray:
    """Drive amplitudes ``f_2..f_N`` solved bond by bond.

    Bond 1 fixes ``f_2`` through ``Omega_1 J_1(f_2)``; bond ``l >= 2`` then
    fixes ``f_{l+1}`` through ``Omega_l J_0(f_l) J_1(f_{l+1})``.
    """
    goals = bond_targets(target, scale)
    amps = []
    prev = 0.0  # f_1: transmon 1 is not driven
    for l in range(1, target.n_sites):
        weight = target.bare_couplings[l - 1]
        if l > 1:
            weight *= bessel_j(0, prev)
        try:
            f = invert_j1(goals[l - 1] / weight)
        except UnsatisfiableCalibration as exc:
            raise UnsatisfiableCalibration(
                f"bond {l} (transmons {l}-{l + 1}) cannot reach |Omega_eff| = "
                f"{goals[l - 1]:.6g}: {exc}",
                bond=l,
            ) from None
        amps.append(f)
        prev = f
    return np.array(amps)


def synthesize_schedule(target: CalibrationTarget,
                        scale: Optional[float] = None) -> DriveSchedule:
    """Drive schedule realising ``target`` in the rotating-wave limit.

    Drive frequencies climb in equal steps from the base frequency, detuning
    parameters alternate ``(-1)**l |m|`` and phases are chosen so that every
    effective coupling is real and positive.
    """
    if scale is None:
        scale = target.scale if target.scale is not None else calibrated_scale(target)
    n = target.n_sites
    amps = solve_amplitudes(target, scale)
    k = np.arange(2, n + 1)
    freqs = target.drive_base_frequency + (k - 2) * target.drive_frequency_step
    l = np.arange(1, n + 1)
    m = np.where(l % 2 == 0, 1.0, -1.0) * target.potential_magnitude
    return DriveSchedule(
        bare_couplings=target.bare_couplings,
        amplitudes=amps,
        drive_frequencies=freqs,
        phases=real_coupling_phases(n),
        detuning_params=m,
        metadata={"scale": float(scale), "edge_ratio": target.edge_ratio},
    )


def is_satisfiable(target: CalibrationTarget, scale: float) -> bool:
    try:
        solve_amplitudes(target, scale)
    except UnsatisfiableCalibration:
        return False
    return True


def max_scale(target: CalibrationTarget, rel_tol: float = 1e-12) -> float:
    """Largest ``n`` for which every bond stays on the principal branches."""
    lo, hi = 0.0, max(target.bare_couplings)
    if is_satisfiable(target, hi):
        return hi
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if is_satisfiable(target, mid):
            lo = mid
        else:
            hi = mid
    return lo


def calibrated_scale(target: CalibrationTarget, t_max: float = DEFAULT_T_MAX,
                     points: int = 121, span: float = 3.0) -> float:
    """Default inner effective coupling ``n``.

    The effective chain has ``g/J = edge_ratio`` and ``lambda/J = |m|/n``;
    ``lambda/J`` is scanned over ``[|m|/n_max, span * |m|/n_max]`` (the
    reachable part of the axis) and the closed-system optimum fixes ``n``.
    """
    if target.potential_magnitude == 0:
        raise DomainError("potential_magnitude is 0; pass an explicit scale")
    if target.edge_ratio == 0:
        raise DomainError("edge_ratio is 0; pass an explicit scale")
    n_max = max_scale(target) * (1 - 1e-9)
    lam_min = target.potential_magnitude / n_max
    best = None
    for lam in np.linspace(lam_min, span * lam_min, points):
        spec = ChainSpec(target.n_sites, end_coupling=target.edge_ratio, potential=float(lam))
        peak = find_peak_fidelity(spec, t_max=t_max)
        key = (peak.fidelity, -peak.tau)
        if best is None or key > best[0]:
            best = (key, float(lam))
    return target.potential_magnitude / best[1]


def effective_chain_spec(target: CalibrationTarget, scale: float) -> ChainSpec:
    """The spin chain (in units of ``n``) that a calibrated schedule emulates."""
    return ChainSpec(
        target.n_sites,
        end_coupling=target.edge_ratio,
        potential=target.potential_magnitude / scale,
    )


def schedule_scale(schedule: DriveSchedule) -> float:
    """Inner effective coupling magnitude used for time units (largest |Omega_eff|)."""
    from .hamiltonians import effective_couplings

    value = float(np.max(np.abs(effective_couplings(schedule))))
    if not value > 0 or math.isnan(value):
        raise DomainError("schedule has no nonzero effective coupling")
    return value
