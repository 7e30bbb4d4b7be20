"""Signal and power algebra for a set of single-antenna energy transmitters.

Every transmitter sends an unmodulated carrier with phase ``phi_m`` that
reaches the receiver through a channel with aggregate power gain ``beta_m``
and phase shift ``theta_m``.  The received baseband phasor of ET m is
``sqrt(beta_m) * exp(j(phi_m - theta_m))`` and the harvested power is
``rho * P * |sum_m phasor_m|**2``.

Indices of transmitters are zero-based throughout the package.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import DegenerateAlignmentError, DomainError, InvariantViolation

TWO_PI = 2.0 * math.pi

# slack allowed when q_d is compared against q_star
EFFICIENCY_SLACK = 1e-12
# a phasor sum this small relative to its summed magnitudes counts as zero
CANCEL_TOL = 1e-12


def canonicalize(phase: float) -> float:
    """Map a phase onto [-pi, pi).  Values already in range are returned as is."""
    phase = float(phase)
    if -math.pi <= phase < math.pi:
        return phase
    out = (phase + math.pi) % TWO_PI - math.pi
    if out >= math.pi:
        out -= TWO_PI
    return out


def canonicalize_array(phases) -> np.ndarray:
    phases = np.asarray(phases, dtype=float)
    out = np.mod(phases + np.pi, TWO_PI) - np.pi
    out = np.where(out >= np.pi, out - TWO_PI, out)
    inside = (phases >= -np.pi) & (phases < np.pi)
    return np.where(inside, phases, out)


def circular_distance(a: float, b: float) -> float:
    return abs(canonicalize(a - b))


@dataclass(frozen=True)
class PathComponent:
    attenuation: float
    delay: float

    def __post_init__(self):
        if not self.attenuation > 0:
            raise DomainError(f"path attenuation must be > 0, got {self.attenuation}")
        if not math.isfinite(self.delay) or self.delay < 0:
            raise DomainError(f"path delay must be finite and >= 0, got {self.delay}")


@dataclass(frozen=True)
class LinkChannel:
    """Aggregate channel from one ET to the ER.

    ``degenerate`` is set when the multipath sum cancels exactly; the phase
    shift is then 0 by convention.
    """

    power_gain: float
    phase_shift: float
    degenerate: bool = field(default=False, compare=False)

    def __post_init__(self):
        if not self.power_gain >= 0:
            raise DomainError(f"power gain must be >= 0, got {self.power_gain}")
        object.__setattr__(self, "phase_shift", canonicalize(self.phase_shift))

    @property
    def amplitude(self) -> float:
        return math.sqrt(self.power_gain)


@dataclass(frozen=True)
class SystemConfig:
    num_ets: int
    tx_power: float = 1.0
    conversion_eff: float = 1.0
    carrier_freq: float = 915e6
    # only labels the time axis of trajectories
    slot_duration: float = 1e-3

    def __post_init__(self):
        if self.num_ets < 2:
            raise DomainError(f"num_ets must be >= 2, got {self.num_ets}")
        if not self.tx_power > 0:
            raise DomainError(f"tx_power must be > 0, got {self.tx_power}")
        if not 0 < self.conversion_eff <= 1:
            raise DomainError(f"conversion_eff must lie in (0, 1], got {self.conversion_eff}")
        if not self.carrier_freq > 0:
            raise DomainError(f"carrier_freq must be > 0, got {self.carrier_freq}")

    @property
    def scale(self) -> float:
        return self.conversion_eff * self.tx_power


@dataclass(frozen=True)
class RolePartition:
    """Split of ET indices into adapting, non-adapting and idle sets."""

    adapting: frozenset
    non_adapting: frozenset
    idle: frozenset = frozenset()

    def __post_init__(self):
        for name in ("adapting", "non_adapting", "idle"):
            object.__setattr__(self, name, frozenset(getattr(self, name)))
        a, na, i = self.adapting, self.non_adapting, self.idle
        if a & na or a & i or na & i:
            raise DomainError("role sets must be pairwise disjoint")

    def validate(self, num_ets: int, sequential: bool = False) -> None:
        union = self.adapting | self.non_adapting | self.idle
        if union != frozenset(range(num_ets)):
            raise DomainError(f"roles must partition {{0..{num_ets - 1}}}, got {sorted(union)}")
        if sequential and len(self.adapting) != 1:
            raise DomainError("sequential training adapts exactly one ET per interval")


def channel_arrays(channels: Sequence[LinkChannel]) -> tuple[np.ndarray, np.ndarray]:
    """Return (amplitudes, phase shifts) as float arrays."""
    amps = np.fromiter((c.amplitude for c in channels), float, len(channels))
    thetas = np.fromiter((c.phase_shift for c in channels), float, len(channels))
    return amps, thetas


def aggregate_channel(paths: Sequence[PathComponent], carrier_freq: float) -> LinkChannel:
    if not paths:
        raise DomainError("aggregate_channel needs at least one path")
    if not carrier_freq > 0:
        raise DomainError(f"carrier_freq must be > 0, got {carrier_freq}")
    re = sum(p.attenuation * math.cos(TWO_PI * carrier_freq * p.delay) for p in paths)
    im = sum(p.attenuation * math.sin(TWO_PI * carrier_freq * p.delay) for p in paths)
    beta = re * re + im * im
    if math.sqrt(beta) <= CANCEL_TOL * sum(p.attenuation for p in paths):
        return LinkChannel(0.0, 0.0, degenerate=True)
    return LinkChannel(beta, math.atan2(im, re))


def received_phasor(channels: Sequence[LinkChannel], phases) -> complex:
    amps, thetas = channel_arrays(channels)
    phases = np.asarray(phases, dtype=float)
    if phases.shape != amps.shape:
        raise DomainError(f"expected {len(amps)} phases, got {phases.size}")
    return complex(np.sum(amps * np.exp(1j * (phases - thetas))))


def harvested_power(channels: Sequence[LinkChannel], phases, config: SystemConfig) -> float:
    """Average harvested power for the phase assignment ``phases``."""
    s = received_phasor(channels, phases)
    return config.scale * (s.real * s.real + s.imag * s.imag)


def harvested_power_double_sum(channels: Sequence[LinkChannel], phases, config: SystemConfig) -> float:
    """Same quantity written as diagonal plus pairwise cross terms."""
    amps, thetas = channel_arrays(channels)
    phases = np.asarray(phases, dtype=float)
    if phases.shape != amps.shape:
        raise DomainError(f"expected {len(amps)} phases, got {phases.size}")
    off = phases - thetas
    cross = np.outer(amps, amps) * np.cos(off[:, None] - off[None, :])
    np.fill_diagonal(cross, 0.0)
    return config.scale * (float(np.sum(amps ** 2)) + float(np.sum(cross)))


def optimal_power(channels: Sequence[LinkChannel], config: SystemConfig) -> float:
    if not channels:
        raise DomainError("optimal_power needs at least one channel")
    amps, _ = channel_arrays(channels)
    return config.scale * float(np.sum(amps)) ** 2


def efficiency(q_d: float, q_star: float) -> float:
    if not q_star > 0:
        raise DomainError(f"q_star must be > 0, got {q_star}")
    if q_d < 0:
        raise InvariantViolation(f"harvested power is negative: {q_d}")
    ratio = q_d / q_star
    if ratio > 1.0 + EFFICIENCY_SLACK:
        raise InvariantViolation(f"q_d={q_d!r} exceeds q_star={q_star!r}")
    return min(ratio, 1.0)


def split_phasors(
    channels: Sequence[LinkChannel],
    roles: RolePartition,
    fixed_phases: Mapping[int, float],
    base_phases: Optional[Mapping[int, float]] = None,
) -> tuple[complex, complex]:
    """Return ``(adapting_unit, non_adapting)`` phasors.

    ``adapting_unit`` is the adapting sum for common phase 0, so the
    adapting contribution at phase psi is ``exp(j psi) * adapting_unit``.
    With ``base_phases`` each adapting ET m transmits ``base_phases[m] + psi``
    instead of ``psi``.
    """
    if set(fixed_phases) != set(roles.non_adapting):
        raise DomainError(
            f"fixed phases given for {sorted(fixed_phases)}, "
            f"non-adapting set is {sorted(roles.non_adapting)}"
        )
    s_a = 0j
    for m in sorted(roles.adapting):
        c = channels[m]
        base = 0.0 if base_phases is None else base_phases[m]
        s_a += c.amplitude * cmath.exp(1j * (base - c.phase_shift))
    s_na = 0j
    for m in sorted(roles.non_adapting):
        c = channels[m]
        s_na += c.amplitude * cmath.exp(1j * (fixed_phases[m] - c.phase_shift))
    return s_a, s_na


def split_power(
    channels: Sequence[LinkChannel],
    roles: RolePartition,
    fixed_phases: Mapping[int, float],
    psi: float,
    config: SystemConfig,
    base_phases: Optional[Mapping[int, float]] = None,
) -> float:
    """Harvested power when every adapting ET transmits with common phase ``psi``.

    Idle ETs are silent.
    """
    s_a, s_na = split_phasors(channels, roles, fixed_phases, base_phases)
    s = cmath.exp(1j * psi) * s_a + s_na
    return config.scale * (s.real * s.real + s.imag * s.imag)


def target_phase(
    channels: Sequence[LinkChannel],
    roles: RolePartition,
    fixed_phases: Mapping[int, float],
    base_phases: Optional[Mapping[int, float]] = None,
) -> float:
    """Common adapting phase that aligns the adapting sum with the fixed sum."""
    if not roles.adapting or not roles.non_adapting:
        raise DegenerateAlignmentError("target phase needs both adapting and non-adapting ETs")
    s_a, s_na = split_phasors(channels, roles, fixed_phases, base_phases)
    mag_a = sum(channels[m].amplitude for m in roles.adapting)
    mag_na = sum(channels[m].amplitude for m in roles.non_adapting)
    if abs(s_a) <= CANCEL_TOL * mag_a or abs(s_na) <= CANCEL_TOL * mag_na:
        raise DegenerateAlignmentError("a sum phasor vanishes; every common phase is optimal")
    return canonicalize(cmath.phase(s_na) - cmath.phase(s_a))
