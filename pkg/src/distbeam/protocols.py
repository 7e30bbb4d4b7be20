"""Training protocols built from adaptation intervals, plus baselines.

Sequential training adapts one ET per interval in a fixed order against
the sum of the already adapted ETs; parallel training lets every ET flip a
biased coin each interval.  Random phase perturbation (RPP) and the
all-zero assignment are the reference schemes.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from . import adapt
from .adapt import Algorithm
from .errors import DegenerateAlignmentError, DomainError
from .phasor import (
    LinkChannel,
    RolePartition,
    SystemConfig,
    canonicalize,
    channel_arrays,
    circular_distance,
    harvested_power,
    optimal_power,
    split_phasors,
    target_phase,
)


class Role(str, Enum):
    ADAPTING = "adapting"
    NON_ADAPTING = "non_adapting"
    IDLE = "idle"


@dataclass(frozen=True)
class EtState:
    index: int
    role: Role
    current_phase: float


@dataclass(frozen=True)
class SequentialPlan:
    slots_per_interval: int
    bits: int = 1
    algorithm: Algorithm = Algorithm.A2
    # ETs adapted after ET 0, in order; None means 1, 2, ..., M-1
    order: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm.parse(self.algorithm))
        adapt._check_slots(self.slots_per_interval, self.bits)

    @property
    def windows(self) -> int:
        return self.slots_per_interval // 2 ** self.bits

    def resolved_order(self, num_ets: int) -> tuple:
        order = tuple(range(1, num_ets)) if self.order is None else tuple(self.order)
        if sorted(order) != list(range(1, num_ets)):
            raise DomainError(f"order must be a permutation of 1..{num_ets - 1}, got {order}")
        return order


@dataclass(frozen=True)
class ParallelPlan:
    adapt_prob: float
    num_intervals: int
    slots_per_interval: int
    bits: int = 1
    algorithm: Algorithm = Algorithm.A2
    seed: int = 0
    # "offset": adapting ET m transmits its current phase + psi
    # "absolute": adapting ET m transmits psi itself
    common_phase: str = "offset"

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm.parse(self.algorithm))
        if self.common_phase not in ("offset", "absolute"):
            raise DomainError(f"common_phase must be 'offset' or 'absolute', got {self.common_phase!r}")
        if not 0 < self.adapt_prob < 1:
            raise DomainError(f"adapt_prob must lie in (0, 1), got {self.adapt_prob}")
        if self.num_intervals < 1:
            raise DomainError(f"num_intervals must be >= 1, got {self.num_intervals}")
        adapt._check_slots(self.slots_per_interval, self.bits)

    @property
    def windows(self) -> int:
        return self.slots_per_interval // 2 ** self.bits


@dataclass(frozen=True)
class IntervalLog:
    roles: RolePartition
    outcome_phase: Optional[float]
    target: Optional[float] = None
    error: Optional[float] = None
    effective: bool = True


@dataclass
class ProtocolRun:
    """Outcome of one protocol execution.

    ``trajectory[k]`` is the harvested power during training slot ``k``.
    """

    final_phases: np.ndarray
    trajectory: np.ndarray
    interval_log: list
    final_power: float
    q_star: float
    slot_duration: float = 1e-3
    interval_end_powers: list = field(default_factory=list)
    # RPP only: ER's best-power record after each slot
    best_record: Optional[np.ndarray] = None

    @property
    def efficiency(self) -> float:
        return min(self.final_power / self.q_star, 1.0)

    @property
    def training_slots(self) -> int:
        return len(self.trajectory)

    def padded(self, total_slots: int) -> np.ndarray:
        """Power per slot over a budget, holding the final power after training ends."""
        if total_slots <= len(self.trajectory):
            return self.trajectory[:total_slots].copy()
        tail = np.full(total_slots - len(self.trajectory), self.final_power)
        return np.concatenate([self.trajectory, tail])

    def times(self) -> np.ndarray:
        return np.arange(len(self.trajectory)) * self.slot_duration


def _split_measure(s_a: complex, s_na: complex, scale: float):
    def measure(psi: float) -> float:
        s = cmath.exp(1j * psi) * s_a + s_na
        return scale * (s.real * s.real + s.imag * s.imag)
    return measure


def run_adaptation(
    channels: Sequence[LinkChannel],
    roles: RolePartition,
    fixed_phases,
    bits: int,
    windows: int,
    algorithm,
    config: SystemConfig,
    *,
    base_phases=None,
    noise_std: float = 0.0,
    rng=None,
) -> adapt.IntervalResult:
    """Run one interval with power measured on the true channels."""
    roles.validate(len(channels))
    s_a, s_na = split_phasors(channels, roles, fixed_phases, base_phases)
    measure = _split_measure(s_a, s_na, config.scale)
    return adapt.run_interval(measure, bits, windows, algorithm, noise_std=noise_std, rng=rng)


def _target_or_none(channels, roles, fixed, base=None):
    try:
        return target_phase(channels, roles, fixed, base)
    except DegenerateAlignmentError:
        return None


def run_sequential(
    channels: Sequence[LinkChannel],
    plan: SequentialPlan,
    config: SystemConfig,
    *,
    noise_std: float = 0.0,
    rng=None,
) -> ProtocolRun:
    m_total = len(channels)
    if m_total < 2:
        raise DomainError(f"sequential training needs M >= 2, got {m_total}")
    order = plan.resolved_order(m_total)
    phases = np.zeros(m_total)
    adapted = [0]
    trajectory = []
    log = []
    ends = []
    for m in order:
        idle = set(range(m_total)) - set(adapted) - {m}
        roles = RolePartition({m}, set(adapted), idle)
        fixed = {i: float(phases[i]) for i in adapted}
        result = run_adaptation(
            channels, roles, fixed, plan.bits, plan.windows, plan.algorithm, config,
            noise_std=noise_std, rng=rng,
        )
        phases[m] = result.final_phase
        psi_star = _target_or_none(channels, roles, fixed)
        err = None if psi_star is None else circular_distance(result.final_phase, psi_star)
        log.append(IntervalLog(roles, result.final_phase, psi_star, err))
        trajectory.append(result.trajectory)
        adapted.append(m)
        ends.append(_active_power(channels, phases, adapted, config))
    final = harvested_power(channels, phases, config)
    return ProtocolRun(
        final_phases=phases,
        trajectory=np.concatenate(trajectory),
        interval_log=log,
        final_power=final,
        q_star=optimal_power(channels, config),
        slot_duration=config.slot_duration,
        interval_end_powers=ends,
    )


def _active_power(channels, phases, active, config) -> float:
    amps, thetas = channel_arrays(channels)
    idx = np.asarray(sorted(active))
    s = np.sum(amps[idx] * np.exp(1j * (phases[idx] - thetas[idx])))
    return config.scale * float(abs(s) ** 2)


def run_parallel(
    channels: Sequence[LinkChannel],
    plan: ParallelPlan,
    config: SystemConfig,
    rng: Optional[np.random.Generator] = None,
    *,
    initial_phases=None,
    noise_std: float = 0.0,
) -> ProtocolRun:
    m_total = len(channels)
    if m_total < 2:
        raise DomainError(f"parallel training needs M >= 2, got {m_total}")
    if rng is None:
        rng = np.random.default_rng(plan.seed)
    phases = np.zeros(m_total) if initial_phases is None else canonicalize_all(initial_phases)
    k = plan.slots_per_interval
    trajectory = np.empty(plan.num_intervals * k)
    log = []
    ends = []
    current = harvested_power(channels, phases, config)
    everyone = set(range(m_total))
    for i in range(plan.num_intervals):
        flips = rng.random(m_total) < plan.adapt_prob
        adapting = {m for m in range(m_total) if flips[m]}
        roles = RolePartition(adapting, everyone - adapting, ())
        if not adapting or adapting == everyone:
            # nothing to align against: slots pass with phases unchanged
            trajectory[i * k:(i + 1) * k] = current
            log.append(IntervalLog(roles, None, effective=False))
            ends.append(current)
            continue
        fixed = {m: float(phases[m]) for m in roles.non_adapting}
        base = None
        if plan.common_phase == "offset":
            base = {m: float(phases[m]) for m in adapting}
        result = run_adaptation(
            channels, roles, fixed, plan.bits, plan.windows, plan.algorithm, config,
            base_phases=base, noise_std=noise_std, rng=rng,
        )
        psi_star = _target_or_none(channels, roles, fixed, base)
        err = None if psi_star is None else circular_distance(result.final_phase, psi_star)
        for m in adapting:
            offset = phases[m] if base is not None else 0.0
            phases[m] = canonicalize(offset + result.final_phase)
        trajectory[i * k:(i + 1) * k] = result.trajectory
        current = harvested_power(channels, phases, config)
        log.append(IntervalLog(roles, result.final_phase, psi_star, err))
        ends.append(current)
    return ProtocolRun(
        final_phases=phases,
        trajectory=trajectory,
        interval_log=log,
        final_power=current,
        q_star=optimal_power(channels, config),
        slot_duration=config.slot_duration,
        interval_end_powers=ends,
    )


def canonicalize_all(phases) -> np.ndarray:
    return np.array([canonicalize(p) for p in phases], dtype=float)


def run_rpp(
    channels: Sequence[LinkChannel],
    config: SystemConfig,
    num_slots: int,
    perturb_scale: float = math.pi / 8,
    rng: Optional[np.random.Generator] = None,
    *,
    initial_phases=None,
) -> ProtocolRun:
    """Random phase perturbation with one-bit "better than best" feedback.

    Every slot each ET perturbs its best-known phase by an independent draw
    from U[-delta, delta]; the perturbed phases are kept only when the ER
    reports a strictly higher power than its record.
    """
    if num_slots < 1:
        raise DomainError(f"num_slots must be >= 1, got {num_slots}")
    if perturb_scale < 0:
        raise DomainError(f"perturb_scale must be >= 0, got {perturb_scale}")
    if rng is None:
        rng = np.random.default_rng()
    amps, thetas = channel_arrays(channels)
    m_total = len(channels)
    best = np.zeros(m_total) if initial_phases is None else canonicalize_all(initial_phases)
    scale = config.scale

    def power(ph):
        s = np.sum(amps * np.exp(1j * (ph - thetas)))
        return scale * (s.real * s.real + s.imag * s.imag)

    record = power(best)
    trajectory = np.empty(num_slots)
    records = np.empty(num_slots)
    for k in range(num_slots):
        trial = best + rng.uniform(-perturb_scale, perturb_scale, m_total)
        q = power(trial)
        trajectory[k] = q
        if q > record:
            best, record = trial, q
        records[k] = record
    best = canonicalize_all(best)
    return ProtocolRun(
        final_phases=best,
        trajectory=trajectory,
        interval_log=[],
        final_power=harvested_power(channels, best, config),
        q_star=optimal_power(channels, config),
        slot_duration=config.slot_duration,
        best_record=records,
    )


def run_no_adaptation(channels: Sequence[LinkChannel], config: SystemConfig) -> float:
    return harvested_power(channels, np.zeros(len(channels)), config)
