"""Random deployments: path-loss gains and uniform channel phases."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError
from .phasor import LinkChannel, PathComponent, SystemConfig, aggregate_channel


@dataclass(frozen=True)
class ScenarioConfig:
    num_ets: int = 5
    ref_atten_db: float = -20.0
    ref_dist: float = 1.0
    pathloss_exp: float = 3.0
    dist_range: tuple = (5.0, 15.0)
    paths_per_link: int = 1
    tx_power: float = 1.0
    carrier_freq: float = 915e6
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.dist_range
        if not 0 < lo <= hi:
            raise DomainError(f"dist_range must satisfy 0 < lo <= hi, got {self.dist_range}")
        if not self.pathloss_exp > 0:
            raise DomainError(f"pathloss_exp must be > 0, got {self.pathloss_exp}")
        if not self.ref_dist > 0:
            raise DomainError(f"ref_dist must be > 0, got {self.ref_dist}")
        if self.num_ets < 2:
            raise DomainError(f"num_ets must be >= 2, got {self.num_ets}")
        if self.paths_per_link < 1:
            raise DomainError(f"paths_per_link must be >= 1, got {self.paths_per_link}")

    def system(self, num_ets: Optional[int] = None) -> SystemConfig:
        return SystemConfig(num_ets or self.num_ets, tx_power=self.tx_power, carrier_freq=self.carrier_freq)


def path_gain(config: ScenarioConfig, distance):
    """Power gain ``c0 * (r / r0) ** -delta`` with c0 given in dB."""
    c0 = 10.0 ** (config.ref_atten_db / 10.0)
    return c0 * (np.asarray(distance, dtype=float) / config.ref_dist) ** (-config.pathloss_exp)


def trial_rng(seed: int, trial_id: int) -> np.random.Generator:
    """Independent stream per (master seed, trial); order of execution is irrelevant."""
    return np.random.default_rng([int(seed), int(trial_id)])


@dataclass
class TrialRecord:
    trial_id: int
    distances: np.ndarray
    phase_shifts: np.ndarray
    channels: list
    metrics: dict = field(default_factory=dict)

    @property
    def gains(self) -> np.ndarray:
        return np.array([c.power_gain for c in self.channels])


def _multipath_channel(config: ScenarioConfig, beta: float, rng) -> LinkChannel:
    period = 1.0 / config.carrier_freq
    while True:
        delays = rng.uniform(0.0, period, config.paths_per_link)
        raw = aggregate_channel([PathComponent(1.0, float(d)) for d in delays], config.carrier_freq)
        if raw.power_gain > 1e-12:
            break
    a = math.sqrt(beta / raw.power_gain)
    return aggregate_channel([PathComponent(a, float(d)) for d in delays], config.carrier_freq)


def _draw(config: ScenarioConfig, rng: np.random.Generator, num_ets: Optional[int] = None):
    m = num_ets or config.num_ets
    lo, hi = config.dist_range
    distances = rng.uniform(lo, hi, m)
    gains = path_gain(config, distances)
    if config.paths_per_link == 1:
        thetas = rng.uniform(-math.pi, math.pi, m)
        channels = [LinkChannel(float(b), float(t)) for b, t in zip(gains, thetas)]
    else:
        channels = [_multipath_channel(config, float(b), rng) for b in gains]
    return distances, channels


def draw_scenario(config: ScenarioConfig, rng: np.random.Generator, num_ets: Optional[int] = None) -> list:
    """Draw one deployment of ``num_ets`` (default ``config.num_ets``) channels."""
    return _draw(config, rng, num_ets)[1]


def draw_trial(config: ScenarioConfig, trial_id: int, num_ets: Optional[int] = None):
    """Return ``(TrialRecord, rng)``; the rng continues the trial's stream."""
    rng = trial_rng(config.seed, trial_id)
    distances, channels = _draw(config, rng, num_ets)
    record = TrialRecord(
        trial_id=trial_id,
        distances=distances,
        phase_shifts=np.array([c.phase_shift for c in channels]),
        channels=channels,
    )
    return record, rng
