"""Efficiency lower bounds and training-length requirements for sequential training."""
from __future__ import annotations

import math
import warnings
from typing import Sequence

import numpy as np

from .adapt import Algorithm, error_bound
from .errors import DomainError, TargetUnreachableError


def _clean_gains(gains: Sequence[float]) -> np.ndarray:
    g = np.asarray(gains, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise DomainError("gains must be a non-empty vector")
    if np.any(g < 0) or not np.all(np.isfinite(g)):
        raise DomainError("gains must be finite and >= 0")
    if np.any(g == 0):
        warnings.warn(f"dropping {int(np.sum(g == 0))} zero-gain ET(s) before evaluating bounds", stacklevel=3)
        g = g[g > 0]
    if g.size < 2:
        raise DomainError("bounds need at least two ETs with positive gain")
    return g


def gain_sums(gains: Sequence[float]) -> tuple:
    """Return (sum of gains, sum over ordered pairs i != j of sqrt(g_i g_j))."""
    g = _clean_gains(gains)
    amp = np.sqrt(g)
    diag = float(np.sum(g))
    cross = float(np.sum(amp)) ** 2 - float(np.sum(amp ** 2))
    return diag, cross


def efficiency_lower_bound(gains: Sequence[float], n_t: int, bits: int, algorithm) -> float:
    diag, cross = gain_sums(gains)
    angle = error_bound(n_t, bits, algorithm)
    q_star = diag + cross
    return (diag + cross * math.cos(angle) ** 2) / q_star


def _alignment_angle(gains: Sequence[float], eta_target: float) -> float:
    if not 0 < eta_target <= 1:
        raise DomainError(f"target efficiency must lie in (0, 1], got {eta_target}")
    diag, cross = gain_sums(gains)
    radicand = eta_target - (1 - eta_target) * diag / cross
    if radicand < 0 or radicand > 1:
        raise TargetUnreachableError(
            f"target efficiency {eta_target} unreachable: arccos argument squared is {radicand:.6g}"
        )
    return math.acos(math.sqrt(radicand))


def required_slots(gains: Sequence[float], bits: int, eta_target: float, algorithm) -> float:
    """Slots per interval that guarantee ``eta_target``; fractional, ``inf`` when eta_target = 1."""
    if bits < 1:
        raise DomainError(f"bits must be >= 1, got {bits}")
    angle = _alignment_angle(gains, eta_target)
    if angle == 0.0:
        return math.inf
    k = 2 ** bits
    if Algorithm.parse(algorithm) is Algorithm.A1:
        return k / bits * math.log2(math.pi / angle)
    return k + k * math.log((math.pi / k) / angle, k + 1)


def equal_gain_required_slots(num_ets: int, eta_target: float) -> float:
    """Closed form of required_slots for identical gains, B = 1, A1."""
    if num_ets < 2:
        raise DomainError(f"num_ets must be >= 2, got {num_ets}")
    radicand = (num_ets * eta_target - 1) / (num_ets - 1)
    if not 0 <= radicand <= 1:
        raise TargetUnreachableError(
            f"target efficiency {eta_target} unreachable for M={num_ets}: radicand {radicand:.6g}"
        )
    angle = math.acos(math.sqrt(radicand))
    if angle == 0.0:
        return math.inf
    return 2 * math.log2(math.pi / angle)


def round_up_slots(slots: float, bits: int) -> int:
    """Smallest positive multiple of 2^B that is >= ``slots``."""
    if math.isinf(slots) or math.isnan(slots):
        raise DomainError(f"cannot round {slots} slots")
    k = 2 ** bits
    n = max(math.ceil(slots - 1e-12), k)
    return -(-n // k) * k
