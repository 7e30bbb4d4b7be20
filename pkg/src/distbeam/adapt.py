"""Phase adaptation inside one adaptation interval.

The adapting ETs share one common probe phase and localize the target
phase on the circle from energy feedback alone:

* A1 (B-bit feedback, no ER memory): each window the ER names the probe
  with the largest measured power and the working arc shrinks to the
  subdivision around it.
* A2 ((B+1)-bit feedback, ER memory): the ER also reports whether that
  probe beats the best power recorded so far, which bisects the arc once
  more against the best phase found so far.

Geometry is done in offsets measured from the arc start so arcs that
straddle +-pi need no special handling.  Probe and feedback indices are
zero-based.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, InvariantViolation, ProtocolError
from .phasor import TWO_PI, canonicalize

# relative tolerance used to classify where psi_best sits in the new arc
_POSITION_TOL = 1e-6


class Algorithm(str, Enum):
    A1 = "a1"
    A2 = "a2"

    @classmethod
    def parse(cls, value) -> "Algorithm":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise DomainError(f"unknown algorithm {value!r}, expected 'a1' or 'a2'") from None


class BestPosition(str, Enum):
    CENTER = "center"
    START = "start"
    END = "end"


@dataclass(frozen=True)
class WorkingArc:
    """Arc ``{start + t : 0 <= t <= length}`` on the circle."""

    start: float
    length: float

    def __post_init__(self):
        if not 0 < self.length <= TWO_PI:
            raise DomainError(f"arc length must lie in (0, 2pi], got {self.length}")
        object.__setattr__(self, "start", canonicalize(self.start))

    @classmethod
    def full_circle(cls) -> "WorkingArc":
        return cls(-math.pi, TWO_PI)

    @property
    def is_full(self) -> bool:
        return self.length == TWO_PI

    def at(self, offset: float) -> float:
        return canonicalize(self.start + offset)

    def offset(self, phase: float) -> float:
        """Counter-clockwise distance from the arc start to ``phase``, in [0, 2pi)."""
        return (phase - self.start) % TWO_PI

    def center(self) -> float:
        return self.at(self.length / 2)

    def contains(self, phase: float, tol: float = 0.0) -> bool:
        if self.is_full:
            return True
        off = self.offset(phase)
        return off <= self.length + tol or off >= TWO_PI - tol

    def sub(self, lo: float, hi: float) -> "WorkingArc":
        return WorkingArc(self.at(lo), hi - lo)


@dataclass(frozen=True)
class ProbeSchedule:
    phases: tuple
    bits: int

    def __post_init__(self):
        if len(self.phases) != 2 ** self.bits:
            raise DomainError(f"{2 ** self.bits} probes expected for B={self.bits}, got {len(self.phases)}")


@dataclass(frozen=True)
class ErMemory:
    best_power: float = 0.0


@dataclass(frozen=True)
class Feedback:
    best_index: int
    improved: Optional[bool] = None


@dataclass(frozen=True)
class AdaptationSession:
    """ET-side state at the start of window ``window_index`` (1-based).

    ``window_index == windows_total + 1`` marks a finished interval.
    ``probe_offsets`` are the probe positions relative to ``arc.start``.
    """

    arc: WorkingArc
    schedule: ProbeSchedule
    probe_offsets: tuple
    algorithm: Algorithm
    window_index: int
    windows_total: int
    psi_best: Optional[float] = None
    best_offset: Optional[float] = None
    best_position: Optional[BestPosition] = None
    last_choice: Optional[float] = None

    @property
    def bits(self) -> int:
        return self.schedule.bits

    @property
    def finished(self) -> bool:
        return self.window_index > self.windows_total

    @property
    def final_phase(self) -> float:
        if self.last_choice is None:
            raise ProtocolError("no feedback window has completed yet")
        if self.algorithm is Algorithm.A1:
            return self.last_choice
        return self.psi_best


def _center_layout(length: float, count: int) -> list:
    step = length / count
    return [step / 2 + step * i for i in range(count)]


def _memory_center_layout(length: float, bits: int) -> list:
    # 2^B + 1 cell centers with the middle one left for psi_best
    points = _center_layout(length, 2 ** bits + 1)
    del points[2 ** (bits - 1)]
    return points


def _edge_layout(length: float, bits: int, at_start: bool) -> list:
    k = 2 ** bits
    if at_start:
        return [length * b / k for b in range(1, k + 1)]
    return [length * (b - 1) / k for b in range(1, k + 1)]


def _with_probes(session_kwargs: dict, arc: WorkingArc, offsets: list, bits: int) -> dict:
    session_kwargs.update(
        arc=arc,
        probe_offsets=tuple(offsets),
        schedule=ProbeSchedule(tuple(arc.at(o) for o in offsets), bits),
    )
    return session_kwargs


def init_session(bits: int, windows: int, algorithm="a1") -> AdaptationSession:
    if bits < 1:
        raise DomainError(f"bits must be >= 1, got {bits}")
    if windows < 1:
        raise DomainError(f"windows must be >= 1, got {windows}")
    algorithm = Algorithm.parse(algorithm)
    arc = WorkingArc.full_circle()
    offsets = _center_layout(TWO_PI, 2 ** bits)
    kw = _with_probes({}, arc, offsets, bits)
    if algorithm is Algorithm.A2:
        kw.update(psi_best=kw["schedule"].phases[0], best_offset=offsets[0])
    return AdaptationSession(algorithm=algorithm, window_index=1, windows_total=windows, **kw)


def er_select(powers: Sequence[float]) -> int:
    """Index of the largest power; ties go to the lowest index."""
    if len(powers) == 0:
        raise DomainError("er_select needs at least one power value")
    best = 0
    for i in range(1, len(powers)):
        if powers[i] > powers[best]:
            best = i
    return best


def er_feedback(
    powers: Sequence[float],
    algorithm,
    window_index: int,
    memory: ErMemory,
) -> tuple:
    """ER side of one window: returns ``(Feedback, updated ErMemory)``."""
    algorithm = Algorithm.parse(algorithm)
    b = er_select(powers)
    if algorithm is Algorithm.A1:
        return Feedback(b), memory
    q = powers[b]
    if window_index == 1:
        return Feedback(b), ErMemory(max(memory.best_power, q))
    improved = q >= memory.best_power
    return Feedback(b, improved), (ErMemory(q) if improved else memory)


def _check_index(session: AdaptationSession, feedback: Feedback) -> int:
    b = feedback.best_index
    if not 0 <= b < len(session.probe_offsets):
        raise DomainError(f"feedback index {b} outside 0..{len(session.probe_offsets) - 1}")
    if session.finished:
        raise ProtocolError("session already used all of its feedback windows")
    return b


def _voronoi_cell(offsets: Sequence[float], b: int, length: float) -> tuple:
    lo = 0.0 if b == 0 else (offsets[b - 1] + offsets[b]) / 2
    hi = length if b == len(offsets) - 1 else (offsets[b] + offsets[b + 1]) / 2
    return lo, hi


def a1_update(session: AdaptationSession, feedback: Feedback) -> AdaptationSession:
    if session.algorithm is not Algorithm.A1:
        raise ProtocolError("a1_update called on an A2 session")
    if feedback.improved is not None:
        raise ProtocolError("A1 feedback carries no improvement bit")
    b = _check_index(session, feedback)
    k = 2 ** session.bits
    # probes sit at subdivision centers, so the kept Voronoi cell is subdivision b
    step = session.arc.length / k
    arc = session.arc.sub(step * b, step * (b + 1))
    kw = _with_probes({}, arc, _center_layout(arc.length, k), session.bits)
    return replace(
        session,
        window_index=session.window_index + 1,
        last_choice=session.schedule.phases[b],
        **kw,
    )


def a2_update(session: AdaptationSession, feedback: Feedback) -> AdaptationSession:
    if session.algorithm is not Algorithm.A2:
        raise ProtocolError("a2_update called on an A1 session")
    b = _check_index(session, feedback)
    first = session.window_index == 1
    if first and feedback.improved is not None:
        raise ProtocolError("first A2 window carries no improvement bit")
    if not first and feedback.improved is None:
        raise ProtocolError(f"window {session.window_index} of A2 needs the improvement bit")

    offsets = session.probe_offsets
    length = session.arc.length
    lo, hi = _voronoi_cell(offsets, b, length)
    t = offsets[b]
    if first or feedback.improved:
        new_best = t
        if not first:
            mid = (t + session.best_offset) / 2
            if t < session.best_offset:
                hi = min(hi, mid)
            else:
                lo = max(lo, mid)
    else:
        s = session.best_offset
        mid = (t + s) / 2
        if t < s:
            cut = (max(lo, mid), hi)
        else:
            cut = (lo, min(hi, mid))
        if cut[0] < cut[1]:
            lo, hi = cut
            new_best = s
        else:
            # inconsistent (noisy) feedback: keep the B-bit cell around psi_b*
            new_best = t

    new_len = hi - lo
    if not new_len > 0:
        raise InvariantViolation("A2 working arc collapsed to an empty set")
    rel = new_best - lo
    if abs(rel - new_len / 2) <= _POSITION_TOL * new_len:
        position = BestPosition.CENTER
        probe_offsets = _memory_center_layout(new_len, session.bits)
    elif rel <= _POSITION_TOL * new_len:
        position = BestPosition.START
        probe_offsets = _edge_layout(new_len, session.bits, at_start=True)
    elif abs(rel - new_len) <= _POSITION_TOL * new_len:
        position = BestPosition.END
        probe_offsets = _edge_layout(new_len, session.bits, at_start=False)
    else:
        raise InvariantViolation(f"psi_best at relative offset {rel / new_len:.6f} of the new arc")

    arc = session.arc.sub(lo, hi)
    best_local = {BestPosition.CENTER: new_len / 2, BestPosition.START: 0.0, BestPosition.END: new_len}[position]
    kw = _with_probes({}, arc, probe_offsets, session.bits)
    return replace(
        session,
        window_index=session.window_index + 1,
        last_choice=session.schedule.phases[b],
        psi_best=arc.at(best_local),
        best_offset=best_local,
        best_position=position,
        **kw,
    )


def update(session: AdaptationSession, feedback: Feedback) -> AdaptationSession:
    if session.algorithm is Algorithm.A1:
        return a1_update(session, feedback)
    return a2_update(session, feedback)


@dataclass(frozen=True)
class IntervalResult:
    final_phase: float
    trajectory: np.ndarray
    sessions: tuple
    feedbacks: tuple
    memories: tuple

    @property
    def arcs(self) -> list:
        return [s.arc for s in self.sessions]


def run_interval(
    measure: Callable[[float], float],
    bits: int,
    windows: int,
    algorithm="a1",
    *,
    noise_std: float = 0.0,
    rng: Optional[np.random.Generator] = None,
) -> IntervalResult:
    """Run one adaptation interval of ``windows`` feedback windows.

    ``measure(psi)`` returns the true harvested power when the adapting ETs
    transmit with common phase ``psi``.  With ``noise_std > 0`` the ER sees
    that power plus zero-mean Gaussian noise; the trajectory always holds
    the true powers, one entry per training slot.
    """
    session = init_session(bits, windows, algorithm)
    if noise_std < 0:
        raise DomainError(f"noise_std must be >= 0, got {noise_std}")
    if noise_std > 0 and rng is None:
        rng = np.random.default_rng()
    memory = ErMemory()
    k = 2 ** bits
    trajectory = np.empty(windows * k)
    sessions = [session]
    feedbacks = []
    memories = [memory]
    for n in range(windows):
        true = [measure(psi) for psi in session.schedule.phases]
        trajectory[n * k:(n + 1) * k] = true
        seen = true
        if noise_std > 0:
            seen = list(np.asarray(true) + rng.normal(0.0, noise_std, k))
        fb, memory = er_feedback(seen, session.algorithm, session.window_index, memory)
        session = update(session, fb)
        sessions.append(session)
        feedbacks.append(fb)
        memories.append(memory)
    return IntervalResult(session.final_phase, trajectory, tuple(sessions), tuple(feedbacks), tuple(memories))


def _check_slots(n_t: int, bits: int) -> int:
    if bits < 1:
        raise DomainError(f"bits must be >= 1, got {bits}")
    k = 2 ** bits
    if n_t < k or n_t % k:
        raise DomainError(f"slots per interval N_t={n_t} must be a positive multiple of 2^B={k}")
    return n_t // k


def error_bound_a1(n_t: int, bits: int) -> float:
    """Worst-case |final phase - target| for A1 with ``n_t`` slots."""
    windows = _check_slots(n_t, bits)
    return math.pi * (0.5 ** bits) ** windows


def error_bound_a2(n_t: int, bits: int) -> float:
    windows = _check_slots(n_t, bits)
    return math.pi / 2 ** bits * (1.0 / (2 ** bits + 1)) ** (windows - 1)


def error_bound(n_t: int, bits: int, algorithm) -> float:
    if Algorithm.parse(algorithm) is Algorithm.A1:
        return error_bound_a1(n_t, bits)
    return error_bound_a2(n_t, bits)


def contraction_ratios(bits: int) -> tuple:
    """Per-window arc shrink factors an A2 interval can produce."""
    k = 2 ** bits
    return (1 / (k + 1), 1 / (2 * (k + 1)), 1 / k, 1 / (2 * k))
