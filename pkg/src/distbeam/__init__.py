"""Distributed energy beamforming driven by quantized energy feedback.

A set of energy transmitters (ETs) learns transmit phases that add
coherently at one energy receiver (ER), which only reports a few bits per
feedback window about which probe slot harvested the most power.
"""
from .adapt import Algorithm, WorkingArc, error_bound, init_session, run_interval, update
from .bounds import efficiency_lower_bound, equal_gain_required_slots, required_slots
from .errors import (
    DegenerateAlignmentError,
    DomainError,
    InvariantViolation,
    ProtocolError,
    TargetUnreachableError,
)
from .phasor import (
    LinkChannel,
    PathComponent,
    RolePartition,
    SystemConfig,
    aggregate_channel,
    canonicalize,
    efficiency,
    harvested_power,
    optimal_power,
    split_power,
    target_phase,
)
from .protocols import ParallelPlan, SequentialPlan, run_parallel, run_rpp, run_sequential
from .scenario import ScenarioConfig, draw_scenario, draw_trial

__version__ = "0.1.0"
