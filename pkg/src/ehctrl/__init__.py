"""Decentralized random-access scheduling for wireless control loops whose
sensors run on harvested energy.

The package converts per-plant Lyapunov decrease-rate targets into required
packet-reception probabilities, runs a per-node stochastic primal-dual
scheduling policy over a shared collision channel, and simulates the coupled
plant/channel/battery system with full seed determinism.
"""

from .comm import ChannelConfig, DecodingCurve, SlotOutcome, draw_channels, reception_probability, resolve_slot
from .control import (
    PlantModel,
    PlantState,
    control_performance_bound,
    lyapunov_value,
    required_reception_probability,
    step_plant,
)
from .coordination import AvailabilitySchedule, DualMailbox
from .energy import BatteryState, HarvestConfig, draw_harvest, step_battery
from .errors import (
    ConfigError,
    EnergyCausalityError,
    InfeasibleTargetError,
    InvalidStateError,
    InvariantViolation,
)
from .scheduler import (
    NodeDualState,
    NodePrimal,
    SchedulerParams,
    compute_primal,
    compute_s,
    compute_y,
    compute_z,
    init_duals,
    update_duals,
)
from .sim import SimConfig, SimulationAborted, Summary, TelemetryRecord, run, summarize

__version__ = "0.1.0"

__all__ = [
    "AvailabilitySchedule",
    "BatteryState",
    "ChannelConfig",
    "ConfigError",
    "DecodingCurve",
    "DualMailbox",
    "EnergyCausalityError",
    "HarvestConfig",
    "InfeasibleTargetError",
    "InvalidStateError",
    "InvariantViolation",
    "NodeDualState",
    "NodePrimal",
    "PlantModel",
    "PlantState",
    "SchedulerParams",
    "SimConfig",
    "SimulationAborted",
    "SlotOutcome",
    "Summary",
    "TelemetryRecord",
    "compute_primal",
    "compute_s",
    "compute_y",
    "compute_z",
    "control_performance_bound",
    "draw_channels",
    "draw_harvest",
    "init_duals",
    "lyapunov_value",
    "reception_probability",
    "required_reception_probability",
    "resolve_slot",
    "run",
    "step_battery",
    "step_plant",
    "summarize",
    "update_duals",
]
