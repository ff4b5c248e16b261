"""Deterministic frequency-response simulator of an HVDC-connected offshore
wind plant under two grid-forming control stacks, with closed-form
steady-state cross-checks."""

from .controllers import (
    MODE_ENERGY_BALANCING,
    MODE_HOLISTIC,
    ControllerGains,
    ControllerState,
    PdGains,
    PiGains,
    table_gains,
)
from .params import (
    Bases,
    HvdcLineParams,
    MmcParams,
    OnshoreGridParams,
    OwppParams,
    SystemParams,
)
from .model import DerivedSignals, ModelContext, SimState
from .solver import Scenario, Trajectory, init_steady_state, integrate, scenario_preset

__version__ = "0.1.0"

__all__ = [
    "Bases", "OnshoreGridParams", "MmcParams", "HvdcLineParams", "OwppParams",
    "SystemParams", "PdGains", "PiGains", "ControllerGains", "ControllerState",
    "table_gains", "MODE_ENERGY_BALANCING", "MODE_HOLISTIC",
    "SimState", "DerivedSignals", "ModelContext",
    "Scenario", "Trajectory", "init_steady_state", "integrate", "scenario_preset",
    "__version__",
]
