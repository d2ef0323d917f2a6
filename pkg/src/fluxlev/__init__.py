"""Flux-pumped superconducting levitation simulator.

Library entry points: build a calibrated ``SystemModel`` once, assemble a
``RunPlan`` (directly or through the scenario catalog) and integrate it with
``run_plan``.  The command line (``fluxlev``) wraps the same path.
"""

from .circuit import CircuitParams, CircuitState, PumpConfig, PumpDrive
from .config import SCHEMA, ConfigError, resolve
from .controller import ControllerConfig, SetpointProgram, UnreachableSetpoint
from .magnetics import CoilGeometry, CouplingTable, FilamentLoop, MagnetModel
from .mechanics import BodyParams, MotionState, SupportTrajectory
from .scenarios import SCENARIO_IDS, make_plan, scenario_defaults, summarize
from .sim import RunPlan, RunRecord, SimConfig, SystemModel, run_plan

__version__ = "0.1.0"

__all__ = [
    "BodyParams", "CircuitParams", "CircuitState", "CoilGeometry",
    "ConfigError", "ControllerConfig", "CouplingTable", "FilamentLoop",
    "MagnetModel", "MotionState", "PumpConfig", "PumpDrive", "RunPlan",
    "RunRecord", "SCENARIO_IDS", "SCHEMA", "SetpointProgram", "SimConfig",
    "SupportTrajectory", "SystemModel", "UnreachableSetpoint",
    "make_plan", "resolve", "run_plan", "scenario_defaults", "summarize",
]
