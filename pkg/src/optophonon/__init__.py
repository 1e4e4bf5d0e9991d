"""Pulse-schedule synthesis and fidelity analysis for phonon Fock
superpositions in a photon-blockade optomechanical cavity."""

from .couplings import SystemParams, TableOneRow, rabi_frequency, sideband_rabi, table1_presets
from .dynamics import NoiseParams, ProtocolResult, run_protocol, uhlmann_fidelity
from .errors import (
    ConfigError,
    ConvergenceError,
    InfeasibleTargetError,
    IntegrationError,
    OptophononError,
    ShapeError,
    SynthesisError,
    ValidationError,
    VanishingRabiError,
)
from .fockspace import SpaceShape
from .leakage import LeakageFactors, leakage_factors, protocol_fidelity_numeric
from .propagators import PulseSchedule, PulseSegment, apply_schedule
from .synthesis import TargetState, forward_synthesize, reverse_synthesize, synthesize, verify_schedule

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "InfeasibleTargetError",
    "IntegrationError",
    "LeakageFactors",
    "NoiseParams",
    "OptophononError",
    "ProtocolResult",
    "PulseSchedule",
    "PulseSegment",
    "ShapeError",
    "SpaceShape",
    "SynthesisError",
    "SystemParams",
    "TableOneRow",
    "TargetState",
    "ValidationError",
    "VanishingRabiError",
    "apply_schedule",
    "forward_synthesize",
    "leakage_factors",
    "protocol_fidelity_numeric",
    "rabi_frequency",
    "reverse_synthesize",
    "run_protocol",
    "sideband_rabi",
    "synthesize",
    "table1_presets",
    "uhlmann_fidelity",
    "verify_schedule",
]
