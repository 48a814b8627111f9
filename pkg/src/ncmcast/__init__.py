"""Coded multicast over time-variant packet-erasure channels.

Building blocks: finite-field random linear coding, three-state
land-mobile channel traces, an analytic expected-completion-time engine,
virtual reference channels for multicast groups, a Monte Carlo simulator,
and a CLI that sweeps scenarios into result tables.
"""

from .channel import (
    ChannelTrace,
    ErasureTrace,
    LmsParams,
    StateParams,
    bit_error_prob,
    erasure_prob,
    generate_trace,
    low_height_building_default,
    to_erasure_trace,
)
from .completion import (
    AdaptivePolicy,
    CompletionModel,
    InfeasibleModelError,
    InfeasibleWindowError,
    ModelParams,
    NonAdaptivePolicy,
    anc_batch_size,
    batch_distribution,
    nc_batch_size,
    throughput,
)
from .gf import FieldSpec, GF2m
from .rlnc import CodedPacket, Generation, payload_symbols
from .scenario import Scenario, ScenarioError, load_scenario, save_scenario
from .simkit import SimConfig, SimSummary, run_multicast, run_single
from .virtualize import (
    MulticastGroup,
    MulticastPlan,
    VirtualChannel,
    build_maxct,
    build_maxpe,
    multicast_plan,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptivePolicy",
    "ChannelTrace",
    "CodedPacket",
    "CompletionModel",
    "ErasureTrace",
    "FieldSpec",
    "GF2m",
    "Generation",
    "InfeasibleModelError",
    "InfeasibleWindowError",
    "LmsParams",
    "ModelParams",
    "MulticastGroup",
    "MulticastPlan",
    "NonAdaptivePolicy",
    "Scenario",
    "ScenarioError",
    "SimConfig",
    "SimSummary",
    "StateParams",
    "VirtualChannel",
    "anc_batch_size",
    "batch_distribution",
    "bit_error_prob",
    "build_maxct",
    "build_maxpe",
    "erasure_prob",
    "generate_trace",
    "load_scenario",
    "low_height_building_default",
    "multicast_plan",
    "nc_batch_size",
    "payload_symbols",
    "run_multicast",
    "run_single",
    "save_scenario",
    "throughput",
    "to_erasure_trace",
]
