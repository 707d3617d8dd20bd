"""Packet-level datacenter fabric simulator with the SMaRTT congestion controller."""

from .cc import AckInfo, CcParams, SmarttCc
from .experiment import (
    ConfigError,
    Experiment,
    RunConfig,
    RunReport,
    config_from_dict,
    load_config,
    run_experiment,
)
from .lb import make_pool
from .net import HEADER_SIZE, Packet, PacketKind, RedConfig, SwitchPort
from .sim import EventKind, Simulator
from .topology import FatTree, FatTreeConfig, TopologyError, build
from .workloads import FlowSpec, WorkloadSpec

__version__ = "0.1.0"

__all__ = [
    "AckInfo", "CcParams", "SmarttCc", "ConfigError", "Experiment", "RunConfig",
    "RunReport", "config_from_dict", "load_config", "run_experiment", "make_pool",
    "HEADER_SIZE", "Packet", "PacketKind", "RedConfig", "SwitchPort", "EventKind",
    "Simulator", "FatTree", "FatTreeConfig", "TopologyError", "build", "FlowSpec",
    "WorkloadSpec",
]
