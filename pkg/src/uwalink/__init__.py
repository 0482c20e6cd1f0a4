"""Underwater acoustic link simulator with bilevel bandit link control."""

__version__ = "0.1.0"

from .bandit import (
    ACTIONS,
    CONTEXTS,
    Action,
    AoiClass,
    AoiClock,
    Context,
    ContextualUcb,
    IntervalUcb,
    Modulation,
    PowerLevel,
    SnrClass,
    quantize_aoi,
    quantize_snr,
)
from .channel import (
    ChannelParams,
    LinkState,
    PowerMap,
    ber,
    bitrate,
    evolve_shadowing,
    frame_success,
    mean_snr,
    noise_components,
    noise_psd,
    thorp_absorption,
    transmission_loss,
)
from .config import PolicySpec, Scenario, ScenarioError, parse_scenario
from .experiment import ExperimentResult, replication_metrics, run_experiment
from .oracle import OracleMap, genie_map, regret_series
from .policies import (
    BilevelController,
    FixedController,
    OracleController,
    RandomController,
)
from .sim import EpisodeResult, IntervalRecord, SlotRecord, run_episode
from .topology import Topology, ring_topology

__all__ = [
    "ACTIONS",
    "CONTEXTS",
    "Action",
    "AoiClass",
    "AoiClock",
    "BilevelController",
    "ChannelParams",
    "Context",
    "ContextualUcb",
    "EpisodeResult",
    "ExperimentResult",
    "FixedController",
    "IntervalRecord",
    "IntervalUcb",
    "LinkState",
    "Modulation",
    "OracleController",
    "OracleMap",
    "PolicySpec",
    "PowerLevel",
    "PowerMap",
    "RandomController",
    "Scenario",
    "ScenarioError",
    "SlotRecord",
    "SnrClass",
    "Topology",
    "ber",
    "bitrate",
    "evolve_shadowing",
    "frame_success",
    "genie_map",
    "mean_snr",
    "noise_components",
    "noise_psd",
    "parse_scenario",
    "quantize_aoi",
    "quantize_snr",
    "regret_series",
    "replication_metrics",
    "ring_topology",
    "run_episode",
    "run_experiment",
    "thorp_absorption",
    "transmission_loss",
]
