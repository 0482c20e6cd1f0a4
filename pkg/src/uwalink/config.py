"""Scenario files: parsing, validation, defaulting and hashing.

A scenario is a YAML (or JSON) mapping.  Every key has a documented
default except the network size, which must be stated explicitly either
as ``nodes`` (transmitter count on the built-in two-ring layout) or as a
full ``topology`` block.  Unknown keys anywhere are hard errors so typos
cannot silently fall back to defaults.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .bandit import Modulation, PowerLevel
from .channel import ChannelParams, PowerMap, bitrate
from .topology import Topology, ring_topology


class ScenarioError(ValueError):
    """A scenario document failed to parse or validate."""


_MODULATION_NAMES = {
    "bpsk": Modulation.BPSK,
    "8psk": Modulation.PSK8,
    "psk8": Modulation.PSK8,
    "16psk": Modulation.PSK16,
    "psk16": Modulation.PSK16,
}
_POWER_NAMES = {
    "low": PowerLevel.LOW,
    "medium": PowerLevel.MEDIUM,
    "high": PowerLevel.HIGH,
}

POLICY_KINDS = ("bilevel", "fixed", "random", "oracle")


@dataclass(frozen=True)
class PolicySpec:
    """Which controller drives each link.

    ``interval_min`` pins the feedback interval for the non-learning
    policies; for ``bilevel`` it optionally replaces the outer bandit with
    a fixed schedule while keeping the learning inner bandit.
    """

    kind: str = "bilevel"
    modulation: Modulation = Modulation.BPSK
    power: PowerLevel = PowerLevel.MEDIUM
    interval_min: int | None = None

    def describe(self) -> str:
        if self.kind == "fixed":
            return (
                f"fixed({self.modulation.name.lower()},"
                f"{self.power.name.lower()},{self.interval_min})"
            )
        if self.kind == "bilevel" and self.interval_min is not None:
            return f"bilevel(interval={self.interval_min})"
        if self.kind in ("random", "oracle"):
            return f"{self.kind}(interval={self.interval_min})"
        return self.kind


@dataclass(frozen=True)
class Scenario:
    """A fully validated simulation scenario."""

    name: str
    topology: Topology
    channel: ChannelParams
    power_map: PowerMap
    policy: PolicySpec
    duration_s: float = 6000.0
    slot_s: float = 60.0
    duty_s: float = 50.0
    frame_bits: int = 1000
    packet_bytes: int = 125_000
    control_bps: float = 4800.0
    request_bits: int = 128
    feedback_bits: int = 256
    intervals_min: tuple[int, ...] = (4, 7, 10)
    theta: float = 0.7
    exploration_c: float = 2.0
    feedback_cost: float | None = None
    seed: int = 0
    replications: int = 1
    force_ber_zero: bool = False
    exchange_reserve_s: float = 2.0
    request_jitter_s: float = 1.0
    raw: dict = field(default_factory=dict, compare=False)

    @property
    def guard_s(self) -> float:
        return self.slot_s - self.duty_s

    @property
    def n_slots(self) -> int:
        return int(self.duration_s // self.slot_s)

    @property
    def max_slot_bits(self) -> int:
        """Theoretical per-slot ceiling: densest modulation, full duty."""
        top_rate = bitrate(Modulation.PSK16, self.channel)
        return int(self.duty_s * top_rate // self.frame_bits) * self.frame_bits

    @property
    def exchange_energy_j(self) -> float:
        air_s = (self.request_bits + self.feedback_bits) / self.control_bps
        return self.power_map.watts(PowerLevel.MEDIUM) * air_s

    def resolved_feedback_cost(self) -> float:
        """Normalized feedback cost in [0, 1].

        Default: one exchange's energy over the worst-case per-interval
        feedback energy (one retry per slot across the longest menu
        interval).
        """
        if self.feedback_cost is not None:
            return self.feedback_cost
        worst_case = self.exchange_energy_j * max(self.intervals_min)
        return self.exchange_energy_j / worst_case

    def resolved_dict(self) -> dict:
        """Canonical plain-data form of the scenario, used for hashing."""
        return {
            "name": self.name,
            "topology": {
                "positions": {k: list(v) for k, v in sorted(self.topology.positions.items())},
                "parents": dict(sorted(self.topology.parents.items())),
                "sink": self.topology.sink,
                "max_link_m": self.topology.max_link_m,
            },
            "channel": {
                "frequency_khz": self.channel.frequency_khz,
                "bandwidth_hz": self.channel.bandwidth_hz,
                "wind_speed_kmh": self.channel.wind_speed_kmh,
                "shipping_factor": self.channel.shipping_factor,
                "spreading_exponent": self.channel.spreading_exponent,
                "sound_speed_mps": self.channel.sound_speed_mps,
                "shadowing_sigma_db": self.channel.shadowing_sigma_db,
                "shadowing_corr": self.channel.shadowing_corr,
                "snr_offset_db": self.channel.snr_offset_db,
            },
            "power_map": {
                "low_w": self.power_map.low_w,
                "medium_w": self.power_map.medium_w,
                "high_w": self.power_map.high_w,
                "source_level_ref_db": self.power_map.source_level_ref_db,
            },
            "policy": {
                "kind": self.policy.kind,
                "modulation": self.policy.modulation.name,
                "power": self.policy.power.name,
                "interval_min": self.policy.interval_min,
            },
            "duration_s": self.duration_s,
            "slot_s": self.slot_s,
            "duty_s": self.duty_s,
            "frame_bits": self.frame_bits,
            "packet_bytes": self.packet_bytes,
            "control_bps": self.control_bps,
            "request_bits": self.request_bits,
            "feedback_bits": self.feedback_bits,
            "intervals_min": list(self.intervals_min),
            "theta": self.theta,
            "exploration_c": self.exploration_c,
            "feedback_cost": self.resolved_feedback_cost(),
            "force_ber_zero": self.force_ber_zero,
            "exchange_reserve_s": self.exchange_reserve_s,
            "request_jitter_s": self.request_jitter_s,
        }

    def config_hash(self) -> str:
        """Short digest identifying the scenario independent of seed and
        replication count, so outputs from different configs never mix."""
        blob = json.dumps(self.resolved_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def with_overrides(self, seed: int | None = None, replications: int | None = None) -> "Scenario":
        from dataclasses import replace

        out = self
        if seed is not None:
            out = replace(out, seed=int(seed))
        if replications is not None:
            if replications < 1:
                raise ScenarioError(f"replications must be >= 1, got {replications}")
            out = replace(out, replications=int(replications))
        return out


def _require_keys(mapping: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ScenarioError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def _number(mapping: dict, key: str, default: float, where: str) -> float:
    value = mapping.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}.{key} must be a number, got {value!r}")
    return float(value)


def _integer(mapping: dict, key: str, default: int, where: str) -> int:
    value = mapping.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{where}.{key} must be an integer, got {value!r}")
    return value


def _parse_modulation(value, where: str) -> Modulation:
    if isinstance(value, str) and value.lower() in _MODULATION_NAMES:
        return _MODULATION_NAMES[value.lower()]
    raise ScenarioError(
        f"{where} must be one of bpsk/8psk/16psk, got {value!r}"
    )


def _parse_power(value, where: str) -> PowerLevel:
    if isinstance(value, str) and value.lower() in _POWER_NAMES:
        return _POWER_NAMES[value.lower()]
    raise ScenarioError(f"{where} must be one of low/medium/high, got {value!r}")


def _parse_policy(value, intervals_min: tuple[int, ...]) -> PolicySpec:
    if value is None:
        value = "bilevel"
    if isinstance(value, str):
        value = {"kind": value}
    if not isinstance(value, dict):
        raise ScenarioError(f"policy must be a name or a mapping, got {value!r}")
    _require_keys(value, {"kind", "modulation", "power", "interval_min"}, "policy")
    kind = value.get("kind", "bilevel")
    if kind not in POLICY_KINDS:
        raise ScenarioError(f"policy.kind must be one of {POLICY_KINDS}, got {kind!r}")
    interval = value.get("interval_min")
    if interval is not None:
        if isinstance(interval, bool) or not isinstance(interval, int) or interval < 1:
            raise ScenarioError(
                f"policy.interval_min must be a positive integer, got {interval!r}"
            )
    if kind == "fixed":
        if "modulation" not in value or "power" not in value:
            raise ScenarioError("fixed policy needs explicit modulation and power")
        if interval is None:
            raise ScenarioError("fixed policy needs explicit interval_min")
        return PolicySpec(
            kind="fixed",
            modulation=_parse_modulation(value["modulation"], "policy.modulation"),
            power=_parse_power(value["power"], "policy.power"),
            interval_min=interval,
        )
    if "modulation" in value or "power" in value:
        raise ScenarioError(f"policy.modulation/power only apply to fixed, not {kind}")
    if kind in ("random", "oracle") and interval is None:
        interval = min(intervals_min)
    return PolicySpec(kind=kind, interval_min=interval)


def _parse_topology(value, max_link_m: float) -> Topology:
    if not isinstance(value, dict):
        raise ScenarioError(f"topology must be a mapping, got {value!r}")
    _require_keys(value, {"positions", "parents", "sink"}, "topology")
    for key in ("positions", "parents", "sink"):
        if key not in value:
            raise ScenarioError(f"topology.{key} is required")
    positions_raw = value["positions"]
    parents = value["parents"]
    if not isinstance(positions_raw, dict) or not isinstance(parents, dict):
        raise ScenarioError("topology.positions and topology.parents must be mappings")
    positions: dict[str, tuple[float, float, float]] = {}
    for node, pos in positions_raw.items():
        if (
            not isinstance(pos, (list, tuple))
            or len(pos) != 3
            or any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in pos)
        ):
            raise ScenarioError(f"position of {node!r} must be [x, y, z] in meters")
        positions[str(node)] = (float(pos[0]), float(pos[1]), float(pos[2]))
    try:
        return Topology(
            positions=positions,
            parents={str(c): str(p) for c, p in parents.items()},
            sink=str(value["sink"]),
            max_link_m=max_link_m,
        )
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc


_TOP_LEVEL_KEYS = {
    "name", "nodes", "topology", "policy", "duration_s", "slot_s", "duty_s",
    "frame_bits", "packet_bytes", "control_bps", "request_bits", "feedback_bits",
    "intervals_min", "theta", "exploration_c", "feedback_cost", "seed",
    "replications", "force_ber_zero", "exchange_reserve_s", "request_jitter_s",
    "max_link_m", "ring_inner_radius_m", "ring_outer_gap_m", "channel", "power_map",
}

_CHANNEL_KEYS = {
    "frequency_khz", "bandwidth_hz", "wind_speed_kmh", "shipping_factor",
    "spreading_exponent", "sound_speed_mps", "shadowing_sigma_db",
    "shadowing_corr", "snr_offset_db",
}

_POWER_KEYS = {"low_w", "medium_w", "high_w", "source_level_ref_db"}


def parse_scenario(source: str | Path | dict, name: str | None = None) -> Scenario:
    """Build a validated :class:`Scenario` from a file path or a mapping."""
    if isinstance(source, (str, Path)):
        path = Path(source)
        if name is None:
            name = path.stem
        try:
            text = path.read_text()
        except OSError as exc:
            raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
        try:
            doc = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ScenarioError(f"scenario file {path} is not valid YAML: {exc}") from exc
    else:
        doc = source
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ScenarioError(f"scenario document must be a mapping, got {type(doc).__name__}")

    _require_keys(doc, _TOP_LEVEL_KEYS, "scenario")
    where = "scenario"

    channel_doc = doc.get("channel", {}) or {}
    if not isinstance(channel_doc, dict):
        raise ScenarioError("channel must be a mapping")
    _require_keys(channel_doc, _CHANNEL_KEYS, "channel")
    defaults = ChannelParams()
    try:
        channel = ChannelParams(
            frequency_khz=_number(channel_doc, "frequency_khz", defaults.frequency_khz, "channel"),
            bandwidth_hz=_number(channel_doc, "bandwidth_hz", defaults.bandwidth_hz, "channel"),
            wind_speed_kmh=_number(channel_doc, "wind_speed_kmh", defaults.wind_speed_kmh, "channel"),
            shipping_factor=_number(channel_doc, "shipping_factor", defaults.shipping_factor, "channel"),
            spreading_exponent=_number(
                channel_doc, "spreading_exponent", defaults.spreading_exponent, "channel"
            ),
            sound_speed_mps=_number(channel_doc, "sound_speed_mps", defaults.sound_speed_mps, "channel"),
            shadowing_sigma_db=_number(
                channel_doc, "shadowing_sigma_db", defaults.shadowing_sigma_db, "channel"
            ),
            shadowing_corr=_number(channel_doc, "shadowing_corr", defaults.shadowing_corr, "channel"),
            snr_offset_db=_number(channel_doc, "snr_offset_db", defaults.snr_offset_db, "channel"),
        )
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc

    power_doc = doc.get("power_map", {}) or {}
    if not isinstance(power_doc, dict):
        raise ScenarioError("power_map must be a mapping")
    _require_keys(power_doc, _POWER_KEYS, "power_map")
    pm_defaults = PowerMap()
    try:
        power_map = PowerMap(
            low_w=_number(power_doc, "low_w", pm_defaults.low_w, "power_map"),
            medium_w=_number(power_doc, "medium_w", pm_defaults.medium_w, "power_map"),
            high_w=_number(power_doc, "high_w", pm_defaults.high_w, "power_map"),
            source_level_ref_db=_number(
                power_doc, "source_level_ref_db", pm_defaults.source_level_ref_db, "power_map"
            ),
        )
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc

    max_link_m = _number(doc, "max_link_m", 357.0, where)
    nodes = doc.get("nodes")
    topology_doc = doc.get("topology")
    if (nodes is None) == (topology_doc is None):
        raise ScenarioError("state the network size: give exactly one of nodes or topology")
    if topology_doc is not None:
        topology = _parse_topology(topology_doc, max_link_m)
    else:
        if isinstance(nodes, bool) or not isinstance(nodes, int) or nodes < 1:
            raise ScenarioError(f"nodes must be a positive integer, got {nodes!r}")
        try:
            topology = ring_topology(
                nodes,
                inner_radius_m=_number(doc, "ring_inner_radius_m", 300.0, where),
                outer_gap_m=_number(doc, "ring_outer_gap_m", 330.0, where),
                max_link_m=max_link_m,
            )
        except ValueError as exc:
            raise ScenarioError(str(exc)) from exc

    intervals_raw = doc.get("intervals_min", [4, 7, 10])
    if (
        not isinstance(intervals_raw, (list, tuple))
        or not intervals_raw
        or any(isinstance(q, bool) or not isinstance(q, int) or q < 1 for q in intervals_raw)
    ):
        raise ScenarioError(
            f"intervals_min must be a nonempty list of positive whole minutes, got {intervals_raw!r}"
        )
    if len(set(intervals_raw)) != len(intervals_raw):
        raise ScenarioError(f"intervals_min has duplicates: {intervals_raw!r}")
    intervals_min = tuple(sorted(int(q) for q in intervals_raw))

    policy = _parse_policy(doc.get("policy"), intervals_min)

    duration_s = _number(doc, "duration_s", 6000.0, where)
    slot_s = _number(doc, "slot_s", 60.0, where)
    duty_s = _number(doc, "duty_s", 50.0, where)
    frame_bits = _integer(doc, "frame_bits", 1000, where)
    packet_bytes = _integer(doc, "packet_bytes", 125_000, where)
    control_bps = _number(doc, "control_bps", 4800.0, where)
    request_bits = _integer(doc, "request_bits", 128, where)
    feedback_bits = _integer(doc, "feedback_bits", 256, where)
    theta = _number(doc, "theta", 0.7, where)
    exploration_c = _number(doc, "exploration_c", 2.0, where)
    feedback_cost = doc.get("feedback_cost")
    if feedback_cost is not None:
        if isinstance(feedback_cost, bool) or not isinstance(feedback_cost, (int, float)):
            raise ScenarioError(f"feedback_cost must be a number, got {feedback_cost!r}")
        feedback_cost = float(feedback_cost)
        if not 0.0 <= feedback_cost <= 1.0:
            raise ScenarioError(f"feedback_cost must lie in [0, 1], got {feedback_cost}")
    seed = _integer(doc, "seed", 0, where)
    replications = _integer(doc, "replications", 1, where)
    force_ber_zero = doc.get("force_ber_zero", False)
    if not isinstance(force_ber_zero, bool):
        raise ScenarioError(f"force_ber_zero must be a boolean, got {force_ber_zero!r}")
    exchange_reserve_s = _number(doc, "exchange_reserve_s", 2.0, where)
    request_jitter_s = _number(doc, "request_jitter_s", 1.0, where)

    if duration_s <= 0:
        raise ScenarioError(f"duration_s must be positive, got {duration_s}")
    if slot_s <= 0:
        raise ScenarioError(f"slot_s must be positive, got {slot_s}")
    if not 0 < duty_s < slot_s:
        raise ScenarioError(
            f"duty_s must lie strictly between 0 and slot_s={slot_s}, got {duty_s}"
        )
    if duration_s < slot_s:
        raise ScenarioError(f"duration_s={duration_s} is shorter than one slot ({slot_s} s)")
    if frame_bits <= 0:
        raise ScenarioError(f"frame_bits must be positive, got {frame_bits}")
    if packet_bytes <= 0:
        raise ScenarioError(f"packet_bytes must be positive, got {packet_bytes}")
    if control_bps <= 0:
        raise ScenarioError(f"control_bps must be positive, got {control_bps}")
    if request_bits <= 0 or feedback_bits <= 0:
        raise ScenarioError("request_bits and feedback_bits must be positive")
    if not 0.0 <= theta <= 1.0:
        raise ScenarioError(f"theta must lie in [0, 1], got {theta}")
    if exploration_c <= 0:
        raise ScenarioError(f"exploration_c must be positive, got {exploration_c}")
    if seed < 0:
        raise ScenarioError(f"seed must be nonnegative, got {seed}")
    if replications < 1:
        raise ScenarioError(f"replications must be >= 1, got {replications}")
    if not 0.0 <= exchange_reserve_s < slot_s - duty_s:
        raise ScenarioError(
            f"exchange_reserve_s must lie in [0, guard={slot_s - duty_s}), got {exchange_reserve_s}"
        )
    if not 0.0 <= request_jitter_s <= exchange_reserve_s:
        raise ScenarioError(
            f"request_jitter_s must lie in [0, exchange_reserve_s={exchange_reserve_s}], "
            f"got {request_jitter_s}"
        )

    slowest = bitrate(Modulation.BPSK, channel)
    frame_air_s = frame_bits / slowest
    if frame_air_s > duty_s:
        raise ScenarioError(
            f"a {frame_bits}-bit frame takes {frame_air_s:.2f} s at the slowest "
            f"modulation, which does not fit the {duty_s:.2f} s duty window"
        )

    if policy.interval_min is not None and policy.interval_min * slot_s > duration_s:
        raise ScenarioError(
            f"policy interval {policy.interval_min} min exceeds the episode duration"
        )

    scenario_name = doc.get("name", name or "scenario")
    if not isinstance(scenario_name, str) or not scenario_name:
        raise ScenarioError(f"name must be a nonempty string, got {scenario_name!r}")

    return Scenario(
        name=scenario_name,
        topology=topology,
        channel=channel,
        power_map=power_map,
        policy=policy,
        duration_s=duration_s,
        slot_s=slot_s,
        duty_s=duty_s,
        frame_bits=frame_bits,
        packet_bytes=packet_bytes,
        control_bps=control_bps,
        request_bits=request_bits,
        feedback_bits=feedback_bits,
        intervals_min=intervals_min,
        theta=theta,
        exploration_c=exploration_c,
        feedback_cost=feedback_cost,
        seed=seed,
        replications=replications,
        force_ber_zero=force_ber_zero,
        exchange_reserve_s=exchange_reserve_s,
        request_jitter_s=request_jitter_s,
        raw=doc,
    )
