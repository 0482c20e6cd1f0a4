"""Discrete-event simulation of a slotted underwater acoustic network.

Time advances on a global event heap ordered by (time, sequence).  Each
slot is one simulated minute: shadowing evolves once per link, every
transmitter with pending data sends one back-to-back frame burst inside
the duty window at a random start offset (a slotted-ALOHA flavor, no
carrier sensing), and links whose feedback interval has elapsed run a
request/reply exchange on the control channel.  Receivers apply a hard
collision model: a frame overlapping any other reception at the same
node, or arriving while that node transmits, is lost outright; survivors
face the bit-error channel.  Sources are saturated, so every burst fills
the duty window at the selected modulation's rate.

All randomness flows through per-entity generators derived from the
scenario seed and replication index, which makes a run byte-for-byte
reproducible and keeps replications statistically independent.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .bandit import (
    Action,
    AoiClock,
    Context,
    Modulation,
    PowerLevel,
    SnrClass,
    quantize_aoi,
    quantize_snr,
)
from .channel import (
    LinkState,
    ber,
    bitrate,
    evolve_shadowing,
    frame_success,
    mean_snr,
)
from .config import Scenario
from .policies import (
    BilevelController,
    FixedController,
    OracleController,
    RandomController,
)

_SLOT = 0
_BURST = 1
_CONTROL = 2
_RESOLVE = 3


@dataclass
class IntervalRecord:
    """One feedback interval on one link, as written to intervals.csv."""

    replication: int
    link_src: str
    link_dst: str
    k: int
    t_start_s: float
    q_k_min: int
    r_k_bits: int
    r_k_norm: float
    energy_data_j: float
    energy_fb_j: float
    aoi_mean_slots: float
    aoi_peak_slots: int
    frames_sent: int
    frames_delivered: int
    lost_ber: int
    lost_collision: int
    lost_halfduplex: int
    action_counts: tuple[int, ...]


@dataclass
class SlotRecord:
    """One transmission decision, for learning-curve and regret analysis."""

    slot: int
    link_src: str
    link_dst: str
    snr_class: int
    action_index: int
    delivered_bits: int


@dataclass
class EpisodeResult:
    replication: int
    intervals: list[IntervalRecord]
    slots: list[SlotRecord]
    node_energy_j: dict[str, float]
    deferred_slots: dict[str, int]


@dataclass
class _Tally:
    energy_data_j: float = 0.0
    energy_fb_j: float = 0.0
    aoi_sum: int = 0
    aoi_n: int = 0
    frames_sent: int = 0
    frames_delivered: int = 0
    lost_ber: int = 0
    lost_collision: int = 0
    lost_halfduplex: int = 0
    action_counts: list[int] = field(default_factory=lambda: [0] * 9)


class _Burst:
    __slots__ = (
        "burst_id", "link", "kind", "src", "dst", "tx_start", "tx_end",
        "rx_start", "rx_end", "n_frames", "frame_s", "power", "modulation",
        "bits_per_frame", "slot", "context", "action", "payload",
    )

    def __init__(self, **kw):
        for name in self.__slots__:
            setattr(self, name, kw.get(name))


class _Node:
    def __init__(self, node_id: str, is_sink: bool, rng: np.random.Generator):
        self.id = node_id
        self.is_sink = is_sink
        self.rng = rng
        self.busy_until = 0.0
        self.tx_windows: list[tuple[float, float]] = []
        self.rx_windows: list[_Burst] = []
        self.energy_j = 0.0
        self.fwd_queue_bits = 0
        self.deferred_slots = 0
        self.uplink: _Link | None = None


class _Link:
    def __init__(
        self,
        src: _Node,
        dst: _Node,
        distance_m: float,
        scenario: Scenario,
        controller,
        shadow_rng: np.random.Generator,
        loss_rng: np.random.Generator,
    ):
        self.src = src
        self.dst = dst
        self.state = LinkState(distance_m=distance_m, shadow_db=0.0)
        self.prop_s = distance_m / scenario.channel.sound_speed_mps
        self.controller = controller
        self.shadow_rng = shadow_rng
        self.loss_rng = loss_rng
        self.clock = AoiClock()
        # The transmitter starts from a deployment-time ranging estimate:
        # the unshadowed mean SNR at the reference (medium) power.
        self.snr_estimate_db = mean_snr(
            self.state, PowerLevel.MEDIUM, scenario.channel, scenario.power_map
        )
        self.last_snr_norm: float | None = None
        self.q_current_min = controller.initial_interval()
        self.in_flight_slot: int | None = None
        self.delivered_bits_total = 0
        self.acked_bits = 0
        self.k = 0
        self.interval_start_s = 0.0
        self.tally = _Tally()


class Engine:
    """One episode of the network simulation."""

    def __init__(self, scenario: Scenario, replication: int = 0, collect_slots: bool = True,
                 oracle_actions: dict[SnrClass, Action] | None = None):
        self.sc = scenario
        self.replication = replication
        self.collect_slots = collect_slots
        self._heap: list = []
        self._seq = 0
        self._burst_seq = 0
        self.records: list[IntervalRecord] = []
        self.slot_records: list[SlotRecord] = []

        topo = scenario.topology
        node_ids = sorted(topo.positions)
        self.nodes: dict[str, _Node] = {}
        for idx, node_id in enumerate(node_ids):
            rng = _stream(scenario.seed, replication, "mac", idx)
            self.nodes[node_id] = _Node(node_id, node_id == topo.sink, rng)

        self.links: list[_Link] = []
        for idx, (child, parent, distance) in enumerate(topo.links()):
            controller = _make_controller(scenario, idx, replication, oracle_actions)
            link = _Link(
                src=self.nodes[child],
                dst=self.nodes[parent],
                distance_m=distance,
                scenario=scenario,
                controller=controller,
                shadow_rng=_stream(scenario.seed, replication, "shadow", idx),
                loss_rng=_stream(scenario.seed, replication, "loss", idx),
            )
            self.nodes[child].uplink = link
            self.links.append(link)

        self._bpsk_frame_s = scenario.frame_bits / bitrate(Modulation.BPSK, scenario.channel)
        self._rates = {m: bitrate(m, scenario.channel) for m in Modulation}
        self._sl_delta = {
            p: scenario.power_map.source_level_db(p)
            - scenario.power_map.source_level_db(PowerLevel.MEDIUM)
            for p in PowerLevel
        }

    # -- event plumbing ------------------------------------------------

    def _push(self, time_s: float, kind: int, data) -> None:
        heapq.heappush(self._heap, (time_s, self._seq, kind, data))
        self._seq += 1

    def run(self) -> EpisodeResult:
        for slot in range(self.sc.n_slots):
            self._push(slot * self.sc.slot_s, _SLOT, slot)
        while self._heap:
            time_s, _, kind, data = heapq.heappop(self._heap)
            if kind == _SLOT:
                self._on_slot(time_s, data)
            elif kind == _BURST:
                self._on_burst(time_s, data)
            elif kind == _CONTROL:
                self._on_control(time_s, data)
            else:
                self._on_resolve(time_s, data)
        self._final_flush()
        self.slot_records.sort(key=lambda r: (r.slot, r.link_src))
        return EpisodeResult(
            replication=self.replication,
            intervals=self.records,
            slots=self.slot_records,
            node_energy_j={n.id: n.energy_j for n in self.nodes.values()},
            deferred_slots={n.id: n.deferred_slots for n in self.nodes.values()},
        )

    # -- slot boundary --------------------------------------------------

    def _on_slot(self, t: float, slot: int) -> None:
        sc = self.sc
        horizon = t - sc.slot_s - 10.0
        for node in self.nodes.values():
            if node.tx_windows:
                node.tx_windows = [w for w in node.tx_windows if w[1] >= horizon]
            if node.rx_windows:
                node.rx_windows = [b for b in node.rx_windows if b.rx_end >= horizon]

        initiating: set[str] = set()
        for link in self.links:
            link.state = evolve_shadowing(
                link.state, link.shadow_rng.standard_normal(), sc.channel
            )
            link.clock.advance(slot)
            if link.in_flight_slot is None and link.clock.age() >= link.q_current_min:
                link.in_flight_slot = slot
                initiating.add(link.src.id)
                jitter = link.src.rng.random() * sc.request_jitter_s
                self._push(t + jitter, _CONTROL, ("request", link, None))

        guard = sc.guard_s
        reserve = sc.exchange_reserve_s
        for node_id in sorted(self.nodes):
            node = self.nodes[node_id]
            if node.is_sink:
                continue
            if node.busy_until > t:
                node.deferred_slots += 1
                continue
            if node_id in initiating:
                offset = reserve + node.rng.random() * (guard - reserve)
            else:
                offset = node.rng.random() * guard
            self._push(t + offset, _BURST, (node, slot))

    # -- data bursts ----------------------------------------------------

    def _on_burst(self, t: float, data) -> None:
        node, slot = data
        sc = self.sc
        link = node.uplink
        slot_end = (slot + 1) * sc.slot_s
        start = max(t, node.busy_until)
        if slot_end - start < self._bpsk_frame_s:
            node.deferred_slots += 1
            return

        context = Context(
            quantize_snr(link.snr_estimate_db), quantize_aoi(link.clock.age())
        )
        action = link.controller.select_action(context, slot)
        rate = self._rates[action.modulation]
        frame_s = sc.frame_bits / rate
        n_duty = int(sc.duty_s * rate // sc.frame_bits)
        n_fit = int((slot_end - start) / frame_s)
        n = min(n_duty, n_fit)
        end = start + n * frame_s

        energy = sc.power_map.watts(action.power) * n * frame_s
        node.energy_j += energy
        link.tally.energy_data_j += energy
        link.tally.frames_sent += n
        link.tally.aoi_sum += link.clock.age()
        link.tally.aoi_n += 1
        link.tally.action_counts[action.index] += 1

        consumed = min(node.fwd_queue_bits, n * sc.frame_bits)
        node.fwd_queue_bits -= consumed

        node.busy_until = end
        node.tx_windows.append((start, end))
        self._register(
            kind="data", link=link, src=node, dst=link.dst,
            tx_start=start, tx_end=end, n_frames=n, frame_s=frame_s,
            power=action.power, modulation=action.modulation,
            bits_per_frame=sc.frame_bits, slot=slot, context=context,
            action=action, payload=None,
        )

    # -- control frames ---------------------------------------------------

    def _on_control(self, t: float, data) -> None:
        kind, link, payload = data
        sc = self.sc
        if kind == "request":
            src, dst, bits = link.src, link.dst, sc.request_bits
        else:
            src, dst, bits = link.dst, link.src, sc.feedback_bits
        air = bits / sc.control_bps
        start = max(t, src.busy_until)
        end = start + air
        energy = sc.power_map.watts(PowerLevel.MEDIUM) * air
        src.energy_j += energy
        link.tally.energy_fb_j += energy
        src.busy_until = end
        src.tx_windows.append((start, end))
        self._register(
            kind=kind, link=link, src=src, dst=dst,
            tx_start=start, tx_end=end, n_frames=1, frame_s=air,
            power=PowerLevel.MEDIUM, modulation=Modulation.BPSK,
            bits_per_frame=bits, slot=link.clock.current_slot,
            context=None, action=None, payload=payload,
        )

    def _register(self, **kw) -> None:
        link = kw["link"]
        burst = _Burst(
            burst_id=self._burst_seq,
            rx_start=kw["tx_start"] + link.prop_s,
            rx_end=kw["tx_end"] + link.prop_s,
            **kw,
        )
        self._burst_seq += 1
        kw["dst"].rx_windows.append(burst)
        self._push(burst.rx_end, _RESOLVE, burst)

    # -- reception ---------------------------------------------------------

    def _on_resolve(self, t: float, burst: _Burst) -> None:
        sc = self.sc
        link: _Link = burst.link
        receiver: _Node = burst.dst
        n = burst.n_frames
        starts = burst.rx_start + np.arange(n) * burst.frame_s
        ends = starts + burst.frame_s

        lost_hd = np.zeros(n, dtype=bool)
        for w_start, w_end in receiver.tx_windows:
            if w_start < burst.rx_end and burst.rx_start < w_end:
                lost_hd |= (starts < w_end) & (w_start < ends)
        lost_coll = np.zeros(n, dtype=bool)
        for other in receiver.rx_windows:
            if other.burst_id == burst.burst_id:
                continue
            if other.rx_start < burst.rx_end and burst.rx_start < other.rx_end:
                lost_coll |= (starts < other.rx_end) & (other.rx_start < ends)
        lost_coll &= ~lost_hd
        clear = ~(lost_hd | lost_coll)
        n_clear = int(clear.sum())

        if burst.kind == "data":
            rate = self._rates[burst.modulation]
            snr_db = mean_snr(link.state, burst.power, sc.channel, sc.power_map)
            p_ok = 1.0 if sc.force_ber_zero else frame_success(
                ber(snr_db, burst.modulation, sc.channel, rate), sc.frame_bits
            )
        else:
            snr_db = mean_snr(link.state, burst.power, sc.channel, sc.power_map)
            p_ok = 1.0 if sc.force_ber_zero else frame_success(
                ber(snr_db, Modulation.BPSK, sc.channel, sc.control_bps),
                burst.bits_per_frame,
            )

        if n_clear == 0:
            delivered = 0
        elif p_ok >= 1.0:
            delivered = n_clear
        else:
            delivered = int((link.loss_rng.random(n_clear) < p_ok).sum())

        if burst.kind == "data":
            tally = link.tally
            tally.frames_delivered += delivered
            tally.lost_ber += n_clear - delivered
            tally.lost_collision += int(lost_coll.sum())
            tally.lost_halfduplex += int(lost_hd.sum())
            bits = delivered * sc.frame_bits
            link.delivered_bits_total += bits
            if bits and not receiver.is_sink:
                receiver.fwd_queue_bits += bits
            if delivered:
                link.last_snr_norm = snr_db - self._sl_delta[burst.power]
            if self.collect_slots:
                self.slot_records.append(
                    SlotRecord(
                        slot=burst.slot,
                        link_src=link.src.id,
                        link_dst=link.dst.id,
                        snr_class=int(burst.context.snr),
                        action_index=burst.action.index,
                        delivered_bits=bits,
                    )
                )
        elif burst.kind == "request":
            if delivered:
                payload = {
                    "cum_bits": link.delivered_bits_total,
                    "snr_norm": link.last_snr_norm,
                }
                self._push(t, _CONTROL, ("reply", link, payload))
            else:
                link.in_flight_slot = None
        else:  # reply
            if delivered:
                self._complete_interval(link, burst.payload, t)
            else:
                link.in_flight_slot = None

    # -- feedback bookkeeping ---------------------------------------------

    def _complete_interval(self, link: _Link, payload: dict, t: float) -> None:
        sc = self.sc
        elapsed = max(link.clock.age(), 1)
        r_bits = payload["cum_bits"] - link.acked_bits
        link.acked_bits = payload["cum_bits"]
        r_norm = min(1.0, r_bits / (elapsed * sc.max_slot_bits))
        if payload["snr_norm"] is not None:
            link.snr_estimate_db = payload["snr_norm"]
        q_next = link.controller.complete_interval(r_norm, link.q_current_min)
        self._emit(link, r_bits, r_norm, aoi_peak=link.clock.age(), t_end=t)
        link.q_current_min = q_next
        link.clock.reset()
        link.in_flight_slot = None

    def _emit(self, link: _Link, r_bits: int, r_norm: float, aoi_peak: int, t_end: float) -> None:
        tally = link.tally
        self.records.append(
            IntervalRecord(
                replication=self.replication,
                link_src=link.src.id,
                link_dst=link.dst.id,
                k=link.k,
                t_start_s=link.interval_start_s,
                q_k_min=link.q_current_min,
                r_k_bits=r_bits,
                r_k_norm=r_norm,
                energy_data_j=tally.energy_data_j,
                energy_fb_j=tally.energy_fb_j,
                aoi_mean_slots=tally.aoi_sum / tally.aoi_n if tally.aoi_n else 0.0,
                aoi_peak_slots=aoi_peak,
                frames_sent=tally.frames_sent,
                frames_delivered=tally.frames_delivered,
                lost_ber=tally.lost_ber,
                lost_collision=tally.lost_collision,
                lost_halfduplex=tally.lost_halfduplex,
                action_counts=tuple(tally.action_counts),
            )
        )
        link.k += 1
        link.interval_start_s = t_end
        link.tally = _Tally()

    def _final_flush(self) -> None:
        """Close the partial tail interval on every link so episode sums
        (bits, energy, frame counts) match the per-interval records."""
        end_t = self.sc.n_slots * self.sc.slot_s
        for link in self.links:
            r_bits = link.delivered_bits_total - link.acked_bits
            elapsed = max(link.clock.age(), 1)
            r_norm = min(1.0, r_bits / (elapsed * self.sc.max_slot_bits))
            self._emit(link, r_bits, r_norm, aoi_peak=link.clock.age(), t_end=end_t)


def _stream(seed: int, replication: int, tag: str, index: int) -> np.random.Generator:
    tag_code = {"mac": 1, "shadow": 2, "loss": 3, "policy": 4}[tag]
    return np.random.default_rng(
        np.random.SeedSequence(entropy=(seed, replication, tag_code, index))
    )


def _make_controller(
    scenario: Scenario,
    link_index: int,
    replication: int,
    oracle_actions: dict[SnrClass, Action] | None,
):
    spec = scenario.policy
    if spec.kind == "bilevel":
        return BilevelController(
            intervals_min=scenario.intervals_min,
            theta=scenario.theta,
            feedback_cost=scenario.resolved_feedback_cost(),
            exploration_c=scenario.exploration_c,
            fixed_interval_min=spec.interval_min,
        )
    if spec.kind == "fixed":
        return FixedController(
            Action(spec.modulation, spec.power), spec.interval_min
        )
    if spec.kind == "random":
        return RandomController(
            _stream(scenario.seed, replication, "policy", link_index),
            spec.interval_min,
        )
    if spec.kind == "oracle":
        if oracle_actions is None:
            raise ValueError("oracle policy needs a precomputed action map")
        return OracleController(oracle_actions, spec.interval_min)
    raise ValueError(f"unknown policy kind: {spec.kind!r}")


def run_episode(
    scenario: Scenario,
    replication: int = 0,
    collect_slots: bool = True,
    oracle_actions: dict[SnrClass, Action] | None = None,
) -> EpisodeResult:
    """Simulate one replication of ``scenario`` and return its records."""
    return Engine(
        scenario,
        replication=replication,
        collect_slots=collect_slots,
        oracle_actions=oracle_actions,
    ).run()
