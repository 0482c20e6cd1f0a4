"""Genie benchmark: the best static action per SNR class, by Monte Carlo.

The genie knows the channel model. It samples the stationary shadowing
distribution on every link, buckets each draw by the SNR class a
transmitter would observe (normalized to the medium power level), and
scores every action by its analytic expected delivered bits for a full
duty-cycle burst under that draw. The per-class argmax is the policy an
omniscient controller would follow, and its expected normalized
throughput is the reference line that regret is measured against.

Sampling doubles until every observed class has enough pooled draws or a
hard cap is hit. Classes the channel never produces are filled from the
nearest observed class so lookups never fail; their sample count stays
zero so callers can tell estimated entries from filled ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .bandit import ACTIONS, Action, Modulation, PowerLevel, SnrClass
from .bandit import SNR_LOW_MAX_DB, SNR_MEDIUM_MAX_DB
from .channel import LinkState, bitrate, mean_snr
from .config import Scenario

_TARGET_SAMPLES = 100_000
_FIRST_ROUND = 1 << 15
_MAX_DRAWS_PER_LINK = 1 << 21
_MIN_CLASS_SAMPLES = 100
_GENIE_TAG = 999331


@dataclass(frozen=True)
class OracleMap:
    """Per-SNR-class genie policy and its expected normalized throughput."""

    best: dict[SnrClass, Action]
    expected_norm: dict[SnrClass, float]
    expected_bits: dict[SnrClass, float]
    samples: dict[SnrClass, int]
    means_bits: np.ndarray  # (3 classes, 9 actions) expected bits per slot
    config_hash: str

    def to_json_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "classes": {
                cls.name: {
                    "best_modulation": self.best[cls].modulation.name,
                    "best_power": self.best[cls].power.name,
                    "best_action_index": self.best[cls].index,
                    "expected_bits_per_slot": self.expected_bits[cls],
                    "expected_norm": self.expected_norm[cls],
                    "samples": self.samples[cls],
                }
                for cls in SnrClass
            },
        }


def _ber_array(snr_db: np.ndarray, modulation: Modulation,
               bandwidth_hz: float, rate_bps: float) -> np.ndarray:
    """Vectorized twin of channel.ber for Monte Carlo scoring."""
    snr_lin = np.power(10.0, snr_db / 10.0)
    ebn0 = snr_lin * bandwidth_hz / rate_bps
    if modulation is Modulation.BPSK:
        arg = np.sqrt(2.0 * ebn0)
        raw = 0.5 * erfc(arg / math.sqrt(2.0))
    else:
        k = modulation.bits_per_symbol
        m = modulation.points
        arg = np.sqrt(2.0 * k * ebn0) * math.sin(math.pi / m)
        raw = (2.0 / k) * 0.5 * erfc(arg / math.sqrt(2.0))
    return np.clip(raw, 0.0, 0.5)


def genie_map(
    scenario: Scenario,
    target_samples: int = _TARGET_SAMPLES,
    max_draws_per_link: int = _MAX_DRAWS_PER_LINK,
) -> OracleMap:
    """Estimate the best action per SNR class for ``scenario``."""
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=(scenario.seed, _GENIE_TAG))
    )
    links = scenario.topology.links()
    params = scenario.channel
    pmap = scenario.power_map
    sigma = params.shadowing_sigma_db

    base_snr = [
        mean_snr(LinkState(distance_m=d, shadow_db=0.0), PowerLevel.MEDIUM,
                 params, pmap)
        for _, _, d in links
    ]
    sl_delta = {
        p: pmap.source_level_db(p) - pmap.source_level_db(PowerLevel.MEDIUM)
        for p in PowerLevel
    }
    rates = {m: bitrate(m, params) for m in Modulation}
    frames_per_burst = {
        m: int(scenario.duty_s * rates[m] // scenario.frame_bits)
        for m in Modulation
    }

    sums = np.zeros((3, 9), dtype=np.float64)
    counts = np.zeros(3, dtype=np.int64)
    drawn = 0
    n_round = _FIRST_ROUND
    while True:
        for base in base_snr:
            snr_med = base + sigma * rng.standard_normal(n_round)
            classes = np.digitize(snr_med, (SNR_LOW_MAX_DB, SNR_MEDIUM_MAX_DB))
            np.add.at(counts, classes, 1)
            for action in ACTIONS:
                snr_a = snr_med + sl_delta[action.power]
                if scenario.force_ber_zero:
                    p_frame = np.ones_like(snr_a)
                else:
                    b = _ber_array(snr_a, action.modulation,
                                   params.bandwidth_hz, rates[action.modulation])
                    p_frame = np.power(1.0 - b, scenario.frame_bits)
                bits = frames_per_burst[action.modulation] * scenario.frame_bits * p_frame
                np.add.at(sums[:, action.index], classes, bits)
        drawn += n_round
        observed = counts > 0
        if drawn >= max_draws_per_link:
            break
        if observed.any() and counts[observed].min() >= target_samples:
            break
        n_round = min(2 * n_round, max_draws_per_link - drawn)

    means = np.zeros((3, 9), dtype=np.float64)
    estimated = counts >= _MIN_CLASS_SAMPLES
    for c in range(3):
        if estimated[c]:
            means[c] = sums[c] / counts[c]

    best: dict[SnrClass, Action] = {}
    expected_bits: dict[SnrClass, float] = {}
    if not estimated.any():
        raise RuntimeError("genie sampling produced no usable SNR class")
    for c in range(3):
        if not estimated[c]:
            # Fill unreachable classes from the nearest estimated one so
            # policy lookups never fail; samples[c] stays at the raw count.
            source = min(
                (abs(j - c), j) for j in range(3) if estimated[j]
            )[1]
            means[c] = means[source]
        idx = int(np.argmax(means[c]))
        best[SnrClass(c)] = ACTIONS[idx]
        expected_bits[SnrClass(c)] = float(means[c][idx])

    max_bits = float(scenario.max_slot_bits)
    return OracleMap(
        best=best,
        expected_norm={c: expected_bits[c] / max_bits for c in best},
        expected_bits=expected_bits,
        samples={SnrClass(c): int(counts[c]) for c in range(3)},
        means_bits=means,
        config_hash=scenario.config_hash(),
    )


def regret_series(slot_records, oracle: OracleMap, scenario: Scenario) -> np.ndarray:
    """Cumulative regret over slots, summed across links.

    Each recorded transmission contributes the gap between the genie's
    expected normalized throughput for the SNR class the transmitter
    acted on and what the transmission actually delivered. Slots a node
    sat out contribute nothing.
    """
    if oracle.config_hash != scenario.config_hash():
        raise ValueError(
            "oracle map was built for a different configuration "
            f"({oracle.config_hash} != {scenario.config_hash()})"
        )
    per_slot = np.zeros(scenario.n_slots, dtype=np.float64)
    max_bits = float(scenario.max_slot_bits)
    for rec in slot_records:
        gap = oracle.expected_norm[SnrClass(rec.snr_class)] - rec.delivered_bits / max_bits
        per_slot[rec.slot] += gap
    return np.cumsum(per_slot)
