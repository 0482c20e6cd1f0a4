"""Shallow-water acoustic channel model.

Implements Thorp absorption, practical spreading loss, the classic
four-component ambient noise model (turbulence, shipping, wind, thermal),
first-order autoregressive log-normal shadowing, and coherent M-PSK bit
error rates.  All levels are in dB re 1 uPa conventions; distances are in
meters and frequencies in kHz unless a name says otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .bandit import Modulation, PowerLevel

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class ChannelParams:
    """Environment and receiver parameters for one deployment.

    :param frequency_khz: carrier frequency (kHz)
    :param bandwidth_hz: signaling bandwidth, also the symbol rate (Hz)
    :param wind_speed_kmh: surface wind speed (km/h)
    :param shipping_factor: shipping activity factor in [0, 1]
    :param spreading_exponent: spreading loss exponent in [1, 2]
    :param sound_speed_mps: nominal sound speed (m/s)
    :param shadowing_sigma_db: stationary shadowing std dev (dB)
    :param shadowing_corr: per-slot AR(1) shadowing correlation in [0, 1)
    :param snr_offset_db: receiver calibration offset folded into the SNR
        budget (absorbs directivity and implementation losses)
    """

    frequency_khz: float = 10.5
    bandwidth_hz: float = 4200.0
    wind_speed_kmh: float = 50.0
    shipping_factor: float = 0.5
    spreading_exponent: float = 1.75
    sound_speed_mps: float = 1500.0
    shadowing_sigma_db: float = 2.0
    shadowing_corr: float = 0.9
    snr_offset_db: float = -18.0

    def __post_init__(self) -> None:
        if self.frequency_khz <= 0:
            raise ValueError(f"frequency must be positive: {self.frequency_khz}")
        if self.bandwidth_hz <= 0:
            raise ValueError(f"bandwidth must be positive: {self.bandwidth_hz}")
        if not 0.0 <= self.shipping_factor <= 1.0:
            raise ValueError(f"shipping factor must lie in [0, 1]: {self.shipping_factor}")
        if not 1.0 <= self.spreading_exponent <= 2.0:
            raise ValueError(
                f"spreading exponent must lie in [1, 2]: {self.spreading_exponent}"
            )
        if self.wind_speed_kmh < 0:
            raise ValueError(f"wind speed must be nonnegative: {self.wind_speed_kmh}")
        if self.sound_speed_mps <= 0:
            raise ValueError(f"sound speed must be positive: {self.sound_speed_mps}")
        if self.shadowing_sigma_db < 0:
            raise ValueError(f"shadowing sigma must be nonnegative: {self.shadowing_sigma_db}")
        if not 0.0 <= self.shadowing_corr < 1.0:
            raise ValueError(f"shadowing correlation must lie in [0, 1): {self.shadowing_corr}")


@dataclass(frozen=True)
class PowerMap:
    """Transmit power levels and their source-level conversion.

    Source level follows ``ref_db + 10 log10(P_watts)``.  The three levels
    must be strictly increasing in wattage; everything else about them is
    configuration.
    """

    low_w: float = 1.0
    medium_w: float = 3.0
    high_w: float = 8.0
    source_level_ref_db: float = 170.8

    def __post_init__(self) -> None:
        if not 0 < self.low_w < self.medium_w < self.high_w:
            raise ValueError(
                "power levels must be positive and strictly increasing: "
                f"{self.low_w}, {self.medium_w}, {self.high_w}"
            )

    def watts(self, level: PowerLevel) -> float:
        return (self.low_w, self.medium_w, self.high_w)[level.value]

    def source_level_db(self, level: PowerLevel) -> float:
        return self.source_level_ref_db + 10.0 * math.log10(self.watts(level))


@dataclass(frozen=True)
class LinkState:
    """One directed acoustic link: its length and current shadowing state."""

    distance_m: float
    shadow_db: float = 0.0

    def __post_init__(self) -> None:
        if self.distance_m <= 0:
            raise ValueError(f"link distance must be positive: {self.distance_m}")


def thorp_absorption(frequency_khz: float) -> float:
    """Absorption coefficient in dB/km by Thorp's formula.

    :param frequency_khz: frequency (kHz), must be positive
    """
    if frequency_khz <= 0:
        raise ValueError(f"frequency must be positive: {frequency_khz}")
    f2 = frequency_khz * frequency_khz
    return (
        0.11 * f2 / (1.0 + f2)
        + 44.0 * f2 / (4100.0 + f2)
        + 2.75e-4 * f2
        + 0.003
    )


def transmission_loss(distance_m: float, params: ChannelParams) -> float:
    """Path loss in dB: practical spreading plus Thorp absorption.

    :param distance_m: path length (m), must be positive
    """
    if distance_m <= 0:
        raise ValueError(f"distance must be positive: {distance_m}")
    spreading = params.spreading_exponent * 10.0 * math.log10(distance_m)
    absorption = (distance_m / 1000.0) * thorp_absorption(params.frequency_khz)
    return spreading + absorption


def noise_components(params: ChannelParams) -> dict[str, float]:
    """Ambient noise PSD components in dB re 1 uPa^2/Hz at the carrier.

    Returns the turbulence, shipping, wind and thermal terms separately.
    Wind speed enters in m/s, converted from the configured km/h.
    """
    f = params.frequency_khz
    z = params.shipping_factor
    w_mps = params.wind_speed_kmh / 3.6
    logf = math.log10(f)
    turbulence = 17.0 - 30.0 * logf
    shipping = 40.0 + 20.0 * (z - 0.5) + 26.0 * logf - 60.0 * math.log10(f + 0.03)
    wind = 50.0 + 7.5 * math.sqrt(w_mps) + 20.0 * logf - 40.0 * math.log10(f + 0.4)
    thermal = -15.0 + 20.0 * logf
    return {
        "turbulence": turbulence,
        "shipping": shipping,
        "wind": wind,
        "thermal": thermal,
    }


def noise_psd(params: ChannelParams) -> float:
    """Total ambient noise PSD in dB re 1 uPa^2/Hz, power-summed."""
    total = sum(10.0 ** (level / 10.0) for level in noise_components(params).values())
    return 10.0 * math.log10(total)


def mean_snr(
    link: LinkState,
    power: PowerLevel,
    params: ChannelParams,
    power_map: PowerMap,
) -> float:
    """Slot-mean received SNR in dB over the signaling bandwidth.

    Source level minus path loss minus in-band noise, plus the current
    shadowing state and the receiver calibration offset.
    """
    noise_in_band = noise_psd(params) + 10.0 * math.log10(params.bandwidth_hz)
    return (
        power_map.source_level_db(power)
        - transmission_loss(link.distance_m, params)
        - noise_in_band
        + link.shadow_db
        + params.snr_offset_db
    )


def evolve_shadowing(link: LinkState, draw: float, params: ChannelParams) -> LinkState:
    """Advance the AR(1) shadowing state by one slot.

    :param draw: a standard normal innovation
    """
    rho = params.shadowing_corr
    sigma = params.shadowing_sigma_db
    shadow = rho * link.shadow_db + sigma * math.sqrt(1.0 - rho * rho) * draw
    return replace(link, shadow_db=shadow)


def bitrate(modulation: Modulation, params: ChannelParams) -> float:
    """Raw bit rate in bit/s: one symbol per hertz of bandwidth."""
    return params.bandwidth_hz * modulation.bits_per_symbol


def _q_function(x: float) -> float:
    return 0.5 * math.erfc(x / _SQRT2)


def ber(
    snr_db: float,
    modulation: Modulation,
    params: ChannelParams,
    bitrate_bps: float,
) -> float:
    """Coherent M-PSK bit error rate at the given SNR and bit rate.

    Eb/N0 is derived from the in-band SNR via the bandwidth-to-bitrate
    ratio.  BPSK uses the exact expression, larger constellations the
    standard nearest-neighbour approximation.  The result is clamped to
    [0, 0.5].
    """
    if bitrate_bps <= 0:
        raise ValueError(f"bitrate must be positive: {bitrate_bps}")
    ebn0 = 10.0 ** (snr_db / 10.0) * params.bandwidth_hz / bitrate_bps
    if modulation is Modulation.BPSK:
        raw = _q_function(math.sqrt(2.0 * ebn0))
    else:
        k = modulation.bits_per_symbol
        m = modulation.points
        raw = (2.0 / k) * _q_function(
            math.sqrt(2.0 * k * ebn0) * math.sin(math.pi / m)
        )
    return min(max(raw, 0.0), 0.5)


def frame_success(ber_value: float, frame_bits: int) -> float:
    """Probability that a frame of independent bits arrives error-free."""
    if not 0.0 <= ber_value <= 1.0:
        raise ValueError(f"bit error rate must lie in [0, 1]: {ber_value}")
    if frame_bits <= 0:
        raise ValueError(f"frame size must be positive: {frame_bits}")
    return (1.0 - ber_value) ** frame_bits
