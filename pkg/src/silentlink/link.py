"""Half-duplex acoustic channel model: modem timing, delay, and loss.

The modem transmits in cycles: a frame burst plus a fixed per-cycle
processing overhead. Packet type 0 (32-byte frame, lowest rate) is the
most robust at low SINR, so protocol payloads are capped at 32 bytes and
loss curves must keep type 0 at or below every other type at any SINR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class LinkError(Exception):
    pass


class CapacityError(LinkError):
    """Payload exceeds the packet type's frame capacity."""


class LinkBusyError(LinkError):
    """A transmission is already in flight in this direction."""


@dataclass(frozen=True)
class PacketTypeSpec:
    type_id: int
    frame_bytes: int
    max_frames: int
    rate_bps: float
    cycle_overhead_s: float = 1.0

    def __post_init__(self):
        if self.type_id not in (0, 2, 3, 5):
            raise LinkError(f"unknown modem packet type: {self.type_id}")
        if self.rate_bps <= 0:
            raise LinkError(f"rate must be > 0: {self.rate_bps}")
        if self.frame_bytes < 32:
            raise LinkError(f"frame must be >= 32 bytes: {self.frame_bytes}")


# Frame geometry: type 0 fixed at one 32-byte frame; type 3's frame is 4x
# type 2's while its rate is only ~2.4x; type 5 has the highest throughput,
# type 0 the lowest. The bps numbers are defaults consistent with those
# ratios, not measured constants.
DEFAULT_PACKET_TYPES: dict[int, PacketTypeSpec] = {
    0: PacketTypeSpec(0, 32, 1, 80.0),
    2: PacketTypeSpec(2, 64, 3, 500.0),
    3: PacketTypeSpec(3, 256, 2, 1223.0),
    5: PacketTypeSpec(5, 256, 8, 5388.0),
}


@dataclass(frozen=True)
class LossCurve:
    midpoint_db: float
    steepness: float
    floor: float = 0.0

    def __post_init__(self):
        if not 0 <= self.floor < 1:
            raise LinkError(f"loss floor must be in [0, 1): {self.floor}")


# Same slope and floor, midpoints ordered so robustness follows type order
# at every SINR.
DEFAULT_LOSS_CURVES: dict[int, LossCurve] = {
    0: LossCurve(-2.0, 1.0),
    2: LossCurve(2.0, 1.0),
    3: LossCurve(4.0, 1.0),
    5: LossCurve(8.0, 1.0),
}

_VALIDATION_SINR_SWEEP = np.arange(-40.0, 40.5, 0.5)


@dataclass(frozen=True)
class ChannelConfig:
    distance_m: float = 1500.0
    sound_speed: float = 1500.0
    sinr_db: float = 10.0
    loss_curves: dict[int, LossCurve] = field(
        default_factory=lambda: dict(DEFAULT_LOSS_CURVES)
    )
    seed: int = 0

    def __post_init__(self):
        if self.distance_m < 0:
            raise LinkError(f"distance must be >= 0: {self.distance_m}")
        if self.sound_speed <= 0:
            raise LinkError(f"sound speed must be > 0: {self.sound_speed}")
        if 0 not in self.loss_curves:
            raise LinkError("loss curves must cover packet type 0")
        for sinr in _VALIDATION_SINR_SWEEP:
            p0 = _logistic_loss(self.loss_curves[0], sinr)
            for tid, curve in self.loss_curves.items():
                if tid != 0 and _logistic_loss(curve, sinr) < p0 - 1e-12:
                    raise LinkError(
                        f"type {tid} would beat type 0 at {sinr} dB SINR; "
                        "type 0 must stay the most robust"
                    )


def _logistic_loss(curve: LossCurve, sinr_db: float) -> float:
    return curve.floor + (1.0 - curve.floor) / (
        1.0 + math.exp(curve.steepness * (sinr_db - curve.midpoint_db))
    )


def tx_time(spec: PacketTypeSpec, payload_bytes: int) -> float:
    """Seconds to push a payload through one modem cycle (min one frame)."""
    if payload_bytes > spec.frame_bytes * spec.max_frames:
        raise CapacityError(
            f"{payload_bytes} bytes exceeds type {spec.type_id} capacity "
            f"({spec.frame_bytes}x{spec.max_frames})"
        )
    frames = max(1, math.ceil(payload_bytes / spec.frame_bytes))
    return frames * spec.frame_bytes * 8 / spec.rate_bps + spec.cycle_overhead_s


def propagation_delay(cfg: ChannelConfig) -> float:
    return cfg.distance_m / cfg.sound_speed


def loss_probability(cfg: ChannelConfig, spec: PacketTypeSpec) -> float:
    return _logistic_loss(cfg.loss_curves[spec.type_id], cfg.sinr_db)


@dataclass(frozen=True)
class DeliveryEvent:
    frame: bytes
    sent_at: float
    deliver_at: float
    lost: bool


class LinkDirection:
    """One direction of the half-duplex link: FIFO, seeded Bernoulli loss."""

    def __init__(self, cfg: ChannelConfig, spec: PacketTypeSpec, rng: np.random.Generator):
        self.cfg = cfg
        self.spec = spec
        self.rng = rng
        self.busy_until = 0.0
        self.in_flight: list[DeliveryEvent] = []
        self.sent = 0
        self.lost = 0

    def idle(self, now: float) -> bool:
        return now >= self.busy_until

    def transmit(self, frame: bytes, now: float) -> DeliveryEvent:
        if not self.idle(now):
            raise LinkBusyError(
                f"link busy until {self.busy_until:.3f}, cannot send at {now:.3f}"
            )
        t_tx = tx_time(self.spec, len(frame))
        deliver_at = now + t_tx + propagation_delay(self.cfg)
        lost = bool(self.rng.random() < loss_probability(self.cfg, self.spec))
        self.busy_until = now + t_tx
        event = DeliveryEvent(bytes(frame), now, deliver_at, lost)
        self.in_flight.append(event)
        self.sent += 1
        if lost:
            self.lost += 1
        return event

    def pop_due(self, now: float) -> list[DeliveryEvent]:
        due = [e for e in self.in_flight if e.deliver_at <= now]
        if due:
            self.in_flight = [e for e in self.in_flight if e.deliver_at > now]
        return due


class AcousticLink:
    """Uplink (vehicle to shore) and downlink (shore to vehicle) directions."""

    def __init__(self, cfg: ChannelConfig, spec: PacketTypeSpec):
        self.cfg = cfg
        self.spec = spec
        up_seed, down_seed = np.random.SeedSequence(cfg.seed).spawn(2)
        self.up = LinkDirection(cfg, spec, np.random.default_rng(up_seed))
        self.down = LinkDirection(cfg, spec, np.random.default_rng(down_seed))


def nmea_checksum(body: str) -> int:
    """XOR of the characters between `$` and `*`."""
    csum = 0
    for ch in body:
        csum ^= ord(ch)
    return csum


def nmea_frame(src: int, dst: int, type_id: int, payload: bytes) -> str:
    """Text framing for piping raw frames through external tooling."""
    body = f"TX,{src},{dst},{type_id},{payload.hex().upper()}"
    return f"${body}*{nmea_checksum(body):02X}"


def nmea_parse(sentence: str) -> tuple[int, int, int, bytes]:
    sentence = sentence.strip()
    if not sentence.startswith("$") or "*" not in sentence:
        raise LinkError(f"not an NMEA sentence: {sentence!r}")
    body, _, csum_text = sentence[1:].rpartition("*")
    try:
        csum = int(csum_text, 16)
    except ValueError:
        raise LinkError(f"bad NMEA checksum field: {csum_text!r}") from None
    if nmea_checksum(body) != csum:
        raise LinkError("NMEA checksum mismatch")
    parts = body.split(",")
    if len(parts) != 5 or parts[0] != "TX":
        raise LinkError(f"unexpected NMEA body: {body!r}")
    return int(parts[1]), int(parts[2]), int(parts[3]), bytes.fromhex(parts[4])
