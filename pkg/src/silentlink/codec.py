"""Bit-exact 32-byte packet codecs for the acoustic link.

Two packet classes share the 32-byte footprint of the most robust modem
packet type. Direction tells them apart on the wire: control packets
travel shore-to-vehicle, data packets vehicle-to-shore, so no byte is
spent on a kind tag.

Control packet (downlink), big-endian throughout::

    [0]      command        (u8, Command enum)
    [1]      flags          (u8, reserved, must be 0)
    [2:6]    distance       (i32, centimeters)
    [6:10]   angle          (i32, millidegrees, in (-180000, 180000])
    [10:14]  vertical       (i32, centimeters)
    [14:16]  seq            (u16)
    [16:18]  ack_seq        (u16, highest contiguous uplink seq)
    [18:30]  reserved       (zeros)
    [30:32]  CRC-16/CCITT-FALSE over bytes 0..29

Data packet (uplink)::

    [0:2]    priority       (u16; 0 designates a check-point)
    [2:32]   30-byte payload (checkpoint layout iff priority == 0)

Checkpoint payload::

    seq (u16) | t (u32 deciseconds) | x, y, z (i32 centimeters)
    | heading (i16 centidegrees) | battery (u8 percent) | 9 pad bytes

Priority payload::

    seq (u16) | t (u32 deciseconds) | sensitivity (u8: 1 delay-sensitive)
    | count (u8 <= 3) | 3 record slots of
    {channel (u8), dt_offset (u16 deciseconds), value (i32, fixed-point
    x1000)} | 1 pad byte

Unused record slots and pad bytes must be zero; decoders reject anything
non-canonical so that encode(decode(b)) == b on the accepted domain.
Control packets are loss-sensitive and carry the CRC; data packets leave
all 30 bytes to payload and rely on the channel's loss model.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field

from . import _kernels

PACKET_SIZE = 32
DATA_PAYLOAD_SIZE = 30
MAX_PRIORITY_RECORDS = 3

_CONTROL_HEAD = struct.Struct(">BBiiiHH")
_CHECKPOINT = struct.Struct(">HIiiihB")
_PRIORITY_HEAD = struct.Struct(">HIBB")
_PRIORITY_RECORD = struct.Struct(">BHi")

_I32_MIN = -(2**31)
_I32_MAX = 2**31 - 1


class CodecError(Exception):
    """Base class for packet encode/decode failures."""


class FrameError(CodecError):
    """Input is not a whole 32-byte frame."""


class IntegrityError(CodecError):
    """CRC mismatch: the frame arrived corrupted."""


class ProtocolError(CodecError):
    """Frame is intact but violates the wire contract."""


class EncodeError(CodecError):
    """Field out of range or inconsistent packet."""


class Command(enum.IntEnum):
    CONTINUE = 0
    NEW_WAYPOINT = 1
    RETURN = 2
    RESUME_ORIGINAL = 3
    REPROGRAM = 4


def crc16_ccitt(data: bytes) -> int:
    """CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF)."""
    return _kernels.crc16(data)


def wrap_millidegrees(angle: int) -> int:
    """Wrap an angle in millidegrees into (-180000, 180000]."""
    a = angle % 360000
    if a > 180000:
        a -= 360000
    return a


@dataclass(frozen=True)
class ControlPacket:
    command: Command
    distance_cm: int = 0
    angle_mdeg: int = 0
    vertical_cm: int = 0
    seq: int = 0
    ack_seq: int = 0


@dataclass(frozen=True)
class CheckpointPayload:
    seq: int
    t_ds: int
    x_cm: int
    y_cm: int
    z_cm: int
    heading_cdeg: int
    battery_pct: int


@dataclass(frozen=True)
class PriorityRecord:
    channel: int
    dt_offset_ds: int
    value_milli: int


@dataclass(frozen=True)
class PriorityPayload:
    seq: int
    t_ds: int
    sensitivity: int
    records: tuple[PriorityRecord, ...] = field(default_factory=tuple)


@dataclass(frozen=True)
class DataPacket:
    priority: int
    payload: CheckpointPayload | PriorityPayload


def _check_u(value: int, bits: int, name: str) -> None:
    if not 0 <= value < (1 << bits):
        raise EncodeError(f"{name} out of range for u{bits}: {value}")


def _check_i32(value: int, name: str) -> None:
    # The spec'd field range is |v| < 2**31, so INT32_MIN itself is out.
    if not -_I32_MAX <= value <= _I32_MAX:
        raise EncodeError(f"{name} out of range for i32: {value}")


def encode_control(p: ControlPacket) -> bytes:
    if p.command not in Command.__members__.values():
        raise EncodeError(f"unknown command: {p.command!r}")
    _check_i32(p.distance_cm, "distance")
    _check_i32(p.vertical_cm, "vertical")
    if not -180000 < p.angle_mdeg <= 180000:
        raise EncodeError(f"angle outside (-180000, 180000]: {p.angle_mdeg}")
    _check_u(p.seq, 16, "seq")
    _check_u(p.ack_seq, 16, "ack_seq")
    head = _CONTROL_HEAD.pack(
        int(p.command), 0, p.distance_cm, p.angle_mdeg, p.vertical_cm, p.seq, p.ack_seq
    )
    body = head + bytes(30 - len(head))
    return body + struct.pack(">H", crc16_ccitt(body))


def decode_control(b: bytes) -> ControlPacket:
    if len(b) != PACKET_SIZE:
        raise FrameError(f"control frame must be {PACKET_SIZE} bytes, got {len(b)}")
    (crc,) = struct.unpack(">H", b[30:32])
    if crc != crc16_ccitt(b[:30]):
        raise IntegrityError("control packet CRC mismatch")
    cmd, flags, distance, angle, vertical, seq, ack_seq = _CONTROL_HEAD.unpack(b[:18])
    if cmd not in Command._value2member_map_:
        raise ProtocolError(f"unknown command byte: {cmd}")
    if flags != 0:
        raise ProtocolError(f"reserved flags byte set: {flags:#x}")
    if any(b[18:30]):
        raise ProtocolError("reserved bytes 18..29 not zero")
    if not -180000 < angle <= 180000:
        raise ProtocolError(f"angle outside (-180000, 180000]: {angle}")
    if distance == _I32_MIN or vertical == _I32_MIN:
        raise ProtocolError("i32 minimum is outside the field range")
    return ControlPacket(Command(cmd), distance, angle, vertical, seq, ack_seq)


def _encode_checkpoint(p: CheckpointPayload) -> bytes:
    _check_u(p.seq, 16, "seq")
    _check_u(p.t_ds, 32, "t")
    for v, name in ((p.x_cm, "x"), (p.y_cm, "y"), (p.z_cm, "z")):
        _check_i32(v, name)
    if not -(2**15) <= p.heading_cdeg < 2**15:
        raise EncodeError(f"heading out of range for i16: {p.heading_cdeg}")
    if not 0 <= p.battery_pct <= 100:
        raise EncodeError(f"battery must be 0..100: {p.battery_pct}")
    head = _CHECKPOINT.pack(
        p.seq, p.t_ds, p.x_cm, p.y_cm, p.z_cm, p.heading_cdeg, p.battery_pct
    )
    return head + bytes(DATA_PAYLOAD_SIZE - len(head))


def _encode_priority(p: PriorityPayload) -> bytes:
    _check_u(p.seq, 16, "seq")
    _check_u(p.t_ds, 32, "t")
    if p.sensitivity not in (0, 1):
        raise EncodeError(f"sensitivity must be 0 or 1: {p.sensitivity}")
    if len(p.records) > MAX_PRIORITY_RECORDS:
        raise EncodeError(f"at most {MAX_PRIORITY_RECORDS} records, got {len(p.records)}")
    out = _PRIORITY_HEAD.pack(p.seq, p.t_ds, p.sensitivity, len(p.records))
    for rec in p.records:
        _check_u(rec.channel, 8, "channel")
        _check_u(rec.dt_offset_ds, 16, "dt_offset")
        _check_i32(rec.value_milli, "value")
        out += _PRIORITY_RECORD.pack(rec.channel, rec.dt_offset_ds, rec.value_milli)
    out += bytes(_PRIORITY_RECORD.size) * (MAX_PRIORITY_RECORDS - len(p.records))
    return out + bytes(DATA_PAYLOAD_SIZE - len(out))


def encode_data(p: DataPacket) -> bytes:
    _check_u(p.priority, 16, "priority")
    if p.priority == 0:
        if not isinstance(p.payload, CheckpointPayload):
            raise EncodeError("priority 0 requires a checkpoint payload")
        body = _encode_checkpoint(p.payload)
    else:
        if not isinstance(p.payload, PriorityPayload):
            raise EncodeError("nonzero priority requires a priority payload")
        body = _encode_priority(p.payload)
    return struct.pack(">H", p.priority) + body


def _decode_checkpoint(b: bytes) -> CheckpointPayload:
    seq, t_ds, x, y, z, heading, battery = _CHECKPOINT.unpack(b[: _CHECKPOINT.size])
    if battery > 100:
        raise ProtocolError(f"battery above 100: {battery}")
    if any(b[_CHECKPOINT.size :]):
        raise ProtocolError("checkpoint pad bytes not zero")
    if _I32_MIN in (x, y, z):
        raise ProtocolError("i32 minimum is outside the field range")
    return CheckpointPayload(seq, t_ds, x, y, z, heading, battery)


def _decode_priority(b: bytes) -> PriorityPayload:
    seq, t_ds, sensitivity, count = _PRIORITY_HEAD.unpack(b[: _PRIORITY_HEAD.size])
    if sensitivity not in (0, 1):
        raise ProtocolError(f"sensitivity byte must be 0 or 1: {sensitivity}")
    if count > MAX_PRIORITY_RECORDS:
        raise ProtocolError(f"record count above {MAX_PRIORITY_RECORDS}: {count}")
    records = []
    offset = _PRIORITY_HEAD.size
    for i in range(MAX_PRIORITY_RECORDS):
        chunk = b[offset : offset + _PRIORITY_RECORD.size]
        if i < count:
            channel, dt_offset, value = _PRIORITY_RECORD.unpack(chunk)
            if value == _I32_MIN:
                raise ProtocolError("i32 minimum is outside the field range")
            records.append(PriorityRecord(channel, dt_offset, value))
        elif any(chunk):
            raise ProtocolError(f"unused record slot {i} not zero")
        offset += _PRIORITY_RECORD.size
    if any(b[offset:]):
        raise ProtocolError("priority pad byte not zero")
    return PriorityPayload(seq, t_ds, sensitivity, tuple(records))


def decode_data(b: bytes) -> DataPacket:
    if len(b) != PACKET_SIZE:
        raise FrameError(f"data frame must be {PACKET_SIZE} bytes, got {len(b)}")
    (priority,) = struct.unpack(">H", b[:2])
    body = b[2:]
    if priority == 0:
        return DataPacket(0, _decode_checkpoint(body))
    return DataPacket(priority, _decode_priority(body))


def to_milli(value: float) -> int:
    """Quantize a sensor value to the wire's x1000 fixed point."""
    milli = round(value * 1000.0)
    if not -_I32_MAX <= milli <= _I32_MAX:
        raise EncodeError(f"value does not fit x1000 fixed point: {value}")
    return int(milli)


def from_milli(raw: int) -> float:
    return raw / 1000.0
