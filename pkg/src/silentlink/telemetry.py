"""Domain types for sensor data and missions, synthetic fields, CSV ingest.

Coordinates are meters in a local tangent plane: x east, y north, z depth
(positive down). Headings are degrees in (-180, 180], measured from +x
toward +y.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path


class TelemetryError(Exception):
    pass


class LogParseError(TelemetryError):
    """Malformed CSV content; the message carries the 1-based line number."""


class ValidationError(TelemetryError):
    pass


class ChannelKind(str, Enum):
    ENVIRONMENTAL = "environmental"
    KINEMATIC = "kinematic"


@dataclass(frozen=True)
class SensorChannel:
    id: int
    kind: ChannelKind
    units: str
    sample_period: float
    name: str = ""

    def __post_init__(self):
        if self.id < 0 or self.id > 255:
            raise ValidationError(f"channel id must fit u8: {self.id}")
        if self.sample_period <= 0:
            raise ValidationError(f"sample_period must be > 0: {self.sample_period}")


@dataclass(frozen=True)
class TelemetrySample:
    t: float
    channel: int
    value: float

    def __post_init__(self):
        if self.t < 0:
            raise ValidationError(f"sample time must be >= 0: {self.t}")
        if not math.isfinite(self.value):
            raise ValidationError(f"sample value must be finite: {self.value}")


# The seven-channel IMU set: 16-bit readings at 4 Hz.
def default_kinematic_channels() -> list[SensorChannel]:
    names = ["accel_x", "accel_y", "accel_z", "gyro_x", "gyro_y", "gyro_z", "depth"]
    units = ["m/s2"] * 3 + ["deg/s"] * 3 + ["m"]
    return [
        SensorChannel(i, ChannelKind.KINEMATIC, u, 0.25, name=n)
        for i, (n, u) in enumerate(zip(names, units))
    ]


@dataclass(frozen=True)
class Mission:
    waypoints: tuple[tuple[float, float, float], ...]
    t_mission: float
    checkpoint_period: float
    speed: float

    def __post_init__(self):
        if self.t_mission <= 0:
            raise ValidationError(f"t_mission must be > 0: {self.t_mission}")
        if self.checkpoint_period <= 0:
            raise ValidationError(
                f"checkpoint_period must be > 0: {self.checkpoint_period}"
            )
        if not self.waypoints:
            raise ValidationError("mission needs at least one waypoint")
        if self.speed <= 0:
            raise ValidationError(f"speed must be > 0: {self.speed}")


@dataclass(frozen=True)
class Anomaly:
    x: float
    y: float
    radius: float
    amplitude: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValidationError(f"anomaly radius must be > 0: {self.radius}")


@dataclass(frozen=True)
class ScalarField:
    base: float
    anomalies: tuple[Anomaly, ...] = field(default_factory=tuple)


def sample_field(fld: ScalarField, x: float, y: float) -> float:
    """Field value at (x, y): base plus Gaussian bumps."""
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValidationError(f"position must be finite: ({x}, {y})")
    value = fld.base
    for a in fld.anomalies:
        d2 = (x - a.x) ** 2 + (y - a.y) ** 2
        value += a.amplitude * math.exp(-d2 / (a.radius * a.radius))
    return value


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    z: float
    heading_deg: float


@dataclass(frozen=True)
class MotionCommand:
    speed: float = 0.0
    turn_rate_dps: float = 0.0
    vertical_rate: float = 0.0


def wrap_heading(deg: float) -> float:
    h = math.fmod(deg, 360.0)
    if h > 180.0:
        h -= 360.0
    elif h <= -180.0:
        h += 360.0
    return h


def advance_kinematics(pose: Pose, cmd: MotionCommand, dt: float) -> Pose:
    """True (not estimated) pose after dt under a constant-rate motion command.

    Planar constant-speed constant-turn-rate model with an independent
    vertical rate; heading and depth change linearly across the step.
    """
    if dt <= 0:
        raise ValidationError(f"dt must be > 0: {dt}")
    h0 = math.radians(pose.heading_deg)
    omega = math.radians(cmd.turn_rate_dps)
    if abs(omega) < 1e-12:
        x = pose.x + cmd.speed * math.cos(h0) * dt
        y = pose.y + cmd.speed * math.sin(h0) * dt
        h1 = pose.heading_deg
    else:
        h1r = h0 + omega * dt
        x = pose.x + cmd.speed / omega * (math.sin(h1r) - math.sin(h0))
        y = pose.y - cmd.speed / omega * (math.cos(h1r) - math.cos(h0))
        h1 = wrap_heading(math.degrees(h1r))
    return Pose(x, y, pose.z + cmd.vertical_rate * dt, h1)


def ingest_log_csv(path: str | Path, schema: dict[str, int]) -> list[TelemetrySample]:
    """Load a sensor log: column `t` plus one column per schema entry.

    Empty cells are skipped; rows must come in nondecreasing time order.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise LogParseError(f"{path}: empty file, header required") from None
        header = [h.strip() for h in header]
        if not header or header[0] != "t":
            raise LogParseError(f"{path}: first column must be 't', got {header[:1]}")
        missing = [name for name in schema if name not in header]
        if missing:
            raise LogParseError(f"{path}: schema columns not in header: {missing}")
        col_channel = {header.index(name): cid for name, cid in schema.items()}

        samples: list[TelemetrySample] = []
        prev_t = None
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise LogParseError(
                    f"{path}: line {lineno}: expected {len(header)} cells, got {len(row)}"
                )
            try:
                t = float(row[0])
            except ValueError:
                raise LogParseError(
                    f"{path}: line {lineno}: bad time value {row[0]!r}"
                ) from None
            if prev_t is not None and t < prev_t:
                raise ValidationError(f"{path}: non-monotone t at line {lineno}")
            prev_t = t
            for col, cid in col_channel.items():
                cell = row[col].strip()
                if not cell:
                    continue
                try:
                    value = float(cell)
                except ValueError:
                    raise LogParseError(
                        f"{path}: line {lineno}: bad value {cell!r}"
                    ) from None
                samples.append(TelemetrySample(t, cid, value))
    return samples
