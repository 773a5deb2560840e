"""Vehicle side of the semi-autonomous protocol.

The agent stays silent while its predictors match the sensors, emits a
check-point on a fixed cadence, and raises a priority packet when either
selector flags a sample. Delay-sensitive events make it deviate locally
toward the source before any command can arrive; delay-insensitive ones
keep it on the planned path awaiting the center's decision.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .codec import (
    CheckpointPayload,
    CodecError,
    Command,
    ControlPacket,
    DataPacket,
    PriorityPayload,
    PriorityRecord,
    decode_control,
    encode_data,
    to_milli,
)
from .compression import ChannelPredictorBank, EnvCompressorConfig, StreamingEnvSelector
from .telemetry import Mission, MotionCommand, Pose, SensorChannel, wrap_heading


class VehiclePhase(str, Enum):
    AWAIT_START = "AWAIT_START"
    ON_MISSION = "ON_MISSION"
    SELF_DETERMINED = "SELF_DETERMINED"
    AWAIT_COMMAND_ON_PATH = "AWAIT_COMMAND_ON_PATH"
    RETURNING = "RETURNING"
    DONE = "DONE"


@dataclass(frozen=True)
class EventRecord:
    t: float
    channel: int
    sensitive: bool
    samples: tuple[tuple[float, float], ...]  # (t, value) pairs, oldest first


@dataclass(frozen=True)
class VehicleConfig:
    refractory_s: float = 5.0
    local_step_m: float = 10.0
    sensitive_factor: float = 2.0  # sensitive iff |dev| > factor * sqrt(T_h)
    max_turn_rate_dps: float = 30.0
    vertical_rate_ms: float = 0.25
    arrival_tolerance_m: float = 1.0
    battery_drain_pct_s: float = 0.01
    tau_floor: float = 0.0


def _bearing_deg(dx: float, dy: float) -> float:
    return math.degrees(math.atan2(dy, dx))


class VehicleAgent:
    """Single-owner state machine; every input arrives as an ordered event."""

    def __init__(
        self,
        mission: Mission,
        bank: ChannelPredictorBank,
        env_channels: list[SensorChannel],
        env_cfgs: dict[int, EnvCompressorConfig],
        cfg: VehicleConfig = VehicleConfig(),
        trace=None,
    ):
        self.mission = mission
        self.bank = bank
        self.cfg = cfg
        self.trace = trace or (lambda record: None)
        self.env_channels = list(env_channels)
        self.env_cfgs = dict(env_cfgs)
        self.env_selectors = {
            ch.id: StreamingEnvSelector(self.env_cfgs[ch.id]) for ch in env_channels
        }
        self.env_last_sample: dict[int, tuple[float, float]] = {}
        self.taus = bank.default_taus(cfg.tau_floor)

        start = mission.waypoints[0]
        heading = 0.0
        if len(mission.waypoints) > 1:
            nxt = mission.waypoints[1]
            heading = _bearing_deg(nxt[0] - start[0], nxt[1] - start[1])
        self.pose = Pose(start[0], start[1], start[2], heading)
        self.start_point = start

        self.phase = VehiclePhase.AWAIT_START
        self.mission_start_t: float | None = None
        self.last_checkpoint_t: float | None = None
        self.next_waypoint_idx = 1 if len(mission.waypoints) > 1 else None
        self.amended_target: tuple[float, float, float] | None = None
        self.self_target: tuple[float, float, float] | None = None

        self.uplink_seq = 1  # 0 is reserved so ack_seq=0 can mean "none yet"
        self.unacked: OrderedDict[int, tuple[float, DataPacket]] = OrderedDict()
        self.last_control_seq = -1
        self.dropped_commands = 0
        self.refractory_until: dict[int, float] = {}
        self._kin_primed = False

    # -- helpers ----------------------------------------------------------

    def _set_phase(self, phase: VehiclePhase, now: float, why: str) -> None:
        if phase is self.phase:
            return
        self.trace(
            {
                "t": now,
                "src": "vehicle",
                "kind": "phase",
                "from": self.phase.value,
                "phase": phase.value,
                "event": why,
            }
        )
        self.phase = phase

    def _next_seq(self) -> int:
        seq = self.uplink_seq
        self.uplink_seq = (self.uplink_seq + 1) & 0xFFFF
        if self.uplink_seq == 0:
            self.uplink_seq = 1
        return seq

    def battery_pct(self, now: float) -> int:
        elapsed = 0.0 if self.mission_start_t is None else now - self.mission_start_t
        return max(0, min(100, round(100 - self.cfg.battery_drain_pct_s * elapsed)))

    def _checkpoint(self, now: float) -> DataPacket:
        payload = CheckpointPayload(
            seq=self._next_seq(),
            t_ds=int(round(now * 10)),
            x_cm=int(round(self.pose.x * 100)),
            y_cm=int(round(self.pose.y * 100)),
            z_cm=int(round(self.pose.z * 100)),
            heading_cdeg=int(round(self.pose.heading_deg * 100)),
            battery_pct=self.battery_pct(now),
        )
        self.last_checkpoint_t = now
        return DataPacket(0, payload)

    def _priority(self, event: EventRecord) -> DataPacket:
        kept = event.samples[-3:]
        t0 = kept[0][0]
        records = tuple(
            PriorityRecord(
                channel=event.channel,
                dt_offset_ds=int(round((t - t0) * 10)),
                value_milli=to_milli(v),
            )
            for t, v in kept
        )
        payload = PriorityPayload(
            seq=self._next_seq(),
            t_ds=int(round(t0 * 10)),
            sensitivity=1 if event.sensitive else 0,
            records=records,
        )
        return DataPacket(1, payload)

    # -- protocol entry points --------------------------------------------

    def handle_control_bytes(self, frame: bytes, now: float) -> list[DataPacket]:
        """Decode and apply a downlink frame; bad frames are dropped."""
        try:
            packet = decode_control(frame)
        except CodecError as exc:
            self.dropped_commands += 1
            self.trace(
                {
                    "t": now,
                    "src": "vehicle",
                    "kind": "drop",
                    "phase": self.phase.value,
                    "event": f"control dropped: {exc}",
                }
            )
            return []
        return self.handle_control(packet, now)

    def handle_control(self, packet: ControlPacket, now: float) -> list[DataPacket]:
        if packet.seq <= self.last_control_seq:
            return []  # replay; duplicate suppression
        self.last_control_seq = packet.seq
        for seq in [s for s in self.unacked if s <= packet.ack_seq]:
            del self.unacked[seq]

        out: list[DataPacket] = []
        if self.phase in (VehiclePhase.RETURNING, VehiclePhase.DONE):
            return out  # the return leg only takes acks; RETURNING is absorbing
        if self.phase is VehiclePhase.AWAIT_START:
            self.mission_start_t = now
            self._set_phase(VehiclePhase.ON_MISSION, now, "mission start")
            out.append(self._checkpoint(now))
            self.trace(self._packet_record(now, out[-1], "initial checkpoint"))
            return out

        cmd = packet.command
        if cmd is Command.RETURN:
            self._set_phase(VehiclePhase.RETURNING, now, "commanded return")
        elif cmd is Command.NEW_WAYPOINT:
            self.amended_target = self._offset_waypoint(packet)
            self.self_target = None
            self._set_phase(VehiclePhase.ON_MISSION, now, "new waypoint")
        elif cmd is Command.REPROGRAM:
            # Replaces the remaining plan instead of amending it.
            self.amended_target = None
            self.self_target = None
            self.mission = Mission(
                (self._offset_waypoint(packet),),
                self.mission.t_mission,
                self.mission.checkpoint_period,
                self.mission.speed,
            )
            self.next_waypoint_idx = 0
            self._set_phase(VehiclePhase.ON_MISSION, now, "reprogrammed")
        elif cmd is Command.RESUME_ORIGINAL:
            self.amended_target = None
            self.self_target = None
            self._set_phase(VehiclePhase.ON_MISSION, now, "resume original plan")
        elif cmd is Command.CONTINUE:
            if self.phase in (
                VehiclePhase.SELF_DETERMINED,
                VehiclePhase.AWAIT_COMMAND_ON_PATH,
            ):
                self.self_target = None
                self._set_phase(VehiclePhase.ON_MISSION, now, "continue")
        return out

    def _offset_waypoint(self, packet: ControlPacket) -> tuple[float, float, float]:
        """Waypoint at (distance, angle, vertical) relative to current pose."""
        heading = math.radians(
            wrap_heading(self.pose.heading_deg + packet.angle_mdeg / 1000.0)
        )
        d = packet.distance_cm / 100.0
        return (
            self.pose.x + d * math.cos(heading),
            self.pose.y + d * math.sin(heading),
            self.pose.z + packet.vertical_cm / 100.0,
        )

    def handle_tick(
        self,
        now: float,
        kin_z: np.ndarray | None,
        env_samples: list[tuple[int, float]],
        u: np.ndarray | None = None,
    ) -> list[DataPacket]:
        """One sensing tick: classify, transmit, and steer per the protocol."""
        if self.phase is VehiclePhase.AWAIT_START:
            raise RuntimeError("no uplink before the first control packet")
        if self.phase is VehiclePhase.DONE:
            return []

        elapsed = now - (self.mission_start_t or 0.0)
        # Predictors always advance; events are only raised from ON_MISSION.
        # While a priority packet is outstanding the vehicle just follows its
        # chosen trajectory until the center's control packet arrives.
        emit_events = self.phase is VehiclePhase.ON_MISSION
        events = self._classify(now, kin_z, env_samples, u, emit=emit_events)

        if self.phase is not VehiclePhase.RETURNING and elapsed > self.mission.t_mission:
            self._set_phase(VehiclePhase.RETURNING, now, "mission time exceeded")

        out: list[DataPacket] = []
        if self.phase in (VehiclePhase.RETURNING, VehiclePhase.DONE):
            return out

        for event in events:
            packet = self._priority(event)
            out.append(packet)
            self.unacked[packet.payload.seq] = (now, packet)
            self.trace(
                {
                    "t": now,
                    "src": "vehicle",
                    "kind": "event",
                    "phase": self.phase.value,
                    "event": {
                        "channel": event.channel,
                        "sensitive": event.sensitive,
                        "samples": list(event.samples),
                    },
                    "packet_hex": encode_data(packet).hex(),
                }
            )
            if event.sensitive:
                self.self_target = self.decide_local_trajectory(event, self.pose)
                self._set_phase(
                    VehiclePhase.SELF_DETERMINED, now, "delay-sensitive event"
                )
            elif self.phase is VehiclePhase.ON_MISSION:
                self._set_phase(
                    VehiclePhase.AWAIT_COMMAND_ON_PATH, now, "delay-insensitive event"
                )

        if not events and self._checkpoint_due(now):
            resend = self._retransmit_due(now)
            if resend is not None:
                out.append(resend)
                self.last_checkpoint_t = now
            else:
                out.append(self._checkpoint(now))
                self.trace(self._packet_record(now, out[-1], "checkpoint"))
        return out

    def _packet_record(self, now: float, packet: DataPacket, label: str) -> dict:
        return {
            "t": now,
            "src": "vehicle",
            "kind": "uplink",
            "phase": self.phase.value,
            "event": label,
            "seq": packet.payload.seq,
            "packet_hex": encode_data(packet).hex(),
        }

    def _checkpoint_due(self, now: float) -> bool:
        if self.last_checkpoint_t is None:
            return True
        return now - self.last_checkpoint_t >= self.mission.checkpoint_period

    def _retransmit_due(self, now: float) -> DataPacket | None:
        for seq, (sent_at, packet) in self.unacked.items():
            if now - sent_at >= self.mission.checkpoint_period:
                self.unacked[seq] = (now, packet)
                self.trace(self._packet_record(now, packet, "retransmit priority"))
                return packet
        return None

    def _classify(
        self,
        now: float,
        kin_z: np.ndarray | None,
        env_samples: list[tuple[int, float]],
        u: np.ndarray | None = None,
        emit: bool = True,
    ) -> list[EventRecord]:
        events: list[EventRecord] = []
        if kin_z is not None:
            kin_z = np.asarray(kin_z, dtype=float)
            if not self._kin_primed:
                self.bank.x[0::2] = kin_z  # align the filter with reality once
                self._kin_primed = True
            innovations = self.bank.step(kin_z, u)
            for axis, innov in enumerate(innovations):
                if innov * innov > self.taus[axis]:
                    ch = self.bank.channels[axis].id
                    if emit and self._refractory_ok(ch, now):
                        events.append(
                            EventRecord(
                                now,
                                ch,
                                sensitive=False,  # kinematic mismatches wait for shore
                                samples=((now, float(kin_z[axis])),),
                            )
                        )
        for ch_id, value in env_samples:
            flagged, dev = self.env_selectors[ch_id].push(value)
            prev = self.env_last_sample.get(ch_id)
            self.env_last_sample[ch_id] = (now, value)
            if not flagged or not emit or not self._refractory_ok(ch_id, now):
                continue
            threshold = self.env_cfgs[ch_id].threshold
            sensitive = abs(dev) > self.cfg.sensitive_factor * math.sqrt(threshold)
            samples = ((now, value),) if prev is None else (prev, (now, value))
            events.append(EventRecord(now, ch_id, sensitive, samples))
        return events

    def _refractory_ok(self, channel: int, now: float) -> bool:
        until = self.refractory_until.get(channel)
        if until is not None and now < until:
            return False
        self.refractory_until[channel] = now + self.cfg.refractory_s
        return True

    def decide_local_trajectory(
        self, event: EventRecord, pose: Pose
    ) -> tuple[float, float, float]:
        """Self-determined waypoint for a delay-sensitive event.

        Environmental: step along the heading toward rising values (the
        one-step gradient from the last two samples); kinematic events and
        flat gradients hold position.
        """
        is_env = any(ch.id == event.channel for ch in self.env_channels)
        if not is_env or len(event.samples) < 2:
            return (pose.x, pose.y, pose.z)
        (_, v_prev), (_, v_now) = event.samples[-2:]
        slope = v_now - v_prev
        if slope == 0.0:
            return (pose.x, pose.y, pose.z)
        heading = math.radians(pose.heading_deg)
        step = math.copysign(self.cfg.local_step_m, slope)
        return (
            pose.x + step * math.cos(heading),
            pose.y + step * math.sin(heading),
            pose.z,
        )

    # -- motion -------------------------------------------------------------

    def current_target(self) -> tuple[float, float, float] | None:
        if self.phase is VehiclePhase.DONE:
            return None
        if self.phase is VehiclePhase.RETURNING:
            return self.start_point
        if self.phase is VehiclePhase.SELF_DETERMINED:
            return self.self_target
        if self.amended_target is not None:
            return self.amended_target
        if self.next_waypoint_idx is None or self.next_waypoint_idx >= len(
            self.mission.waypoints
        ):
            return None
        return self.mission.waypoints[self.next_waypoint_idx]

    def motion_command(self, now: float, dt: float) -> MotionCommand:
        """Steer toward the current target; station-keep when there is none."""
        self._advance_arrivals(now)
        target = self.current_target()
        if target is None or self.phase is VehiclePhase.AWAIT_START:
            return MotionCommand(0.0, 0.0, 0.0)
        dx = target[0] - self.pose.x
        dy = target[1] - self.pose.y
        dz = target[2] - self.pose.z
        horiz = math.hypot(dx, dy)
        if horiz < self.cfg.arrival_tolerance_m:
            turn = 0.0
            speed = 0.0
        else:
            err = wrap_heading(_bearing_deg(dx, dy) - self.pose.heading_deg)
            limit = self.cfg.max_turn_rate_dps
            turn = max(-limit, min(limit, err / dt))
            speed = min(self.mission.speed, horiz / dt)
        vz = max(-self.cfg.vertical_rate_ms, min(self.cfg.vertical_rate_ms, dz / dt))
        return MotionCommand(speed, turn, vz)

    def _advance_arrivals(self, now: float) -> None:
        target = self.current_target()
        if target is None:
            return
        dist = math.hypot(target[0] - self.pose.x, target[1] - self.pose.y)
        if dist >= self.cfg.arrival_tolerance_m:
            return
        if self.phase is VehiclePhase.RETURNING:
            self._set_phase(VehiclePhase.DONE, now, "back at start")
        elif self.phase is VehiclePhase.SELF_DETERMINED:
            pass  # hold at the self-determined point until commanded
        elif self.amended_target is not None:
            self.amended_target = None
        elif self.next_waypoint_idx is not None:
            self.next_waypoint_idx += 1

    def set_pose(self, pose: Pose) -> None:
        self.pose = pose
