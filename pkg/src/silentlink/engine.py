"""Deterministic fixed-tick engine binding vehicle, channel, and center.

One run advances a global clock in fixed ticks (default 0.25 s, the IMU
sample period), drawing every random number from seeded generators, and
writes a JSON-lines trace plus a metrics document. Identical config and
seed produce byte-identical outputs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .center import CenterConfig, ControlCenter, Decision
from .codec import (
    CheckpointPayload,
    DataPacket,
    PriorityPayload,
    PriorityRecord,
    decode_control,
    decode_data,
    encode_control,
    encode_data,
    to_milli,
)
from .compression import ChannelPredictorBank, EnvCompressorConfig
from .config import SimConfig
from .link import AcousticLink
from .telemetry import (
    MotionCommand,
    Pose,
    advance_kinematics,
    default_kinematic_channels,
    sample_field,
)
from .vehicle import VehicleAgent, VehiclePhase


@dataclass
class MetricsReport:
    samples_measured: int = 0
    points_transmitted: int = 0
    compression_ratio: float = 0.0
    bytes_sent: int = 0
    bytes_baseline: int = 0
    bytes_saved_fraction: float = 0.0
    checkpoints_sent: int = 0
    priority_sent: int = 0
    retransmissions: int = 0
    up_sent: int = 0
    up_lost: int = 0
    down_sent: int = 0
    down_lost: int = 0
    dropped_commands: int = 0
    event_command_latency_s: list = field(default_factory=list)
    queue_depth: list = field(default_factory=list)  # [t, uplink queue length]
    mission_fingerprint: str = ""
    mode: str = "semi"
    uplink: str = "predictive"
    final_phase: str = ""

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _packet_summary(packet: DataPacket | None = None, control=None) -> dict:
    if control is not None:
        return {
            "type": "control",
            "command": control.command.name,
            "seq": control.seq,
            "ack_seq": control.ack_seq,
            "distance_cm": control.distance_cm,
            "angle_mdeg": control.angle_mdeg,
            "vertical_cm": control.vertical_cm,
        }
    payload = packet.payload
    if isinstance(payload, CheckpointPayload):
        return {"type": "checkpoint", "seq": payload.seq, "priority": packet.priority}
    return {
        "type": "priority",
        "seq": payload.seq,
        "priority": packet.priority,
        "sensitivity": payload.sensitivity,
        "records": len(payload.records),
    }


class Engine:
    def __init__(self, config: SimConfig, on_event=None):
        self.config = config
        self.on_event = on_event
        self.records: list[dict] = []
        self.metrics = MetricsReport(
            mission_fingerprint=config.mission_fingerprint(),
            mode=config.mode,
            uplink=config.uplink,
        )

        self.kin_channels = default_kinematic_channels()
        env_cfgs = {
            e.id: EnvCompressorConfig(e.window, e.threshold) for e in config.env_channels
        }
        self.env_specs = list(config.env_channels)
        bank = ChannelPredictorBank(
            self.kin_channels,
            config.tick_s,
            process_var=config.process_var,
            measurement_var=config.measurement_var,
        )
        self.vehicle = VehicleAgent(
            config.mission,
            bank,
            [e.channel() for e in config.env_channels],
            env_cfgs,
            config.vehicle,
            trace=self._trace,
        )

        self.center: ControlCenter | None = None
        self.link: AcousticLink | None = None
        if config.mode == "semi":
            mirror = ChannelPredictorBank(
                self.kin_channels,
                config.tick_s,
                process_var=config.process_var,
                measurement_var=config.measurement_var,
            )
            self.center = ControlCenter(
                config.mission, mirror, config.policy, trace=self._trace
            )
            self.link = AcousticLink(config.channel, config.packet_type)

        seq = np.random.SeedSequence(config.seed).spawn(2)
        self.kin_noise_rng = np.random.default_rng(seq[0])
        self.env_noise_rng = np.random.default_rng(seq[1])

        self.up_queue: list[DataPacket] = []
        self.down_queue: list = []  # ControlPacket
        self.now = 0.0
        self._tick_index = 0
        self._n_ticks = int(round(config.duration_s / config.tick_s))
        self._env_next_sample: dict[int, float | None] = {
            e.id: None for e in config.env_channels
        }
        self._pending_operator: list[tuple[Decision, object]] = []
        self._priority_first_tx: dict[int, float] = {}
        self._sent_priority_seqs: set[int] = set()
        self._command_event: dict[int, int] = {}  # control seq -> event seq
        self._event_sent_at: dict[int, float] = {}
        self._event_latency_done: set[int] = set()
        self._naive_buffer: list[tuple[float, int, float]] = []
        self._naive_seq = 1
        self._done = False
        self._mission_kicked = False
        self._kickoff_t = 0.0
        self._last_cmd = MotionCommand()

        self._trace(
            {
                "t": 0.0,
                "src": "engine",
                "kind": "meta",
                "event": {
                    "version": __version__,
                    "seed": config.seed,
                    "mode": config.mode,
                    "uplink": config.uplink,
                    "config_sha": config.fingerprint(),
                    "mission_sha": config.mission_fingerprint(),
                },
            }
        )
        if config.mode == "autonomous":
            self.vehicle.mission_start_t = 0.0
            self.vehicle.phase = VehiclePhase.ON_MISSION

    # -- trace ----------------------------------------------------------------

    def _trace(self, record: dict) -> None:
        self.records.append(record)
        if self.on_event is not None:
            self.on_event(record)

    # -- sensing ----------------------------------------------------------------

    def _kinematic_truth(self) -> np.ndarray:
        """IMU ground truth at the current pose under the current command.

        World-frame acceleration of the commanded constant-turn motion
        (v*omega, centripetal), heading rate, and pressure depth; speed
        steps between ticks are treated as impulsive and produce no
        acceleration sample.
        """
        pose = self.vehicle.pose
        cmd = self._last_cmd
        h = math.radians(pose.heading_deg)
        omega = math.radians(cmd.turn_rate_dps)
        accel_x = -cmd.speed * omega * math.sin(h)
        accel_y = cmd.speed * omega * math.cos(h)
        z = np.array(
            [accel_x, accel_y, 0.0, 0.0, 0.0, cmd.turn_rate_dps, pose.z], dtype=float
        )
        if self.config.kinematic_noise_std > 0:
            z = z + self.kin_noise_rng.normal(0.0, self.config.kinematic_noise_std, z.size)
        return z

    def _env_samples_due(self) -> list[tuple[int, float]]:
        out = []
        pose = self.vehicle.pose
        for spec in self.env_specs:
            if self._env_next_sample[spec.id] is None:
                self._env_next_sample[spec.id] = self.now  # cadence starts with sensing
            if self.now + 1e-9 < self._env_next_sample[spec.id]:
                continue
            while self._env_next_sample[spec.id] <= self.now + 1e-9:
                self._env_next_sample[spec.id] += spec.sample_period
            value = sample_field(self.config.field, pose.x, pose.y)
            if spec.noise_std > 0:
                value += self.env_noise_rng.normal(0.0, spec.noise_std)
            out.append((spec.id, value))
            self._trace(
                {
                    "t": self.now,
                    "src": "engine",
                    "kind": "sample",
                    "channel": spec.id,
                    "value": value,
                    "x": pose.x,
                    "y": pose.y,
                }
            )
        return out

    # -- link plumbing ----------------------------------------------------------

    def _deliver_due(self) -> None:
        if self.link is None:
            return
        for event in self.link.up.pop_due(self.now):
            if event.lost:
                continue
            packet = decode_data(event.frame)
            self._trace(
                {
                    "t": self.now,
                    "src": "engine",
                    "kind": "rx",
                    "dir": "up",
                    "packet_hex": event.frame.hex(),
                    "packet": _packet_summary(packet),
                }
            )
            self.center.handle_uplink(packet, self.now)
        for event in self.link.down.pop_due(self.now):
            if event.lost:
                continue
            control = decode_control(event.frame)
            self._trace(
                {
                    "t": self.now,
                    "src": "engine",
                    "kind": "rx",
                    "dir": "down",
                    "packet_hex": event.frame.hex(),
                    "packet": _packet_summary(control=control),
                }
            )
            if control.seq in self._command_event:
                event_seq = self._command_event.pop(control.seq)
                sent_at = self._event_sent_at.get(event_seq)
                if sent_at is not None and event_seq not in self._event_latency_done:
                    self._event_latency_done.add(event_seq)
                    self.metrics.event_command_latency_s.append(
                        round(self.now - sent_at, 9)
                    )
            replies = self.vehicle.handle_control_bytes(event.frame, self.now)
            self.up_queue.extend(replies)
            self.metrics.dropped_commands = self.vehicle.dropped_commands

    def _drain_queues(self) -> None:
        if self.link is None:
            return
        if self.up_queue and self.link.up.idle(self.now):
            packet = self.up_queue.pop(0)
            frame = encode_data(packet)
            event = self.link.up.transmit(frame, self.now)
            self._account_uplink(packet)
            self._trace(
                {
                    "t": self.now,
                    "src": "engine",
                    "kind": "tx",
                    "dir": "up",
                    "packet_hex": frame.hex(),
                    "packet": _packet_summary(packet),
                    "lost": event.lost,
                    "deliver_at": round(event.deliver_at, 9),
                }
            )
        if self.down_queue and self.link.down.idle(self.now):
            control = self.down_queue.pop(0)
            frame = encode_control(control)
            event = self.link.down.transmit(frame, self.now)
            self._trace(
                {
                    "t": self.now,
                    "src": "engine",
                    "kind": "tx",
                    "dir": "down",
                    "packet_hex": frame.hex(),
                    "packet": _packet_summary(control=control),
                    "lost": event.lost,
                    "deliver_at": round(event.deliver_at, 9),
                }
            )

    def _account_uplink(self, packet: DataPacket) -> None:
        payload = packet.payload
        if isinstance(payload, CheckpointPayload):
            self.metrics.checkpoints_sent += 1
            self.metrics.points_transmitted += 1
        elif isinstance(payload, PriorityPayload):
            if payload.seq in self._sent_priority_seqs:
                self.metrics.retransmissions += 1
            else:
                self._sent_priority_seqs.add(payload.seq)
                self.metrics.priority_sent += 1
                self.metrics.points_transmitted += len(payload.records)
                self._event_sent_at[payload.seq] = self.now

    # -- naive streaming ----------------------------------------------------------

    def _naive_pack(self, kin_z: np.ndarray | None, env: list[tuple[int, float]]) -> None:
        if kin_z is not None:
            for axis, value in enumerate(kin_z):
                self._naive_buffer.append((self.now, self.kin_channels[axis].id, float(value)))
        for ch, value in env:
            self._naive_buffer.append((self.now, ch, value))
        while len(self._naive_buffer) >= 3:
            chunk, self._naive_buffer = self._naive_buffer[:3], self._naive_buffer[3:]
            t0 = chunk[0][0]
            records = tuple(
                PriorityRecord(ch, int(round((t - t0) * 10)), to_milli(v))
                for t, ch, v in chunk
            )
            payload = PriorityPayload(
                seq=self._naive_seq, t_ds=int(round(t0 * 10)), sensitivity=0, records=records
            )
            self._naive_seq = (self._naive_seq + 1) & 0xFFFF or 1
            self.up_queue.append(DataPacket(1, payload))

    # -- operator interface (gateway mode) ----------------------------------------

    def submit_decision(self, decision: Decision, done_callback=None) -> None:
        """Queue an operator decision; serialized into the next tick."""
        self._pending_operator.append((decision, done_callback))

    # -- main loop ------------------------------------------------------------------

    def tick(self) -> bool:
        """Advance one tick; returns False when the run is over."""
        if self._done:
            return False
        self.now = round(self._tick_index * self.config.tick_s, 9)

        # 1. deliver anything due on the channel
        self._deliver_due()

        # 2. shore side: mission kick-off, operator commands, then policy
        if self.center is not None:
            if self.center.last_checkpoint is None and (
                not self._mission_kicked
                or self.now - self._kickoff_t >= self.config.policy.start_retry_s
            ):
                self.down_queue.append(self.center.start_mission(self.now))
                self._mission_kicked = True
                self._kickoff_t = self.now
            for decision in self.center.pop_reissues():
                packet = self.center.issue_command(decision, self.now)
                if decision.event_seq is not None:
                    self._command_event[packet.seq] = decision.event_seq
                self.down_queue.append(packet)
            while self._pending_operator:
                decision, callback = self._pending_operator.pop(0)
                packet = self.center.issue_command(decision, self.now)
                if decision.event_seq is not None:
                    self._command_event[packet.seq] = decision.event_seq
                self.down_queue.append(packet)
                if callback is not None:
                    callback(packet.seq)
            decision = self.center.auto_policy(self.now)
            if decision is not None:
                packet = self.center.issue_command(decision, self.now)
                if decision.event_seq is not None:
                    self._command_event[packet.seq] = decision.event_seq
                self.down_queue.append(packet)
            self.center.mirror_predict()

        # 3. sense at the current pose, then let the agent act
        sensing = self.vehicle.phase is not VehiclePhase.AWAIT_START
        if sensing:
            kin_z = self._kinematic_truth()
            env = self._env_samples_due()
            self.metrics.samples_measured += kin_z.size + len(env)
            if self.config.uplink == "naive":
                if self.vehicle.phase is VehiclePhase.ON_MISSION:
                    self._naive_pack(kin_z, env)
                self._mission_clock_tick()
            elif self.config.mode == "autonomous":
                self._mission_clock_tick()
            else:
                self.up_queue.extend(self.vehicle.handle_tick(self.now, kin_z, env))

        # 4. start transmissions now that this tick's packets are queued
        self._drain_queues()

        # 5. move the vehicle
        cmd = self.vehicle.motion_command(self.now, self.config.tick_s)
        if cmd.speed or cmd.turn_rate_dps or cmd.vertical_rate:
            self.vehicle.set_pose(
                advance_kinematics(self.vehicle.pose, cmd, self.config.tick_s)
            )
        self._last_cmd = cmd

        pose = self.vehicle.pose
        self._trace(
            {
                "t": self.now,
                "src": "engine",
                "kind": "tick",
                "phase": self.vehicle.phase.value,
                "pose": [round(pose.x, 6), round(pose.y, 6), round(pose.z, 6)],
                "heading": round(pose.heading_deg, 6),
                "mirror": self._mirror_pose(),
                "up_queue": len(self.up_queue),
                "down_queue": len(self.down_queue),
            }
        )
        self.metrics.queue_depth.append([self.now, len(self.up_queue)])

        self._tick_index += 1
        if self._tick_index >= self._n_ticks:
            self._finish()
            return False
        return True

    def _mission_clock_tick(self) -> None:
        """Mission clock only (autonomous and naive modes): no event logic."""
        elapsed = self.now - (self.vehicle.mission_start_t or 0.0)
        if (
            self.vehicle.phase is VehiclePhase.ON_MISSION
            and elapsed > self.config.mission.t_mission
        ):
            self.vehicle._set_phase(VehiclePhase.RETURNING, self.now, "mission time exceeded")

    def _mirror_pose(self) -> list | None:
        """Shore-side dead reckoning: plan position at the current clock."""
        if self.center is None or self.vehicle.mission_start_t is None:
            return None
        elapsed = max(0.0, self.now - self.vehicle.mission_start_t)
        dist = self.config.mission.speed * elapsed
        wps = self.config.mission.waypoints
        x, y, z = wps[0]
        for nxt in wps[1:]:
            leg = math.dist((x, y), (nxt[0], nxt[1]))
            if dist <= leg or leg == 0.0:
                frac = 0.0 if leg == 0.0 else dist / leg
                return [
                    round(x + frac * (nxt[0] - x), 6),
                    round(y + frac * (nxt[1] - y), 6),
                    round(nxt[2], 6),
                ]
            dist -= leg
            x, y, z = nxt
        return [round(x, 6), round(y, 6), round(z, 6)]

    def _finish(self) -> None:
        self._done = True
        m = self.metrics
        if self.link is not None:
            m.up_sent = self.link.up.sent
            m.up_lost = self.link.up.lost
            m.down_sent = self.link.down.sent
            m.down_lost = self.link.down.lost
        m.bytes_sent = 32 * m.up_sent
        m.bytes_baseline = 32 * math.ceil(m.samples_measured / 3)
        if m.bytes_baseline:
            m.bytes_saved_fraction = round(1.0 - m.bytes_sent / m.bytes_baseline, 9)
        if m.samples_measured:
            m.compression_ratio = round(m.points_transmitted / m.samples_measured, 9)
        m.final_phase = self.vehicle.phase.value
        self._trace(
            {"t": self.now, "src": "engine", "kind": "done", "event": {"ticks": self._tick_index}}
        )

    def run(self) -> MetricsReport:
        while self.tick():
            pass
        return self.metrics

    # -- outputs ---------------------------------------------------------------------

    def write_outputs(self, out_dir: str | Path) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        trace_path = out / "trace.jsonl"
        with trace_path.open("w", encoding="utf-8") as fh:
            for rec in self.records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
        metrics_path = out / "metrics.json"
        with metrics_path.open("w", encoding="utf-8") as fh:
            json.dump(self.metrics.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return trace_path, metrics_path


def run_simulation(config: SimConfig, out_dir: str | Path | None = None) -> tuple[MetricsReport, Engine]:
    engine = Engine(config)
    engine.run()
    if out_dir is not None:
        engine.write_outputs(out_dir)
    return engine.metrics, engine
