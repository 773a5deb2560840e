"""Shore side: mirror prediction, operator alerts, and control packets.

The center consumes check-point and priority packets, keeps a mirror of
the vehicle's predictor (same model, advanced with the known mission
inputs, so both sides predict alike between check-points), and answers
events with control packets from either an automatic policy or an
operator queue. As long as check-points confirm the plan, it too stays
silent.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from .codec import (
    CheckpointPayload,
    Command,
    ControlPacket,
    DataPacket,
    PriorityPayload,
    from_milli,
    wrap_millidegrees,
)
from .compression import ChannelPredictorBank
from .telemetry import Mission


@dataclass(frozen=True)
class Decision:
    """An operator or policy verdict awaiting serialization to the wire."""

    command: Command
    distance_m: float = 0.0
    angle_deg: float = 0.0
    vertical_m: float = 0.0
    event_seq: int | None = None
    source: str = "policy"


@dataclass(frozen=True)
class CenterConfig:
    think_time_s: float = 2.0
    investigate_step_m: float = 10.0
    auto_policy: bool = True
    start_retry_s: float = 30.0  # re-send mission start until a checkpoint lands


@dataclass
class PendingEvent:
    payload: PriorityPayload
    received_at: float


class ControlCenter:
    def __init__(
        self,
        mission: Mission,
        mirror_bank: ChannelPredictorBank,
        cfg: CenterConfig = CenterConfig(),
        trace=None,
    ):
        self.mission = mission
        self.mirror = mirror_bank
        self.cfg = cfg
        self.trace = trace or (lambda record: None)
        self.last_checkpoint: tuple[CheckpointPayload, float] | None = None
        self.pending_events: deque[PendingEvent] = deque()
        self.issued_seq = -1
        # Uplink seqs start at 1, so 0 here (and in ack_seq) means "none yet".
        self.highest_contig_seq = 0
        self.mission_started = False
        self._received_seqs: set[int] = set()
        self._resolved: dict[int, Decision] = {}  # event seq -> last decision
        self._reissue: list[Decision] = []

    # -- uplink -------------------------------------------------------------

    def handle_uplink(self, packet: DataPacket, now: float) -> list[dict]:
        """Apply one decoded data packet; returns operator alerts."""
        payload = packet.payload
        if payload.seq in self._received_seqs or payload.seq <= self.highest_contig_seq:
            self.trace(
                {
                    "t": now,
                    "src": "center",
                    "kind": "stale",
                    "event": f"stale uplink seq {payload.seq} ignored",
                }
            )
            # A retransmitted priority packet means our answer (or its ack)
            # was lost: repeat the decision so the ack_seq reaches the vehicle.
            if isinstance(payload, PriorityPayload) and payload.seq in self._resolved:
                self._reissue.append(self._resolved[payload.seq])
            return []
        self._received_seqs.add(payload.seq)
        while self.highest_contig_seq + 1 in self._received_seqs:
            self.highest_contig_seq += 1

        alerts: list[dict] = []
        if isinstance(payload, CheckpointPayload):
            self.last_checkpoint = (payload, now)
            self._snap_mirror(payload)
            self.trace(
                {
                    "t": now,
                    "src": "center",
                    "kind": "checkpoint",
                    "event": {
                        "seq": payload.seq,
                        "x_m": payload.x_cm / 100.0,
                        "y_m": payload.y_cm / 100.0,
                        "z_m": payload.z_cm / 100.0,
                        "heading_deg": payload.heading_cdeg / 100.0,
                        "battery_pct": payload.battery_pct,
                    },
                }
            )
        else:
            self.pending_events.append(PendingEvent(payload, now))
            alert = {
                "t": now,
                "src": "center",
                "kind": "alert",
                "event": {
                    "seq": payload.seq,
                    "sensitivity": payload.sensitivity,
                    "channel": payload.records[0].channel if payload.records else None,
                    "values": [from_milli(r.value_milli) for r in payload.records],
                },
            }
            self.trace(alert)
            alerts.append(alert)
        return alerts

    def _snap_mirror(self, payload: CheckpointPayload) -> None:
        """Re-anchor the mirror's pose-bearing states to the reported pose."""
        for axis, ch in enumerate(self.mirror.channels):
            if ch.name == "depth":
                self.mirror.x[2 * axis] = payload.z_cm / 100.0

    def mirror_predict(self, u=None):
        """Advance the mirror one tick with the known mission inputs."""
        return self.mirror.predict_only(u)

    # -- downlink -----------------------------------------------------------

    def start_mission(self, now: float) -> ControlPacket:
        self.mission_started = True
        packet = self._packet(Command.CONTINUE, 0, 0, 0)
        self.trace(
            {
                "t": now,
                "src": "center",
                "kind": "command",
                "event": {"command": "CONTINUE", "seq": packet.seq, "why": "mission start"},
            }
        )
        return packet

    def _packet(self, command: Command, distance_cm: int, angle_mdeg: int, vertical_cm: int) -> ControlPacket:
        self.issued_seq += 1
        return ControlPacket(
            command=command,
            distance_cm=distance_cm,
            angle_mdeg=angle_mdeg,
            vertical_cm=vertical_cm,
            seq=self.issued_seq,
            ack_seq=self.highest_contig_seq,
        )

    def issue_command(self, decision: Decision, now: float) -> ControlPacket:
        """Serialize a decision; marks its event (if any) resolved."""
        packet = self._packet(
            decision.command,
            int(round(decision.distance_m * 100)),
            wrap_millidegrees(int(round(decision.angle_deg * 1000))),
            int(round(decision.vertical_m * 100)),
        )
        if decision.event_seq is not None:
            self.pending_events = deque(
                e for e in self.pending_events if e.payload.seq != decision.event_seq
            )
            self._resolved[decision.event_seq] = decision
        self.trace(
            {
                "t": now,
                "src": "center",
                "kind": "command",
                "event": {
                    "command": decision.command.name,
                    "seq": packet.seq,
                    "ack_seq": packet.ack_seq,
                    "source": decision.source,
                    "event_seq": decision.event_seq,
                },
            }
        )
        return packet

    def pop_reissues(self) -> list[Decision]:
        """Decisions to repeat because the vehicle retransmitted their events."""
        out, self._reissue = self._reissue, []
        return out

    def auto_policy(self, now: float) -> Decision | None:
        """Deterministic stand-in for the operator, FIFO over pending events.

        Sensitive events get a NEW_WAYPOINT toward the reported source;
        insensitive ones a RESUME_ORIGINAL, each after the configured
        think time.
        """
        if not self.cfg.auto_policy or not self.pending_events:
            return None
        head = self.pending_events[0]
        if now - head.received_at < self.cfg.think_time_s:
            return None
        payload = head.payload
        if payload.sensitivity == 1:
            angle = 0.0
            values = [from_milli(r.value_milli) for r in payload.records]
            if len(values) >= 2 and values[-1] < values[-2]:
                angle = 180.0  # value falling along track: the source is behind
            return Decision(
                Command.NEW_WAYPOINT,
                distance_m=self.cfg.investigate_step_m,
                angle_deg=angle,
                event_seq=payload.seq,
            )
        return Decision(Command.RESUME_ORIGINAL, event_seq=payload.seq)

    def abort(self, now: float) -> ControlPacket:
        """Mission abort: stop early and come back to shore."""
        return self.issue_command(Decision(Command.RETURN, source="operator"), now)


def bearing_decision(
    bearing_deg: float, distance_m: float, vertical_m: float = 0.0, event_seq=None
) -> Decision:
    """Operator "investigate" helper: bearing/distance to a NEW_WAYPOINT."""
    return Decision(
        Command.NEW_WAYPOINT,
        distance_m=distance_m,
        angle_deg=bearing_deg,
        vertical_m=vertical_m,
        event_seq=event_seq,
        source="operator",
    )
