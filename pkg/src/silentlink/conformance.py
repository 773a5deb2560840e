"""Trace conformance: does a run follow the semi-autonomous protocol graph?

The checker replays a trace's protocol-relevant records (vehicle phase
transitions, uplink transmissions, downlink control receptions) against
the allowed transition graph:

    AWAIT_START --control--> ON_MISSION (initial check-point)
    ON_MISSION --sensitive event--> SELF_DETERMINED
    ON_MISSION --insensitive event--> AWAIT_COMMAND_ON_PATH
    SELF_DETERMINED / AWAIT_COMMAND_ON_PATH --control--> ON_MISSION
    any active phase --mission over / RETURN--> RETURNING
    RETURNING --arrival--> DONE (RETURNING is otherwise absorbing)

plus the silence rules: nothing transmits before the first control
packet, and nothing transmits after the return leg begins.
"""

from __future__ import annotations

from dataclasses import dataclass, field

_EVENT_EDGES = {
    ("ON_MISSION", "SELF_DETERMINED"): "sensitive",
    ("ON_MISSION", "AWAIT_COMMAND_ON_PATH"): "insensitive",
}
_CONTROL_EDGES = {
    ("AWAIT_START", "ON_MISSION"),
    ("SELF_DETERMINED", "ON_MISSION"),
    ("AWAIT_COMMAND_ON_PATH", "ON_MISSION"),
}
_RETURN_EDGES = {
    ("ON_MISSION", "RETURNING"),
    ("SELF_DETERMINED", "RETURNING"),
    ("AWAIT_COMMAND_ON_PATH", "RETURNING"),
    ("RETURNING", "DONE"),
}


@dataclass
class ConformanceResult:
    ok: bool
    violations: list[str] = field(default_factory=list)
    phases_seen: list[str] = field(default_factory=list)


def check_trace(records: list[dict]) -> ConformanceResult:
    violations: list[str] = []
    phase = "AWAIT_START"
    phases_seen = [phase]
    control_seen = False
    control_credit = 0  # undigested control receptions
    last_event: tuple[float, bool] | None = None  # (t, sensitive)

    for rec in records:
        kind = rec.get("kind")
        t = rec.get("t", 0.0)

        if kind == "rx" and rec.get("dir") == "down":
            control_seen = True
            control_credit += 1

        elif kind == "event" and rec.get("src") == "vehicle":
            body = rec.get("event", {})
            last_event = (t, bool(body.get("sensitive")))

        elif kind == "tx" and rec.get("dir") == "up":
            summary = rec.get("packet", {})
            if not control_seen:
                violations.append(f"t={t}: uplink before any control packet")
            if phase in ("RETURNING", "DONE"):
                violations.append(f"t={t}: uplink during {phase}")
            if summary.get("type") == "priority" and phase == "AWAIT_START":
                violations.append(f"t={t}: priority packet in AWAIT_START")

        elif kind == "phase" and rec.get("src") == "vehicle":
            frm = rec.get("from", phase)
            to = rec.get("phase")
            phases_seen.append(to)
            if frm != phase:
                violations.append(
                    f"t={t}: phase record from {frm} but checker tracked {phase}"
                )
            edge = (frm, to)
            if edge in _CONTROL_EDGES:
                if control_credit <= 0:
                    violations.append(f"t={t}: {frm}->{to} without a control packet")
                else:
                    control_credit -= 1
            elif edge in _EVENT_EDGES:
                want_sensitive = _EVENT_EDGES[edge] == "sensitive"
                if last_event is None or last_event[0] != t or last_event[1] != want_sensitive:
                    violations.append(
                        f"t={t}: {frm}->{to} without a matching "
                        f"{_EVENT_EDGES[edge]} event at the same tick"
                    )
            elif edge in _RETURN_EDGES:
                pass
            else:
                violations.append(f"t={t}: transition {frm}->{to} not in protocol graph")
            if frm == "RETURNING" and to != "DONE":
                violations.append(f"t={t}: RETURNING must be absorbing except to DONE")
            phase = to

    return ConformanceResult(not violations, violations, phases_seen)
