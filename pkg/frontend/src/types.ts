/** Gateway wire schemas. These mirror the JSON the gateway emits; the
 * console has no protocol logic of its own. */

export interface CheckpointBody {
  seq: number;
  x_m: number;
  y_m: number;
  z_m: number;
  heading_deg: number;
  battery_pct: number;
  packet_hex?: string | null;
}

export interface AlertBody {
  seq: number;
  sensitivity: 0 | 1;
  channel: number | null;
  values: number[];
  packet_hex?: string | null;
}

export interface CommandBody {
  type: "control";
  command: string;
  seq: number;
  ack_seq: number;
  distance_cm: number;
  angle_mdeg: number;
  vertical_cm: number;
  packet_hex?: string | null;
}

export interface TickBody {
  pose: [number, number, number];
  heading: number;
  mirror: [number, number, number] | null;
  phase: string;
  up_queue: number;
}

export interface PhaseChangeBody {
  from: string;
  to: string;
  why: string;
}

export type GatewayEvent =
  | { type: "checkpoint"; t: number; body: CheckpointBody; stream_seq?: number }
  | { type: "priority_alert"; t: number; body: AlertBody; stream_seq?: number }
  | { type: "command_issued"; t: number; body: CommandBody; stream_seq?: number }
  | { type: "phase_change"; t: number; body: PhaseChangeBody; stream_seq?: number }
  | { type: "tick"; t: number; body: TickBody; stream_seq?: number }
  | { type: "done"; t: number; body: Record<string, never>; stream_seq?: number }
  | { type: "error"; t?: number; body: { error: string }; stream_seq?: number };

export interface SnapshotBody {
  phase: string;
  tick: TickBody | null;
  track: CheckpointBody[];
  alerts: AlertBody[];
  commands: CommandBody[];
  t_mission: number;
  running: boolean;
}

export interface Snapshot {
  type: "snapshot";
  t: number;
  body: SnapshotBody;
  stream_seq?: number;
}

export interface CommandRequest {
  command: string;
  distance_m: number;
  angle_deg: number;
  vertical_m: number;
  event_ref: number | null;
}

export interface CommandAck {
  seq: number;
}

export const COMMANDS = [
  "CONTINUE",
  "NEW_WAYPOINT",
  "RETURN",
  "RESUME_ORIGINAL",
  "REPROGRAM",
] as const;

export type CommandName = (typeof COMMANDS)[number];
