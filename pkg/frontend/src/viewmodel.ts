/** Console state: a pure reducer over the gateway stream.
 *
 * The model is rebuilt from a server snapshot on every (re)connect, so a
 * reload plus resync renders exactly what continuous attendance would
 * have. Nothing here guesses: the rendered track holds only received
 * events, and command entries go pending only after the gateway acks.
 */

import {
  AlertBody,
  CheckpointBody,
  CommandBody,
  GatewayEvent,
  Snapshot,
  TickBody,
} from "./types.js";

export interface AlertEntry {
  t: number | null;
  body: AlertBody;
  answered: boolean;
}

export interface PendingCommand {
  seq: number;
  eventRef: number | null;
  submittedAt: number;
}

export type Connection = "connected" | "disconnected" | "done";

export class ConsoleViewModel {
  phase = "AWAIT_START";
  tMission = 0;
  clock = 0;
  running = false;
  connection: Connection = "disconnected";
  track: CheckpointBody[] = [];
  truth: Array<[number, number, number]> = [];
  predicted: Array<[number, number, number]> = [];
  lastTick: TickBody | null = null;
  alerts: AlertEntry[] = [];
  commands: CommandBody[] = [];
  pending: PendingCommand[] = [];
  /** Alert seqs answered by commands submitted through this console. */
  private answeredRefs = new Set<number>();
  private version = 0;

  /** Monotone counter for change detection by renderers. */
  get revision(): number {
    return this.version;
  }

  applySnapshot(snapshot: Snapshot): void {
    const body = snapshot.body;
    this.phase = body.phase;
    this.tMission = body.t_mission;
    this.clock = snapshot.t;
    this.running = body.running;
    this.connection = "connected";
    this.track = [...body.track];
    this.alerts = body.alerts.map((a) => ({ t: null, body: a, answered: false }));
    this.commands = [...body.commands];
    this.truth = [];
    this.predicted = [];
    this.lastTick = body.tick;
    if (body.tick) {
      this.truth.push(body.tick.pose);
      if (body.tick.mirror) this.predicted.push(body.tick.mirror);
    }
    this.markAnswered();
    this.version++;
  }

  apply(event: GatewayEvent): void {
    if (event.t !== undefined && event.t !== null) this.clock = event.t;
    switch (event.type) {
      case "checkpoint":
        this.track.push(event.body);
        break;
      case "priority_alert":
        this.alerts.push({ t: event.t, body: event.body, answered: false });
        break;
      case "command_issued":
        this.commands.push(event.body);
        this.pending = this.pending.filter((p) => p.seq !== event.body.seq);
        this.markAnswered();
        break;
      case "phase_change":
        this.phase = event.body.to;
        break;
      case "tick":
        this.lastTick = event.body;
        this.phase = event.body.phase;
        this.truth.push(event.body.pose);
        if (event.body.mirror) this.predicted.push(event.body.mirror);
        break;
      case "done":
        this.running = false;
        this.connection = "done";
        break;
      case "error":
        this.connection = "disconnected";
        break;
    }
    this.version++;
  }

  /** Record a gateway ack so the feed can show the command as pending. */
  noteSubmitted(seq: number, eventRef: number | null): void {
    this.pending.push({ seq, eventRef, submittedAt: this.clock });
    if (eventRef !== null) this.answeredRefs.add(eventRef);
    this.markAnswered();
    this.version++;
  }

  disconnected(): void {
    this.connection = "disconnected";
    this.version++;
  }

  private markAnswered(): void {
    for (const a of this.alerts) {
      if (this.answeredRefs.has(a.body.seq)) a.answered = true;
    }
  }

  /** Feed entries ordered by mission time (alerts carry t when live). */
  alertFeed(): AlertEntry[] {
    return [...this.alerts].sort((a, b) => (a.t ?? 0) - (b.t ?? 0));
  }

  missionProgress(): number {
    if (this.tMission <= 0) return 0;
    return Math.min(1, Math.max(0, this.clock / this.tMission));
  }

  /** Depth series for the strip chart: [t or index, depth_m]. */
  depthSeries(): Array<[number, number]> {
    return this.track.map((c, i) => [i, c.z_m]);
  }
}
