/** Gateway transport: one websocket subscription plus command POSTs.
 * Auto-reconnects with a fresh snapshot resync, as the stream contract
 * requires. Kept behind an interface so the view-model logic is testable
 * without a browser. */

import { CommandAck, CommandRequest, GatewayEvent, Snapshot } from "./types.js";

export interface GatewayTransport {
  connect(onSnapshot: (s: Snapshot) => void, onEvent: (e: GatewayEvent) => void,
          onDisconnect: () => void): void;
  submit(request: CommandRequest): Promise<CommandAck>;
}

export class ConflictError extends Error {}
export class ValidationError extends Error {
  constructor(public field: string, message: string) {
    super(message);
  }
}

export class HttpGatewayTransport implements GatewayTransport {
  private socket: WebSocket | null = null;
  private closed = false;

  constructor(private baseUrl: string, private reconnectDelayMs = 1000) {}

  connect(
    onSnapshot: (s: Snapshot) => void,
    onEvent: (e: GatewayEvent) => void,
    onDisconnect: () => void,
  ): void {
    const wsUrl = this.baseUrl.replace(/^http/, "ws") + "/ws";
    const socket = new WebSocket(wsUrl);
    this.socket = socket;
    let gotSnapshot = false;
    socket.onmessage = (msg) => {
      const data = JSON.parse(msg.data as string);
      if (!gotSnapshot && data.type === "snapshot") {
        gotSnapshot = true;
        onSnapshot(data as Snapshot);
      } else {
        onEvent(data as GatewayEvent);
      }
    };
    socket.onclose = () => {
      onDisconnect();
      if (!this.closed) {
        setTimeout(
          () => this.connect(onSnapshot, onEvent, onDisconnect),
          this.reconnectDelayMs,
        );
      }
    };
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
  }

  async submit(request: CommandRequest): Promise<CommandAck> {
    const resp = await fetch(this.baseUrl + "/command", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
    });
    if (resp.status === 409) {
      throw new ConflictError("no active run");
    }
    if (resp.status === 422) {
      const detail = (await resp.json()).detail;
      throw new ValidationError(detail.field ?? "?", detail.error ?? "invalid");
    }
    if (!resp.ok) {
      throw new Error(`gateway error ${resp.status}`);
    }
    return (await resp.json()) as CommandAck;
  }
}
