/** Browser entry point: wires transport, view model, map, and the form. */

import {
  emptyForm,
  investigateShortcut,
  resumeShortcut,
  returnShortcut,
  toRequest,
  validateForm,
  FormState,
} from "./commandform.js";
import { MapView } from "./map.js";
import { ConflictError, HttpGatewayTransport, ValidationError } from "./transport.js";
import { CommandRequest } from "./types.js";
import { ConsoleViewModel } from "./viewmodel.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function gatewayUrl(): string {
  const param = new URLSearchParams(location.search).get("gateway");
  return (param ?? "http://127.0.0.1:8000").replace(/\/$/, "");
}

const vm = new ConsoleViewModel();
const transport = new HttpGatewayTransport(gatewayUrl());
const map = new MapView(
  el<HTMLCanvasElement>("map"),
  el<HTMLCanvasElement>("depth-strip"),
);

let selectedAlert: number | null = null;
let lastRendered = -1;

function banner(text: string, kind: "info" | "error" = "info"): void {
  const node = el<HTMLDivElement>("banner");
  node.textContent = text;
  node.className = `banner ${kind}`;
}

function renderFeed(): void {
  const feed = el<HTMLUListElement>("alert-feed");
  feed.innerHTML = "";
  for (const entry of vm.alertFeed()) {
    const li = document.createElement("li");
    const badge = entry.body.sensitivity === 1 ? "URGENT" : "advisory";
    const status = entry.answered ? "answered" : "pending";
    li.textContent =
      `t=${entry.t?.toFixed(1) ?? "?"}s ch=${entry.body.channel} ` +
      `[${badge}] values=${entry.body.values.map((v) => v.toFixed(2)).join(", ")} (${status})`;
    li.className = entry.body.sensitivity === 1 ? "alert urgent" : "alert";
    if (selectedAlert === entry.body.seq) li.classList.add("selected");
    li.onclick = () => {
      selectedAlert = entry.body.seq;
      renderFeed();
    };
    feed.appendChild(li);
  }
  const commands = el<HTMLUListElement>("command-feed");
  commands.innerHTML = "";
  for (const c of vm.commands) {
    const li = document.createElement("li");
    li.textContent = `#${c.seq} ${c.command} d=${(c.distance_cm / 100).toFixed(1)}m ` +
      `a=${(c.angle_mdeg / 1000).toFixed(1)}deg`;
    commands.appendChild(li);
  }
  for (const p of vm.pending) {
    const li = document.createElement("li");
    li.textContent = `#${p.seq} (pending)`;
    li.className = "pending";
    commands.appendChild(li);
  }
}

function renderStatus(): void {
  el<HTMLSpanElement>("phase").textContent = vm.phase;
  el<HTMLSpanElement>("clock").textContent =
    `${vm.clock.toFixed(1)}s / ${vm.tMission.toFixed(0)}s`;
  el<HTMLProgressElement>("mission-progress").value = vm.missionProgress();
  const battery = vm.track.length ? `${vm.track[vm.track.length - 1].battery_pct}%` : "-";
  el<HTMLSpanElement>("battery").textContent = battery;
  el<HTMLSpanElement>("queue").textContent = String(vm.lastTick?.up_queue ?? 0);
  el<HTMLSpanElement>("connection").textContent = vm.connection;
}

function renderAll(): void {
  if (vm.revision === lastRendered) return;
  lastRendered = vm.revision;
  renderStatus();
  renderFeed();
  map.render(vm);
}

async function submit(request: CommandRequest): Promise<void> {
  try {
    const ack = await transport.submit(request);
    vm.noteSubmitted(ack.seq, request.event_ref);
    banner(`command #${ack.seq} accepted`);
  } catch (err) {
    if (err instanceof ValidationError) {
      el<HTMLSpanElement>(`err-${err.field}`).textContent = err.message;
    } else if (err instanceof ConflictError) {
      banner("no active run", "error");
    } else {
      banner(String(err), "error");
    }
  }
  renderAll();
}

function formFromInputs(): FormState {
  return {
    command: el<HTMLSelectElement>("f-command").value,
    distance_m: el<HTMLInputElement>("f-distance").value,
    angle_deg: el<HTMLInputElement>("f-angle").value,
    vertical_m: el<HTMLInputElement>("f-vertical").value,
    event_ref: selectedAlert,
  };
}

function wireForm(): void {
  el<HTMLButtonElement>("f-send").onclick = () => {
    for (const field of ["command", "distance_m", "angle_deg", "vertical_m"]) {
      el<HTMLSpanElement>(`err-${field}`).textContent = "";
    }
    const form = formFromInputs();
    const errors = validateForm(form);
    if (errors.length) {
      for (const e of errors) el<HTMLSpanElement>(`err-${e.field}`).textContent = e.error;
      return;
    }
    void submit(toRequest(form));
  };
  el<HTMLButtonElement>("f-investigate").onclick = () => {
    const alert = vm.alertFeed().find((a) => a.body.seq === selectedAlert);
    if (!alert) return banner("select an alert first", "error");
    const distance = Number(el<HTMLInputElement>("f-distance").value) || 10;
    const bearing = Number(el<HTMLInputElement>("f-angle").value) || 0;
    void submit(investigateShortcut(alert.body, distance, bearing));
  };
  el<HTMLButtonElement>("f-resume").onclick = () => {
    const alert = vm.alertFeed().find((a) => a.body.seq === selectedAlert);
    if (!alert) return banner("select an alert first", "error");
    void submit(resumeShortcut(alert.body));
  };
  el<HTMLButtonElement>("f-return").onclick = () => void submit(returnShortcut());
}

function start(): void {
  wireForm();
  Object.assign(el<HTMLSelectElement>("f-command"), {});
  transport.connect(
    (snapshot) => {
      vm.applySnapshot(snapshot);
      banner("connected");
      renderAll();
    },
    (event) => {
      vm.apply(event);
      renderAll();
    },
    () => {
      vm.disconnected();
      banner("disconnected, retrying...", "error");
      renderAll();
    },
  );
  emptyForm(); // defaults mirrored in the HTML inputs
}

start();
