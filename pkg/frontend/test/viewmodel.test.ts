import { describe, expect, it } from "vitest";

import { ConsoleViewModel } from "../src/viewmodel.js";
import {
  AlertBody,
  CheckpointBody,
  GatewayEvent,
  Snapshot,
} from "../src/types.js";

function checkpoint(seq: number, x = 0, y = 0): CheckpointBody {
  return { seq, x_m: x, y_m: y, z_m: 2, heading_deg: 0, battery_pct: 99, packet_hex: "00" };
}

function alert(seq: number, sensitivity: 0 | 1 = 1): AlertBody {
  return { seq, sensitivity, channel: 16, values: [10, 13], packet_hex: "01" };
}

function emptySnapshot(overrides: Partial<Snapshot["body"]> = {}): Snapshot {
  return {
    type: "snapshot",
    t: 0,
    body: {
      phase: "AWAIT_START",
      tick: null,
      track: [],
      alerts: [],
      commands: [],
      t_mission: 120,
      running: true,
      ...overrides,
    },
  };
}

describe("ConsoleViewModel", () => {
  it("applies snapshot state", () => {
    const vm = new ConsoleViewModel();
    vm.applySnapshot(emptySnapshot({ phase: "ON_MISSION", track: [checkpoint(1)] }));
    expect(vm.phase).toBe("ON_MISSION");
    expect(vm.track).toHaveLength(1);
    expect(vm.tMission).toBe(120);
    expect(vm.connection).toBe("connected");
  });

  it("renders every checkpoint and alert in stream order", () => {
    const vm = new ConsoleViewModel();
    vm.applySnapshot(emptySnapshot());
    const events: GatewayEvent[] = [
      { type: "checkpoint", t: 5, body: checkpoint(1, 5, 0) },
      { type: "priority_alert", t: 33, body: alert(2) },
      { type: "checkpoint", t: 35, body: checkpoint(3, 35, 0) },
      { type: "priority_alert", t: 60, body: alert(4, 0) },
    ];
    for (const e of events) vm.apply(e);
    expect(vm.track.map((c) => c.seq)).toEqual([1, 3]);
    expect(vm.alertFeed().map((a) => a.body.seq)).toEqual([2, 4]);
    expect(vm.alertFeed()[0].body.sensitivity).toBe(1);
    expect(vm.clock).toBe(60);
  });

  it("phase changes update the banner state", () => {
    const vm = new ConsoleViewModel();
    vm.applySnapshot(emptySnapshot());
    vm.apply({ type: "phase_change", t: 5, body: { from: "AWAIT_START", to: "ON_MISSION", why: "start" } });
    expect(vm.phase).toBe("ON_MISSION");
  });

  it("ticks accumulate truth and predicted tracks", () => {
    const vm = new ConsoleViewModel();
    vm.applySnapshot(emptySnapshot());
    vm.apply({ type: "tick", t: 1, body: { pose: [1, 0, 2], heading: 0, mirror: [1.1, 0, 2], phase: "ON_MISSION", up_queue: 0 } });
    vm.apply({ type: "tick", t: 2, body: { pose: [2, 0, 2], heading: 0, mirror: [2.1, 0, 2], phase: "ON_MISSION", up_queue: 0 } });
    expect(vm.truth).toHaveLength(2);
    expect(vm.predicted[1][0]).toBeCloseTo(2.1);
    expect(vm.phase).toBe("ON_MISSION");
  });

  it("reload + snapshot resync equals continuous attendance", () => {
    // Live client sees the snapshot then events; a reloading client gets a
    // later snapshot carrying the same accumulated history.
    const live = new ConsoleViewModel();
    live.applySnapshot(emptySnapshot());
    live.apply({ type: "checkpoint", t: 5, body: checkpoint(1, 5, 0) });
    live.apply({ type: "priority_alert", t: 8, body: alert(2) });

    const reloaded = new ConsoleViewModel();
    reloaded.applySnapshot(
      emptySnapshot({ track: [checkpoint(1, 5, 0)], alerts: [alert(2)] }),
    );
    expect(reloaded.track).toEqual(live.track);
    expect(reloaded.alertFeed().map((a) => a.body.seq)).toEqual(
      live.alertFeed().map((a) => a.body.seq),
    );
  });

  it("pending command resolves on command_issued", () => {
    const vm = new ConsoleViewModel();
    vm.applySnapshot(emptySnapshot());
    vm.apply({ type: "priority_alert", t: 8, body: alert(2) });
    vm.noteSubmitted(7, 2);
    expect(vm.pending).toHaveLength(1);
    expect(vm.alertFeed()[0].answered).toBe(true);
    vm.apply({
      type: "command_issued", t: 9,
      body: { type: "control", command: "NEW_WAYPOINT", seq: 7, ack_seq: 2,
              distance_cm: 1000, angle_mdeg: 90000, vertical_cm: 0, packet_hex: "ff" },
    });
    expect(vm.pending).toHaveLength(0);
    expect(vm.commands.map((c) => c.seq)).toEqual([7]);
  });

  it("done and disconnect set connection states", () => {
    const vm = new ConsoleViewModel();
    vm.applySnapshot(emptySnapshot());
    vm.apply({ type: "done", t: 100, body: {} });
    expect(vm.connection).toBe("done");
    expect(vm.running).toBe(false);
    vm.disconnected();
    expect(vm.connection).toBe("disconnected");
  });

  it("mission progress is clamped", () => {
    const vm = new ConsoleViewModel();
    vm.applySnapshot(emptySnapshot({ t_mission: 100 }));
    vm.apply({ type: "tick", t: 250, body: { pose: [0, 0, 0], heading: 0, mirror: null, phase: "RETURNING", up_queue: 0 } });
    expect(vm.missionProgress()).toBe(1);
  });

  it("depth series mirrors checkpoint depths", () => {
    const vm = new ConsoleViewModel();
    vm.applySnapshot(emptySnapshot({ track: [checkpoint(1), { ...checkpoint(2), z_m: 4 }] }));
    expect(vm.depthSeries()).toEqual([[0, 2], [1, 4]]);
  });
});
