import { describe, expect, it } from "vitest";

import {
  emptyForm,
  investigateShortcut,
  resumeShortcut,
  returnShortcut,
  toRequest,
  validateForm,
} from "../src/commandform.js";
import { AlertBody } from "../src/types.js";

const ALERT: AlertBody = { seq: 3, sensitivity: 1, channel: 16, values: [10, 13] };

describe("validateForm", () => {
  it("accepts defaults", () => {
    expect(validateForm(emptyForm())).toEqual([]);
  });

  it("rejects out-of-range angle with the field name", () => {
    const form = { ...emptyForm(), angle_deg: "500" };
    const errors = validateForm(form);
    expect(errors).toHaveLength(1);
    expect(errors[0].field).toBe("angle_deg");
  });

  it("angle boundary mirrors the gateway: 180 ok, -180 not", () => {
    expect(validateForm({ ...emptyForm(), angle_deg: "180" })).toEqual([]);
    expect(validateForm({ ...emptyForm(), angle_deg: "-180" })).toHaveLength(1);
  });

  it("rejects unknown command", () => {
    const errors = validateForm({ ...emptyForm(), command: "WARP" });
    expect(errors[0].field).toBe("command");
  });

  it("rejects non-numeric fields", () => {
    const errors = validateForm({ ...emptyForm(), distance_m: "ten" });
    expect(errors[0].field).toBe("distance_m");
  });

  it("rejects distances beyond the wire range", () => {
    const errors = validateForm({ ...emptyForm(), distance_m: "30000000" });
    expect(errors[0].field).toBe("distance_m");
  });
});

describe("toRequest", () => {
  it("converts numeric fields and keeps operator units", () => {
    const req = toRequest({
      command: "NEW_WAYPOINT",
      distance_m: "10",
      angle_deg: "90",
      vertical_m: "0",
      event_ref: 3,
    });
    expect(req).toEqual({
      command: "NEW_WAYPOINT",
      distance_m: 10,
      angle_deg: 90,
      vertical_m: 0,
      event_ref: 3,
    });
  });

  it("throws on invalid form", () => {
    expect(() => toRequest({ ...emptyForm(), angle_deg: "999" })).toThrow(/angle_deg/);
  });
});

describe("shortcuts", () => {
  it("investigate binds alert and bearing/distance", () => {
    const req = investigateShortcut(ALERT, 10, 90);
    expect(req.command).toBe("NEW_WAYPOINT");
    expect(req.distance_m).toBe(10);
    expect(req.angle_deg).toBe(90);
    expect(req.event_ref).toBe(3);
  });

  it("resume binds the alert", () => {
    const req = resumeShortcut(ALERT);
    expect(req.command).toBe("RESUME_ORIGINAL");
    expect(req.event_ref).toBe(3);
  });

  it("return is mission-level", () => {
    const req = returnShortcut();
    expect(req.command).toBe("RETURN");
    expect(req.event_ref).toBeNull();
  });
});
