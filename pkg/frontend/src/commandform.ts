/** Command entry: client-side validation mirroring the gateway's rules,
 * plus the investigate/resume/return shortcuts bound to a selected alert.
 * Units here are operator units (meters, degrees); the gateway converts
 * to wire units. */

import { AlertBody, CommandRequest, CommandName, COMMANDS } from "./types.js";

export interface FieldError {
  field: string;
  error: string;
}

export interface FormState {
  command: string;
  distance_m: string;
  angle_deg: string;
  vertical_m: string;
  event_ref: number | null;
}

export function emptyForm(): FormState {
  return { command: "CONTINUE", distance_m: "0", angle_deg: "0", vertical_m: "0", event_ref: null };
}

const MAX_ABS_METERS = 20_000_000; // i32 centimeter range on the wire

function parseNumber(field: string, text: string, errors: FieldError[]): number {
  const value = Number(text);
  if (text.trim() === "" || !Number.isFinite(value)) {
    errors.push({ field, error: "must be a number" });
    return NaN;
  }
  return value;
}

export function validateForm(form: FormState): FieldError[] {
  const errors: FieldError[] = [];
  if (!(COMMANDS as readonly string[]).includes(form.command)) {
    errors.push({ field: "command", error: `unknown command ${form.command}` });
  }
  const distance = parseNumber("distance_m", form.distance_m, errors);
  const angle = parseNumber("angle_deg", form.angle_deg, errors);
  const vertical = parseNumber("vertical_m", form.vertical_m, errors);
  if (Number.isFinite(distance) && Math.abs(distance) > MAX_ABS_METERS) {
    errors.push({ field: "distance_m", error: "out of range" });
  }
  if (Number.isFinite(angle) && !(angle > -180 && angle <= 180)) {
    errors.push({ field: "angle_deg", error: "must be in (-180, 180]" });
  }
  if (Number.isFinite(vertical) && Math.abs(vertical) > MAX_ABS_METERS) {
    errors.push({ field: "vertical_m", error: "out of range" });
  }
  return errors;
}

export function toRequest(form: FormState): CommandRequest {
  const errors = validateForm(form);
  if (errors.length) {
    throw new Error(`invalid form: ${errors.map((e) => e.field).join(", ")}`);
  }
  return {
    command: form.command as CommandName,
    distance_m: Number(form.distance_m),
    angle_deg: Number(form.angle_deg),
    vertical_m: Number(form.vertical_m),
    event_ref: form.event_ref,
  };
}

/** "Investigate" an alert: head `bearingDeg` off the current heading for
 * `distanceM` meters. */
export function investigateShortcut(
  alert: AlertBody,
  distanceM: number,
  bearingDeg: number,
): CommandRequest {
  return {
    command: "NEW_WAYPOINT",
    distance_m: distanceM,
    angle_deg: bearingDeg,
    vertical_m: 0,
    event_ref: alert.seq,
  };
}

export function resumeShortcut(alert: AlertBody): CommandRequest {
  return {
    command: "RESUME_ORIGINAL",
    distance_m: 0,
    angle_deg: 0,
    vertical_m: 0,
    event_ref: alert.seq,
  };
}

export function returnShortcut(): CommandRequest {
  return { command: "RETURN", distance_m: 0, angle_deg: 0, vertical_m: 0, event_ref: null };
}
