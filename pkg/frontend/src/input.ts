/** Keyboard and gamepad capture.
 *
 * The outgoing command is a pure function of the captured device state:
 * nothing here looks at frames, obstacles, or any other telemetry.
 */

import { CmdMessage } from "./types.js";

export const GAMEPAD_DEADZONE = 0.1;

export interface DeviceState {
  /** Currently held keys, by KeyboardEvent.key (lowercased). */
  keys: Set<string>;
  /** Gamepad left-stick axes in [-1, 1], or null when no pad is attached. */
  gamepadAxes: [number, number] | null;
}

export interface RampState {
  throttle: number;
  turn: number;
}

const FORWARD = ["arrowup", "w"];
const BACKWARD = ["arrowdown", "s"];
const LEFT = ["arrowleft", "a"];
const RIGHT = ["arrowright", "d"];

function keyAxis(keys: Set<string>, positive: string[], negative: string[]): number {
  const pos = positive.some((k) => keys.has(k)) ? 1 : 0;
  const neg = negative.some((k) => keys.has(k)) ? 1 : 0;
  return pos - neg;
}

export function applyDeadzone(x: number, deadzone: number = GAMEPAD_DEADZONE): number {
  return Math.abs(x) < deadzone ? 0 : x;
}

const clamp1 = (x: number) => Math.max(-1, Math.min(1, x));

/**
 * Advance the ramped command by dt seconds toward what the devices ask for.
 *
 * Keys ramp linearly to their target over rampSeconds and decay back the
 * same way when released; gamepad sticks map linearly (after the deadzone)
 * and override the keyboard while displaced.
 */
export function stepInput(
  ramp: RampState,
  device: DeviceState,
  dt: number,
  rampSeconds: number = 0.3
): RampState {
  const pad = device.gamepadAxes;
  if (pad !== null) {
    const turn = applyDeadzone(-pad[0]);
    const throttle = applyDeadzone(-pad[1]);
    if (turn !== 0 || throttle !== 0) {
      return { throttle: clamp1(throttle), turn: clamp1(turn) };
    }
  }
  const targetThrottle = keyAxis(device.keys, FORWARD, BACKWARD);
  const targetTurn = keyAxis(device.keys, LEFT, RIGHT);
  const maxStep = rampSeconds > 0 ? dt / rampSeconds : 2;
  const toward = (current: number, target: number) =>
    clamp1(current + Math.max(-maxStep, Math.min(maxStep, target - current)));
  return {
    throttle: toward(ramp.throttle, targetThrottle),
    turn: toward(ramp.turn, targetTurn),
  };
}

/** The wire message for the current ramp state; pure. */
export function buildCmd(ramp: RampState): CmdMessage {
  return { type: "cmd", throttle: clamp1(ramp.throttle), turn: clamp1(ramp.turn) };
}

/** Wires DOM listeners into a DeviceState; browser-only. */
export function attachKeyboard(state: DeviceState, target: EventTarget = window): () => void {
  const down = (e: Event) => state.keys.add((e as KeyboardEvent).key.toLowerCase());
  const up = (e: Event) => state.keys.delete((e as KeyboardEvent).key.toLowerCase());
  const blur = () => state.keys.clear();
  target.addEventListener("keydown", down);
  target.addEventListener("keyup", up);
  target.addEventListener("blur", blur);
  return () => {
    target.removeEventListener("keydown", down);
    target.removeEventListener("keyup", up);
    target.removeEventListener("blur", blur);
  };
}

/** Polls the first connected gamepad into the DeviceState; browser-only. */
export function pollGamepad(state: DeviceState): void {
  const pads = navigator.getGamepads?.() ?? [];
  const pad = pads.find((p) => p !== null);
  state.gamepadAxes = pad ? [pad.axes[0] ?? 0, pad.axes[1] ?? 0] : null;
}
