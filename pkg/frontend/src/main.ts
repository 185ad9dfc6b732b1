/** Entry point: wires the bridge client, input capture, metrics, and the
 * canvas renderer together. All control logic stays server-side; this
 * file only forwards device state and draws telemetry.
 */

import { TeleopClient, fetchWorld } from "./client.js";
import {
  DeviceState,
  RampState,
  attachKeyboard,
  buildCmd,
  pollGamepad,
  stepInput,
} from "./input.js";
import { MetricsTracker } from "./metrics.js";
import { ViewState, defaultView, drawDisconnected, renderFrame } from "./render.js";

const CMD_HZ = 20;

async function start(): Promise<void> {
  const canvas = document.getElementById("scene") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("no 2d context");
  const hud = document.getElementById("hud") as HTMLElement;
  const methodSelect = document.getElementById("method") as HTMLSelectElement;
  const followToggle = document.getElementById("follow") as HTMLInputElement;

  const base = `${location.protocol}//${location.host}`;
  const world = await fetchWorld(base);
  const view: ViewState = defaultView(world, canvas.width, canvas.height);

  const wsUrl = `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/ws`;
  const client = new TeleopClient(wsUrl);
  client.connect();

  const device: DeviceState = { keys: new Set(), gamepadAxes: null };
  attachKeyboard(device);
  let ramp: RampState = { throttle: 0, turn: 0 };
  const metrics = new MetricsTracker();
  let lastTick = -1;

  methodSelect.addEventListener("change", () => client.setMethod(methodSelect.value));
  followToggle.addEventListener("change", () => {
    view.followRobot = followToggle.checked;
  });

  setInterval(() => {
    pollGamepad(device);
    ramp = stepInput(ramp, device, 1 / CMD_HZ);
    client.sendCmd(buildCmd(ramp));
  }, 1000 / CMD_HZ);

  const draw = () => {
    const frame = client.latestFrame;
    if (frame && frame.tick !== lastTick) {
      metrics.feed(frame);
      lastTick = frame.tick;
    }
    if (frame && !client.isStale()) {
      renderFrame(ctx, frame, world, view);
      const d = metrics.dashboard();
      hud.textContent =
        `stage ${d.stage} | sigma activations ${d.sigmaActivations} | ` +
        `collisions ${d.collisions} | speed ${d.speed.toFixed(2)} m/s | ` +
        `avg ${d.avgSpeed.toFixed(2)} m/s`;
    } else {
      drawDisconnected(ctx, view);
      hud.textContent = `status: ${client.status}`;
    }
    requestAnimationFrame(draw);
  };
  requestAnimationFrame(draw);
}

start().catch((err) => {
  console.error(err);
  const hud = document.getElementById("hud");
  if (hud) hud.textContent = String(err);
});
