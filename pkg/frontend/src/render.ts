/** Canvas 2D rendering; a pure function of (frame, world, view).
 *
 * No simulation or control logic lives here: everything drawn comes
 * straight from the latest telemetry frame and the static world document.
 */

import { TelemetryFrame, WorldInfo } from "./types.js";

export interface ViewState {
  panX: number;
  panY: number;
  zoom: number; // pixels per meter
  followRobot: boolean;
  width: number;
  height: number;
}

export const STAGE_COLORS: Record<string, string> = {
  Maintain: "#2e9e4f",
  Avoid: "#e0a426",
  Brake: "#d33a2c",
};

export function defaultView(world: WorldInfo, width: number, height: number): ViewState {
  const [xmin, ymin, xmax, ymax] = world.bounds;
  const zoom = Math.min(width / (xmax - xmin), height / (ymax - ymin)) * 0.9;
  return {
    panX: (xmin + xmax) / 2,
    panY: (ymin + ymax) / 2,
    zoom,
    followRobot: false,
    width,
    height,
  };
}

/** World coordinates to canvas pixels (y up in world, down on canvas). */
export function worldToScreen(
  view: ViewState,
  x: number,
  y: number
): [number, number] {
  return [
    view.width / 2 + (x - view.panX) * view.zoom,
    view.height / 2 - (y - view.panY) * view.zoom,
  ];
}

/** Linear speed colormap pinned to [0, vMax]: blue (slow) to red (fast). */
export function speedColor(v: number, vMax: number): string {
  const t = Math.max(0, Math.min(1, Math.abs(v) / Math.max(vMax, 1e-9)));
  const r = Math.round(40 + 215 * t);
  const b = Math.round(220 - 180 * t);
  return `rgb(${r}, 80, ${b})`;
}

function drawSegments(
  ctx: CanvasRenderingContext2D,
  world: WorldInfo,
  view: ViewState
): void {
  for (const seg of world.segments) {
    ctx.beginPath();
    ctx.setLineDash(seg.material === "glass" ? [6, 6] : []);
    ctx.strokeStyle = seg.material === "glass" ? "#7ab7d8" : "#333333";
    ctx.lineWidth = 3;
    ctx.moveTo(...worldToScreen(view, seg.x1, seg.y1));
    ctx.lineTo(...worldToScreen(view, seg.x2, seg.y2));
    ctx.stroke();
  }
  ctx.setLineDash([]);
}

function drawActors(
  ctx: CanvasRenderingContext2D,
  world: WorldInfo,
  view: ViewState
): void {
  for (const actor of world.actors) {
    const [cx, cy] = worldToScreen(view, actor.x, actor.y);
    ctx.beginPath();
    ctx.fillStyle = "#b06fc4";
    ctx.arc(cx, cy, actor.radius * view.zoom, 0, 2 * Math.PI);
    ctx.fill();
  }
}

function drawRobot(
  ctx: CanvasRenderingContext2D,
  frame: TelemetryFrame,
  world: WorldInfo,
  view: ViewState
): void {
  const { x, y, theta } = frame.pose;
  const [cx, cy] = worldToScreen(view, x, y);
  const r = world.meta.footprint_radius * view.zoom;
  ctx.beginPath();
  ctx.fillStyle = frame.collided ? "#d33a2c" : "#4a6fb5";
  ctx.arc(cx, cy, r, 0, 2 * Math.PI);
  ctx.fill();
  ctx.beginPath();
  ctx.strokeStyle = "#ffffff";
  ctx.lineWidth = 2;
  ctx.moveTo(cx, cy);
  ctx.lineTo(cx + r * Math.cos(theta), cy - r * Math.sin(theta));
  ctx.stroke();
}

function drawLidar(
  ctx: CanvasRenderingContext2D,
  frame: TelemetryFrame,
  view: ViewState
): void {
  // Lidar points arrive in the robot body frame.
  const { x, y, theta } = frame.pose;
  const c = Math.cos(theta);
  const s = Math.sin(theta);
  ctx.fillStyle = "#d96a3c";
  for (const [px, py] of frame.lidar_points) {
    const [sx, sy] = worldToScreen(view, x + c * px - s * py, y + s * px + c * py);
    ctx.fillRect(sx - 1, sy - 1, 2, 2);
  }
}

function drawTrajectory(
  ctx: CanvasRenderingContext2D,
  frame: TelemetryFrame,
  world: WorldInfo,
  view: ViewState
): void {
  const { x, y, theta } = frame.pose;
  const c = Math.cos(theta);
  const s = Math.sin(theta);
  ctx.strokeStyle = speedColor(frame.emitted.v, world.meta.v_max);
  ctx.lineWidth = 2;
  ctx.beginPath();
  frame.trajectory.forEach(([px, py], i) => {
    const [sx, sy] = worldToScreen(view, x + c * px - s * py, y + s * px + c * py);
    if (i === 0) ctx.moveTo(sx, sy);
    else ctx.lineTo(sx, sy);
  });
  ctx.stroke();
}

/** Velocity-space inset: the dynamic window box with the emitted command. */
function drawWindowInset(
  ctx: CanvasRenderingContext2D,
  frame: TelemetryFrame,
  world: WorldInfo,
  view: ViewState
): void {
  if (!frame.window) return;
  const w = 120;
  const h = 120;
  const x0 = view.width - w - 12;
  const y0 = 12;
  ctx.strokeStyle = "#666666";
  ctx.strokeRect(x0, y0, w, h);
  const { v_max, omega_max } = world.meta;
  const toInset = (v: number, omega: number): [number, number] => [
    x0 + ((omega + omega_max) / (2 * omega_max)) * w,
    y0 + h - ((v + v_max) / (2 * v_max)) * h,
  ];
  const [ax, ay] = toInset(frame.window.v_lower, frame.window.omega_lower);
  const [bx, by] = toInset(frame.window.v_upper, frame.window.omega_upper);
  ctx.strokeStyle = STAGE_COLORS[frame.stage] ?? "#666666";
  ctx.strokeRect(Math.min(ax, bx), Math.min(ay, by), Math.abs(bx - ax), Math.abs(by - ay));
  const [ex, ey] = toInset(frame.emitted.v, frame.emitted.omega);
  ctx.beginPath();
  ctx.fillStyle = "#111111";
  ctx.arc(ex, ey, 3, 0, 2 * Math.PI);
  ctx.fill();
}

function drawBadge(ctx: CanvasRenderingContext2D, frame: TelemetryFrame): void {
  ctx.fillStyle = STAGE_COLORS[frame.stage] ?? "#999999";
  ctx.fillRect(12, 12, 110, 28);
  ctx.fillStyle = "#ffffff";
  ctx.font = "16px sans-serif";
  ctx.fillText(frame.stage, 20, 32);
}

export function renderFrame(
  ctx: CanvasRenderingContext2D,
  frame: TelemetryFrame,
  world: WorldInfo,
  viewIn: ViewState
): void {
  const view = viewIn.followRobot
    ? { ...viewIn, panX: frame.pose.x, panY: frame.pose.y }
    : viewIn;
  ctx.clearRect(0, 0, view.width, view.height);
  drawSegments(ctx, world, view);
  drawActors(ctx, world, view);
  drawLidar(ctx, frame, view);
  drawTrajectory(ctx, frame, world, view);
  drawRobot(ctx, frame, world, view);
  drawWindowInset(ctx, frame, world, view);
  drawBadge(ctx, frame);
}

export function drawDisconnected(ctx: CanvasRenderingContext2D, view: ViewState): void {
  ctx.fillStyle = "rgba(0, 0, 0, 0.5)";
  ctx.fillRect(0, 0, view.width, view.height);
  ctx.fillStyle = "#ffffff";
  ctx.font = "24px sans-serif";
  ctx.fillText("disconnected", view.width / 2 - 70, view.height / 2);
}
