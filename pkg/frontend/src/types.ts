/** JSON shapes exchanged with the teleoperation bridge. */

export interface Command {
  v: number;
  omega: number;
}

export interface TelemetryFrame {
  type: "frame";
  tick: number;
  sim_time: number;
  pose: { x: number; y: number; theta: number; v: number; omega: number };
  lidar_points: [number, number][];
  stage: "Maintain" | "Avoid" | "Brake";
  sigma: 0 | 1;
  upstream: Command;
  emitted: Command;
  trajectory: [number, number][];
  window: {
    v_lower: number;
    v_upper: number;
    omega_lower: number;
    omega_upper: number;
  } | null;
  collided: boolean;
  metrics: {
    steps: number;
    collisions: number;
    sigma_activations: number;
    avg_speed: number;
  };
}

export interface Segment {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
  material: "solid" | "glass";
}

export interface WorldInfo {
  bounds: [number, number, number, number];
  segments: Segment[];
  actors: { x: number; y: number; radius: number }[];
  spawn: { x: number; y: number; theta: number };
  meta: {
    v_max: number;
    omega_max: number;
    t_r: number;
    footprint_radius: number;
    method: string;
  };
}

export interface CmdMessage {
  type: "cmd";
  throttle: number;
  turn: number;
}

export function isTelemetryFrame(msg: unknown): msg is TelemetryFrame {
  return (
    typeof msg === "object" && msg !== null && (msg as { type?: string }).type === "frame"
  );
}
