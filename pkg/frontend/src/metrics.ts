/** Client-side metric accumulation over the frame stream. */

import { TelemetryFrame } from "./types.js";

/** Consecutive sigma=1 frames count as a single braking activation. */
export class SigmaCounter {
  private count = 0;
  private prev = 0;

  feed(sigma: 0 | 1): number {
    if (sigma === 1 && this.prev === 0) {
      this.count += 1;
    }
    this.prev = sigma;
    return this.count;
  }

  get value(): number {
    return this.count;
  }

  reset(): void {
    this.count = 0;
    this.prev = 0;
  }
}

export interface Dashboard {
  sigmaActivations: number;
  collisions: number;
  speed: number;
  avgSpeed: number;
  stage: string;
  /** Rolling window of recent speeds for the chart. */
  speedHistory: number[];
}

export class MetricsTracker {
  readonly sigma = new SigmaCounter();
  private history: number[] = [];
  private latest: TelemetryFrame | null = null;

  constructor(private historyLength: number = 200) {}

  feed(frame: TelemetryFrame): void {
    this.sigma.feed(frame.sigma);
    this.latest = frame;
    this.history.push(Math.abs(frame.pose.v));
    if (this.history.length > this.historyLength) {
      this.history.shift();
    }
  }

  dashboard(): Dashboard {
    const f = this.latest;
    return {
      sigmaActivations: this.sigma.value,
      collisions: f ? f.metrics.collisions : 0,
      speed: f ? f.pose.v : 0,
      avgSpeed: f ? f.metrics.avg_speed : 0,
      stage: f ? f.stage : "disconnected",
      speedHistory: [...this.history],
    };
  }
}
