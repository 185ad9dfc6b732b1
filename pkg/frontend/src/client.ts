/** Websocket client for the teleoperation bridge.
 *
 * Stores only the latest frame: rendering skips old frames, it never
 * queues them.
 */

import { CmdMessage, TelemetryFrame, WorldInfo, isTelemetryFrame } from "./types.js";

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

export class TeleopClient {
  private ws: WebSocket | null = null;
  latestFrame: TelemetryFrame | null = null;
  lastFrameAt = 0;
  status: ConnectionStatus = "disconnected";

  constructor(private url: string, private now: () => number = () => Date.now()) {}

  connect(): void {
    this.status = "connecting";
    this.ws = new WebSocket(this.url);
    this.ws.onopen = () => {
      this.status = "connected";
    };
    this.ws.onmessage = (event: MessageEvent) => {
      let msg: unknown;
      try {
        msg = JSON.parse(event.data as string);
      } catch {
        return;
      }
      if (isTelemetryFrame(msg)) {
        this.latestFrame = msg;
        this.lastFrameAt = this.now();
      }
    };
    this.ws.onclose = () => {
      this.status = "disconnected";
    };
    this.ws.onerror = () => {
      this.status = "disconnected";
    };
  }

  /** True when no frame arrived for over a second. */
  isStale(): boolean {
    return this.latestFrame === null || this.now() - this.lastFrameAt > 1000;
  }

  sendCmd(cmd: CmdMessage): void {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(JSON.stringify(cmd));
    }
  }

  setMethod(method: string): void {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(JSON.stringify({ type: "set_method", method }));
    }
  }

  close(): void {
    this.ws?.close();
  }
}

export async function fetchWorld(baseUrl: string): Promise<WorldInfo> {
  const res = await fetch(`${baseUrl}/world`);
  if (!res.ok) {
    throw new Error(`GET /world failed: ${res.status}`);
  }
  return (await res.json()) as WorldInfo;
}
