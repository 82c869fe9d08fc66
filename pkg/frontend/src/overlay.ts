/** Overlay layer: centroid marker, state badge, alert banner, init countdown. */
import { TickMessage } from "./protocol.js";
import { ViewTransform, frameToScreen } from "./viewport.js";

export interface OverlayToggles {
  centroid: boolean;
  badge: boolean;
  alerts: boolean;
}

export function badgeText(tick: TickMessage): string {
  const tracker = tick.tracker ?? "-";
  const dist = tick.confirmed_distance;
  const obstacle = dist === null ? "" : `  obstacle ${dist.toFixed(2)} m`;
  return `${tick.behavior} / ${tracker}  depth ${tick.depth.toFixed(2)} m${obstacle}`;
}

/**
 * Remaining seconds of the prompt window while the tracker sits in init or
 * correct, null otherwise.  Derived purely from tick times so the countdown
 * stays honest under any render rate.
 */
export class PromptCountdown {
  private enteredAt: number | null = null;

  update(tracker: string | null, t: number, windowS: number): number | null {
    if (tracker !== "init" && tracker !== "correct") {
      this.enteredAt = null;
      return null;
    }
    if (this.enteredAt === null) this.enteredAt = t;
    return Math.max(0, windowS - (t - this.enteredAt));
  }
}

export function drawOverlay(
  ctx: CanvasRenderingContext2D,
  vt: ViewTransform,
  tick: TickMessage,
  toggles: OverlayToggles,
  countdown: number | null,
): void {
  if (toggles.centroid && tick.centroid !== null) {
    const p = frameToScreen(vt, tick.centroid[0], tick.centroid[1]);
    ctx.strokeStyle = "#3dd13d";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    ctx.moveTo(p.x - 8, p.y);
    ctx.lineTo(p.x + 8, p.y);
    ctx.moveTo(p.x, p.y - 8);
    ctx.lineTo(p.x, p.y + 8);
    ctx.stroke();
    ctx.strokeRect(p.x - 14, p.y - 14, 28, 28);
  }
  if (toggles.badge) {
    ctx.font = "13px monospace";
    ctx.fillStyle = "rgba(0, 0, 0, 0.55)";
    ctx.fillRect(vt.offsetX, vt.offsetY, 320, 22);
    ctx.fillStyle = "#e8e8e8";
    let label = badgeText(tick);
    if (countdown !== null) label += `  window ${countdown.toFixed(1)} s`;
    ctx.fillText(label, vt.offsetX + 6, vt.offsetY + 15);
  }
  if (toggles.alerts && tick.alerts.length > 0) {
    const w = vt.frameW * vt.scale;
    ctx.fillStyle = "rgba(200, 60, 30, 0.85)";
    ctx.fillRect(vt.offsetX, vt.offsetY + vt.frameH * vt.scale - 24, w, 24);
    ctx.fillStyle = "#fff";
    ctx.font = "13px monospace";
    ctx.fillText(`alert: ${tick.alerts.join(", ")}`, vt.offsetX + 6, vt.offsetY + vt.frameH * vt.scale - 7);
  }
}

export function drawStale(ctx: CanvasRenderingContext2D, w: number, h: number): void {
  ctx.fillStyle = "rgba(20, 20, 20, 0.45)";
  ctx.fillRect(0, 0, w, h);
  ctx.fillStyle = "#f0b429";
  ctx.font = "16px monospace";
  ctx.fillText("STALE - reconnecting", 12, 24);
}
