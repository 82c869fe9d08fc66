import { ConsoleClient } from "./client.js";
import { decodeFrame } from "./frame.js";
import { drawOverlay, drawStale, OverlayToggles, PromptCountdown } from "./overlay.js";
import { TickMessage } from "./protocol.js";
import { clickPixel, fitFrame, ViewTransform } from "./viewport.js";

const canvas = document.querySelector<HTMLCanvasElement>("#view")!;
const status = document.querySelector<HTMLSpanElement>("#status")!;
const initBtn = document.querySelector<HTMLButtonElement>("#init")!;
const stopBtn = document.querySelector<HTMLButtonElement>("#stop")!;
const toggleBoxes = {
  centroid: document.querySelector<HTMLInputElement>("#show-centroid")!,
  badge: document.querySelector<HTMLInputElement>("#show-badge")!,
  alerts: document.querySelector<HTMLInputElement>("#show-alerts")!,
};

const url = new URLSearchParams(location.search).get("ws")
  ?? `ws://${location.hostname || "127.0.0.1"}:8765/ws`;
const client = new ConsoleClient(url);
const countdown = new PromptCountdown();

// offscreen buffer at frame resolution; the view canvas scales it up
const buffer = document.createElement("canvas");
const bufferCtx = buffer.getContext("2d")!;
const ctx = canvas.getContext("2d")!;

let lastTick: TickMessage | null = null;
let vt: ViewTransform | null = null;

function toggles(): OverlayToggles {
  return {
    centroid: toggleBoxes.centroid.checked,
    badge: toggleBoxes.badge.checked,
    alerts: toggleBoxes.alerts.checked,
  };
}

function resize(): void {
  canvas.width = canvas.clientWidth;
  canvas.height = canvas.clientHeight;
}

function render(): void {
  const tick = client.takeTick();
  if (tick !== null) lastTick = tick;

  ctx.fillStyle = "#101418";
  ctx.fillRect(0, 0, canvas.width, canvas.height);

  const hello = client.hello;
  if (hello !== null && lastTick !== null) {
    if (lastTick.frame_b64 !== undefined && tick !== null) {
      const rgba = decodeFrame(lastTick.frame_b64, hello.width, hello.height);
      buffer.width = rgba.width;
      buffer.height = rgba.height;
      bufferCtx.putImageData(new ImageData(rgba.data, rgba.width, rgba.height), 0, 0);
    }
    vt = fitFrame(hello.width, hello.height, canvas.width, canvas.height);
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(buffer, vt.offsetX, vt.offsetY,
                  hello.width * vt.scale, hello.height * vt.scale);
    const remaining = countdown.update(lastTick.tracker, lastTick.t,
                                       hello.prompt_window_s);
    drawOverlay(ctx, vt, lastTick, toggles(), remaining);
  }
  if (client.state === "stale") drawStale(ctx, canvas.width, canvas.height);

  const t = lastTick === null ? "-" : lastTick.t.toFixed(1);
  status.textContent = `${client.state}  ${hello?.scenario ?? "?"}/${hello?.mode ?? "?"}  t=${t} s`;
  requestAnimationFrame(render);
}

canvas.addEventListener("contextmenu", (ev) => ev.preventDefault());

canvas.addEventListener("mousedown", (ev) => {
  if (vt === null) return;
  if (ev.button !== 0 && ev.button !== 2) return;
  const rect = canvas.getBoundingClientRect();
  const px = clickPixel(vt, ev.clientX - rect.left, ev.clientY - rect.top);
  if (px === null) return; // letterbox bars and margins are dead
  client.sendClick(px.x, px.y, ev.button === 2 ? "right" : "left");
});

initBtn.addEventListener("click", () => client.sendInit());
stopBtn.addEventListener("click", () => client.sendStop());
window.addEventListener("resize", resize);

resize();
requestAnimationFrame(render);
