/**
 * Wire protocol v1 for the console bridge (`flipperbot serve`, endpoint /ws).
 *
 * The console is a thin client: everything it sends is a raw operator event
 * in frame-pixel coordinates.  Prompt windows, the two-right-click gesture
 * and debounce-as-policy all live upstream in the tracker; the console only
 * mirrors the 50 ms debounce locally so a bouncy mouse does not waste sends.
 */

export const PROTOCOL_VERSION = 1;

export interface HelloMessage {
  type: "hello";
  v: number;
  width: number;
  height: number;
  scenario: string | null;
  mode: string;
  prompt_window_s: number;
}

export interface TickMessage {
  type: "tick";
  t: number;
  depth: number;
  behavior: string;
  tracker: string | null;
  centroid: [number, number] | null;
  alerts: string[];
  confirmed_distance: number | null;
  frame_b64?: string;
}

export interface DoneMessage {
  type: "done";
}

export type ServerMessage = HelloMessage | TickMessage | DoneMessage;

export type Button = "left" | "right";

export interface ClickMessage {
  type: "click";
  x: number;
  y: number;
  button: Button;
}

export interface InitMessage {
  type: "init";
}

export interface StopMessage {
  type: "stop";
}

export type ClientMessage = ClickMessage | InitMessage | StopMessage;

/**
 * Parse one server frame.  Returns null for garbage and for unknown message
 * types, so a v1 console survives additive protocol changes instead of
 * throwing mid-stream.
 */
export function parseServerMessage(raw: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const type = (data as { type?: unknown }).type;
  if (type === "hello" || type === "tick" || type === "done") {
    return data as ServerMessage;
  }
  return null;
}

export function helloCompatible(hello: HelloMessage): boolean {
  return hello.v === PROTOCOL_VERSION;
}
