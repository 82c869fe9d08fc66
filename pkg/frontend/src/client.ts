/**
 * Websocket client with a size-1 tick slot (latest wins, mirroring the
 * stack's frame buffer contract) and automatic reconnect.  While the socket
 * is down the state reads "stale" so the UI can say so instead of silently
 * showing an old frame.
 */
import {
  Button,
  ClientMessage,
  HelloMessage,
  TickMessage,
  parseServerMessage,
} from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientOptions {
  socketFactory?: SocketFactory;
  reconnectDelayMs?: number;
  debounceMs?: number;
  now?: () => number;
  schedule?: (fn: () => void, ms: number) => void;
}

export type ConnectionState = "connecting" | "live" | "stale" | "done";

const CLICK_DEBOUNCE_MS = 50; // same gate the tracker applies upstream

export class ConsoleClient {
  hello: HelloMessage | null = null;
  state: ConnectionState = "connecting";
  /** Fired after any state or slot change; render loops hang off this. */
  onchange: (() => void) | null = null;

  private sock: SocketLike | null = null;
  private slot: TickMessage | null = null;
  private lastClickMs = -Infinity;
  private readonly factory: SocketFactory;
  private readonly reconnectDelayMs: number;
  private readonly debounceMs: number;
  private readonly now: () => number;
  private readonly schedule: (fn: () => void, ms: number) => void;

  constructor(private readonly url: string, opts: ClientOptions = {}) {
    this.factory = opts.socketFactory
      ?? ((u) => new (globalThis as { WebSocket: new (url: string) => SocketLike }).WebSocket(u));
    this.reconnectDelayMs = opts.reconnectDelayMs ?? 1000;
    this.debounceMs = opts.debounceMs ?? CLICK_DEBOUNCE_MS;
    this.now = opts.now ?? (() => Date.now());
    this.schedule = opts.schedule ?? ((fn, ms) => setTimeout(fn, ms));
    this.connect();
  }

  /** Newest tick since the last call; intermediate ticks are dropped. */
  takeTick(): TickMessage | null {
    const tick = this.slot;
    this.slot = null;
    return tick;
  }

  /**
   * Send a click in frame pixels.  Returns false when the local debounce or
   * a dead socket swallowed it.  Right clicks pass through untouched: the
   * correction gesture is recognized upstream, never here.
   */
  sendClick(x: number, y: number, button: Button): boolean {
    const t = this.now();
    if (t - this.lastClickMs < this.debounceMs) return false;
    this.lastClickMs = t;
    return this.send({ type: "click", x, y, button });
  }

  sendInit(): boolean {
    return this.send({ type: "init" });
  }

  sendStop(): boolean {
    return this.send({ type: "stop" });
  }

  private send(msg: ClientMessage): boolean {
    if (this.state !== "live" || this.sock === null) return false;
    this.sock.send(JSON.stringify(msg));
    return true;
  }

  private connect(): void {
    const sock = this.factory(this.url);
    this.sock = sock;
    sock.onopen = () => {
      this.state = "live";
      this.emit();
    };
    sock.onmessage = (ev) => this.handle(String(ev.data));
    sock.onclose = () => {
      if (this.state === "done") return;
      this.state = "stale";
      this.emit();
      this.schedule(() => this.connect(), this.reconnectDelayMs);
    };
  }

  private handle(raw: string): void {
    const msg = parseServerMessage(raw);
    if (msg === null) return;
    if (msg.type === "hello") {
      this.hello = msg;
    } else if (msg.type === "tick") {
      this.slot = msg;
    } else {
      this.state = "done";
      this.sock?.close();
    }
    this.emit();
  }

  private emit(): void {
    this.onchange?.();
  }
}
