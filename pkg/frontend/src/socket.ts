// Reconnecting frame stream. On every (re)connect the URL carries the last
// applied seq, so the server replays exactly the missed frames; the view's
// dedupe-by-seq makes overlap harmless.

import type { Frame } from "./types.js";

export interface WsLike {
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onopen: (() => void) | null;
  close(): void;
}

export type WsFactory = (url: string) => WsLike;

export interface StreamOptions {
  wsFactory?: WsFactory;
  reconnectDelayMs?: number;
  maxDelayMs?: number;
}

export class GameStream {
  private readonly urlFor: (lastSeq: number) => string;
  private readonly onFrame: (frame: Frame) => void;
  private readonly factory: WsFactory;
  private readonly baseDelay: number;
  private readonly maxDelay: number;
  private delay: number;
  private ws: WsLike | null = null;
  private stopped = false;
  private timer: ReturnType<typeof setTimeout> | null = null;
  lastSeq = 0;
  connects = 0;

  constructor(
    urlFor: (lastSeq: number) => string,
    onFrame: (frame: Frame) => void,
    options: StreamOptions = {},
  ) {
    this.urlFor = urlFor;
    this.onFrame = onFrame;
    this.factory = options.wsFactory ?? ((url) => new WebSocket(url) as unknown as WsLike);
    this.baseDelay = options.reconnectDelayMs ?? 250;
    this.maxDelay = options.maxDelayMs ?? 10_000;
    this.delay = this.baseDelay;
  }

  connect(): void {
    if (this.stopped) return;
    this.connects += 1;
    const ws = this.factory(this.urlFor(this.lastSeq));
    this.ws = ws;
    ws.onopen = () => {
      this.delay = this.baseDelay;
    };
    ws.onmessage = (event) => {
      const frame = JSON.parse(String(event.data)) as Frame;
      if (frame.seq > this.lastSeq) this.lastSeq = frame.seq;
      this.onFrame(frame);
    };
    ws.onclose = () => {
      this.ws = null;
      if (this.stopped) return;
      this.timer = setTimeout(() => this.connect(), this.delay);
      this.delay = Math.min(this.delay * 2, this.maxDelay);
    };
  }

  close(): void {
    this.stopped = true;
    if (this.timer) clearTimeout(this.timer);
    this.ws?.close();
    this.ws = null;
  }
}
