/** WebSocket stream client with automatic reconnection.
 *
 * Every (re)connection sends "reset" before any frame, so the server's
 * sliding window never mixes frames from different connection epochs.
 * Frames produced while disconnected are dropped, not queued: stale poses
 * must never arrive late on a live stream.
 */

import { encodeFrame, encodeReset, parseServerMessage } from './protocol.js';
import type { Frame, ServerMessage } from './protocol.js';

export type ConnectionStatus = 'connecting' | 'connected' | 'disconnected';

/** The subset of the WebSocket surface the client touches (mockable). */
export interface WebSocketLike {
  readyState: number;
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
}

const OPEN = 1;

export interface StreamClientHandlers {
  onMessage: (message: ServerMessage) => void;
  onStatus: (status: ConnectionStatus) => void;
}

export interface StreamClientOptions {
  factory?: (url: string) => WebSocketLike;
  schedule?: (fn: () => void, ms: number) => unknown;
  cancel?: (handle: unknown) => void;
  reconnectDelayMs?: number;
  maxReconnectDelayMs?: number;
  diagnostic?: (detail: string) => void;
}

export class StreamClient {
  readonly url: string;
  framesSent = 0;

  private readonly handlers: StreamClientHandlers;
  private readonly factory: (url: string) => WebSocketLike;
  private readonly schedule: (fn: () => void, ms: number) => unknown;
  private readonly cancel: (handle: unknown) => void;
  private readonly baseDelayMs: number;
  private readonly maxDelayMs: number;
  private readonly diagnostic: (detail: string) => void;

  private socket: WebSocketLike | null = null;
  private nextSeqNo = 0;
  private currentDelayMs: number;
  private reconnectHandle: unknown = null;
  private closed = false;

  constructor(url: string, handlers: StreamClientHandlers, options: StreamClientOptions = {}) {
    this.url = url;
    this.handlers = handlers;
    this.factory = options.factory ?? ((u) => new WebSocket(u) as unknown as WebSocketLike);
    this.schedule = options.schedule ?? ((fn, ms) => setTimeout(fn, ms));
    this.cancel = options.cancel ?? ((handle) => clearTimeout(handle as number));
    this.baseDelayMs = options.reconnectDelayMs ?? 1000;
    this.maxDelayMs = options.maxReconnectDelayMs ?? 15000;
    this.currentDelayMs = this.baseDelayMs;
    this.diagnostic = options.diagnostic ?? ((detail) => console.warn(detail));
  }

  connect(): void {
    if (this.closed || this.socket !== null) {
      return;
    }
    this.handlers.onStatus('connecting');
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      socket.send(encodeReset());
      this.currentDelayMs = this.baseDelayMs;
      this.handlers.onStatus('connected');
    };
    socket.onmessage = (event) => {
      if (typeof event.data !== 'string') {
        this.diagnostic('ignoring non-text message');
        return;
      }
      const message = parseServerMessage(event.data);
      if (message === null) {
        this.diagnostic(`ignoring malformed message: ${event.data}`);
        return;
      }
      this.handlers.onMessage(message);
    };
    socket.onclose = () => {
      this.socket = null;
      this.handlers.onStatus('disconnected');
      if (!this.closed) {
        this.reconnectHandle = this.schedule(() => {
          this.reconnectHandle = null;
          this.connect();
        }, this.currentDelayMs);
        this.currentDelayMs = Math.min(this.currentDelayMs * 2, this.maxDelayMs);
      }
    };
    socket.onerror = () => {
      // The matching close event drives reconnection.
    };
  }

  /** Send one frame; returns false (dropping it) unless the socket is open. */
  sendFrame(landmarks: Frame): boolean {
    if (this.socket === null || this.socket.readyState !== OPEN) {
      return false;
    }
    this.socket.send(encodeFrame(landmarks, this.nextSeqNo));
    this.nextSeqNo += 1;
    this.framesSent += 1;
    return true;
  }

  close(): void {
    this.closed = true;
    if (this.reconnectHandle !== null) {
      this.cancel(this.reconnectHandle);
      this.reconnectHandle = null;
    }
    if (this.socket !== null) {
      this.socket.close();
      this.socket = null;
    }
  }
}
