import { describe, it } from 'node:test';
import assert from 'node:assert/strict';

import { NUM_POINTS, encodeReset } from '../src/protocol.js';
import type { ServerMessage } from '../src/protocol.js';
import { StreamClient } from '../src/wsclient.js';
import type { ConnectionStatus, StreamClientOptions, WebSocketLike } from '../src/wsclient.js';

const CONNECTING = 0;
const OPEN = 1;
const CLOSED = 3;

class FakeSocket implements WebSocketLike {
  readyState = CONNECTING;
  sent: string[] = [];
  closeCalls = 0;
  onopen: (() => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: (() => void) | null = null;
  onmessage: ((event: { data: unknown }) => void) | null = null;

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.closeCalls += 1;
    this.readyState = CLOSED;
  }

  open(): void {
    this.readyState = OPEN;
    this.onopen?.();
  }

  drop(): void {
    this.readyState = CLOSED;
    this.onclose?.();
  }

  receive(data: unknown): void {
    this.onmessage?.({ data });
  }
}

interface ScheduledTask {
  id: number;
  ms: number;
  fn: () => void;
}

class Harness {
  sockets: FakeSocket[] = [];
  tasks: ScheduledTask[] = [];
  messages: ServerMessage[] = [];
  statuses: ConnectionStatus[] = [];
  diagnostics: string[] = [];
  client: StreamClient;
  private nextTaskId = 1;

  constructor(options: Partial<StreamClientOptions> = {}) {
    this.client = new StreamClient(
      'ws://unit.test:1/ws',
      {
        onMessage: (m) => this.messages.push(m),
        onStatus: (s) => this.statuses.push(s),
      },
      {
        factory: () => {
          const socket = new FakeSocket();
          this.sockets.push(socket);
          return socket;
        },
        schedule: (fn, ms) => {
          const id = this.nextTaskId;
          this.nextTaskId += 1;
          this.tasks.push({ id, ms, fn });
          return id;
        },
        cancel: (handle) => {
          this.tasks = this.tasks.filter((t) => t.id !== handle);
        },
        diagnostic: (detail) => this.diagnostics.push(detail),
        reconnectDelayMs: 100,
        maxReconnectDelayMs: 400,
        ...options,
      },
    );
  }

  socket(): FakeSocket {
    const last = this.sockets[this.sockets.length - 1];
    assert.notEqual(last, undefined, 'no socket was created');
    return last;
  }

  runNextTask(): void {
    const task = this.tasks.shift();
    assert.notEqual(task, undefined, 'no task scheduled');
    task?.fn();
  }
}

function frame(): number[][] {
  const rows: number[][] = [];
  for (let i = 0; i < NUM_POINTS; i += 1) {
    rows.push([i, i + 0.5, -i, 1]);
  }
  return rows;
}

describe('StreamClient', () => {
  it('sends reset before anything else on connect', () => {
    const h = new Harness();
    h.client.connect();
    h.socket().open();
    assert.equal(h.socket().sent[0], encodeReset());
    assert.deepEqual(h.statuses, ['connecting', 'connected']);
  });

  it('numbers frames from zero', () => {
    const h = new Harness();
    h.client.connect();
    h.socket().open();
    assert.equal(h.client.sendFrame(frame()), true);
    assert.equal(h.client.sendFrame(frame()), true);
    const sent = h.socket().sent;
    assert.equal(JSON.parse(sent[1]).seq_no, 0);
    assert.equal(JSON.parse(sent[2]).seq_no, 1);
    assert.equal(h.client.framesSent, 2);
  });

  it('drops frames while the socket is not open', () => {
    const h = new Harness();
    assert.equal(h.client.sendFrame(frame()), false);
    h.client.connect();
    assert.equal(h.client.sendFrame(frame()), false);
    h.socket().open();
    // Nothing was queued: the only message so far is the reset.
    assert.deepEqual(h.socket().sent, [encodeReset()]);
    assert.equal(h.client.framesSent, 0);
  });

  it('reconnects with doubling delays and resends reset', () => {
    const h = new Harness();
    h.client.connect();
    h.socket().open();
    h.socket().drop();
    assert.equal(h.tasks[0].ms, 100);
    h.runNextTask();
    assert.equal(h.sockets.length, 2);
    h.socket().drop();
    assert.equal(h.tasks[0].ms, 200);
    h.runNextTask();
    h.socket().drop();
    assert.equal(h.tasks[0].ms, 400);
    h.runNextTask();
    h.socket().drop();
    // Capped at the maximum.
    assert.equal(h.tasks[0].ms, 400);
    h.runNextTask();
    h.socket().open();
    assert.equal(h.socket().sent[0], encodeReset());
    // A successful open rearms the short delay.
    h.socket().drop();
    assert.equal(h.tasks[0].ms, 100);
  });

  it('does not reconnect after an intentional close', () => {
    const h = new Harness();
    h.client.connect();
    h.socket().open();
    h.client.close();
    assert.equal(h.socket().closeCalls, 1);
    assert.equal(h.tasks.length, 0);
    h.client.connect();
    assert.equal(h.sockets.length, 1);
  });

  it('cancels a pending reconnect on close', () => {
    const h = new Harness();
    h.client.connect();
    h.socket().open();
    h.socket().drop();
    assert.equal(h.tasks.length, 1);
    h.client.close();
    assert.equal(h.tasks.length, 0);
  });

  it('connect is idempotent while a socket exists', () => {
    const h = new Harness();
    h.client.connect();
    h.client.connect();
    assert.equal(h.sockets.length, 1);
  });

  it('delivers parsed messages and quarantines malformed ones', () => {
    const h = new Harness();
    h.client.connect();
    h.socket().open();
    h.socket().receive('garbage');
    h.socket().receive(12345);
    assert.equal(h.messages.length, 0);
    assert.equal(h.diagnostics.length, 2);
    h.socket().receive(
      JSON.stringify({
        type: 'classification',
        seq_no: 3,
        label: 'Squats',
        probs: { Squats: 1 },
        window_fill: 4,
      }),
    );
    assert.deepEqual(h.messages, [
      { type: 'classification', seqNo: 3, label: 'Squats', probs: { Squats: 1 }, windowFill: 4 },
    ]);
  });
});
