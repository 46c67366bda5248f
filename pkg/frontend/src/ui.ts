/** Dashboard rendering: probability bars, status, and frame-rate readout. */

import type { ClassificationMessage } from './protocol.js';
import type { ConnectionStatus } from './wsclient.js';

/** Clamp a probability into a CSS width percentage. */
export function barWidthPercent(prob: number): number {
  if (!Number.isFinite(prob)) {
    return 0;
  }
  return Math.min(1, Math.max(0, prob)) * 100;
}

export function formatPercent(prob: number): string {
  return `${barWidthPercent(prob).toFixed(1)}%`;
}

/** Frame-rate estimate over a sliding time window. */
export class FpsCounter {
  private readonly windowMs: number;
  private ticks: number[] = [];

  constructor(windowMs = 2000) {
    if (!(windowMs > 0)) {
      throw new Error(`window must be positive, got ${windowMs}`);
    }
    this.windowMs = windowMs;
  }

  /** Record one frame at `nowMs` and return the current estimate. */
  tick(nowMs: number): number {
    this.ticks.push(nowMs);
    const cutoff = nowMs - this.windowMs;
    while (this.ticks.length > 0 && this.ticks[0] < cutoff) {
      this.ticks.shift();
    }
    if (this.ticks.length < 2) {
      return 0;
    }
    const span = nowMs - this.ticks[0];
    return span > 0 ? ((this.ticks.length - 1) * 1000) / span : 0;
  }
}

interface BarElements {
  row: HTMLElement;
  fill: HTMLElement;
  value: HTMLElement;
}

export class Dashboard {
  private readonly labelEl: HTMLElement;
  private readonly statusEl: HTMLElement;
  private readonly fpsEl: HTMLElement;
  private readonly fillEl: HTMLElement;
  private readonly barsEl: HTMLElement;
  private readonly errorEl: HTMLElement;
  private bars = new Map<string, BarElements>();

  constructor(root: Document) {
    this.labelEl = this.require(root, 'label');
    this.statusEl = this.require(root, 'status');
    this.fpsEl = this.require(root, 'fps');
    this.fillEl = this.require(root, 'window-fill');
    this.barsEl = this.require(root, 'bars');
    this.errorEl = this.require(root, 'error');
  }

  private require(root: Document, id: string): HTMLElement {
    const el = root.getElementById(id);
    if (el === null) {
      throw new Error(`missing #${id} element`);
    }
    return el;
  }

  /** Build one probability bar per class, in server order. */
  setClasses(names: ReadonlyArray<string>): void {
    this.barsEl.textContent = '';
    this.bars = new Map();
    const doc = this.barsEl.ownerDocument;
    for (const name of names) {
      const row = doc.createElement('div');
      row.className = 'bar-row';
      const tag = doc.createElement('span');
      tag.className = 'bar-name';
      tag.textContent = name;
      const track = doc.createElement('div');
      track.className = 'bar-track';
      const fill = doc.createElement('div');
      fill.className = 'bar-fill';
      track.appendChild(fill);
      const value = doc.createElement('span');
      value.className = 'bar-value';
      value.textContent = '0.0%';
      row.appendChild(tag);
      row.appendChild(track);
      row.appendChild(value);
      this.barsEl.appendChild(row);
      this.bars.set(name, { row, fill, value });
    }
  }

  showClassification(message: ClassificationMessage, windowSize: number): void {
    this.labelEl.textContent = message.label;
    this.fillEl.textContent = `window ${message.windowFill}/${windowSize}`;
    for (const [name, elements] of this.bars) {
      const prob = message.probs[name] ?? 0;
      elements.fill.style.width = `${barWidthPercent(prob)}%`;
      elements.value.textContent = formatPercent(prob);
      elements.row.classList.toggle('bar-top', name === message.label);
    }
  }

  setStatus(status: ConnectionStatus): void {
    this.statusEl.textContent = status;
    this.statusEl.className = `status status-${status}`;
  }

  setFps(fps: number): void {
    this.fpsEl.textContent = `${fps.toFixed(1)} fps`;
  }

  showError(text: string): void {
    this.errorEl.textContent = text;
    this.errorEl.hidden = text === '';
  }
}
