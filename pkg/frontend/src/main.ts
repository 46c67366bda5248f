/** Browser entry point: camera capture, pose extraction, streaming, HUD. */

import { healthUrlFor, parseConfig } from './config.js';
import type { Quality } from './config.js';
import { PoseExtractor } from './extractor.js';
import { drawSkeleton } from './overlay.js';
import type { ServerMessage } from './protocol.js';
import { Dashboard, FpsCounter } from './ui.js';
import { StreamClient } from './wsclient.js';

interface ServerInfo {
  classes: string[];
  windowSize: number;
}

async function fetchServerInfo(serverUrl: string): Promise<ServerInfo | null> {
  try {
    const response = await fetch(healthUrlFor(serverUrl));
    if (!response.ok) {
      return null;
    }
    const body: unknown = await response.json();
    if (typeof body !== 'object' || body === null) {
      return null;
    }
    const record = body as Record<string, unknown>;
    const classes = Array.isArray(record['classes'])
      ? record['classes'].filter((c): c is string => typeof c === 'string')
      : [];
    const windowSize =
      typeof record['window_size'] === 'number' && Number.isInteger(record['window_size'])
        ? record['window_size']
        : 8;
    return { classes, windowSize };
  } catch {
    return null;
  }
}

function scheduleFrame(video: HTMLVideoElement, callback: (nowMs: number) => void): void {
  // requestVideoFrameCallback fires once per decoded camera frame, which
  // avoids re-running the landmarker on duplicate frames; rAF is the
  // fallback where it is unavailable.
  const anyVideo = video as HTMLVideoElement & {
    requestVideoFrameCallback?: (cb: (now: number) => void) => number;
  };
  if (typeof anyVideo.requestVideoFrameCallback === 'function') {
    anyVideo.requestVideoFrameCallback((now) => callback(now));
  } else {
    requestAnimationFrame((now) => callback(now));
  }
}

async function start(): Promise<void> {
  const config = parseConfig(window.location.search, {
    host: window.location.hostname,
    secure: window.location.protocol === 'https:',
  });
  const dashboard = new Dashboard(document);
  const video = document.getElementById('camera') as HTMLVideoElement | null;
  const canvas = document.getElementById('overlay') as HTMLCanvasElement | null;
  const qualitySelect = document.getElementById('quality') as HTMLSelectElement | null;
  const overlayToggle = document.getElementById('overlay-toggle') as HTMLInputElement | null;
  if (video === null || canvas === null || qualitySelect === null || overlayToggle === null) {
    throw new Error('page is missing required elements');
  }
  qualitySelect.value = config.quality;
  overlayToggle.checked = config.overlay;

  const info = await fetchServerInfo(config.serverUrl);
  if (info === null) {
    dashboard.showError(
      `Cannot reach the classification server at ${config.serverUrl}. ` +
        'Start it, then reload this page.',
    );
  }
  const windowSize = info?.windowSize ?? 8;
  dashboard.setClasses(info?.classes ?? []);

  let stream: MediaStream;
  try {
    stream = await navigator.mediaDevices.getUserMedia({
      video: { width: { ideal: 960 }, height: { ideal: 540 } },
      audio: false,
    });
  } catch {
    dashboard.showError(
      'Camera access was denied. Grant permission in the browser and reload.',
    );
    return;
  }
  video.srcObject = stream;
  await video.play();
  canvas.width = video.videoWidth;
  canvas.height = video.videoHeight;

  const extractor = new PoseExtractor(config.quality);
  dashboard.showError('Loading pose model...');
  try {
    await extractor.init();
  } catch (err) {
    dashboard.showError(`Pose model failed to load: ${String(err)}`);
    return;
  }
  dashboard.showError('');

  const client = new StreamClient(config.serverUrl, {
    onMessage: (message: ServerMessage) => {
      if (message.type === 'classification') {
        dashboard.showClassification(message, windowSize);
      } else {
        dashboard.showError(`Server rejected a message: ${message.reason}`);
      }
    },
    onStatus: (status) => dashboard.setStatus(status),
  });
  client.connect();

  qualitySelect.addEventListener('change', () => {
    const quality = qualitySelect.value as Quality;
    dashboard.showError('Switching pose model...');
    extractor
      .setQuality(quality)
      .then(() => dashboard.showError(''))
      .catch((err) => dashboard.showError(`Pose model failed to load: ${String(err)}`));
  });

  const ctx = canvas.getContext('2d');
  const fps = new FpsCounter();
  let busy = false;

  const onFrame = (nowMs: number): void => {
    if (!busy && video.readyState >= 2) {
      busy = true;
      try {
        const pose = extractor.extract(video, nowMs);
        client.sendFrame(pose.frame);
        if (ctx !== null) {
          ctx.clearRect(0, 0, canvas.width, canvas.height);
          if (overlayToggle.checked && pose.detected) {
            drawSkeleton(ctx, pose.imagePoints, canvas.width, canvas.height);
          }
        }
        dashboard.setFps(fps.tick(nowMs));
      } finally {
        busy = false;
      }
    }
    scheduleFrame(video, onFrame);
  };
  scheduleFrame(video, onFrame);
}

start().catch((err) => {
  const el = document.getElementById('error');
  if (el !== null) {
    el.textContent = String(err);
    el.hidden = false;
  }
});
