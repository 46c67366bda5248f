/** Client configuration from URL query parameters.
 *
 * ?server=host:port or a full ws(s):// URL, ?quality=lite|medium|full,
 * ?overlay=0|1. Anything unparseable falls back to its default.
 */

export type Quality = 'lite' | 'medium' | 'full';

export interface ClientConfig {
  serverUrl: string;
  quality: Quality;
  overlay: boolean;
}

export interface ConfigDefaults {
  host: string;
  secure: boolean;
}

const DEFAULT_PORT = 8765;
const QUALITIES: ReadonlyArray<Quality> = ['lite', 'medium', 'full'];

function serverUrlFrom(raw: string | null, defaults: ConfigDefaults): string {
  const scheme = defaults.secure ? 'wss' : 'ws';
  const host = defaults.host || '127.0.0.1';
  if (!raw) {
    return `${scheme}://${host}:${DEFAULT_PORT}/ws`;
  }
  if (raw.startsWith('ws://') || raw.startsWith('wss://')) {
    return raw;
  }
  return `${scheme}://${raw}/ws`;
}

export function parseConfig(search: string, defaults: ConfigDefaults): ClientConfig {
  const params = new URLSearchParams(search);
  const rawQuality = (params.get('quality') ?? '').toLowerCase();
  const rawOverlay = (params.get('overlay') ?? '').toLowerCase();
  return {
    serverUrl: serverUrlFrom(params.get('server'), defaults),
    quality: (QUALITIES as ReadonlyArray<string>).includes(rawQuality)
      ? (rawQuality as Quality)
      : 'medium',
    overlay: !['0', 'false', 'no', 'off'].includes(rawOverlay),
  };
}

/** The service's health endpoint for a given WebSocket URL. */
export function healthUrlFor(serverUrl: string): string {
  const url = new URL(serverUrl);
  const scheme = url.protocol === 'wss:' ? 'https:' : 'http:';
  return `${scheme}//${url.host}/healthz`;
}
