/** Wire protocol: JSON codec for the classification service.
 *
 * One JSON document per WebSocket text message.
 * Outbound: {"type":"frame","seq_no":int?,"landmarks":33x[x,y,z,v]}
 *           {"type":"reset"}
 * Inbound:  {"type":"classification","seq_no":int|null,"label":str,
 *            "probs":{name:number,...},"window_fill":int}
 *           {"type":"error","reason":str}
 * JSON has no NaN; non-finite landmark values travel as the string "NaN".
 */

export const NUM_POINTS = 33;
export const POINT_FEATURES = 4;

export interface ClassificationMessage {
  type: 'classification';
  seqNo: number | null;
  label: string;
  probs: Record<string, number>;
  windowFill: number;
}

export interface ErrorMessage {
  type: 'error';
  reason: string;
}

export type ServerMessage = ClassificationMessage | ErrorMessage;

type WireValue = number | 'NaN';

/** A 33x4 frame; rows are [x, y, z, visibility]. */
export type Frame = ReadonlyArray<ReadonlyArray<number>>;

export function encodeReset(): string {
  return '{"type":"reset"}';
}

export function encodeFrame(landmarks: Frame, seqNo?: number): string {
  if (landmarks.length !== NUM_POINTS) {
    throw new Error(`expected ${NUM_POINTS} landmarks, got ${landmarks.length}`);
  }
  const rows: WireValue[][] = [];
  for (const point of landmarks) {
    if (point.length !== POINT_FEATURES) {
      throw new Error(`expected ${POINT_FEATURES} values per landmark, got ${point.length}`);
    }
    rows.push(point.map((v) => (Number.isFinite(v) ? v : 'NaN')));
  }
  const message: Record<string, unknown> = { type: 'frame', landmarks: rows };
  if (seqNo !== undefined) {
    message.seq_no = seqNo;
  }
  return JSON.stringify(message);
}

function isPlainObject(v: unknown): v is Record<string, unknown> {
  return typeof v === 'object' && v !== null && !Array.isArray(v);
}

/** Decode one server message; returns null for anything malformed. */
export function parseServerMessage(text: string): ServerMessage | null {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch {
    return null;
  }
  if (!isPlainObject(doc)) {
    return null;
  }
  if (doc.type === 'error') {
    return typeof doc.reason === 'string' ? { type: 'error', reason: doc.reason } : null;
  }
  if (doc.type !== 'classification') {
    return null;
  }
  if (typeof doc.label !== 'string') {
    return null;
  }
  const windowFill = doc.window_fill;
  if (typeof windowFill !== 'number' || !Number.isInteger(windowFill) || windowFill < 0) {
    return null;
  }
  const seqNo = doc.seq_no === undefined || doc.seq_no === null ? null : doc.seq_no;
  if (seqNo !== null && !Number.isInteger(seqNo)) {
    return null;
  }
  if (!isPlainObject(doc.probs)) {
    return null;
  }
  const probs: Record<string, number> = {};
  for (const [name, value] of Object.entries(doc.probs)) {
    if (typeof value !== 'number' || !Number.isFinite(value)) {
      return null;
    }
    probs[name] = value;
  }
  return {
    type: 'classification',
    seqNo: seqNo as number | null,
    label: doc.label,
    probs,
    windowFill,
  };
}
