/** Camera-frame landmark extraction via the MediaPipe pose landmarker.
 *
 * The classifier was trained on hip-centered metric coordinates, so frames
 * sent to the server use `worldLandmarks` (meters, origin between the hips),
 * not the normalized image-space landmarks. Image-space points are still
 * returned to the caller for drawing the overlay.
 */

import { FilesetResolver, PoseLandmarker } from '@mediapipe/tasks-vision';
import type { NormalizedLandmark } from '@mediapipe/tasks-vision';
import type { Quality } from './config.js';
import { NUM_POINTS } from './protocol.js';

const MEDIAPIPE_VERSION = '1.0.1';
const WASM_ROOT = `https://cdn.jsdelivr.net/npm/@mediapipe/tasks-vision@${MEDIAPIPE_VERSION}/wasm`;

// Quality names map onto the published pose landmarker variants. "medium"
// deliberately selects the variant named "full": the heavy variant is the
// true top tier, so exposing lite/full/heavy as lite/medium/full keeps the
// selector monotone in cost.
const MODEL_URLS: Record<Quality, string> = {
  lite: 'https://storage.googleapis.com/mediapipe-models/pose_landmarker/pose_landmarker_lite/float16/1/pose_landmarker_lite.task',
  medium:
    'https://storage.googleapis.com/mediapipe-models/pose_landmarker/pose_landmarker_full/float16/1/pose_landmarker_full.task',
  full: 'https://storage.googleapis.com/mediapipe-models/pose_landmarker/pose_landmarker_heavy/float16/1/pose_landmarker_heavy.task',
};

export interface ExtractedPose {
  /** 33 rows of [x, y, z, visibility] in hip-centered world coordinates. */
  frame: number[][];
  /** Normalized image-space points for the overlay; empty when no pose. */
  imagePoints: NormalizedLandmark[];
  detected: boolean;
}

function absentFrame(): number[][] {
  const rows: number[][] = [];
  for (let i = 0; i < NUM_POINTS; i += 1) {
    rows.push([NaN, NaN, NaN, NaN]);
  }
  return rows;
}

export class PoseExtractor {
  private landmarker: PoseLandmarker | null = null;
  private quality: Quality;
  private lastTimestampMs = -1;

  constructor(quality: Quality) {
    this.quality = quality;
  }

  async init(): Promise<void> {
    const vision = await FilesetResolver.forVisionTasks(WASM_ROOT);
    this.landmarker = await PoseLandmarker.createFromOptions(vision, {
      baseOptions: { modelAssetPath: MODEL_URLS[this.quality], delegate: 'GPU' },
      runningMode: 'VIDEO',
      numPoses: 1,
    });
  }

  async setQuality(quality: Quality): Promise<void> {
    if (quality === this.quality && this.landmarker !== null) {
      return;
    }
    this.quality = quality;
    if (this.landmarker !== null) {
      this.landmarker.close();
      this.landmarker = null;
    }
    await this.init();
  }

  /** Extract one pose from the current video frame.
   *
   * Returns an all-NaN frame when nobody is in view, which the server logs
   * as a dropped frame without disturbing its window. The timestamp is
   * nudged forward when the clock has not advanced because the landmarker
   * requires monotonically increasing video timestamps.
   */
  extract(video: HTMLVideoElement, timestampMs: number): ExtractedPose {
    if (this.landmarker === null) {
      throw new Error('extractor not initialized');
    }
    const ts = timestampMs <= this.lastTimestampMs ? this.lastTimestampMs + 1 : timestampMs;
    this.lastTimestampMs = ts;
    const result = this.landmarker.detectForVideo(video, ts);
    const world = result.worldLandmarks[0];
    const image = result.landmarks[0];
    if (world === undefined || world.length !== NUM_POINTS) {
      return { frame: absentFrame(), imagePoints: [], detected: false };
    }
    const frame = world.map((pt) => [pt.x, pt.y, pt.z, pt.visibility]);
    return { frame, imagePoints: image ?? [], detected: true };
  }

  close(): void {
    if (this.landmarker !== null) {
      this.landmarker.close();
      this.landmarker = null;
    }
  }
}
