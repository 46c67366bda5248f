/** Skeleton overlay drawing.
 *
 * Rendering goes through a narrow structural interface instead of
 * CanvasRenderingContext2D so the geometry is testable without a DOM.
 */

export interface OverlayPoint {
  x: number;
  y: number;
  visibility: number;
}

/** The 2D-context subset the overlay uses. */
export interface SkeletonContext {
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  arc(x: number, y: number, radius: number, startAngle: number, endAngle: number): void;
  fill(): void;
}

// Edge list of the 33-point body topology: face, shoulders, arms with
// hands, torso, legs with feet.
export const POSE_CONNECTIONS: ReadonlyArray<readonly [number, number]> = [
  [0, 1], [1, 2], [2, 3], [3, 7],
  [0, 4], [4, 5], [5, 6], [6, 8],
  [9, 10],
  [11, 12],
  [11, 13], [13, 15], [15, 17], [15, 19], [15, 21], [17, 19],
  [12, 14], [14, 16], [16, 18], [16, 20], [16, 22], [18, 20],
  [11, 23], [12, 24], [23, 24],
  [23, 25], [24, 26],
  [25, 27], [26, 28],
  [27, 29], [28, 30],
  [29, 31], [30, 32],
  [27, 31], [28, 32],
];

export interface SkeletonCounts {
  segments: number;
  joints: number;
}

function usable(point: OverlayPoint | undefined, minVisibility: number): point is OverlayPoint {
  return (
    point !== undefined &&
    Number.isFinite(point.x) &&
    Number.isFinite(point.y) &&
    point.visibility >= minVisibility
  );
}

/** Draw the skeleton for one set of normalized image points.
 *
 * Segments and joints whose endpoints fall below `minVisibility` are
 * skipped. Returns how many of each were drawn so callers and tests can
 * observe the geometry without inspecting pixels.
 */
export function drawSkeleton(
  ctx: SkeletonContext,
  points: ReadonlyArray<OverlayPoint>,
  width: number,
  height: number,
  minVisibility = 0.5,
): SkeletonCounts {
  let segments = 0;
  let joints = 0;
  ctx.strokeStyle = '#4ade80';
  ctx.lineWidth = 2;
  for (const [a, b] of POSE_CONNECTIONS) {
    const pa = points[a];
    const pb = points[b];
    if (!usable(pa, minVisibility) || !usable(pb, minVisibility)) {
      continue;
    }
    ctx.beginPath();
    ctx.moveTo(pa.x * width, pa.y * height);
    ctx.lineTo(pb.x * width, pb.y * height);
    ctx.stroke();
    segments += 1;
  }
  ctx.fillStyle = '#f87171';
  for (const point of points) {
    if (!usable(point, minVisibility)) {
      continue;
    }
    ctx.beginPath();
    ctx.arc(point.x * width, point.y * height, 3, 0, 2 * Math.PI);
    ctx.fill();
    joints += 1;
  }
  return { segments, joints };
}
