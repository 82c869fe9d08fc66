/**
 * Letterbox fit and the screen/frame coordinate mapping.
 *
 * Two conventions meet here.  The view is ordinary screen space: y grows
 * downward, the image may be scaled and centered with bars on two sides.
 * The wire frames are row-major with row 0 at the BOTTOM of the scene, and
 * the tracker expects click pixels in that same bottom-up space, so the
 * renderer flips rows on draw and every click flips back through flipY.
 *
 * All mappings are continuous (no pixel snapping), which is what makes the
 * round trip exact at any scale; integers appear only at the very edge, in
 * clickPixel, where the wire wants them.
 */

export interface ViewTransform {
  scale: number;
  offsetX: number;
  offsetY: number;
  frameW: number;
  frameH: number;
}

export interface Point {
  x: number;
  y: number;
}

/** Largest centered fit of a frameW x frameH image inside viewW x viewH. */
export function fitFrame(
  frameW: number,
  frameH: number,
  viewW: number,
  viewH: number,
): ViewTransform {
  const scale = Math.min(viewW / frameW, viewH / frameH);
  return {
    scale,
    offsetX: (viewW - frameW * scale) / 2,
    offsetY: (viewH - frameH * scale) / 2,
    frameW,
    frameH,
  };
}

/**
 * Screen point to top-down image coordinates.  Null outside the letterboxed
 * image, which is how clicks on the bars get dropped.
 */
export function screenToImage(vt: ViewTransform, sx: number, sy: number): Point | null {
  const x = (sx - vt.offsetX) / vt.scale;
  const y = (sy - vt.offsetY) / vt.scale;
  if (x < 0 || x >= vt.frameW || y < 0 || y >= vt.frameH) return null;
  return { x, y };
}

export function imageToScreen(vt: ViewTransform, ix: number, iy: number): Point {
  return { x: vt.offsetX + ix * vt.scale, y: vt.offsetY + iy * vt.scale };
}

/**
 * Bottom-up frame row <-> top-down image row, continuous.  Own inverse, so
 * the same call converts either direction.
 */
export function flipY(frameH: number, y: number): number {
  return frameH - y;
}

/** Screen point to continuous frame coordinates (bottom-up y). */
export function screenToFrame(vt: ViewTransform, sx: number, sy: number): Point | null {
  const p = screenToImage(vt, sx, sy);
  if (p === null) return null;
  return { x: p.x, y: flipY(vt.frameH, p.y) };
}

/** Frame point (bottom-up y) to screen, for overlays. */
export function frameToScreen(vt: ViewTransform, fx: number, fy: number): Point {
  return imageToScreen(vt, fx, flipY(vt.frameH, fy));
}

/**
 * Integer frame pixel for a click, clamped into bounds.  The tracker indexes
 * the mask with these, so an edge click must never round out of the frame.
 */
export function clickPixel(vt: ViewTransform, sx: number, sy: number): Point | null {
  const p = screenToFrame(vt, sx, sy);
  if (p === null) return null;
  return {
    x: clampIndex(p.x, vt.frameW),
    y: clampIndex(p.y, vt.frameH),
  };
}

function clampIndex(v: number, size: number): number {
  return Math.min(size - 1, Math.max(0, Math.floor(v)));
}
