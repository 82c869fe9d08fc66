/** Frame payload decoding: base64 greyscale, bottom-up rows, to canvas RGBA. */

export interface RGBAFrame {
  width: number;
  height: number;
  data: Uint8ClampedArray<ArrayBuffer>;
}

export function decodeBase64(b64: string): Uint8Array {
  const bin = atob(b64);
  const out = new Uint8Array(bin.length);
  for (let i = 0; i < bin.length; i++) out[i] = bin.charCodeAt(i);
  return out;
}

/**
 * Expand greyscale bytes into top-down RGBA.  Source row 0 is the bottom of
 * the scene, canvas row 0 is the top, so rows swap ends here and nowhere
 * else in the render path.
 */
export function toRGBA(gray: Uint8Array, width: number, height: number): RGBAFrame {
  if (gray.length !== width * height) {
    throw new Error(`frame size mismatch: ${gray.length} bytes for ${width}x${height}`);
  }
  const data = new Uint8ClampedArray(width * height * 4);
  for (let row = 0; row < height; row++) {
    const src = (height - 1 - row) * width;
    let di = row * width * 4;
    for (let col = 0; col < width; col++) {
      const g = gray[src + col];
      data[di] = g;
      data[di + 1] = g;
      data[di + 2] = g;
      data[di + 3] = 255;
      di += 4;
    }
  }
  return { width, height, data };
}

export function decodeFrame(b64: string, width: number, height: number): RGBAFrame {
  return toRGBA(decodeBase64(b64), width, height);
}
