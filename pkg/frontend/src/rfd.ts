/*
 Rescaled frame difference. Per color channel the signed difference b - a is
 stretched to [0, 255]; constant channels map to 0. Rounding is half away
 from zero (values are nonnegative, so floor(x + 0.5)); the arithmetic is
 the same float64 expression the scoring toolkit uses, so outputs are
 byte-identical across the two implementations.
*/
import { Frame } from './ppm.js';

export function rescaledFrameDifference(a: Frame, b: Frame): Frame {
  if (a.height !== b.height || a.width !== b.width) {
    throw new Error(`dimension mismatch: ${a.height}x${a.width} vs ${b.height}x${b.width}`);
  }
  const n = a.height * a.width;
  const out = new Uint8Array(n * 3);
  for (let c = 0; c < 3; c++) {
    let lo = 256;
    let hi = -256;
    for (let i = 0; i < n; i++) {
      const d = b.samples[i * 3 + c] - a.samples[i * 3 + c];
      if (d < lo) lo = d;
      if (d > hi) hi = d;
    }
    const span = hi - lo;
    if (span === 0) continue; // constant difference -> all zeros
    for (let i = 0; i < n; i++) {
      const d = b.samples[i * 3 + c] - a.samples[i * 3 + c];
      out[i * 3 + c] = Math.floor(((d - lo) * 255.0) / span + 0.5);
    }
  }
  return { height: a.height, width: a.width, samples: out };
}

export function rfdImages(frames: Frame[]): Frame[] {
  if (frames.length < 2) throw new Error('need at least 2 frames');
  const out: Frame[] = [];
  for (let t = 0; t + 1 < frames.length; t++) {
    out.push(rescaledFrameDifference(frames[t], frames[t + 1]));
  }
  return out;
}
