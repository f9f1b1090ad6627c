/*
 Deterministic random-convolution backbone, the portable twin of the scoring
 toolkit's synthetic provider. Weights come from a splitmix64 stream (one
 continuous stream over the stages 3 -> 8 -> 16 -> k, values in row-major
 (out, in, ky, kx) order, uniform in [-sqrt(3/fanIn), sqrt(3/fanIn))), each
 stage is a bias-free zero-padded 3x3 convolution with ReLU, and one final
 non-overlapping downscale x downscale mean pool yields h = H/downscale maps.
 All arithmetic is float64 with a float32 cast at the end, so either
 implementation reproduces the other within ~1e-6 per element.
*/
import { Frame } from './ppm.js';
import { FeatureMap } from './pvqf.js';

const MASK64 = (1n << 64n) - 1n;

export function splitmix64(state: bigint): [bigint, bigint] {
  state = (state + 0x9e3779b97f4a7c15n) & MASK64;
  let z = state;
  z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
  z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64;
  z = z ^ (z >> 31n);
  return [state, z];
}

function uniformWeights(state: bigint, count: number, scale: number): [bigint, Float64Array] {
  const out = new Float64Array(count);
  for (let i = 0; i < count; i++) {
    let z: bigint;
    [state, z] = splitmix64(state);
    const u = Number(z >> 11n) * 2 ** -53; // upper 53 bits -> [0, 1)
    out[i] = (2.0 * u - 1.0) * scale;
  }
  return [state, out];
}

const STAGE_WIDTHS = [8, 16];

export class SyntheticBackbone {
  readonly seed: number;
  readonly k: number;
  readonly downscale: number;
  private weights: { data: Float64Array; cIn: number; cOut: number }[] = [];

  constructor(seed: number, k: number, downscale = 1) {
    if (k < 1 || downscale < 1) throw new Error('need k >= 1 and downscale >= 1');
    this.seed = seed;
    this.k = k;
    this.downscale = downscale;
    const widths = [3, ...STAGE_WIDTHS, k];
    let state = BigInt(seed) & MASK64;
    for (let s = 0; s + 1 < widths.length; s++) {
      const cIn = widths[s];
      const cOut = widths[s + 1];
      const fanIn = cIn * 9;
      const [next, flat] = uniformWeights(state, cOut * fanIn, Math.sqrt(3 / fanIn));
      state = next;
      this.weights.push({ data: flat, cIn, cOut });
    }
  }

  featuresForImage(frame: Frame): FeatureMap {
    const { height: h, width: w } = frame;
    if (h < this.downscale || w < this.downscale) {
      throw new Error(`image ${h}x${w} smaller than downscale ${this.downscale}`);
    }
    // channel-first float64 planes, samples scaled by 1/255
    let x: Float64Array = new Float64Array(3 * h * w);
    for (let c = 0; c < 3; c++) {
      for (let i = 0; i < h * w; i++) {
        x[c * h * w + i] = frame.samples[i * 3 + c] / 255.0;
      }
    }
    let cIn = 3;
    for (const stage of this.weights) {
      x = convReLU(x, cIn, h, w, stage.data, stage.cOut);
      cIn = stage.cOut;
    }
    const d = this.downscale;
    const oh = Math.floor(h / d);
    const ow = Math.floor(w / d);
    const values = new Float32Array(oh * ow * this.k);
    for (let c = 0; c < this.k; c++) {
      for (let oy = 0; oy < oh; oy++) {
        for (let ox = 0; ox < ow; ox++) {
          let total = 0.0;
          for (let dy = 0; dy < d; dy++) {
            for (let dx = 0; dx < d; dx++) {
              total += x[c * h * w + (oy * d + dy) * w + (ox * d + dx)];
            }
          }
          values[(oy * ow + ox) * this.k + c] = total / (d * d);
        }
      }
    }
    return { h: oh, w: ow, k: this.k, values };
  }
}

function convReLU(
  x: Float64Array, cIn: number, h: number, w: number,
  weights: Float64Array, cOut: number,
): Float64Array {
  const out = new Float64Array(cOut * h * w);
  for (let o = 0; o < cOut; o++) {
    for (let i = 0; i < cIn; i++) {
      const wBase = (o * cIn + i) * 9;
      const xBase = i * h * w;
      for (let ky = 0; ky < 3; ky++) {
        for (let kx = 0; kx < 3; kx++) {
          const wv = weights[wBase + ky * 3 + kx];
          if (wv === 0) continue;
          const y0 = Math.max(0, 1 - ky);
          const y1 = Math.min(h, h + 1 - ky);
          for (let y = y0; y < y1; y++) {
            const srcRow = xBase + (y + ky - 1) * w;
            const dstRow = o * h * w + y * w;
            const x0 = Math.max(0, 1 - kx);
            const x1 = Math.min(w, w + 1 - kx);
            for (let xx = x0; xx < x1; xx++) {
              out[dstRow + xx] += wv * x[srcRow + xx + kx - 1];
            }
          }
        }
      }
    }
  }
  for (let i = 0; i < out.length; i++) {
    if (out[i] < 0) out[i] = 0;
  }
  return out;
}
