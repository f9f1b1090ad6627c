/*
 PVQF feature-tensor file, byte-exact:
   0-3   magic "PVQF"
   4-7   version = 1        (uint32 LE)
   8-11  nMaps               (uint32 LE)
   12-15 h, 16-19 w, 20-23 k (uint32 LE)
   then nMaps*h*w*k float32 LE in [map][row][col][channel] order.
 No padding, no trailer.
*/
import { readFileSync, writeFileSync } from 'node:fs';

export const PVQF_MAGIC = 'PVQF';
export const PVQF_VERSION = 1;

export interface FeatureMap {
  h: number;
  w: number;
  k: number;
  /** h*w*k values, row-major, channel-last */
  values: Float32Array;
}

export function encodePvqf(maps: FeatureMap[]): Buffer {
  if (maps.length === 0) throw new Error('cannot encode an empty PVQF file');
  const { h, w, k } = maps[0];
  for (const m of maps) {
    if (m.h !== h || m.w !== w || m.k !== k) {
      throw new Error(`heterogeneous map shapes: ${m.h}x${m.w}x${m.k} vs ${h}x${w}x${k}`);
    }
    if (m.values.length !== h * w * k) {
      throw new Error('map value count does not match its shape');
    }
  }
  const header = Buffer.alloc(24);
  header.write(PVQF_MAGIC, 0, 'ascii');
  header.writeUInt32LE(PVQF_VERSION, 4);
  header.writeUInt32LE(maps.length, 8);
  header.writeUInt32LE(h, 12);
  header.writeUInt32LE(w, 16);
  header.writeUInt32LE(k, 20);
  const payload = Buffer.alloc(maps.length * h * w * k * 4);
  maps.forEach((m, i) => {
    for (let j = 0; j < m.values.length; j++) {
      payload.writeFloatLE(m.values[j], (i * h * w * k + j) * 4);
    }
  });
  return Buffer.concat([header, payload]);
}

export function writePvqf(path: string, maps: FeatureMap[]): void {
  writeFileSync(path, encodePvqf(maps));
}

export function decodePvqf(blob: Buffer): FeatureMap[] {
  if (blob.length < 24) throw new Error(`truncated PVQF header (${blob.length} bytes)`);
  if (blob.toString('ascii', 0, 4) !== PVQF_MAGIC) {
    throw new Error('bad PVQF magic');
  }
  const version = blob.readUInt32LE(4);
  if (version !== PVQF_VERSION) throw new Error(`unsupported PVQF version ${version}`);
  const nMaps = blob.readUInt32LE(8);
  const h = blob.readUInt32LE(12);
  const w = blob.readUInt32LE(16);
  const k = blob.readUInt32LE(20);
  const expected = 24 + nMaps * h * w * k * 4;
  if (blob.length !== expected) {
    throw new Error(`PVQF payload is ${blob.length} bytes, header implies ${expected}`);
  }
  const maps: FeatureMap[] = [];
  for (let i = 0; i < nMaps; i++) {
    const values = new Float32Array(h * w * k);
    for (let j = 0; j < values.length; j++) {
      values[j] = blob.readFloatLE(24 + (i * h * w * k + j) * 4);
    }
    maps.push({ h, w, k, values });
  }
  return maps;
}

export function readPvqf(path: string): FeatureMap[] {
  return decodePvqf(readFileSync(path));
}
