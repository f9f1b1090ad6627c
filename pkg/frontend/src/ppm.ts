/*
 Minimal binary PPM (P6) reader/writer. Frame in, 8-bit RGB out, row-major
 channel-last, matching the layout the scoring toolkit uses.
*/
import { readFileSync, writeFileSync } from 'node:fs';

export interface Frame {
  height: number;
  width: number;
  /** height*width*3 bytes, row-major, RGB */
  samples: Uint8Array;
}

export function decodePpm(blob: Buffer): Frame {
  if (blob.toString('ascii', 0, 2) !== 'P6') throw new Error('not a P6 PPM file');
  // header: magic, width, height, maxval separated by whitespace; # comments allowed
  const tokens: string[] = [];
  let pos = 2;
  while (tokens.length < 3 && pos < blob.length) {
    const ch = String.fromCharCode(blob[pos]);
    if (ch === '#') {
      while (pos < blob.length && blob[pos] !== 0x0a) pos++;
      pos++;
    } else if (/\s/.test(ch)) {
      pos++;
    } else {
      let token = '';
      while (pos < blob.length && !/\s/.test(String.fromCharCode(blob[pos]))) {
        token += String.fromCharCode(blob[pos]);
        pos++;
      }
      tokens.push(token);
    }
  }
  const [width, height, maxval] = tokens.map(Number);
  if (!(width >= 1 && height >= 1)) throw new Error('bad PPM dimensions');
  if (maxval !== 255) throw new Error(`unsupported PPM maxval ${maxval}`);
  pos++; // single whitespace after maxval
  const expected = width * height * 3;
  if (blob.length - pos !== expected) {
    throw new Error(`PPM payload is ${blob.length - pos} bytes, expected ${expected}`);
  }
  return { height, width, samples: new Uint8Array(blob.subarray(pos)) };
}

export function readPpm(path: string): Frame {
  return decodePpm(readFileSync(path));
}

export function encodePpm(frame: Frame): Buffer {
  const header = Buffer.from(`P6\n${frame.width} ${frame.height}\n255\n`, 'ascii');
  return Buffer.concat([header, Buffer.from(frame.samples)]);
}

export function writePpm(path: string, frame: Frame): void {
  writeFileSync(path, encodePpm(frame));
}
