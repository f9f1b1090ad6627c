/*
 Runs a backbone over every video in a manifest and writes the PVQF pair the
 scoring toolkit consumes: <id>.frames.pvqf (one map per frame) and
 <id>.rfd.pvqf (one map per adjacent-frame rescaled difference), each with a
 JSON sidecar (<file>.meta) recording backbone name, tap point, preprocessing
 and a content checksum.
*/
import { createHash } from 'node:crypto';
import { mkdirSync, readFileSync, writeFileSync } from 'node:fs';
import { join } from 'node:path';

import { Frame, readPpm } from './ppm.js';
import { FeatureMap, writePvqf } from './pvqf.js';
import { rfdImages } from './rfd.js';
import { Manifest, framePath } from './manifest.js';

export const EXPORTER_VERSION = 'pvqa-exporter-0.1.0';

export interface Backbone {
  k: number;
  featuresForImage(frame: Frame): FeatureMap;
}

export interface ExportJob {
  manifest: Manifest;
  outDir: string;
  backbone: Backbone;
  backboneName: string;
  tapPoint: string;
  preprocessing: string;
}

export interface ExportResult {
  id: string;
  framesFile: string;
  rfdFile: string;
}

function sha256(path: string): string {
  return createHash('sha256').update(readFileSync(path)).digest('hex');
}

function writeSidecar(pvqfPath: string, meta: Record<string, unknown>): void {
  writeFileSync(pvqfPath + '.meta', JSON.stringify(meta, null, 1) + '\n');
}

export function exportFeatures(job: ExportJob): ExportResult[] {
  mkdirSync(job.outDir, { recursive: true });
  const results: ExportResult[] = [];
  for (const entry of job.manifest.entries) {
    const frames = entry.frames.map((rel) => readPpm(framePath(job.manifest, rel)));
    const frameMaps = frames.map((f) => job.backbone.featuresForImage(f));
    const rfdMaps = rfdImages(frames).map((f) => job.backbone.featuresForImage(f));

    const framesFile = join(job.outDir, `${entry.id}.frames.pvqf`);
    const rfdFile = join(job.outDir, `${entry.id}.rfd.pvqf`);
    writePvqf(framesFile, frameMaps);
    writePvqf(rfdFile, rfdMaps);
    for (const [kind, path] of [['frames', framesFile], ['rfd', rfdFile]] as const) {
      writeSidecar(path, {
        backbone: job.backboneName,
        tap_point: job.tapPoint,
        preprocessing: job.preprocessing,
        exporter_version: EXPORTER_VERSION,
        kind,
        sha256: sha256(path),
      });
    }
    results.push({ id: entry.id, framesFile, rfdFile });
  }
  return results;
}
