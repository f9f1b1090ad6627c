import { readFileSync } from 'node:fs';
import { dirname, join } from 'node:path';

export interface VideoEntry {
  id: string;
  frames: string[]; // paths relative to the manifest directory
  n_context: number;
  n_predicted: number;
  dataset: string;
  predictor?: string;
  mos?: number | null;
}

export interface Manifest {
  root: string;
  entries: VideoEntry[];
}

export function readManifest(path: string): Manifest {
  const raw = JSON.parse(readFileSync(path, 'utf-8'));
  if (raw.schema_version !== 1) {
    throw new Error(`unsupported manifest schema_version ${raw.schema_version}`);
  }
  const root = dirname(path);
  const entries: VideoEntry[] = raw.entries.map((e: any) => {
    if (e.frames.length !== e.n_context + e.n_predicted) {
      throw new Error(`${e.id}: ${e.frames.length} frame files but ` +
        `n_context+n_predicted = ${e.n_context + e.n_predicted}`);
    }
    return e as VideoEntry;
  });
  return { root, entries };
}

export function framePath(manifest: Manifest, relative: string): string {
  return join(manifest.root, relative);
}
