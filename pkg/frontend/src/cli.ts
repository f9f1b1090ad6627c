#!/usr/bin/env node
/*
 pvqa-export --manifest data/manifest.json --out-dir features \
     --backbone synthetic --seed 7 --k 64 --downscale 2
 pvqa-export --manifest ... --backbone tfjs --model-dir model/ --tap conv5 --k 2048
*/
import { readManifest } from './manifest.js';
import { exportFeatures } from './exporter.js';
import { SyntheticBackbone } from './synthetic.js';

function parseArgs(argv: string[]): Map<string, string> {
  const args = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    if (!argv[i].startsWith('--') || i + 1 >= argv.length) {
      throw new Error(`bad argument ${argv[i]}`);
    }
    args.set(argv[i].slice(2), argv[i + 1]);
  }
  return args;
}

function required(args: Map<string, string>, name: string): string {
  const value = args.get(name);
  if (value === undefined) throw new Error(`missing --${name}`);
  return value;
}

async function main(): Promise<number> {
  let args: Map<string, string>;
  try {
    args = parseArgs(process.argv.slice(2));
  } catch (err) {
    console.error(`usage error: ${(err as Error).message}`);
    return 1;
  }
  try {
    const manifest = readManifest(required(args, 'manifest'));
    const outDir = required(args, 'out-dir');
    const kind = args.get('backbone') ?? 'synthetic';
    if (kind === 'synthetic') {
      const backbone = new SyntheticBackbone(
        Number(args.get('seed') ?? 7),
        Number(args.get('k') ?? 64),
        Number(args.get('downscale') ?? 2),
      );
      const results = exportFeatures({
        manifest, outDir, backbone,
        backboneName: 'synthetic',
        tapPoint: 'random_conv_stage3',
        preprocessing: 'uint8/255, no resize',
      });
      console.log(`exported ${results.length} videos to ${outDir}`);
    } else if (kind === 'tfjs') {
      const { loadModelFromDisk, truncateAtLayer, TfjsBackbone } = await import('./tfjs.js');
      const model = await loadModelFromDisk(required(args, 'model-dir'));
      const tap = required(args, 'tap');
      const truncated = truncateAtLayer(model, tap);
      const k = Number(required(args, 'k'));
      const side = args.has('input-side') ? Number(args.get('input-side')) : null;
      const backbone = new TfjsBackbone(truncated, k, side);
      const results = exportFeatures({
        manifest, outDir, backbone,
        backboneName: args.get('backbone-name') ?? 'tfjs',
        tapPoint: tap,
        preprocessing: 'bilinear resize to input_side, scale 1/255, imagenet mean/std',
      });
      console.log(`exported ${results.length} videos to ${outDir}`);
    } else {
      console.error(`usage error: unknown backbone ${kind}`);
      return 1;
    }
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 2;
  }
}

main().then((code) => process.exit(code));
