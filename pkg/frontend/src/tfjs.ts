/*
 Optional tfjs-backed backbone: load a layers model from disk, truncate it at
 the tap layer, run frames through it, and save truncated models in the
 interchange (tfjs layers) format. Pretrained ImageNet weights are supplied
 by the user as a model directory; nothing is downloaded.
*/
import { readFileSync, writeFileSync, mkdirSync } from 'node:fs';
import { join } from 'node:path';

import * as tf from '@tensorflow/tfjs';

import { Frame } from './ppm.js';
import { FeatureMap } from './pvqf.js';

const IMAGENET_MEAN = [0.485, 0.456, 0.406];
const IMAGENET_STD = [0.229, 0.224, 0.225];

function diskLoadHandler(dir: string): tf.io.IOHandler {
  return {
    load: async () => {
      const modelJson = JSON.parse(readFileSync(join(dir, 'model.json'), 'utf-8'));
      const weights = readFileSync(join(dir, 'weights.bin'));
      return {
        modelTopology: modelJson.modelTopology,
        weightSpecs: modelJson.weightsManifest[0].weights,
        weightData: weights.buffer.slice(
          weights.byteOffset, weights.byteOffset + weights.byteLength),
      };
    },
  };
}

export async function loadModelFromDisk(dir: string): Promise<tf.LayersModel> {
  return tf.loadLayersModel(diskLoadHandler(dir));
}

export function truncateAtLayer(model: tf.LayersModel, tapName: string): tf.LayersModel {
  let layer: tf.layers.Layer;
  try {
    layer = model.getLayer(tapName);
  } catch {
    const names = model.layers.map((l) => l.name).join(', ');
    throw new Error(`tap layer '${tapName}' not found; model has: ${names}`);
  }
  return tf.model({ inputs: model.inputs, outputs: layer.output as tf.SymbolicTensor });
}

export async function saveModelToDisk(model: tf.LayersModel, dir: string): Promise<void> {
  mkdirSync(dir, { recursive: true });
  await model.save(tf.io.withSaveHandler(async (artifacts) => {
    const weightData = tf.io.CompositeArrayBuffer.join(artifacts.weightData!);
    writeFileSync(join(dir, 'weights.bin'), Buffer.from(weightData));
    writeFileSync(join(dir, 'model.json'), JSON.stringify({
      modelTopology: artifacts.modelTopology,
      weightsManifest: [{ paths: ['weights.bin'], weights: artifacts.weightSpecs }],
    }));
    return {
      modelArtifactsInfo: {
        dateSaved: new Date(),
        modelTopologyType: 'JSON',
      },
    };
  }));
}

/** Save the truncated-at-tap model and check the round trip against the
 *  in-memory original on seeded random inputs. */
export async function exportInterchangeModel(
  model: tf.LayersModel, tapName: string, dir: string,
  nInputs = 10, tolerance = 1e-4,
): Promise<number> {
  const truncated = truncateAtLayer(model, tapName);
  await saveModelToDisk(truncated, dir);
  const reloaded = await loadModelFromDisk(dir);
  let worst = 0;
  for (let i = 0; i < nInputs; i++) {
    const shape = model.inputs[0].shape.map((d) => (d === null ? 1 : d)) as number[];
    const x = tf.randomNormal(shape, 0, 1, 'float32', 100 + i);
    const a = (truncated.predict(x) as tf.Tensor).dataSync();
    const b = (reloaded.predict(x) as tf.Tensor).dataSync();
    for (let j = 0; j < a.length; j++) {
      worst = Math.max(worst, Math.abs(a[j] - b[j]));
    }
    x.dispose();
  }
  if (worst > tolerance) {
    throw new Error(`interchange model drifts ${worst} > ${tolerance}`);
  }
  reloaded.dispose();
  truncated.dispose();
  return worst;
}

export class TfjsBackbone {
  readonly k: number;
  private model: tf.LayersModel;
  private inputSide: number | null;

  constructor(model: tf.LayersModel, k: number, inputSide: number | null = null) {
    this.model = model;
    this.k = k;
    this.inputSide = inputSide;
  }

  featuresForImage(frame: Frame): FeatureMap {
    return tf.tidy(() => {
      let x = tf.tensor3d(frame.samples, [frame.height, frame.width, 3], 'int32')
        .toFloat();
      if (this.inputSide !== null) {
        x = tf.image.resizeBilinear(x as tf.Tensor3D, [this.inputSide, this.inputSide]);
      }
      x = x.div(255.0).sub(IMAGENET_MEAN).div(IMAGENET_STD);
      const out = this.model.predict(x.expandDims(0)) as tf.Tensor;
      if (out.rank !== 4 || out.shape[0] !== 1) {
        throw new Error(`unexpected model output shape ${out.shape}`);
      }
      const [, h, w, k] = out.shape as [number, number, number, number];
      if (k !== this.k) {
        throw new Error(`model produced k=${k}, backbone declares k=${this.k}`);
      }
      const values = new Float32Array(out.dataSync()); // NHWC -> row-major hwk
      return { h, w, k, values };
    });
  }
}
