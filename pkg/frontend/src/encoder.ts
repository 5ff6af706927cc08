/**
 * Encoder backends producing per-token hidden-state vectors.
 *
 * `StubEncoder` is a deterministic, dependency-free stand-in used by tests
 * and demos.  `loadTransformersEncoder` loads a real pretrained model through
 * transformers.js when it is installed and the model files are available
 * locally; it performs feature extraction only (no fine-tuning) and serves
 * the final encoder layer's hidden states.
 */

import { ModelLoadError } from "./errors.js";

export interface Encoder {
  /** Hidden-state width, e.g. 768. */
  readonly dim: number;
  /** Index of the final encoder layer, e.g. 12 for a 12-layer base model. */
  readonly finalLayer: number;
  /**
   * Encode a batch of id sequences; returns one vector per input position
   * for each sequence, taken from the requested layer.
   */
  encodeBatch(batch: readonly (readonly number[])[], layer: number): Promise<number[][][]>;
}

/** Deterministic 32-bit mix (Math.imul keeps every step exact in JS). */
function mix(a: number, b: number, c: number): number {
  let h = Math.imul(a + 1, 0x9e3779b1) ^ Math.imul(b + 1, 0x85ebca77);
  h = Math.imul(h ^ (h >>> 13), 0xc2b2ae3d) ^ Math.imul(c + 1, 0x27d4eb2f);
  h ^= h >>> 16;
  return h >>> 0;
}

export type StubFill = (tokenId: number, position: number) => number[];

/**
 * Deterministic encoder: each token's vector is a pure function of
 * (token id, position, component).  An explicit `fill` overrides the
 * default formula, which is how tests pin exact pooling arithmetic.
 */
export class StubEncoder implements Encoder {
  readonly dim: number;
  readonly finalLayer = 12;
  private readonly fill?: StubFill;

  constructor(dim: number, fill?: StubFill) {
    if (dim < 1) throw new RangeError(`dim must be >= 1, got ${dim}`);
    this.dim = dim;
    this.fill = fill;
  }

  async encodeBatch(
    batch: readonly (readonly number[])[],
    _layer: number,
  ): Promise<number[][][]> {
    return batch.map((ids) =>
      ids.map((id, position) => {
        if (this.fill) return this.fill(id, position);
        const vector = new Array<number>(this.dim);
        for (let i = 0; i < this.dim; i++) {
          vector[i] = (mix(id, position, i) / 0x100000000) * 2 - 1;
        }
        return vector;
      }),
    );
  }
}

export interface TransformersEncoderOptions {
  /** Allow fetching model files from the network (default: local only). */
  allowRemote?: boolean;
}

/**
 * Load a pretrained encoder via transformers.js.  The model id may be a hub
 * id or a local directory containing the exported model.  Throws
 * ModelLoadError when the library or the model files are unavailable.
 */
export async function loadTransformersEncoder(
  modelId: string,
  options: TransformersEncoderOptions = {},
): Promise<Encoder & { tokenizeToIds(text: string): Promise<number[]> }> {
  // Resolved at runtime only; the library is an optional install.
  const moduleName: string = "@huggingface/transformers";
  let transformers: any;
  try {
    transformers = await import(moduleName);
  } catch (cause) {
    throw new ModelLoadError(
      "transformers.js is not installed; `npm install @huggingface/transformers` " +
        "or use the stub encoder",
      { cause },
    );
  }
  transformers.env.allowRemoteModels = options.allowRemote ?? false;

  let tokenizer: any;
  let model: any;
  try {
    tokenizer = await transformers.AutoTokenizer.from_pretrained(modelId);
    model = await transformers.AutoModel.from_pretrained(modelId);
  } catch (cause) {
    throw new ModelLoadError(
      `cannot load model ${modelId}: ${(cause as Error)?.message ?? cause}`,
      { cause },
    );
  }

  const hiddenSize: number = model.config.hidden_size;
  const layers: number = model.config.num_hidden_layers;

  return {
    dim: hiddenSize,
    finalLayer: layers,

    async tokenizeToIds(text: string): Promise<number[]> {
      const encoded = await tokenizer(text, { add_special_tokens: false });
      return Array.from(encoded.input_ids.data as Iterable<bigint | number>, Number);
    },

    async encodeBatch(batch, layer) {
      if (layer !== layers) {
        throw new ModelLoadError(
          `this backend serves only the final layer (${layers}), got ${layer}`,
        );
      }
      const out: number[][][] = [];
      for (const ids of batch) {
        const inputIds = [ids.map((v) => BigInt(v))];
        const feed = {
          input_ids: new transformers.Tensor("int64", inputIds.flat(), [1, ids.length]),
          attention_mask: new transformers.Tensor(
            "int64",
            new Array(ids.length).fill(1n),
            [1, ids.length],
          ),
        };
        const output = await model(feed);
        const hidden = output.last_hidden_state; // [1, T, H]
        const data: Float32Array = hidden.data;
        const vectors: number[][] = [];
        for (let t = 0; t < ids.length; t++) {
          vectors.push(Array.from(data.subarray(t * hiddenSize, (t + 1) * hiddenSize)));
        }
        out.push(vectors);
      }
      return out;
    },
  };
}
